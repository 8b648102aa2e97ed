#![allow(dead_code)]

//! Shared acceptance-test support: an independent dense symmetric
//! eigensolver (cyclic Jacobi) used as the oracle for Riesz dual norms, and
//! the pass/fail line printer.

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix (row-major).
/// Returns (eigenvalues, eigenvectors column-major: v[k*n + i] = component i
/// of eigenvector k). Self-verifying: panics if any residual ‖Av − λv‖ stays
/// above tolerance.
pub fn sym_eigen(a_in: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a_in.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let scale: f64 = (0..n).map(|i| a[i * n + i].abs()).fold(1e-300, f64::max);
    for _sweep in 0..100 {
        if off(&a) <= 1e-13 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigvals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    // residual self-check against the original matrix
    for k in 0..n {
        let mut rmax = 0.0f64;
        for i in 0..n {
            let mut av = 0.0;
            for j in 0..n {
                av += a_in[i * n + j] * v[j * n + k];
            }
            rmax = rmax.max((av - eigvals[k] * v[i * n + k]).abs());
        }
        assert!(
            rmax <= 1e-9 * scale.max(1.0),
            "jacobi eigensolver failed self-check: residual {rmax}"
        );
    }
    // column-major eigenvectors
    let mut vecs = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            vecs[k * n + i] = v[i * n + k];
        }
    }
    (eigvals, vecs)
}

/// Dual norm √(Σ (vₖᵀF)²/λₖ) through the eigendecomposition of the Gram.
pub fn dual_norm_by_eigen(gram: &[f64], n: usize, loads: &[f64]) -> f64 {
    let (vals, vecs) = sym_eigen(gram, n);
    let mut acc = 0.0;
    for k in 0..n {
        let proj: f64 = (0..n).map(|i| vecs[k * n + i] * loads[i]).sum();
        assert!(vals[k] > 0.0, "Gram not positive definite in the oracle");
        acc += proj * proj / vals[k];
    }
    acc.sqrt()
}

/// Print the per-criterion verdict line and fail the test on FAIL.
pub fn criterion(name: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{name} failed: {detail}");
}
