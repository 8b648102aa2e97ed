#!/usr/bin/env python3
"""Smoke test for the parhom_py extension module.

Builds the cdylib with cargo (release profile), loads it, and exercises the
main surface: field construction and sampling, the Cauchy-Dirichlet solver,
corrector/homogenization with the classical oracles, the error functional,
and the config-driven convergence pipeline.

Run from the repository root:  python3 python/smoke_test.py
"""

import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build_extension() -> pathlib.Path:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "parhom-py"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "release" / "libparhom_py.so"
    if not built.exists():  # e.g. macOS
        built = ROOT / "target" / "release" / "libparhom_py.dylib"
    stage = pathlib.Path(tempfile.mkdtemp(prefix="parhom_py_"))
    shutil.copy2(built, stage / "parhom_py.so")
    return stage


def check(name: str, ok: bool, detail: str = "") -> bool:
    print(f"[smoke] {name}: {'PASS' if ok else 'FAIL'}" + (f" — {detail}" if detail else ""))
    return ok


def main() -> int:
    sys.path.insert(0, str(build_extension()))
    import parhom_py as ph

    ok = True

    # field sampling and validation
    field = ph.Field.checkerboard(1, [1.0, 4.0], [[0.2, 0.0]], [-0.5], 7, False, 4.0, 1.0)
    a, b, d = field.sample([0.3], 0.1)
    rep = json.loads(field.validate(2000, 1))
    ok &= check(
        "checkerboard sampling/validation",
        a[0][0] in (1.0, 4.0) and b[0] == 0.2 and d == -0.5 and rep["violations"] == [],
        f"a={a[0][0]}, rayleigh=[{rep['rayleigh_min']}, {rep['rayleigh_max']}]",
    )

    # determinism of the seeded sampler
    field2 = ph.Field.checkerboard(1, [1.0, 4.0], [[0.2, 0.0]], [-0.5], 7, False, 4.0, 1.0)
    same = all(
        field.sample([0.1 * k], 0.05 * k) == field2.sample([0.1 * k], 0.05 * k)
        for k in range(50)
    )
    ok &= check("seeded sampler determinism", same)

    # constant field: homogenized coefficients equal the inputs
    const = ph.Field.constant(1, [[2.0]], [0.3], -0.5, 4.0, 1.0)
    corr = ph.Corrector.solve(const, 32)
    (a_bar, b_bar, d_bar) = corr.homogenized()
    ok &= check(
        "constant-field identity",
        abs(a_bar[0][0] - 2.0) < 1e-10 and abs(b_bar[0] - 0.3) < 1e-10 and abs(d_bar + 0.5) < 1e-10,
        f"a_bar={a_bar[0][0]}, b_bar={b_bar[0]}, d_bar={d_bar}",
    )

    # two-phase laminate: harmonic mean 2/(1/1 + 1/4) = 1.6
    lam = ph.Field.laminate(1, [1.0, 4.0], 0, [0.0], 0.0, 4.0, 1.0)
    corr = ph.Corrector.solve(lam, 256)
    (a_bar, _, _) = corr.homogenized()
    ok &= check(
        "laminate harmonic mean",
        abs(a_bar[0][0] - 1.6) < 0.016,
        f"a_bar={a_bar[0][0]:.5f} vs 1.6",
    )
    diag = json.loads(corr.diagnostics(0, [2.0, 4.0, 8.0, 16.0]))
    ok &= check(
        "corrector diagnostics",
        diag["mean_abs"] < 1e-10 and -2.3 <= diag["sublinearity_slope"] <= -1.7,
        f"mean={diag['mean_abs']:.1e}, slope={diag['sublinearity_slope']:.2f}",
    )

    # solver: boundary data reproduced, residuals tiny
    profile = json.dumps({"kind": "sine-sheet", "kx": 1, "amplitude": 1.0, "decay": 0.5})
    sol = ph.solve(lam, 0.25, 65, 129, profile, 0.0)
    nx, nt, h, dt = sol.grid()
    vals = sol.values()
    # the sine sheet vanishes on the rim (up to sin(pi) round-off)
    boundary_ok = abs(vals[10][0]) < 1e-12 and abs(vals[10][nx - 1]) < 1e-12
    ok &= check(
        "cauchy-dirichlet solve",
        boundary_ok and sol.max_residual <= 1e-9 and sol.l2() > 0,
        f"grid=({nx},{nt}), L2={sol.l2():.4f}",
    )

    # error functional decays with epsilon
    per = ph.Field.periodic(1, 2.0, 0.5, [0.2], 0.1, -0.4, 0.2, 4.0, 1.0)
    corr = ph.Corrector.solve(per, 64)
    (_, e1) = ph.error_functional(per, corr, 0.25)
    (_, e2) = ph.error_functional(per, corr, 0.125)
    ok &= check("error functional decay", e2 < 0.7 * e1, f"E(1/4)={e1:.4f}, E(1/8)={e2:.4f}")

    # RVE homogenization of the two-phase checkerboard
    spec = json.dumps(
        {
            "dim": 1,
            "a_values": [1.0, 4.0],
            "b_values": [[0.0, 0.0]],
            "d_values": [0.0],
            "space_only": True,
            "lambda": 4.0,
            "cap_lambda": 1.0,
        }
    )
    est = json.loads(ph.rve_homogenize(spec, 8, 8, 2024, 64))
    ok &= check(
        "rve homogenization",
        1.3 < est["a_bar"][0][0] < 1.9,
        f"a_bar={est['a_bar'][0][0]:.4f} ± {est['stderr_a'][0][0]:.4f}",
    )

    # config-driven convergence pipeline
    config = """
seed = 3
[field]
kind = "periodic"
dim = 1
a0 = 2.0
amp_a = 0.5
lambda = 4.0
cap_lambda = 1.0
[study]
epsilons = [0.25, 0.125]
cell_nx = 64
"""
    report = json.loads(ph.run_converge(config, 1))
    errs = report["l2_errors"]
    ok &= check(
        "convergence pipeline",
        errs[1] < errs[0] and report["config_hash"] == ph.config_hash(config),
        f"l2_errors={errs}",
    )

    print(f"[smoke] {'ALL PASS' if ok else 'FAILURES PRESENT'} (parhom_py {ph.__version__})")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
