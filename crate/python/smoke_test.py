#!/usr/bin/env python3
"""Smoke test for the pdd_python extension module.

Builds the cdylib with cargo, loads it as an importable module from a
temporary directory, and exercises every exposed entry point with loose
statistical tolerances. Exits non-zero on the first failure.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
FRONT_AT_ORIGIN = 0.5141083546376336
STATIONARY_AT_CENTER = 2.4634012064474846
CVA_T_STAR = 0.5028634251258111
POSITIVE_PART_TARGET = [0.0586, 0.5, 0.8199, 0.0, -0.4095]


def build_extension() -> Path:
    subprocess.run(
        ["cargo", "build", "-p", "pdd-python"],
        cwd=REPO_ROOT,
        check=True,
    )
    lib = REPO_ROOT / "target" / "debug" / "libpdd_python.so"
    if not lib.exists():
        sys.exit(f"extension library not found at {lib}")
    return lib


def main() -> None:
    lib = build_extension()
    with tempfile.TemporaryDirectory() as tmp:
        shutil.copy2(lib, Path(tmp) / "pdd_python.so")
        sys.path.insert(0, tmp)
        import pdd_python

        # Closed form: exact evaluation, no randomness involved.
        ref = pdd_python.reference_value("kpp", 0.0, 1.0)
        assert abs(ref - FRONT_AT_ORIGIN) < 1e-12, ref
        print(f"reference_value ok ({ref:.12f})")

        # Branching estimator agrees with the closed form statistically.
        value, se = pdd_python.estimate_semilinear("kpp", 0.0, 1.0, n=20_000, seed=7)
        assert se > 0.0
        assert abs(value - FRONT_AT_ORIGIN) <= 4.0 * se, (value, se)
        print(f"estimate_semilinear ok ({value:.5f} +/- {se:.1e})")

        # Pathwise stationary estimator at the domain center.
        value, se = pdd_python.estimate_stationary(0.5, 0.5, n=5_000, dt=2e-5, seed=1)
        assert abs(value - STATIONARY_AT_CENTER) <= 4.0 * se + 0.02, (value, se)
        print(f"estimate_stationary ok ({value:.5f} +/- {se:.1e})")

        # Polynomial fit of the positive part.
        coeffs, residual = pdd_python.fit_positive_part(4)
        assert len(coeffs) == 5
        assert all(
            abs(a - b) <= 2e-2 for a, b in zip(coeffs, POSITIVE_PART_TARGET)
        ), coeffs
        assert residual < 0.08, residual
        print(f"fit_positive_part ok (residual {residual:.4f})")

        # Growth report: admissible below the blow-up bound, not above it.
        rep = pdd_python.check_assumptions("cva", 0.25)
        assert rep["admissible"] is True, rep
        assert rep["case"] == "within_horizon_bound", rep
        assert abs(rep["t_star"] - CVA_T_STAR) < 1e-6, rep
        rep = pdd_python.check_assumptions("cva", 0.6)
        assert rep["admissible"] is False, rep
        try:
            pdd_python.check_assumptions("heat", 0.25)
        except ValueError:
            pass
        else:
            sys.exit("check_assumptions must reject linear problems")
        print("check_assumptions ok")

        # Full pipeline via keyword overrides.
        r = pdd_python.run(
            problem="heat",
            subdomains=2,
            time_levels=4,
            samples=300,
            seed=3,
            workers=1,
        )
        assert r.subdomains == 2 and not r.stationary
        ni, nj = r.shape
        assert len(r.values) == ni * nj
        assert len(r.axes[0]) == ni and len(r.axes[1]) == nj
        assert r.value(0, 0) == r.values[0]
        assert all(math.isfinite(v) for v in r.values)
        assert r.max_abs_error is not None and r.max_abs_error < 0.1, r.max_abs_error
        nodes = r.interface_nodes()
        assert nodes is not None and len(nodes) == 4, nodes
        assert all(n == 300 for *_, n in nodes[1:])
        try:
            r.value(ni, 0)
        except IndexError:
            pass
        else:
            sys.exit("value() must bounds-check")
        print(f"run via overrides ok (max abs error {r.max_abs_error:.2e})")

        # Full pipeline via a config file, and bitwise repeatability.
        cfg = Path(tmp) / "heat.toml"
        cfg.write_text(
            "\n".join(
                [
                    "[problem]",
                    'kind = "heat"',
                    "[decomposition]",
                    "subdomains = 2",
                    "time_levels = 4",
                    "[monte_carlo]",
                    "samples = 250",
                    "seed = 5",
                    "[run]",
                    "workers = 1",
                    "",
                ]
            )
        )
        first = pdd_python.run(config=str(cfg))
        second = pdd_python.run(config=str(cfg), workers=4)
        assert first.values == second.values, "runs must not depend on worker count"
        print("run via config ok (bitwise repeatable across worker counts)")

    print("smoke test passed")


if __name__ == "__main__":
    main()
