#!/usr/bin/env python3
"""Smoke test for the fracflow_py extension module.

Builds nothing itself: run `cargo build -p fracflow-py` first, then
`python3 python/smoke_test.py`. Copies the cdylib next to a temp dir so the
import works without an installed wheel.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def import_module():
    for profile in ("debug", "release"):
        lib = ROOT / "target" / profile / "libfracflow_py.so"
        if lib.exists():
            tmp = Path(tempfile.mkdtemp(prefix="fracflow-py-"))
            shutil.copy(lib, tmp / "fracflow_py.so")
            sys.path.insert(0, str(tmp))
            import fracflow_py

            return fracflow_py
    sys.exit("libfracflow_py.so not found; run `cargo build -p fracflow-py` first")


def main():
    ff = import_module()

    # special functions
    assert abs(ff.gamma(5.0) - 24.0) < 1e-12
    assert abs(ff.gamma(0.5) - math.sqrt(math.pi)) < 1e-12
    assert abs(ff.mittag_leffler(1.0, -1.0) - math.exp(-1.0)) < 1e-12
    assert ff.mittag_leffler(0.5, 0.0) == 1.0

    # kernel fit: small mode count, accurate kernel on the matched window
    soe = fit = ff.fit_kernel(0.5, 0.2, 200.0, 1e-8)
    assert len(fit) <= 40
    worst = max(
        fit.kernel_rel_error(0.005 * (1000.0 ** (i / 99.0))) for i in range(100)
    )
    assert worst <= 1e-4, worst
    reparsed_lines = soe.to_table().strip().splitlines()
    assert len([l for l in reparsed_lines if not l.startswith("#")]) == len(soe)

    # scalar relaxation against the Mittag-Leffler solution
    dt, n = 1e-3, 1000
    u = ff.scalar_relaxation(0.5, 1.0, 1.0, dt, n, 1e-8)
    worst = max(
        abs(ui - ff.mittag_leffler(0.5, -(((i + 1) * dt) ** 0.5)))
        for i, ui in enumerate(u)
    )
    assert worst <= 1e-3, worst

    # a small phase-field run: dissipative, mass-conserving, deterministic
    cfg = "alpha = 0.5\nnx = 16\ndt = 0.01\nt_final = 0.1\n"
    res = ff.run(cfg)
    assert res.nx == 16
    assert len(res.times) == 11 and res.times[0] == 0.0
    assert res.history_energy[0] == 0.0
    assert res.dissipation_violations(1e-8) == 0
    res2 = ff.run(cfg)
    assert res.final_field == res2.final_field
    mean0 = sum(ff.run(cfg + "t_final = 0.02\n").final_field) / 256.0
    mean1 = sum(res.final_field) / 256.0
    assert abs(mean0 - mean1) < 1e-12

    print("smoke test: ok")


if __name__ == "__main__":
    main()
