"""Smoke test for the deltagas_py extension.

Build and copy the module next to this file first:

    cargo build -p deltagas-py --release --features extension-module
    cp target/release/libdeltagas_py.so python/deltagas_py.so
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import deltagas_py as dg


def main():
    p, eps, converged, residual = dg.solve_tba(1.0, 1.0, 1.0)
    assert converged, residual
    assert len(p) == len(eps) == 128

    _, total, _ = dg.genfun_impenetrable(1.0, 0.0, 1.0, 0.0)
    assert total == 1.0

    _, nys, _ = dg.genfun_impenetrable(1.0, 0.0, 1.0, math.log(2.0))
    terms, ser, tail = dg.genfun_impenetrable(1.0, 0.0, 1.0, math.log(2.0), method="series", nmax=8)
    assert len(terms) == 9
    assert abs(nys - ser) < 1e-8, (nys, ser)

    _, perm, _ = dg.genfun_free(1.0, -1.0, 1.0, 0.2)
    _, res, _ = dg.genfun_free(1.0, -1.0, 1.0, 0.2, method="resolvent")
    assert abs(perm - res) < 1e-7, (perm, res)

    try:
        dg.genfun_free(1.0, 0.5, 1.0, 0.2)
    except ValueError as e:
        assert "physical range" in str(e)
    else:
        raise AssertionError("free regime accepted mu >= 0")

    d, g2, conn = dg.correlate("impenetrable", 1.0, 0.0, 0.0)
    assert abs(g2) < 1e-10 and d > 0
    _, g2s, _ = dg.correlate("free", 1.0, -1.0, 0.5, route="series")
    _, g2c, _ = dg.correlate("free", 1.0, -1.0, 0.5)
    assert abs(g2s - g2c) < 1e-8

    terms, total, _ = dg.genfun_generic(100.0, 1.0, 0.0, 1.0, math.log(2.0), nmax=1, coarse=16)
    assert len(terms) == 2 and abs(total.imag) < 1e-9

    checks = dg.verify(seeds=1)
    assert len(checks) == 4 and all(c[3] for c in checks), checks

    print("smoke test passed")


if __name__ == "__main__":
    main()
