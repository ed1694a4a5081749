"""Smoke test for the compiled extension; run after `maturin develop` or installing the wheel."""

import cmath
import json

import implosion


def main():
    a, eps = 0.3 + 0j, 0j
    x, y = implosion.henon(a, eps, 0.2 + 0.1j, -0.4j)
    back = implosion.henon(a, eps, x, y, inverse=True)
    assert abs(back[0] - (0.2 + 0.1j)) < 1e-12 and abs(back[1] + 0.4j) < 1e-12

    p, q = implosion.henon_fixed_points(a, 0.05 + 0j)
    assert abs(implosion.henon(a, 0.05 + 0j, *p)[0] - p[0]) < 1e-12

    exact = implosion.c0_plus(a)
    assert abs(exact - cmath.pi * 1j * 1.3 / -0.7) < 1e-12
    assert abs(implosion.c0_numeric(a, 10.0) - exact) < 1e-3

    z = 0.3 + 4.0j
    assert abs(implosion.transition(a, 0j, z + 1) - implosion.transition(a, 0j, z) - 1) < 1e-8

    points, (l1, l2) = implosion.two_cycle(a)
    assert len(points) == 2 and 6 < abs(l1) < 10
    assert abs(l1 * l2 - a * a) < 1e-10

    codes = implosion.lavaurs_codes(a, 0j, (-1.0, 1.0, -6.0, 6.0), 16, 16)
    assert len(codes) == 256 and set(codes) <= {0, 1, 2, 3}

    report = json.loads(implosion.criterion(1))
    assert report["passed"], report
    assert not json.loads(implosion.criterion(1, tolerance_scale=0.0))["passed"]
    print("python smoke test passed")


if __name__ == "__main__":
    main()
