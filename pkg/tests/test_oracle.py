import numpy as np
import pytest

from itpencil import (
    BoundaryPair,
    CharacteristicFunction,
    PencilKind,
    char_det,
    find_roots,
    winding_number,
)

H = PencilKind.HELMHOLTZ
S = PencilKind.SCHRODINGER


def _cf(kind=H, q=1.0, length=1.0, bc=(0, 1)):
    return CharacteristicFunction(kind, q, length, BoundaryPair(*bc))


def test_char_det_positive_axis_nonzero():
    cf = _cf()
    for lam in np.geomspace(0.5, 500.0, 25):
        assert abs(char_det(cf, complex(lam))) > 0
    # argument-principle count on a positive-axis rectangle is zero
    assert winding_number(cf, (1.0, 200.0, -5.0, 5.0)) == 0


def test_char_det_conjugation_symmetry():
    rng = np.random.default_rng(0)
    for cf in (_cf(), _cf(S, 2.0), _cf(H, 0.5, 1.0, (1, 3))):
        for _ in range(20):
            lam = complex(rng.uniform(-60, 10), rng.uniform(0.2, 40))
            a = char_det(cf, lam)
            b = char_det(cf, np.conj(lam))
            assert b == pytest.approx(np.conj(a), rel=1e-10)


def test_char_det_analytic():
    # Cauchy-Riemann by centered differences at random points
    cf = _cf()
    rng = np.random.default_rng(1)
    h = 1e-6
    for _ in range(10):
        lam = complex(rng.uniform(-40, 5), rng.uniform(0.5, 30))
        dre = (char_det(cf, lam + h) - char_det(cf, lam - h)) / (2 * h)
        dim = (char_det(cf, lam + 1j * h) - char_det(cf, lam - 1j * h)) / (2 * h)
        scale = max(abs(dre), abs(dim), 1e-30)
        assert abs(dre - (-1j) * dim) / scale < 1e-5


def test_scaling_law_interval_length():
    # roots for length L are the unit-interval roots divided by L^2
    rect = (-60.0, 5.0, -40.0, 40.0)
    base = find_roots(_cf(), rect, max_roots=40)
    L = 2.0
    rect_l = (rect[0] / L**2, 5.0, rect[2] / L**2, rect[3] / L**2)
    scaled = find_roots(_cf(length=L), rect_l, max_roots=40)
    assert len(base) == len(scaled)
    b = np.sort_complex(np.array([r for r, _m, _s in base]))
    s = np.sort_complex(np.array([r for r, _m, _s in scaled]))
    assert np.max(np.abs(b / L**2 - s) / (1.0 + np.abs(s))) < 1e-9


def test_confluent_fallback_matches_distinct_limit():
    # Helmholtz exponent pairs collide as q -> infinity at fixed lam; compare
    # determinants across a shrinking gap instead: values must agree smoothly
    cf = _cf()
    lam = -20.0 + 1e-4j
    near = char_det(cf, lam)
    nearer = char_det(cf, -20.0 + 1e-6j)
    on_axis = char_det(cf, -20.0 + 0j)
    assert nearer == pytest.approx(on_axis, rel=1e-3)
    assert near == pytest.approx(on_axis, rel=1e-1)


def test_find_roots_empty_rectangle():
    assert find_roots(_cf(), (100.0, 200.0, -3.0, 3.0)) == []


def test_find_roots_winding_consistency():
    cf = _cf()
    rect = (-60.0, 5.0, -40.0, 40.0)
    roots = find_roots(cf, rect, max_roots=40)
    total = sum(m for _r, m, _s in roots)
    assert winding_number(cf, rect) == total
    for r, _m, _s in roots:
        assert abs(char_det(cf, r)) < 1e-6


def test_find_roots_multiplicity_four_at_zero_for_23():
    # bc=(2,3) at lam=0: eigenfunctions {1, x} and each extends to a Jordan
    # chain of length two, so the algebraic multiplicity is 4
    cf = _cf(bc=(2, 3))
    roots = find_roots(cf, (-5.0, 5.0, -4.0, 4.0), max_roots=10)
    at_zero = [m for r, m, _s in roots if abs(r) < 1e-8]
    assert at_zero and at_zero[0] == 4


def test_q1_helmholtz_exponents():
    # factored exponents sqrt(lam), sqrt(2 lam) drive the determinant: the
    # entire function must vanish at the discretization-confirmed eigenvalue
    cf = _cf()
    lam = complex(-9.556623121614386, 13.058518053159935)
    assert abs(char_det(cf, lam)) < 1e-8
