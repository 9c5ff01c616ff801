"""Companion linearization, chains, counting, and completeness checks."""

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from itpencil import MediumProfile, PencilKind, solve_spectrum
from itpencil.discretize import DiscretePencil
from itpencil.exceptions import SingularAtLambdaError, SingularPencilError
from itpencil.spectra import (
    KeldyshChain,
    chain_matrix,
    completeness_residual,
    counting,
    eigen,
    find_reference_point,
    jordan_from_keldysh,
    keldysh_from_jordan,
    linearize,
    schatten_norm,
    torus_embedding_sum,
    verify_chain,
)


def _scalar(a0, a1, a2):
    return DiscretePencil.from_matrices(
        np.array([[a0]], dtype=complex),
        np.array([[a1]], dtype=complex),
        np.array([[a2]], dtype=complex),
    )


@pytest.fixture(scope="module")
def h48():
    profile = MediumProfile.constant(PencilKind.HELMHOLTZ, 1.0)
    return solve_spectrum(profile, 0.0, 1.0, 48, (0, 1))


@pytest.fixture(scope="module")
def h64():
    profile = MediumProfile.constant(PencilKind.HELMHOLTZ, 1.0)
    return solve_spectrum(profile, 0.0, 1.0, 64, (0, 1))


def test_linearize_scalar_companion():
    comp = linearize(_scalar(2.0, -3.0, 1.0))
    assert np.allclose(comp.matrix, [[0.0, 1.0], [-2.0, 3.0]])
    sol = eigen(comp)
    assert np.allclose(sorted(sol.eigenvalues.real), [1.0, 2.0], atol=1e-12)
    assert np.allclose(sol.eigenvalues.imag, 0.0, atol=1e-12)


def test_eigen_scalar_zero_and_minus_one():
    sol = eigen(linearize(_scalar(0.0, 1.0, 1.0)))
    assert np.allclose(sorted(sol.eigenvalues.real), [-1.0, 0.0], atol=1e-12)


def test_linearize_blocks():
    rng = np.random.default_rng(11)
    N = 5
    A0 = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    A1 = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    A2 = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)) + 3.0 * np.eye(N)
    comp = linearize(DiscretePencil.from_matrices(A0, A1, A2))
    G = comp.matrix
    assert np.all(G[:N, :N] == 0.0)
    assert np.max(np.abs(G[:N, N:] @ A2 - np.eye(N))) <= 1e-10
    assert np.max(np.abs(G[N:, :N] + A0)) <= 1e-12


def test_linearize_rejects_singular_a2():
    with pytest.raises(SingularPencilError):
        linearize(
            DiscretePencil.from_matrices(
                np.eye(2, dtype=complex), np.eye(2, dtype=complex), np.zeros((2, 2), complex)
            )
        )


def test_eigen_trusted_near_negative_axis(h64):
    # distance to the negative real axis shrinks relative to |lambda|
    tr = h64.trusted_eigenvalues
    dist = np.where(tr.real <= 0, np.abs(tr.imag), np.abs(tr))
    ratio = dist / np.abs(tr)
    order = np.argsort(np.abs(tr))
    half = tr.size // 2
    small_max = ratio[order[:half]].max()
    large_max = ratio[order[half:]].max()
    assert tr.size >= 20
    assert large_max < small_max
    assert large_max < 0.2


def test_spectrum_equivalence_small_pencils():
    # companion eigenvalues equal the roots of det(A0 + lam A1 + lam^2 A2)
    rng = np.random.default_rng(7)
    for _ in range(6):
        N = int(rng.integers(2, 9))
        A0 = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        A1 = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        A2 = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)) + 3.0 * np.eye(N)
        deg = 2 * N
        ts = 2.0 * np.exp(2j * np.pi * np.arange(deg + 1) / (deg + 1))
        vals = np.array([np.linalg.det(A0 + t * A1 + t * t * A2) for t in ts])
        roots = np.polynomial.polynomial.polyroots(
            np.polynomial.polynomial.polyfit(ts, vals, deg)
        )
        ev = np.linalg.eigvals(linearize(DiscretePencil.from_matrices(A0, A1, A2)).matrix)
        C = np.abs(roots[:, None] - ev[None, :])
        r, c = linear_sum_assignment(C)
        assert (C[r, c] / (1.0 + np.abs(ev[c]))).max() <= 1e-8


def test_keldysh_from_eigenpair(h48):
    pen, comp = h48.pencil, h48.companion
    j = int(np.flatnonzero(h48.trust_mask)[0])
    lam0, u0 = h48.eigenvalues[j], h48.right_u[:, j]
    v0 = lam0 * (pen.A2 @ u0)
    ch = keldysh_from_jordan(comp, pen, [np.concatenate([u0, v0])], lam0)
    assert len(ch.vectors) == 1
    assert max(ch.residuals) <= 1e-7
    assert np.allclose(ch.vectors[0], u0)


def test_keldysh_length_two_planted_chain():
    rng = np.random.default_rng(21)
    N, lam0 = 6, 0.7 - 0.4j
    A1 = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    A2 = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)) + 4.0 * np.eye(N)
    u0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    u1 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    B1 = A1 + 2.0 * lam0 * A2
    X = np.column_stack([u0, u1] + [rng.standard_normal(N) + 1j * rng.standard_normal(N)
                                    for _ in range(N - 2)])
    Y = np.column_stack([np.zeros(N, complex), -(B1 @ u0)]
                        + [rng.standard_normal(N) + 1j * rng.standard_normal(N)
                           for _ in range(N - 2)])
    B0 = Y @ np.linalg.inv(X)
    A0 = B0 - lam0 * A1 - lam0 * lam0 * A2
    pen = DiscretePencil.from_matrices(A0, A1, A2)
    comp = linearize(pen)
    x0 = np.concatenate([u0, lam0 * (A2 @ u0)])
    x1 = np.concatenate([u1, lam0 * (A2 @ u1) + A2 @ u0])
    ch = keldysh_from_jordan(comp, pen, [x0, x1], lam0)
    assert len(ch.vectors) == 2
    assert max(ch.residuals) <= 1e-7
    # B1 u0 + B0 u1 = 0 is exactly the second chain equation
    r = np.linalg.norm(B1 @ ch.vectors[0] + B0 @ ch.vectors[1])
    assert r / np.linalg.norm(u0) <= 1e-7
    # round trip back to companion form reproduces the u components exactly
    back = jordan_from_keldysh(pen, ch)
    for j, x in enumerate(back):
        assert np.array_equal(x[:N], ch.vectors[j])


def test_keldysh_rejects_non_eigenvector():
    pen = _scalar(2.0, -3.0, 1.0)
    comp = linearize(pen)
    with pytest.raises(ValueError):
        keldysh_from_jordan(comp, pen, [np.array([1.0, 0.0], complex)], 1.0)


def test_verify_chain_exact_and_perturbed(h48):
    pen = h48.pencil
    j = int(np.flatnonzero(h48.trust_mask)[0])
    lam0, u0 = h48.eigenvalues[j], h48.right_u[:, j]
    good = KeldyshChain(lambda0=lam0, vectors=[u0], residuals=[])
    assert max(verify_chain(pen, good)) <= 1e-7
    noise = np.random.default_rng(0).standard_normal(u0.size)
    bad = KeldyshChain(
        lambda0=lam0,
        vectors=[u0 + 0.1 * np.linalg.norm(u0) * noise],
        residuals=[],
    )
    assert max(verify_chain(pen, bad)) > 1e-3


def test_verify_chain_scalar_double_root():
    # T(lam) = (lam-1)^2, chain {1, 0} at lam0 = 1: B0 = B1 = 0 there
    pen = _scalar(1.0, -2.0, 1.0)
    ch = KeldyshChain(
        lambda0=1.0 + 0j,
        vectors=[np.array([1.0 + 0j]), np.array([0.0 + 0j])],
        residuals=[],
    )
    assert verify_chain(pen, ch) == [0.0, 0.0]


def test_cluster_multiplicity_four_at_zero_for_23():
    # bc=(2,3): kernel {1, x} at lam=0, each with a length-2 Jordan chain
    profile = MediumProfile.constant(PencilKind.HELMHOLTZ, 1.0)
    eig = solve_spectrum(profile, 0.0, 1.0, 48, (2, 3))
    zero = [c for c in eig.clusters if abs(c.center) < 1e-3]
    assert len(zero) == 1
    assert zero[0].multiplicity == 4
    assert sorted(len(ch.vectors) for ch in zero[0].chains) == [2, 2]


def test_schatten_small_cases():
    assert schatten_norm(np.eye(2), 1.0) == pytest.approx(2.0, rel=1e-12)
    assert schatten_norm(np.diag([3.0, 4.0]), 2.0) == pytest.approx(5.0, rel=1e-12)


def test_schatten_unitary_invariance():
    rng = np.random.default_rng(5)
    M = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    U, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    V, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    for p in (1.0, 2.0, 3.5):
        assert schatten_norm(U @ M @ V, p) == pytest.approx(schatten_norm(M, p), rel=1e-10)


def test_schatten_frobenius_identity():
    rng = np.random.default_rng(6)
    M = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    assert schatten_norm(M, 2.0) ** 2 == pytest.approx(np.sum(np.abs(M) ** 2), rel=1e-12)


def test_schatten_rejects_small_p():
    with pytest.raises(ValueError):
        schatten_norm(np.eye(2), 0.5)


def test_torus_sum_coth_limit():
    ts = torus_embedding_sum(1, 1.0, 100000)
    exact = np.pi / np.tanh(np.pi)
    assert ts.partial <= exact <= ts.partial + ts.tail_bound
    assert ts.tail_bound <= 5e-5


def test_torus_sum_divergent_rejected():
    with pytest.raises(ValueError):
        torus_embedding_sum(1, 0.5, 100)
    with pytest.raises(ValueError):
        torus_embedding_sum(2, 2.0, 0)


def test_torus_sum_2d_tail_formula():
    # tail bound is (1+n)^p times the integral of (1+|x|^2)^(-p) outside
    # the half-open cell boundary R = cutoff + 1/2; in 2D with p=2 that
    # integral is pi / (1 + R^2)
    ts = torus_embedding_sum(2, 2.0, 50)
    R = 50.5
    assert ts.tail_bound == pytest.approx(9.0 * np.pi / (1.0 + R * R), rel=1e-9)
    assert ts.partial > 1.0


def test_counting_hand_example():
    rep = counting(np.array([1.0, 2.0, 4.0]), 0.0, 1.0, [3.0])
    assert rep.counts.tolist() == [2]
    assert rep.discrete_bounds[0] == pytest.approx(5.25, rel=1e-12)
    assert rep.schatten_bounds is None


def test_counting_below_minimum_distance():
    rep = counting(np.array([1.0, 2.0, 4.0]), 0.0, 1.0, [0.5, 0.99])
    assert rep.counts.tolist() == [0, 0]


def test_counting_monotone_and_bounded(h48):
    lp = h48.lambda_prime
    t_values = np.geomspace(1.0, 300.0, 25)
    rep = counting(h48, lp, 1.0, t_values)
    assert np.all(np.diff(rep.counts) >= 0)
    assert np.all(rep.counts <= rep.discrete_bounds)


def test_counting_rejects_reference_on_eigenvalue():
    with pytest.raises(SingularAtLambdaError):
        counting(np.array([1.0, 2.0, 4.0]), 1.0, 1.0, [3.0])


def test_completeness_own_eigenvector(h64):
    pen = h64.pencil
    cl = sorted(h64.clusters, key=lambda c: abs(c.center - h64.lambda_prime))[0]
    f = cl.chains[0].vectors[0]
    assert completeness_residual(h64, pen, f, 1) <= 1e-8


def test_completeness_nonincreasing_and_small(h64):
    pen = h64.pencil
    rng = np.random.default_rng(3)
    x = pen.grid.nodes
    coeffs = (rng.standard_normal(12) + 1j * rng.standard_normal(12)) / (
        1.0 + np.arange(12)
    ) ** 2
    fg = sum(c * np.cos(k * np.pi * x) for k, c in enumerate(coeffs))
    f = pen.project(fg)
    ms = [1, 2, 4, 8, 16, len(h64.clusters)]
    rs = [completeness_residual(h64, pen, f, m) for m in ms]
    assert all(rs[i + 1] <= rs[i] + 1e-9 for i in range(len(rs) - 1))
    assert rs[-1] < 0.1


def test_completeness_rejects_oversized_m(h64):
    pen = h64.pencil
    f = np.ones(pen.dim, dtype=complex)
    with pytest.raises(ValueError):
        completeness_residual(h64, pen, f, len(h64.clusters) + 1)


def test_chain_matrix_width_counts_chain_vectors(h64):
    X1 = chain_matrix(h64, 1)
    Xall = chain_matrix(h64, len(h64.clusters))
    total = sum(len(ch.vectors) for cl in h64.clusters for ch in cl.chains)
    assert X1.shape == (h64.pencil.dim, sum(
        len(ch.vectors)
        for ch in sorted(h64.clusters, key=lambda c: abs(c.center - h64.lambda_prime))[0].chains
    ))
    assert Xall.shape == (h64.pencil.dim, total)


def test_find_reference_point_prefers_far_candidates():
    assert find_reference_point(np.array([-1.0, -2.0])) == 1.0 + 0j


def test_find_reference_point_all_candidates_blocked():
    cands = np.geomspace(1.0, 100.0, 13)
    with pytest.raises(SingularAtLambdaError):
        find_reference_point(cands.astype(complex), candidates=cands)
