"""Companion linearization, eigen machinery, chains, and counting bounds."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.special

from .discretize import DiscretePencil
from .exceptions import (
    ClusterAmbiguityError,
    EigensolverError,
    SingularAtLambdaError,
    SingularPencilError,
)

_TRUST_RTOL = 1e-6
_RESIDUAL_TOL = 1e-7


@dataclass
class CompanionOperator:
    """Block linearization [[0, A2^-1], [-A0, -A1 A2^-1]] of a quadratic pencil.

    Acting on stacked vectors (u, v) with v = lam * A2 u at an eigenvalue, so
    the ordinary spectrum of the block matrix is exactly the pencil spectrum.
    """

    blocks: tuple
    source: DiscretePencil

    @property
    def matrix(self):
        (b00, b01), (b10, b11) = self.blocks
        return np.block([[b00, b01], [b10, b11]])

    @property
    def dim(self):
        return 2 * self.source.dim


def linearize(pencil):
    """Companion operator of the pencil; requires invertible A2."""
    n = pencil.dim
    A2 = pencil.A2
    cond = np.linalg.cond(A2)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularPencilError(f"A2 is numerically singular (cond {cond:.2e})")
    A2inv = np.linalg.solve(A2, np.eye(n, dtype=A2.dtype))
    blocks = (
        (np.zeros((n, n), dtype=complex), A2inv.astype(complex)),
        ((-pencil.A0).astype(complex), (-pencil.A1 @ A2inv).astype(complex)),
    )
    return CompanionOperator(blocks=blocks, source=pencil)


@dataclass
class KeldyshChain:
    """Vectors u0..u_{k-1} satisfying the cascaded pencil equations at lambda0."""

    lambda0: complex
    vectors: list
    residuals: list = field(default_factory=list)

    def __len__(self):
        return len(self.vectors)


@dataclass
class Cluster:
    center: complex
    indices: list
    multiplicity: int
    chains: list


@dataclass
class EigenSolution:
    """Companion eigendecomposition with trust flags and chain structure.

    eigenvalues are sorted by distance to lambda_prime; right_u holds the
    pencil-space components column-per-eigenvalue; residuals are relative to
    the lambda-dependent coefficient scale of the pencil.
    """

    eigenvalues: np.ndarray
    right_u: np.ndarray
    residuals: np.ndarray
    trust_mask: np.ndarray
    clusters: list
    lambda_prime: complex
    pencil: DiscretePencil
    companion: CompanionOperator
    reference_eigenvalues: np.ndarray | None = None

    @property
    def trusted_eigenvalues(self):
        return self.eigenvalues[self.trust_mask]

    def cluster_of(self, lam, rtol=_TRUST_RTOL):
        for cl in self.clusters:
            if abs(cl.center - lam) <= rtol * (1.0 + abs(lam)):
                return cl
        return None


def _pencil_residual(pencil, lam, u):
    nu = pencil.vector_norm(u)
    if nu == 0.0:
        return np.inf
    r = pencil.vector_norm(pencil.T(lam) @ u)
    return r / (nu * pencil.coefficient_scale(lam))


def eigen(comp, lambda_prime=0.0, reference=None, trust_rtol=_TRUST_RTOL,
          residual_tol=_RESIDUAL_TOL):
    """Dense eigendecomposition of the companion operator with trust flags.

    reference, when given, is a refined-grid eigenvalue array (or another
    EigenSolution); an eigenvalue is trusted when it has a reference partner
    within trust_rtol relative distance and its own pencil residual is small.
    Without a reference only the residual filter applies.
    """
    pencil = comp.source
    A = comp.matrix
    try:
        lam, W = scipy.linalg.eig(A)
    except Exception as exc:  # LAPACK non-convergence
        raise EigensolverError(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise EigensolverError("eigensolver returned non-finite eigenvalues")

    order = np.argsort(np.abs(lam - lambda_prime), kind="stable")
    lam = lam[order]
    W = W[:, order]
    n = pencil.dim
    U = W[:n, :].copy()
    # eigenvectors can concentrate in the v block; rescale u when usable
    residuals = np.empty(lam.shape[0])
    for j in range(lam.shape[0]):
        nu = pencil.vector_norm(U[:, j])
        if nu > 1e-12 * np.linalg.norm(W[:, j]):
            U[:, j] /= nu
            residuals[j] = _pencil_residual(pencil, lam[j], U[:, j])
        else:
            residuals[j] = np.inf

    trust = residuals <= residual_tol
    if reference is not None:
        ref = np.asarray(
            reference.eigenvalues[reference.trust_mask]
            if isinstance(reference, EigenSolution)
            else reference
        )
        if ref.size:
            dist = np.abs(lam[:, None] - ref[None, :]).min(axis=1)
            trust &= dist <= trust_rtol * (1.0 + np.abs(lam))
        else:
            trust[:] = False

    clusters = _build_clusters(comp, pencil, lam, trust, trust_rtol)
    ref_eigs = None
    if reference is not None:
        ref_eigs = np.asarray(
            reference.eigenvalues[reference.trust_mask]
            if isinstance(reference, EigenSolution)
            else reference
        )
    return EigenSolution(
        eigenvalues=lam,
        right_u=U,
        residuals=residuals,
        trust_mask=trust,
        clusters=clusters,
        lambda_prime=complex(lambda_prime),
        pencil=pencil,
        companion=comp,
        reference_eigenvalues=ref_eigs,
    )


def _build_clusters(comp, pencil, lam, trust, rtol):
    """Union-find clustering of trusted eigenvalues, plus chain construction."""
    idx = [int(i) for i in np.flatnonzero(trust)]
    parent = {i: i for i in idx}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            i, j = idx[a], idx[b]
            tol = rtol * (1.0 + min(abs(lam[i]), abs(lam[j])))
            if abs(lam[i] - lam[j]) <= tol:
                parent[find(i)] = find(j)

    groups = {}
    for i in idx:
        groups.setdefault(find(i), []).append(i)

    clusters = []
    for members in groups.values():
        vals = lam[members]
        center = complex(vals.mean())
        diam = float(np.abs(vals - center).max()) if len(members) > 1 else 0.0
        chains = _cluster_chains(comp, pencil, center, len(members), diam, rtol)
        clusters.append(
            Cluster(center=center, indices=sorted(members),
                    multiplicity=len(members), chains=chains)
        )
    clusters.sort(key=lambda c: (abs(c.center), c.center.real, c.center.imag))
    return clusters


def _null_basis(A, tol):
    U, s, Vh = np.linalg.svd(A)
    r = int(np.sum(s > tol))
    return Vh[r:].conj().T


def _nilpotent_chains(G, tol):
    """Jordan chains of a (numerically) nilpotent small matrix.

    Returns chains ordered eigenvector-first, satisfying G x_{j+1} = x_j.
    """
    m = G.shape[0]
    powers = [np.eye(m, dtype=complex)]
    for _ in range(m):
        powers.append(powers[-1] @ G)
    nullities = [_null_basis(powers[j], tol).shape[1] for j in range(m + 1)]
    l = next(j for j in range(1, m + 1) if nullities[j] == m)
    chains = []
    used = np.zeros((m, 0), dtype=complex)
    for length in range(l, 0, -1):
        Kl = _null_basis(powers[length], tol)
        low = _null_basis(powers[length - 1], tol) if length > 1 else np.zeros((m, 0))
        S = np.hstack([low, used])
        if S.shape[1]:
            Qs, _ = np.linalg.qr(S)
            proj = Kl - Qs @ (Qs.conj().T @ Kl)
        else:
            proj = Kl
        if proj.shape[1] == 0:
            continue
        U, s, _ = np.linalg.svd(proj, full_matrices=False)
        for i in range(int(np.sum(s > 0.5))):
            # columns of Kl are orthonormal, so surviving directions have
            # singular value near 1 after projecting out shorter kernels
            t = U[:, i]
            chain = [t]
            for _ in range(length - 1):
                chain.append(powers[1] @ chain[-1])
            chain = chain[::-1]
            chains.append(chain)
            used = np.hstack([used, np.column_stack(chain)])
    return chains


def _cluster_chains(comp, pencil, center, size, diam, rtol):
    """Keldysh chains spanning a trusted cluster's invariant subspace."""
    n = pencil.dim
    A = comp.matrix
    if size == 1:
        # simple eigenvalue: one SVD gives the pencil eigenvector directly
        T = pencil.T(center)
        _, _, Vh = np.linalg.svd(T)
        u0 = Vh[-1].conj()
        u0 = u0 / pencil.vector_norm(u0)
        chain = KeldyshChain(lambda0=center, vectors=[u0])
        chain.residuals = verify_chain(pencil, chain)
        return [chain]

    capture = max(10.0 * diam, rtol * (1.0 + abs(center)))
    Tm, Z, sdim = scipy.linalg.schur(
        A, output="complex", sort=lambda z: abs(z - center) <= capture
    )
    if sdim != size:
        raise ClusterAmbiguityError(
            f"cluster at {center} captured {sdim} Schur eigenvalues, expected {size}"
        )
    Wb = Z[:, :sdim]
    G = Tm[:sdim, :sdim] - center * np.eye(sdim)
    gnorm = np.linalg.norm(G, 2)
    tol = max(1e-8 * max(gnorm, 1.0), 3.0 * diam)
    chains = []
    for coeff_chain in _nilpotent_chains(G, tol):
        full = [Wb @ c for c in coeff_chain]
        chains.append(keldysh_from_jordan(comp, pencil, full, center))
    return chains


def keldysh_from_jordan(comp, pencil, jordan_chain, lambda0, tol=1e-6):
    """Extract pencil-space chain vectors from a companion Jordan chain.

    jordan_chain holds stacked vectors x_j with (A - lambda0) x_{j+1} = x_j
    and (A - lambda0) x_0 = 0; the u components alone satisfy the cascaded
    pencil equations at lambda0.
    """
    A = comp.matrix
    n = pencil.dim
    xs = [np.asarray(x, dtype=complex).reshape(-1) for x in jordan_chain]
    scale = max(np.linalg.norm(x) for x in xs)
    r0 = np.linalg.norm(A @ xs[0] - lambda0 * xs[0])
    anorm = np.linalg.norm(A, ord=np.inf)
    if r0 > tol * scale * max(anorm, 1.0):
        raise ValueError("first vector is not a companion eigenvector")
    for j in range(1, len(xs)):
        r = np.linalg.norm((A - lambda0 * np.eye(2 * n)) @ xs[j] - xs[j - 1])
        if r > tol * scale * max(anorm, 1.0):
            raise ValueError(f"Jordan relation violated at position {j}")
    us = [x[:n] for x in xs]
    nu = pencil.vector_norm(us[0])
    if nu == 0.0:
        raise ValueError("chain has zero pencil component")
    us = [u / nu for u in us]
    chain = KeldyshChain(lambda0=complex(lambda0), vectors=us)
    chain.residuals = verify_chain(pencil, chain)
    return chain


def jordan_from_keldysh(pencil, chain):
    """Stacked companion chain vectors from a pencil-space Keldysh chain.

    The second block is v_j = lambda0 A2 u_j + A2 u_{j-1}, which inverts
    keldysh_from_jordan exactly on the u components.
    """
    lam0 = chain.lambda0
    A2 = pencil.A2
    out = []
    prev = None
    for u in chain.vectors:
        v = lam0 * (A2 @ u)
        if prev is not None:
            v = v + A2 @ prev
        out.append(np.concatenate([u, v]))
        prev = u
    return out


def pencil_derivatives(pencil, lam0):
    """Taylor blocks of the pencil at lam0: B0 = T(lam0), B1, B2, rest zero."""
    B0 = pencil.T(lam0)
    B1 = pencil.A1 + 2.0 * lam0 * pencil.A2
    B2 = np.asarray(pencil.A2, dtype=complex)
    return B0, B1, B2


def verify_chain(pencil, chain):
    """Residual of each cascaded equation sum_{j<=k} B_{k-j} u_j = 0.

    Residuals are measured against the largest chain vector and the largest
    Taylor block so that well-separated scales (fourth-order stiffness on
    fine grids) do not drown legitimate chains.
    """
    if not chain.vectors:
        raise ValueError("empty chain")
    B = pencil_derivatives(pencil, chain.lambda0)
    bscale = max(max(pencil.operator_norm(M) for M in B), 1e-300)
    uscale = max(pencil.vector_norm(u) for u in chain.vectors)
    if uscale == 0.0:
        raise ValueError("chain of zero vectors")
    out = []
    for k in range(len(chain.vectors)):
        acc = np.zeros(pencil.dim, dtype=complex)
        for m in range(0, min(k, 2) + 1):
            acc += B[m] @ chain.vectors[k - m]
        out.append(float(pencil.vector_norm(acc) / (uscale * bscale)))
    return out


def schatten_norm(M, p):
    """(sum sigma_j^p)^(1/p) over all singular values."""
    if p < 1:
        raise ValueError("Schatten norms need p >= 1")
    s = np.linalg.svd(np.asarray(M), compute_uv=False)
    return float(np.sum(s**p) ** (1.0 / p))


@dataclass(frozen=True)
class TorusSum:
    partial: float
    tail_bound: float

    @property
    def total(self):
        return self.partial + self.tail_bound


def torus_embedding_sum(n, p, cutoff):
    """Partial lattice sum of (1+|xi|^2)^(-p) over Z^n with a rigorous tail.

    Every unit cube centered at a lattice point xi satisfies
    1+|x|^2 >= (1+|xi|^2)/(1+n), so the tail beyond the max-norm cutoff K is
    at most (1+n)^p times the integral of (1+|x|^2)^(-p) over |x| >= K+1/2.
    """
    if n < 1 or int(n) != n:
        raise ValueError("dimension n must be a positive integer")
    if p <= n / 2.0:
        raise ValueError(f"sum diverges for p <= n/2 (p={p}, n={n})")
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    K = int(cutoff)
    if (2 * K + 1) ** n > 5e7:
        raise ValueError("lattice window too large; lower the cutoff")
    if n == 1:
        k = np.arange(1, K + 1, dtype=float)
        partial = 1.0 + 2.0 * np.sum((1.0 + k * k) ** (-p))
    else:
        axes = [np.arange(-K, K + 1, dtype=float) ** 2 for _ in range(n)]
        ssq = axes[0]
        for a in axes[1:]:
            ssq = ssq[..., None] + a
        partial = float(np.sum((1.0 + ssq) ** (-p)))
    # surface area of S^{n-1} times the radial tail integral, via the
    # incomplete beta function: int_R^inf r^{n-1}(1+r^2)^{-p} dr
    a, b = n / 2.0, p - n / 2.0
    R = K + 0.5
    x = R * R / (1.0 + R * R)
    radial = 0.5 * scipy.special.beta(a, b) * (1.0 - scipy.special.betainc(a, b, x))
    surface = 2.0 * np.pi ** (n / 2.0) / scipy.special.gamma(n / 2.0)
    tail = float((1.0 + n) ** p * surface * radial)
    return TorusSum(partial=float(partial), tail_bound=tail)


@dataclass
class CountingReport:
    t_values: np.ndarray
    counts: np.ndarray
    discrete_bounds: np.ndarray
    schatten_bounds: np.ndarray | None
    p: float
    lambda_prime: complex


def counting(eig, lambda_prime, p, t_values):
    """Counting function of the trusted spectrum with Chebyshev-style bounds.

    Reports N(t) = #{|lambda_j - lambda'| < t}, the discrete bound
    t^p sum |lambda_j - lambda'|^{-p}, and, when a companion operator is
    available, t^p ||(A - lambda')^{-1}||_{C_p}^p.
    """
    if isinstance(eig, EigenSolution):
        vals = eig.trusted_eigenvalues
        comp = eig.companion
    else:
        vals = np.asarray(eig, dtype=complex)
        comp = None
    t_values = np.asarray(t_values, dtype=float)
    if vals.size == 0:
        raise ValueError("no trusted eigenvalues to count")
    dist = np.abs(vals - lambda_prime)
    if dist.min() <= 1e-9 * (1.0 + abs(lambda_prime)):
        raise SingularAtLambdaError(
            f"reference point {lambda_prime} coincides with an eigenvalue"
        )
    counts = np.array([int(np.sum(dist < t)) for t in t_values])
    discrete = t_values**p * float(np.sum(dist ** (-p)))
    schatten = None
    if comp is not None:
        A = comp.matrix
        R = np.linalg.inv(A - lambda_prime * np.eye(A.shape[0]))
        schatten = t_values**p * schatten_norm(R, p) ** p
    return CountingReport(
        t_values=t_values,
        counts=counts,
        discrete_bounds=discrete,
        schatten_bounds=schatten,
        p=float(p),
        lambda_prime=complex(lambda_prime),
    )


def chain_matrix(eig, m):
    """Column-stack of all chain vectors of the m clusters nearest lambda'."""
    chosen = sorted(eig.clusters, key=lambda c: abs(c.center - eig.lambda_prime))[:m]
    cols = [u for cl in chosen for ch in cl.chains for u in ch.vectors]
    if not cols:
        raise ValueError("no chains available")
    return np.column_stack(cols)


def completeness_residual(eig, pencil, f, m):
    """Relative weighted distance from f to the span of the nearest m chains."""
    if m > len(eig.clusters):
        raise ValueError(f"only {len(eig.clusters)} trusted clusters available")
    X = chain_matrix(eig, m)
    S, _ = pencil._scaling()
    if S is None:
        S = np.eye(pencil.dim)
    fs = S @ np.asarray(f, dtype=complex)
    Xs = S @ X
    sol, res, rank, sv = np.linalg.lstsq(Xs, fs, rcond=None)
    if rank < Xs.shape[1]:
        warnings.warn(
            f"chain span is rank deficient ({rank} of {Xs.shape[1]})",
            stacklevel=2,
        )
    nf = np.linalg.norm(fs)
    if nf == 0.0:
        raise ValueError("zero sample vector")
    return float(np.linalg.norm(Xs @ sol - fs) / nf)


def find_reference_point(eigenvalues, candidates=None):
    """Positive real point maximizing relative distance to the spectrum."""
    vals = np.asarray(
        eigenvalues.trusted_eigenvalues
        if isinstance(eigenvalues, EigenSolution)
        else eigenvalues,
        dtype=complex,
    )
    if candidates is None:
        candidates = np.geomspace(1.0, 100.0, 13)
    best, best_score = None, -1.0
    for t in candidates:
        score = float(np.abs(vals - t).min() / (1.0 + t)) if vals.size else 1.0
        if score > best_score:
            best, best_score = float(t), score
    if best_score <= 1e-9:
        raise SingularAtLambdaError("every candidate reference point hits the spectrum")
    return complex(best)


def solve_spectrum(profile, a, b, n_pts, bc, refine_increment=8,
                   lambda_prime="auto", trust_rtol=_TRUST_RTOL,
                   residual_tol=_RESIDUAL_TOL):
    """Two-grid trusted eigensolve of the 1D pencil.

    Assembles at n_pts and n_pts + refine_increment, eigensolves both, and
    trusts base-grid eigenvalues reproduced on the refined grid.  With
    lambda_prime="auto" the reference point comes from the invertibility scan
    over the positive reals.
    """
    from .discretize import assemble_pencil, make_grid

    base = assemble_pencil(profile, make_grid(a, b, n_pts), bc)
    fine = assemble_pencil(profile, make_grid(a, b, n_pts + refine_increment), bc)
    comp_fine = linearize(fine)
    sol_fine = eigen(comp_fine, lambda_prime=0.0, residual_tol=residual_tol)
    comp_base = linearize(base)
    lp = 0.0 if lambda_prime == "auto" else lambda_prime
    sol = eigen(comp_base, lambda_prime=lp, reference=sol_fine,
                trust_rtol=trust_rtol, residual_tol=residual_tol)
    if lambda_prime == "auto":
        lp = find_reference_point(sol)
        sol = eigen(comp_base, lambda_prime=lp, reference=sol_fine,
                    trust_rtol=trust_rtol, residual_tol=residual_tol)
    return sol


def solve_spectrum_2d(profile, rect, n_x, n_y, bc, refine_increment=4,
                      lambda_prime=0.0, trust_rtol=_TRUST_RTOL,
                      residual_tol=_RESIDUAL_TOL):
    """Two-grid trusted eigensolve on a rectangle (tensor grids)."""
    from .discretize import assemble_pencil_2d, make_grid

    x0, x1, y0, y1 = rect
    base = assemble_pencil_2d(
        profile, make_grid(x0, x1, n_x), make_grid(y0, y1, n_y), bc
    )
    fine = assemble_pencil_2d(
        profile,
        make_grid(x0, x1, n_x + refine_increment),
        make_grid(y0, y1, n_y + refine_increment),
        bc,
    )
    sol_fine = eigen(linearize(fine), lambda_prime=0.0, residual_tol=residual_tol)
    return eigen(linearize(base), lambda_prime=lambda_prime, reference=sol_fine,
                 trust_rtol=trust_rtol, residual_tol=residual_tol)
