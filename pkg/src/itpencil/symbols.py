"""Principal symbols and parameter-ellipticity checks for transmission pencils.

Two operator families are supported, both fourth order quadratic pencils in the
spectral parameter.  With q the (positive) contrast profile:

  Helmholtz form      T(lam) u = (D2 q D2) u - lam (D2 q + q D2 + D2) u + lam^2 (1 + q) u
  Schroedinger form   T(lam) u = (D2 q D2) u + D2 u - lam (D2 q + q D2 + 1) u + lam^2 q u

where D2 stands for the Laplacian.  The principal symbol (with lam carrying
weight two) and the associated half-line boundary determinants are what this
module evaluates; they decide invertibility of the pencil off the negative
real axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import DegenerateInputError

_ROOT_TOL = 1e-10


class PencilKind(Enum):
    HELMHOLTZ = "helmholtz"
    SCHRODINGER = "schrodinger"


@dataclass(frozen=True)
class BoundaryPair:
    """Orders (m1, m2) of the two homogeneous boundary traces, m1 != m2."""

    m1: int
    m2: int

    def __post_init__(self):
        for m in (self.m1, self.m2):
            if not isinstance(m, int) or not 0 <= m <= 3:
                raise ValueError("boundary trace orders must be integers in 0..3")
        if self.m1 == self.m2:
            raise ValueError("boundary trace orders must differ")


@dataclass(frozen=True)
class SymbolPoint:
    """A sample (q, |xi|^2, lam) of the symbol's argument space."""

    q_val: float
    xi_sq: float
    lam: complex

    def __post_init__(self):
        if self.q_val <= 0.0:
            raise ValueError("q must be positive")
        if self.xi_sq < 0.0:
            raise ValueError("xi_sq must be nonnegative")


@dataclass(frozen=True)
class Cone:
    """Closed angular sector {r e^{i theta}: theta_min <= theta <= theta_max}.

    Angles are radians in [-pi, pi].  A cone whose closure touches the
    negative real axis is representable (the checks will then report a
    witness), but valid ellipticity scans should keep a positive angular gap.
    """

    theta_min: float
    theta_max: float

    def __post_init__(self):
        if not -math.pi <= self.theta_min <= self.theta_max <= math.pi:
            raise ValueError("need -pi <= theta_min <= theta_max <= pi")

    def touches_negative_axis(self):
        return self.theta_min <= -math.pi + 1e-12 or self.theta_max >= math.pi - 1e-12


@dataclass(frozen=True)
class CharacteristicRoots:
    """Roots r1..r4 of the half-line symbol ODE, Re r1, r3 > 0 > Re r2, r4."""

    r1: complex
    r2: complex
    r3: complex
    r4: complex


@dataclass
class ConditionReport:
    """Result of a sampled ellipticity scan."""

    min_modulus: float
    witness: SymbolPoint
    witness_value: complex
    passed: bool
    tolerance: float
    n_samples: int


def _symbol_values(kind, q, xi_sq, lam):
    """Vectorized principal symbol; lam has weight two, xi weight one."""
    q = np.asarray(q, dtype=float)
    xi_sq = np.asarray(xi_sq, dtype=float)
    lam = np.asarray(lam, dtype=complex)
    if kind is PencilKind.HELMHOLTZ:
        return q * xi_sq**2 + lam * (1.0 + 2.0 * q) * xi_sq + lam**2 * (1.0 + q)
    if kind is PencilKind.SCHRODINGER:
        return q * (xi_sq + lam) ** 2
    raise ValueError(f"unknown pencil kind: {kind!r}")


def principal_symbol(kind, point):
    """Principal symbol at a single SymbolPoint."""
    return complex(_symbol_values(kind, point.q_val, point.xi_sq, point.lam))


def condition1_roots(kind, q_val, xi_sq):
    """Roots in lam of the principal symbol for fixed q and |xi|^2.

    Both roots lie on the closed negative real axis, which is why any cone
    avoiding that axis keeps the symbol bounded away from zero.
    """
    if q_val <= 0.0:
        raise ValueError("q must be positive")
    if xi_sq < 0.0:
        raise ValueError("xi_sq must be nonnegative")
    if kind is PencilKind.HELMHOLTZ:
        # factorization q xi^4 + lam (1+2q) xi^2 + lam^2 (1+q)
        #   = (xi^2 + lam) (q xi^2 + lam (1+q))
        return (-xi_sq, -q_val / (1.0 + q_val) * xi_sq)
    if kind is PencilKind.SCHRODINGER:
        return (-xi_sq, -xi_sq)
    raise ValueError(f"unknown pencil kind: {kind!r}")


def _lattice(n, dim, seed):
    """Deterministic low-discrepancy point set in [0,1)^dim.

    Kronecker sequence driven by the generalized golden ratio; the seed only
    moves the lattice offset, so scans are reproducible.
    """
    # root of x**(dim+1) = x + 1
    phi = 2.0
    for _ in range(64):
        phi = (1.0 + phi) ** (1.0 / (dim + 1))
    alpha = np.array([phi ** -(k + 1) for k in range(dim)])
    shift = np.random.Generator(np.random.PCG64(seed)).random(dim)
    idx = np.arange(1, n + 1)[:, None]
    return (shift[None, :] + idx * alpha[None, :]) % 1.0


def _cone_samples(q_range, cone, samples, seed):
    q_lo, q_hi = q_range
    if not 0.0 < q_lo <= q_hi:
        raise ValueError("q_range must satisfy 0 < q_min <= q_max")
    pts = _lattice(samples, 3, seed)
    qs = q_lo + pts[:, 0] * (q_hi - q_lo)
    # normalized slice xi_sq + |lam| = 1 of the weighted cone
    t = pts[:, 1]
    args = cone.theta_min + pts[:, 2] * (cone.theta_max - cone.theta_min)
    # deterministic sweeps along both edges and the midline: a degenerate cone
    # with an edge on the negative real axis then samples the symbol roots
    # exactly instead of only nearby
    mid = 0.5 * (cone.theta_min + cone.theta_max)
    t_grid = np.linspace(0.0, 1.0, 33)
    q_mid = 0.5 * (q_lo + q_hi)
    for ang in (cone.theta_min, mid, cone.theta_max):
        for qv in (q_lo, q_mid, q_hi):
            qs = np.concatenate([qs, np.full(t_grid.size, qv)])
            t = np.concatenate([t, t_grid])
            args = np.concatenate([args, np.full(t_grid.size, ang)])
    xi_sq = t
    lam = (1.0 - t) * np.exp(1j * args)
    return qs, xi_sq, lam


def check_condition1(kind, q_range, cone, samples=2000, seed=0, tolerance=1e-9):
    """Scan |principal symbol| over the normalized set xi_sq + |lam| = 1.

    Returns a ConditionReport whose witness is the sampled minimizer.  For a
    cone with positive angular distance to the negative real axis the minimum
    stays above the tolerance; a cone touching the axis produces a witness
    near a symbol root.
    """
    qs, xi_sq, lam = _cone_samples(q_range, cone, samples, seed)
    vals = _symbol_values(kind, qs, xi_sq, lam)
    mod = np.abs(vals)
    j = int(np.argmin(mod))
    witness = SymbolPoint(float(qs[j]), float(xi_sq[j]), complex(lam[j]))
    return ConditionReport(
        min_modulus=float(mod[j]),
        witness=witness,
        witness_value=complex(vals[j]),
        passed=bool(mod[j] > tolerance),
        tolerance=tolerance,
        n_samples=len(qs),
    )


def characteristic_roots(kind, q_val, xi_prime_sq, lam, tol=_ROOT_TOL):
    """Characteristic roots of the half-line ODE at tangential frequency xi'.

    r1^2 = r2^2 = lam + xi'^2 and (Helmholtz) r3^2 = r4^2 = lam (1 + 1/q) + xi'^2;
    the Schroedinger form repeats the first pair.  Roots are ordered so that
    Re r1, Re r3 > 0 > Re r2, Re r4; inputs for which a root has vanishing
    real part (lam on the negative axis with xi' = 0, say) are rejected.
    """
    if q_val <= 0.0:
        raise ValueError("q must be positive")
    if xi_prime_sq < 0.0:
        raise ValueError("xi_prime_sq must be nonnegative")
    r1 = np.sqrt(complex(lam + xi_prime_sq))
    if kind is PencilKind.HELMHOLTZ:
        r3 = np.sqrt(complex(lam * (1.0 + 1.0 / q_val) + xi_prime_sq))
    elif kind is PencilKind.SCHRODINGER:
        r3 = r1
    else:
        raise ValueError(f"unknown pencil kind: {kind!r}")
    for r in (r1, r3):
        if abs(r.real) <= tol * max(1.0, abs(r)):
            raise DegenerateInputError(
                f"characteristic root {r} has no real-part sign at lam={lam}"
            )
    return CharacteristicRoots(r1=complex(r1), r2=complex(-r1), r3=complex(r3), r4=complex(-r3))


def _confluent_det(m1, m2, r):
    """Boundary determinant for a repeated decaying root r (basis e^{rt}, t e^{rt})."""

    def row(m):
        a = r**m
        b = 0.0 if m == 0 else m * r ** (m - 1)
        return a, b

    a1, b1 = row(m1)
    a2, b2 = row(m2)
    return a1 * b2 - a2 * b1


def lopatinsky_determinant(kind, bc, q_val, xi_prime_sq, lam):
    """Boundary determinant deciding unique solvability on the half line.

    For distinct decaying roots r2, r4 the determinant is
    det [[r2^m1, r4^m1], [r2^m2, r4^m2]]; a repeated decaying root (the
    Schroedinger form for every lam, and lam = 0 for both forms) switches to
    the confluent basis (c2 + c4 t) e^{r t}.
    """
    if isinstance(bc, BoundaryPair):
        m1, m2 = bc.m1, bc.m2
    else:
        m1, m2 = bc
        BoundaryPair(m1, m2)  # validation only
    if xi_prime_sq < 0.0:
        raise ValueError("xi_prime_sq must be nonnegative")
    if abs(lam) + xi_prime_sq == 0.0:
        raise DegenerateInputError("(xi', lam) = (0, 0) is excluded")

    if lam == 0:
        s = math.sqrt(xi_prime_sq)
        return complex(_confluent_det(m1, m2, -s))
    if kind is PencilKind.SCHRODINGER:
        r2 = -np.sqrt(complex(lam + xi_prime_sq))
        return complex(_confluent_det(m1, m2, complex(r2)))
    if kind is PencilKind.HELMHOLTZ:
        if q_val <= 0.0:
            raise ValueError("q must be positive")
        r2 = -np.sqrt(complex(lam + xi_prime_sq))
        r4 = -np.sqrt(complex(lam * (1.0 + 1.0 / q_val) + xi_prime_sq))
        return complex(r2**m1 * r4**m2 - r2**m2 * r4**m1)
    raise ValueError(f"unknown pencil kind: {kind!r}")


def check_condition2(kind, bc, q_range, cone, samples=2000, seed=0, tolerance=1e-9):
    """Scan the boundary determinant over the normalized cone slice.

    min_modulus is scale-fair: each sampled determinant is divided by the
    product of its row norms, so the reported minimum is the sine of the
    angle between the two trace rows.  witness_value keeps the raw
    determinant at the minimizer.
    """
    if isinstance(bc, tuple):
        bc = BoundaryPair(*bc)
    qs, xi_sq, lam = _cone_samples(q_range, cone, samples, seed)
    raw = np.empty(len(qs), dtype=complex)
    normed = np.empty(len(qs), dtype=float)
    for i in range(len(qs)):
        try:
            d = lopatinsky_determinant(kind, bc, qs[i], xi_sq[i], lam[i])
        except DegenerateInputError:
            raw[i] = np.nan
            normed[i] = np.inf
            continue
        raw[i] = d
        normed[i] = abs(d) / _row_scale(kind, bc, qs[i], xi_sq[i], lam[i])
    j = int(np.argmin(normed))
    witness = SymbolPoint(float(qs[j]), float(xi_sq[j]), complex(lam[j]))
    return ConditionReport(
        min_modulus=float(normed[j]),
        witness=witness,
        witness_value=complex(raw[j]),
        passed=bool(normed[j] > tolerance),
        tolerance=tolerance,
        n_samples=len(qs),
    )


def _row_scale(kind, bc, q_val, xi_prime_sq, lam):
    """Product of the 2-norms of the two boundary rows at a sample."""
    if lam == 0:
        r2 = r4 = complex(-math.sqrt(xi_prime_sq))
        confluent = True
    elif kind is PencilKind.SCHRODINGER:
        r2 = r4 = complex(-np.sqrt(complex(lam + xi_prime_sq)))
        confluent = True
    else:
        r2 = complex(-np.sqrt(complex(lam + xi_prime_sq)))
        r4 = complex(-np.sqrt(complex(lam * (1.0 + 1.0 / q_val) + xi_prime_sq)))
        confluent = False

    def row_norm(m):
        if confluent:
            b = 0.0 if m == 0 else m * r2 ** (m - 1)
            return math.hypot(abs(r2**m), abs(b))
        return math.hypot(abs(r2**m), abs(r4**m))

    return max(row_norm(bc.m1) * row_norm(bc.m2), 1e-300)
