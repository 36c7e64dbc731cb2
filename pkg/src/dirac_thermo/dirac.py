"""Constraint evaluation and induced Dirac subspaces on the four arenas.

Everything here is linear algebra at a frozen base point: the admissible
variations, their annihilator, the symmetric double pairing on tangent
plus covector data, and the stacked linear conditions that cut out the
induced subspace per arena. One assembly routine produces the condition
matrix; membership residuals and the numerical basis both come from it,
so the two can never disagree about which subspace is meant.

Condition stacks, in residual row order (s = dL/dS at the point's own
velocity; T and the re-expressed friction are taken at the inverted
velocity on the momentum-side arenas):

    P:      [(pdot + a) s + (lamdot + tS) F | s Sdot - <F, qdot>
             | b | Y | u - qdot | Psi - Sdot]
    M:      [(pdot + a) s + tS F | s Sdot - <F, qdot> | b | u - qdot]
    TstarQ: [(pdot + a) T - (lamdot + tS) F | T Sdot + <F, qdot>
             | u - qdot | Psi - Sdot]
    N:      [(pdot + a) T - tS F | T Sdot + <F, qdot> | u - qdot]

where a covector is split per arena order into (a, tS, ...) blocks: a on
the configuration slots, tS on the entropy slot, then one block per
remaining coordinate group (b for velocity, Y for the rate slot, u for
momentum, Psi for the covariable slot).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import null_space

from .errors import (
    ArenaError,
    BaseMismatchError,
    DimensionMismatchError,
    DiracThermoError,
    TemperatureSignError,
)
from .legendre import inverse_partial_legendre
from .model import (
    SimpleThermoModel,
    TangentCovectorPair,
    _as_array,
    arena_dim,
    arena_of_point,
    entropy_slope,
    friction_value,
    temperature,
)

__all__ = [
    "DEFAULT_MEMBERSHIP_TOL",
    "DiracBasis",
    "annihilator_residual",
    "annihilator_row",
    "canonical_one_form",
    "condition_matrix",
    "dirac_basis",
    "dirac_membership",
    "double_pairing",
    "phenomenological_constraint_residual",
    "presymplectic_pairing",
    "variational_constraint_residual",
]

DEFAULT_MEMBERSHIP_TOL = 1e-9


# --- constraint layer --------------------------------------------------


def variational_constraint_residual(model: SimpleThermoModel, q, v, S, dq, dS) -> float:
    """dL/dS * dS - <F(q,v,S), dq>; zero exactly on admissible variations."""
    dq = _as_array(dq, model.n, "dq")
    s = entropy_slope(model, q, v, S)
    F = friction_value(model, q, v, S)
    return float(s * float(dS) - F @ dq)


def phenomenological_constraint_residual(model: SimpleThermoModel, q, v, S, Sdot) -> float:
    """The same relation imposed on actual rates: variations -> (v, Sdot).

    Delegates to the variational form so the two stay bitwise equal.
    """
    return variational_constraint_residual(model, q, v, S, dq=v, dS=Sdot)


def annihilator_row(model: SimpleThermoModel, q, v, S) -> np.ndarray:
    """The single row [-F | dL/dS] whose kernel is the admissible set.

    Covectors annihilating every admissible variation are exactly the
    scalar multiples of this row read as (a, tS) = (-F, dL/dS).
    """
    s = entropy_slope(model, q, v, S)
    F = friction_value(model, q, v, S)
    return np.concatenate([-F, [s]])


def annihilator_residual(model: SimpleThermoModel, q, v, S, alpha, tS) -> np.ndarray:
    """n-vector a * dL/dS + tS * F; zero iff (a, tS) annihilates the
    admissible variations."""
    alpha = _as_array(alpha, model.n, "alpha")
    s = entropy_slope(model, q, v, S)
    F = friction_value(model, q, v, S)
    return alpha * s + float(tS) * F


# --- pairings ------------------------------------------------------------


def _require_same_base(pair1: TangentCovectorPair, pair2: TangentCovectorPair):
    a1, a2 = pair1.arena, pair2.arena
    if a1 != a2:
        raise BaseMismatchError(f"pairs live on different arenas: {a1} vs {a2}")
    if not np.array_equal(pair1.base.as_vector(), pair2.base.as_vector()):
        raise BaseMismatchError("pairs are anchored at different base points")


def double_pairing(pair1: TangentCovectorPair, pair2: TangentCovectorPair) -> float:
    """Symmetric pairing <cov2, tan1> + <cov1, tan2> on the doubled fiber."""
    _require_same_base(pair1, pair2)
    t1 = np.asarray(pair1.tangent, dtype=float)
    t2 = np.asarray(pair2.tangent, dtype=float)
    c1 = np.asarray(pair1.covector, dtype=float)
    c2 = np.asarray(pair2.covector, dtype=float)
    if t1.shape != t2.shape or c1.shape != c2.shape or t1.shape != c1.shape:
        raise DimensionMismatchError("pairing requires equal-length tangents and covectors")
    return float(c2 @ t1 + c1 @ t2)


def canonical_one_form(arena: str, point) -> np.ndarray:
    """Coefficients of the tautological one-form in the arena's flat order.

    Configuration slots carry the momentum, the entropy slot carries the
    covariable on the arenas that have one, and every remaining slot is
    zero. The two-form used below is minus its exterior derivative.
    """
    if arena_of_point(point) != arena:
        raise ArenaError(f"point type {type(point).__name__} is not on arena {arena!r}")
    n = point.q.size
    theta = np.zeros(arena_dim(arena, n))
    theta[:n] = point.p
    if arena in ("P", "TstarQ"):
        theta[n] = point.lam
    return theta


def presymplectic_pairing(arena: str, point, tangent1, tangent2) -> float:
    """Evaluate the arena's closed two-form on two tangent vectors.

    On the two larger arenas the form pairs configuration with momentum
    and entropy with its covariable; on the reduced arenas only the
    configuration-momentum block survives, so the form is degenerate.
    """
    if arena_of_point(point) != arena:
        raise ArenaError(f"point type {type(point).__name__} is not on arena {arena!r}")
    n = point.q.size
    d = arena_dim(arena, n)
    t1 = _as_array(tangent1, d, "tangent1")
    t2 = _as_array(tangent2, d, "tangent2")
    if arena == "P":
        qs, ps, Ss, Ls = slice(0, n), slice(2 * n + 2, 3 * n + 2), n, 3 * n + 2
    elif arena == "TstarQ":
        qs, ps, Ss, Ls = slice(0, n), slice(n + 1, 2 * n + 1), n, 2 * n + 1
    elif arena == "M":
        qs, ps, Ss, Ls = slice(0, n), slice(2 * n + 1, 3 * n + 1), None, None
    elif arena == "N":
        qs, ps, Ss, Ls = slice(0, n), slice(n + 1, 2 * n + 1), None, None
    else:
        raise ArenaError(f"unknown arena {arena!r}")
    out = float(t1[qs] @ t2[ps] - t1[ps] @ t2[qs])
    if Ss is not None:
        out += t1[Ss] * t2[Ls] - t1[Ls] * t2[Ss]
    return float(out)


# --- induced subspace ----------------------------------------------------


def _point_coefficients(arena: str, model: SimpleThermoModel, point):
    """(coefficient on the entropy slope or temperature, friction covector)
    entering the arena's conditions, evaluated per the arena's convention."""
    if arena in ("P", "M"):
        s = entropy_slope(model, point.q, point.v, point.S)
        if s == 0.0 or not np.isfinite(s):
            raise TemperatureSignError(
                f"entropy slope dL/dS = {s!r} at the base point; the induced "
                "subspace is not defined there"
            )
        return s, friction_value(model, point.q, point.v, point.S)
    if arena in ("TstarQ", "N"):
        v = inverse_partial_legendre(model, point.q, point.p, point.S)
        return temperature(model, point.q, v, point.S), friction_value(
            model, point.q, v, point.S
        )
    raise ArenaError(f"unknown arena {arena!r}")


def condition_matrix(
    arena: str, model: SimpleThermoModel, point, coefficients=None
) -> np.ndarray:
    """The d x 2d matrix whose kernel is the induced subspace at ``point``,
    acting on stacked (tangent, covector) coordinates.

    ``coefficients`` may carry a precomputed (entropy slope or
    temperature, friction covector) pair, per the arena's convention, to
    spare integrators a re-evaluation; omitted, both are computed here.
    """
    if arena_of_point(point) != arena:
        raise ArenaError(f"point type {type(point).__name__} is not on arena {arena!r}")
    n = model.n
    if point.q.size != n:
        raise DimensionMismatchError(
            f"point has {point.q.size} configuration coordinates, model has {n}"
        )
    d = arena_dim(arena, n)
    if coefficients is None:
        coef, F = _point_coefficients(arena, model, point)
    else:
        coef, F = float(coefficients[0]), _as_array(coefficients[1], n, "friction")
    A = np.zeros((d, 2 * d))

    if arena == "P":
        # tangent slots: qd 0..n-1, Sd n, vd n+1..2n, Wd 2n+1, pd 2n+2..3n+1, ld 3n+2
        pd = 2 * n + 2
        ld = 3 * n + 2
        for i in range(n):
            A[i, pd + i] = coef          # rate rows: (pd + a) s + (ld + tS) F
            A[i, d + i] = coef
            A[i, ld] = F[i]
            A[i, d + n] = F[i]
        A[n, n] = coef                   # entropy row: s Sd - <F, qd>
        A[n, 0:n] = -F
        for i in range(n):
            A[n + 1 + i, d + n + 1 + i] = 1.0      # b = 0
        A[2 * n + 1, d + 2 * n + 1] = 1.0          # Y = 0
        for i in range(n):
            A[2 * n + 2 + i, d + pd + i] = 1.0     # u = qd
            A[2 * n + 2 + i, i] = -1.0
        A[3 * n + 2, d + ld] = 1.0                 # Psi = Sd
        A[3 * n + 2, n] = -1.0
    elif arena == "M":
        # tangent slots: qd, Sd at n, vd n+1..2n, pd 2n+1..3n
        pd = 2 * n + 1
        for i in range(n):
            A[i, pd + i] = coef          # (pd + a) s + tS F
            A[i, d + i] = coef
            A[i, d + n] = F[i]
        A[n, n] = coef
        A[n, 0:n] = -F
        for i in range(n):
            A[n + 1 + i, d + n + 1 + i] = 1.0      # b = 0
        for i in range(n):
            A[2 * n + 1 + i, d + pd + i] = 1.0     # u = qd
            A[2 * n + 1 + i, i] = -1.0
    elif arena == "TstarQ":
        # tangent slots: qd, Sd at n, pd n+1..2n, ld 2n+1
        pd = n + 1
        ld = 2 * n + 1
        for i in range(n):
            A[i, pd + i] = coef          # (pd + a) T - (ld + tS) F
            A[i, d + i] = coef
            A[i, ld] = -F[i]
            A[i, d + n] = -F[i]
        A[n, n] = coef                   # T Sd + <F, qd>
        A[n, 0:n] = F
        for i in range(n):
            A[n + 1 + i, d + pd + i] = 1.0         # u = qd
            A[n + 1 + i, i] = -1.0
        A[2 * n + 1, d + ld] = 1.0                 # Psi = Sd
        A[2 * n + 1, n] = -1.0
    else:  # N
        pd = n + 1
        for i in range(n):
            A[i, pd + i] = coef          # (pd + a) T - tS F
            A[i, d + i] = coef
            A[i, d + n] = -F[i]
        A[n, n] = coef                   # T Sd + <F, qd>
        A[n, 0:n] = F
        for i in range(n):
            A[n + 1 + i, d + pd + i] = 1.0         # u = qd
            A[n + 1 + i, i] = -1.0
    return A


def dirac_membership(
    arena: str,
    model: SimpleThermoModel,
    pair_tangent: TangentCovectorPair,
    pair_covector: Optional[TangentCovectorPair] = None,
    coefficients=None,
) -> np.ndarray:
    """Stacked residual of the arena's conditions on (tangent, covector).

    The tangent is read from ``pair_tangent`` and the covector from
    ``pair_covector`` (defaulting to the same pair); their base points
    must coincide. Zero residual, up to tolerance, means the element
    belongs to the induced subspace at that base point. ``coefficients``
    is forwarded to :func:`condition_matrix`.
    """
    if pair_covector is None:
        pair_covector = pair_tangent
    _require_same_base(pair_tangent, pair_covector)
    if pair_tangent.arena != arena:
        raise ArenaError(
            f"pairs live on arena {pair_tangent.arena!r}, membership asked for {arena!r}"
        )
    pt = pair_tangent.validated(model.n)
    pc = pair_covector.validated(model.n)
    A = condition_matrix(arena, model, pt.base, coefficients=coefficients)
    return A @ np.concatenate([pt.tangent, pc.covector])


@dataclass(frozen=True)
class DiracBasis:
    """Numerical basis of the induced subspace at one base point."""

    arena: str
    base: object
    basis: list
    dimension: int
    isotropy_defect: float


def dirac_basis(arena: str, model: SimpleThermoModel, point) -> DiracBasis:
    """Orthonormal kernel basis of the stacked conditions at ``point``.

    The kernel dimension must equal the arena dimension (the conditions
    are independent whenever the entropy slope is nonzero, friction or
    not); anything else is reported as an internal inconsistency. The
    isotropy defect is the largest double pairing over all basis pairs
    and certifies maximal isotropy of the subspace.
    """
    A = condition_matrix(arena, model, point)
    d = A.shape[0]
    kernel = null_space(A)
    if kernel.shape[1] != d:
        raise DiracThermoError(
            f"induced subspace on {arena} has dimension {kernel.shape[1]}, "
            f"expected {d}; conditions are rank deficient at this point"
        )
    pairs = [
        TangentCovectorPair(base=point, tangent=kernel[:d, j], covector=kernel[d:, j])
        for j in range(d)
    ]
    # pairing of columns j,k: cov_k . tan_j + cov_j . tan_k, all pairs at once
    T = kernel[:d, :]
    C = kernel[d:, :]
    G = C.T @ T
    defect = float(np.max(np.abs(G + G.T)))
    return DiracBasis(
        arena=arena, base=point, basis=pairs, dimension=d, isotropy_defect=defect
    )
