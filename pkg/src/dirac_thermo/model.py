"""Model definition and state types for simple thermodynamic systems.

A simple system here is: mechanical coordinates q (n of them), one
entropy scalar S, a Lagrangian L(q, v, S), and a friction covector
F(q, v, S) that feeds dissipated power back into S. Evaluators are
written once, generically over the scalar type, and all derivatives
come out of the dual-number layer.

Four state arenas appear throughout the package, each with a fixed
flat-vector coordinate order:

    ``P``      (q, S, v, W, p, lam)   dimension 3n + 3
    ``TstarQ`` (q, S, p, lam)         dimension 2n + 2
    ``M``      (q, S, v, p)           dimension 3n + 1
    ``N``      (q, S, p)              dimension 2n + 1

W is an entropy-rate slot, lam the conjugate covariable of S (zero
along physical motions). Every serialization in the package uses these
orders and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import duals
from .errors import ArenaError, DimensionMismatchError, TemperatureSignError

__all__ = [
    "ARENAS",
    "DomainBox",
    "PointM",
    "PointN",
    "PointP",
    "PointTstarQ",
    "SimpleThermoModel",
    "TangentCovectorPair",
    "arena_dim",
    "arena_of_point",
    "entropy_slope",
    "external_value",
    "friction_value",
    "friction_velocity_jacobian",
    "lagrangian_partials",
    "lagrangian_value",
    "mixed_velocity_term",
    "momentum_rate",
    "point_from_vector",
    "temperature",
    "velocity_hessian",
]

ARENAS = ("P", "TstarQ", "M", "N")


def arena_dim(arena: str, n: int) -> int:
    if arena == "P":
        return 3 * n + 3
    if arena == "TstarQ":
        return 2 * n + 2
    if arena == "M":
        return 3 * n + 1
    if arena == "N":
        return 2 * n + 1
    raise ArenaError(f"unknown arena {arena!r}; expected one of {ARENAS}")


def _as_array(x, n: int, label: str) -> np.ndarray:
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.shape != (n,):
        raise DimensionMismatchError(f"{label} must have length {n}, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class DomainBox:
    """Per-coordinate sampling ranges used by property tests and checks."""

    q_lo: tuple
    q_hi: tuple
    v_lo: tuple
    v_hi: tuple
    s_lo: float
    s_hi: float

    def sample(self, rng: np.random.Generator):
        q = rng.uniform(self.q_lo, self.q_hi)
        v = rng.uniform(self.v_lo, self.v_hi)
        s = float(rng.uniform(self.s_lo, self.s_hi))
        return q, v, s


@dataclass(frozen=True)
class SimpleThermoModel:
    """Immutable bundle of evaluators defining one simple system.

    ``lagrangian(q, v, S)`` and ``friction(q, v, S)`` take q and v as
    sequences of scalars (plain or dual) plus a scalar S; lagrangian
    returns a scalar, friction a length-n covector sequence. The
    entropy slope dL/dS must stay strictly negative on the domain box.
    ``degenerate`` flags models whose Lagrangian has no velocity
    dependence; those support the Lagrangian-side formulations only.
    ``meta`` carries builder-provided closed forms for tests and is
    never read by the core algorithms.
    """

    n: int
    lagrangian: Callable
    friction: Callable
    domain_box: DomainBox
    external: Optional[Callable] = None
    name: str = "model"
    degenerate: bool = False
    meta: dict = field(default_factory=dict)


# --- scalar/derivative access ----------------------------------------


def lagrangian_value(model: SimpleThermoModel, q, v, S) -> float:
    q = _as_array(q, model.n, "q")
    v = _as_array(v, model.n, "v")
    return duals.value(model.lagrangian(tuple(q), tuple(v), float(S)))


def _flat_lagrangian(model: SimpleThermoModel):
    n = model.n

    def f(*args):
        return model.lagrangian(args[:n], args[n : 2 * n], args[2 * n])

    return f


def lagrangian_partials(model: SimpleThermoModel, q, v, S):
    """All first partials of L, split as (dLdq, dLdv, dLdS)."""
    q = _as_array(q, model.n, "q")
    v = _as_array(v, model.n, "v")
    n = model.n
    g = duals.gradient(_flat_lagrangian(model), [*q, *v, float(S)])
    return np.array(g[:n]), np.array(g[n : 2 * n]), g[2 * n]


def entropy_slope(model: SimpleThermoModel, q, v, S) -> float:
    """dL/dS alone; one lifted evaluation, no full gradient."""
    q = _as_array(q, model.n, "q")
    v = _as_array(v, model.n, "v")
    out = model.lagrangian(tuple(q), tuple(v), duals.Dual(float(S), 1.0))
    return duals.value(out.du) if isinstance(out, duals.Dual) else 0.0


def temperature(model: SimpleThermoModel, q, v, S) -> float:
    """-dL/dS; fails loudly unless strictly positive."""
    t = -entropy_slope(model, q, v, S)
    if not t > 0.0:
        raise TemperatureSignError(
            f"temperature -dL/dS = {t:.6g} must be strictly positive (model {model.name})"
        )
    return t


def friction_value(model: SimpleThermoModel, q, v, S) -> np.ndarray:
    q = _as_array(q, model.n, "q")
    v = _as_array(v, model.n, "v")
    out = model.friction(tuple(q), tuple(v), float(S))
    return _as_array([duals.value(c) for c in out], model.n, "friction covector")


def external_value(model: SimpleThermoModel, q, v, S) -> np.ndarray:
    if model.external is None:
        return np.zeros(model.n)
    q = _as_array(q, model.n, "q")
    v = _as_array(v, model.n, "v")
    out = model.external(tuple(q), tuple(v), float(S))
    return _as_array([duals.value(c) for c in out], model.n, "external covector")


def velocity_hessian(model: SimpleThermoModel, q, v, S) -> np.ndarray:
    """Mass matrix d2L/dv2, upper triangle mirrored."""
    q = tuple(_as_array(q, model.n, "q"))
    S = float(S)

    def g(*vs):
        return model.lagrangian(q, vs, S)

    return duals.hessian_matrix(g, list(_as_array(v, model.n, "v")), symmetric=True)


def mixed_velocity_term(model: SimpleThermoModel, q, v, S, qdot, Sdot) -> np.ndarray:
    """(d2L/dv dq) qdot + (d2L/dv dS) Sdot, one nested evaluation per row."""
    n = model.n
    q = _as_array(q, n, "q")
    v = _as_array(v, n, "v")
    qdot = _as_array(qdot, n, "qdot")
    f = _flat_lagrangian(model)
    args = [*q, *v, float(S)]
    direction = [*qdot, *np.zeros(n), float(Sdot)]
    return np.array(
        [duals.second_directional(f, args, direction, n + i) for i in range(n)]
    )


def momentum_rate(model: SimpleThermoModel, q, v, S, qdot, vdot, Sdot) -> np.ndarray:
    """Chain-rule time derivative of the momentum dL/dv along given rates.

    Deliberately not the force-balance identity: diagnostics need this
    value computed independently of the equations of motion.
    """
    n = model.n
    q = _as_array(q, n, "q")
    v = _as_array(v, n, "v")
    f = _flat_lagrangian(model)
    args = [*q, *v, float(S)]
    direction = [*_as_array(qdot, n, "qdot"), *_as_array(vdot, n, "vdot"), float(Sdot)]
    return np.array(
        [duals.second_directional(f, args, direction, n + i) for i in range(n)]
    )


def friction_velocity_jacobian(model: SimpleThermoModel, q, v, S) -> np.ndarray:
    """dF_a/dv_b of the friction covector; drives the rate solve for
    velocity-independent Lagrangians."""
    n = model.n
    q = tuple(_as_array(q, n, "q"))
    v = _as_array(v, n, "v")
    S = float(S)
    J = np.empty((n, n))
    for b in range(n):
        lifted = [duals.Dual(v[k], 1.0) if k == b else v[k] for k in range(n)]
        out = model.friction(q, tuple(lifted), S)
        for a in range(n):
            J[a, b] = duals.value(out[a].du) if isinstance(out[a], duals.Dual) else 0.0
    return J


# --- arena points ------------------------------------------------------


@dataclass(frozen=True)
class PointN(object):
    """Configuration, entropy, and momentum: the smallest arena."""

    q: np.ndarray
    S: float
    p: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, [self.S], self.p])


@dataclass(frozen=True)
class PointM:
    """Velocity and momentum carried side by side over (q, S)."""

    q: np.ndarray
    S: float
    v: np.ndarray
    p: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, [self.S], self.v, self.p])


@dataclass(frozen=True)
class PointP:
    """Full variational arena: adds the entropy-rate slot W and the
    entropy-conjugate covariable lam (zero along physical motions)."""

    q: np.ndarray
    S: float
    v: np.ndarray
    W: float
    p: np.ndarray
    lam: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, [self.S], self.v, [self.W], self.p, [self.lam]])


@dataclass(frozen=True)
class PointTstarQ:
    """Cotangent arena over extended configuration (q, S)."""

    q: np.ndarray
    S: float
    p: np.ndarray
    lam: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, [self.S], self.p, [self.lam]])


_POINT_ARENA = {PointP: "P", PointTstarQ: "TstarQ", PointM: "M", PointN: "N"}


def arena_of_point(point) -> str:
    try:
        return _POINT_ARENA[type(point)]
    except KeyError:
        raise ArenaError(f"not an arena point: {type(point).__name__}")


def make_point(arena: str, n: int, **fields):
    """Build an arena point with validated component shapes."""
    q = _as_array(fields.pop("q"), n, "q")
    S = float(fields.pop("S"))
    if arena == "N":
        pt = PointN(q=q, S=S, p=_as_array(fields.pop("p"), n, "p"))
    elif arena == "M":
        pt = PointM(
            q=q,
            S=S,
            v=_as_array(fields.pop("v"), n, "v"),
            p=_as_array(fields.pop("p"), n, "p"),
        )
    elif arena == "P":
        pt = PointP(
            q=q,
            S=S,
            v=_as_array(fields.pop("v"), n, "v"),
            W=float(fields.pop("W")),
            p=_as_array(fields.pop("p"), n, "p"),
            lam=float(fields.pop("lam")),
        )
    elif arena == "TstarQ":
        pt = PointTstarQ(
            q=q,
            S=S,
            p=_as_array(fields.pop("p"), n, "p"),
            lam=float(fields.pop("lam")),
        )
    else:
        raise ArenaError(f"unknown arena {arena!r}; expected one of {ARENAS}")
    if fields:
        raise DimensionMismatchError(f"unexpected fields for arena {arena}: {sorted(fields)}")
    return pt


def point_from_vector(arena: str, n: int, vec: Sequence[float]):
    """Inverse of ``as_vector`` for the given arena's coordinate order."""
    x = np.asarray(vec, dtype=float)
    d = arena_dim(arena, n)
    if x.shape != (d,):
        raise DimensionMismatchError(f"arena {arena} expects {d} coordinates, got {x.shape}")
    if arena == "N":
        return PointN(q=x[:n], S=float(x[n]), p=x[n + 1 :])
    if arena == "M":
        return PointM(q=x[:n], S=float(x[n]), v=x[n + 1 : 2 * n + 1], p=x[2 * n + 1 :])
    if arena == "TstarQ":
        return PointTstarQ(q=x[:n], S=float(x[n]), p=x[n + 1 : 2 * n + 1], lam=float(x[2 * n + 1]))
    return PointP(
        q=x[:n],
        S=float(x[n]),
        v=x[n + 1 : 2 * n + 1],
        W=float(x[2 * n + 1]),
        p=x[2 * n + 2 : 3 * n + 2],
        lam=float(x[3 * n + 2]),
    )


@dataclass(frozen=True)
class TangentCovectorPair:
    """One element of the doubled fiber at a base point: a tangent
    vector and a covector, both in the arena's flat coordinate order."""

    base: object
    tangent: np.ndarray
    covector: np.ndarray

    @property
    def arena(self) -> str:
        return arena_of_point(self.base)

    def validated(self, n: int) -> "TangentCovectorPair":
        d = arena_dim(self.arena, n)
        t = np.asarray(self.tangent, dtype=float)
        c = np.asarray(self.covector, dtype=float)
        if t.shape != (d,) or c.shape != (d,):
            raise DimensionMismatchError(
                f"arena {self.arena} needs tangent and covector of length {d}, "
                f"got {t.shape} and {c.shape}"
            )
        return TangentCovectorPair(base=self.base, tangent=t, covector=c)
