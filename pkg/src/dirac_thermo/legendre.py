"""Partial momentum transform in the mechanical variables and its uses.

The transform maps velocity to momentum at fixed (q, S): p = dL/dv.
When the velocity Hessian is well conditioned the map inverts (Newton),
giving the Hamiltonian picture; velocity-independent Lagrangians are
rejected with a distinct error and stay Lagrangian-side only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import duals
from .errors import ArenaError, DegenerateLagrangianError, NewtonError
from .model import (
    PointM,
    PointN,
    PointP,
    SimpleThermoModel,
    _as_array,
    arena_of_point,
    friction_value,
    lagrangian_partials,
    lagrangian_value,
    mixed_velocity_term,
    temperature,
    velocity_hessian,
)

__all__ = [
    "HamiltonianModel",
    "HamiltonianPartials",
    "build_hamiltonian_model",
    "embed_jL",
    "generalized_energy",
    "hamiltonian",
    "hamiltonian_S_derivative",
    "inverse_partial_legendre",
    "lift_M_to_P",
    "momentum_map",
    "partial_legendre",
    "temperature_and_friction_N",
]

# Newton defaults; the residual is on the momentum mismatch, absolute.
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


def momentum_map(model: SimpleThermoModel, q, v, S) -> np.ndarray:
    """p = dL/dv at fixed (q, S); gradient over the velocity block only."""
    q = tuple(_as_array(q, model.n, "q"))
    S = float(S)

    def g(*vs):
        return model.lagrangian(q, vs, S)

    return np.array(duals.gradient(g, list(_as_array(v, model.n, "v"))))


def partial_legendre(model: SimpleThermoModel, q, v, S):
    """(q, v, S) -> (q, p, S) with p = dL/dv."""
    q = _as_array(q, model.n, "q")
    return q, momentum_map(model, q, v, S), float(S)


def inverse_partial_legendre(
    model: SimpleThermoModel,
    q,
    p,
    S,
    v0=None,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> np.ndarray:
    """Solve dL/dv(q, v, S) = p for v by Newton iteration.

    Seeds at v = 0 unless a warm start is supplied. Raises
    DegenerateLagrangianError when the velocity Hessian is unusable
    (the velocity-independent case) and NewtonError on non-convergence.
    """
    if model.degenerate:
        raise DegenerateLagrangianError(
            f"model {model.name} has a velocity-independent Lagrangian; "
            "the momentum relation cannot be inverted"
        )
    q = _as_array(q, model.n, "q")
    p = _as_array(p, model.n, "p")
    S = float(S)
    v = np.zeros(model.n) if v0 is None else _as_array(v0, model.n, "v0").copy()
    for _ in range(max_iter):
        r = momentum_map(model, q, v, S) - p
        if not np.all(np.isfinite(r)):
            raise NewtonError(f"momentum residual became non-finite (model {model.name})")
        if np.max(np.abs(r)) <= tol:
            return v
        H = velocity_hessian(model, q, v, S)
        try:
            step = np.linalg.solve(H, r)
        except np.linalg.LinAlgError:
            raise DegenerateLagrangianError(
                f"singular velocity Hessian at q={q}, S={S} (model {model.name})"
            )
        v = v - step
    r = momentum_map(model, q, v, S) - p
    if np.max(np.abs(r)) <= tol:
        return v
    raise NewtonError(
        f"momentum inversion did not converge in {max_iter} iterations "
        f"(residual {np.max(np.abs(r)):.3e}, model {model.name})"
    )


def hamiltonian(model: SimpleThermoModel, q, p, S, v0=None) -> float:
    """H(q, p, S) = <p, v> - L(q, v, S) at the inverted velocity."""
    q = _as_array(q, model.n, "q")
    p = _as_array(p, model.n, "p")
    v = inverse_partial_legendre(model, q, p, S, v0=v0)
    return float(p @ v - lagrangian_value(model, q, v, S))


class HamiltonianPartials(NamedTuple):
    dq: np.ndarray
    dp: np.ndarray
    dS: float
    velocity: np.ndarray


def hamiltonian_partials(model: SimpleThermoModel, q, p, S, v0=None) -> HamiltonianPartials:
    """First partials of H at (q, p, S).

    Stationarity of <p, v> - L in v at the inverted velocity removes
    every velocity-sensitivity term, so dH/dq = -dL/dq, dH/dp = v,
    dH/dS = -dL/dS, all evaluated at that velocity.
    """
    q = _as_array(q, model.n, "q")
    p = _as_array(p, model.n, "p")
    v = inverse_partial_legendre(model, q, p, S, v0=v0)
    dLdq, _, dLdS = lagrangian_partials(model, q, v, S)
    return HamiltonianPartials(dq=-dLdq, dp=v.copy(), dS=-dLdS, velocity=v)


def hamiltonian_S_derivative(model: SimpleThermoModel, q, p, S, v0=None) -> float:
    """dH/dS assembled from the implicit velocity sensitivity.

    Full chain rule: the entropy derivative of the inverted velocity is
    solved from the velocity Hessian and the mixed second partials, and
    every term is kept. Exists so tests can compare an independent
    route against the shortcut in :func:`hamiltonian_partials`.
    """
    q = _as_array(q, model.n, "q")
    p = _as_array(p, model.n, "p")
    v = inverse_partial_legendre(model, q, p, S, v0=v0)
    Hvv = velocity_hessian(model, q, v, S)
    dLvdS = mixed_velocity_term(model, q, v, S, qdot=np.zeros(model.n), Sdot=1.0)
    dvdS = np.linalg.solve(Hvv, -dLvdS)
    _, dLdv, dLdS = lagrangian_partials(model, q, v, S)
    return float(p @ dvdS - dLdv @ dvdS - dLdS)


def temperature_and_friction_N(model: SimpleThermoModel, q, p, S, v0=None):
    """Temperature and friction covector re-expressed over (q, p, S)."""
    q = _as_array(q, model.n, "q")
    p = _as_array(p, model.n, "p")
    v = inverse_partial_legendre(model, q, p, S, v0=v0)
    return temperature(model, q, v, S), friction_value(model, q, v, S)


def embed_jL(model: SimpleThermoModel, point: PointN, v0=None) -> PointM:
    """Fiber-preserving embedding (q, S, p) -> (q, S, v(q, p, S), p)."""
    if arena_of_point(point) != "N":
        raise ArenaError(f"embed_jL expects an N-arena point, got {type(point).__name__}")
    v = inverse_partial_legendre(model, point.q, point.p, point.S, v0=v0)
    return PointM(q=point.q.copy(), S=point.S, v=v, p=point.p.copy())


def lift_M_to_P(point: PointM, Sdot: float) -> PointP:
    """Attach the entropy-rate slot (W = Sdot) and a zero covariable."""
    if arena_of_point(point) != "M":
        raise ArenaError(f"lift_M_to_P expects an M-arena point, got {type(point).__name__}")
    return PointP(
        q=point.q.copy(),
        S=point.S,
        v=point.v.copy(),
        W=float(Sdot),
        p=point.p.copy(),
        lam=0.0,
    )


def generalized_energy(arena: str, model: SimpleThermoModel, point) -> float:
    """<p, v> - L plus, on the full arena, the lam * W pairing term."""
    if arena not in ("P", "M"):
        raise ArenaError(f"generalized energy is defined on arenas P and M, not {arena!r}")
    if arena_of_point(point) != arena:
        raise ArenaError(
            f"point type {type(point).__name__} does not live on arena {arena!r}"
        )
    base = float(point.p @ point.v) - lagrangian_value(model, point.q, point.v, point.S)
    if arena == "P":
        base += point.lam * point.W
    return base


@dataclass(frozen=True)
class HamiltonianModel:
    """A model checked usable on the momentum side, plus solver settings."""

    source: SimpleThermoModel
    tol: float = NEWTON_TOL
    max_iter: int = NEWTON_MAX_ITER

    def velocity(self, q, p, S, v0=None) -> np.ndarray:
        return inverse_partial_legendre(
            self.source, q, p, S, v0=v0, tol=self.tol, max_iter=self.max_iter
        )

    def value(self, q, p, S, v0=None) -> float:
        return hamiltonian(self.source, q, p, S, v0=v0)

    def partials(self, q, p, S, v0=None) -> HamiltonianPartials:
        return hamiltonian_partials(self.source, q, p, S, v0=v0)

    def temperature_friction(self, q, p, S, v0=None):
        return temperature_and_friction_N(self.source, q, p, S, v0=v0)


def build_hamiltonian_model(
    model: SimpleThermoModel,
    samples: int = 25,
    seed: int = 0,
    cond_limit: float = 1e8,
    roundtrip_tol: float = 1e-10,
) -> HamiltonianModel:
    """Gate a model into the Hamiltonian picture.

    Invertibility of the momentum relation is checked empirically:
    velocity-Hessian condition numbers and momentum round trips on
    domain samples. Failure means the model only supports the
    Lagrangian-side formulations, reported as a distinct error.
    """
    if model.degenerate:
        raise DegenerateLagrangianError(
            f"model {model.name} is flagged velocity-independent; "
            "no Hamiltonian picture exists"
        )
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        q, v, S = model.domain_box.sample(rng)
        H = velocity_hessian(model, q, v, S)
        cond = np.linalg.cond(H)
        if not np.isfinite(cond) or cond >= cond_limit:
            raise DegenerateLagrangianError(
                f"velocity Hessian condition number {cond:.3e} at a domain sample "
                f"exceeds {cond_limit:.1e} (model {model.name})"
            )
        _, p, _ = partial_legendre(model, q, v, S)
        v_back = inverse_partial_legendre(model, q, p, S)
        if np.max(np.abs(v_back - v)) > roundtrip_tol:
            raise DegenerateLagrangianError(
                f"momentum round trip missed by {np.max(np.abs(v_back - v)):.3e} "
                f"(model {model.name})"
            )
    return HamiltonianModel(source=model)
