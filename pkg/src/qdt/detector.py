"""The human receiver: posterior update, probability-weighted risk, the
quantum likelihood-ratio test (QLRT) and its best-response threshold.

Payoffs are indexed ``u[state][action]``: ``u01`` is paid when the state is
H0 and the receiver decides 1 (a false alarm), ``u10`` on a miss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateEvidenceError, PreconditionError
from .prospect import DensityOperator, ProspectState
from .spectral import ZERO_TOL, positive_projector, positive_projectors, trace_product

WEIGHT_TOL = 1e-12
RATE_TOL = 1e-10
TIE_TOL = 1e-12


@dataclass(frozen=True)
class RiskParams:
    """Payoffs ``u00, u01, u10, u11``, weighting exponent and sign convention.

    With ``convention="reward"`` the payoffs are rewards (all positive). They
    are turned into costs by negating the two correct-decision entries and
    keeping the error entries as positive costs, which yields the sign pattern
    ``u00, u11 < 0 < u01, u10`` the minimization assumes.
    """

    u00: float
    u01: float
    u10: float
    u11: float
    epsilon: float = 1.0
    convention: str = "cost"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise PreconditionError(f"epsilon must be > 0, got {self.epsilon}")
        if self.convention not in ("cost", "reward"):
            raise PreconditionError(f"unknown payoff convention {self.convention!r}")
        if self.convention == "reward":
            if min(self.u00, self.u01, self.u10, self.u11) <= 0:
                raise PreconditionError("reward-convention payoffs must all be positive")
        c00, c01, c10, c11 = self.costs()
        if not (c00 < 0 and c11 < 0 and c01 > 0 and c10 > 0):
            raise PreconditionError("cost-convention payoffs need u00, u11 < 0 and u01, u10 > 0")

    def costs(self):
        """Internal cost values ``(c00, c01, c10, c11)``."""
        if self.convention == "reward":
            return (-float(self.u00), float(self.u01), float(self.u10), -float(self.u11))
        return (float(self.u00), float(self.u01), float(self.u10), float(self.u11))


@dataclass(frozen=True)
class ErrorRates:
    p_false: float
    p_detect: float


@dataclass(frozen=True)
class DecisionProbability:
    g: float
    q: float
    total: float


@dataclass(frozen=True)
class BestResponse:
    tau_star: float
    projector: np.ndarray
    risk_value: float
    rates: ErrorRates

    def to_dict(self) -> dict:
        return {
            "tau_star": self.tau_star,
            "risk_value": self.risk_value,
            "p_false": self.rates.p_false,
            "p_detect": self.rates.p_detect,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class TauGrid:
    """Geometric threshold grid on ``[lo, hi]``, optionally with 0 prepended."""

    n: int = 400
    lo: float = 1e-4
    hi: float = 1e4
    include_zero: bool = True

    def values(self) -> np.ndarray:
        if self.n < 1:
            raise PreconditionError("tau grid needs at least one point")
        if not 0 < self.lo <= self.hi:
            raise PreconditionError("tau grid needs 0 < lo <= hi")
        pts = np.geomspace(self.lo, self.hi, self.n) if self.n > 1 else np.array([self.lo])
        if self.include_zero:
            pts = np.concatenate(([0.0], pts))
        return pts


def tau_values(tau_grid) -> np.ndarray:
    if tau_grid is None:
        tau_grid = TauGrid()
    taus = tau_grid.values() if isinstance(tau_grid, TauGrid) else np.asarray(tau_grid, dtype=float)
    if taus.ndim != 1 or taus.size == 0:
        raise PreconditionError("tau grid is empty")
    if np.any(taus < 0):
        raise PreconditionError("tau values must be >= 0")
    if np.any(np.diff(taus) <= 0):
        raise PreconditionError("tau grid must be strictly increasing")
    return taus


def _mat(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=float)


def _vec(phi) -> np.ndarray:
    return phi.vec if isinstance(phi, ProspectState) else np.asarray(phi, dtype=float)


def weight(z, epsilon: float):
    """Probability weighting ``w(z) = z ** epsilon`` on [0, 1].

    ``epsilon < 1`` models a pessimistic agent, ``epsilon > 1`` an optimistic one.
    Inputs within 1e-12 of the interval are clipped onto it.
    """
    if not epsilon > 0:
        raise PreconditionError(f"epsilon must be > 0, got {epsilon}")
    arr = np.asarray(z, dtype=float)
    if np.any(arr < -WEIGHT_TOL) or np.any(arr > 1 + WEIGHT_TOL):
        raise PreconditionError("weight() expects z in [0, 1]")
    out = np.clip(arr, 0.0, 1.0) ** epsilon
    return float(out) if out.ndim == 0 else out


def posterior(prior1: float, rho0, rho1, phi):
    """Bayes update of ``(p(H0), p(H1))`` from the likelihoods <phi|rho_j|phi>."""
    if not 0.0 <= prior1 <= 1.0:
        raise PreconditionError(f"prior1 must lie in [0, 1], got {prior1}")
    v = _vec(phi)
    l0 = float(v @ _mat(rho0) @ v)
    l1 = float(v @ _mat(rho1) @ v)
    return posterior_from_likelihoods(prior1, l0, l1)


def posterior_from_likelihoods(prior1: float, l0: float, l1: float):
    a0 = (1.0 - prior1) * max(l0, 0.0)
    a1 = prior1 * max(l1, 0.0)
    den = a0 + a1
    if den < 1e-300:
        raise DegenerateEvidenceError("both hypotheses give zero weight to the observed state")
    p1 = a1 / den
    return 1.0 - p1, p1


def qlrt_projector(rho1, rho0, tau: float, zero_tol: float = ZERO_TOL) -> np.ndarray:
    """Projector onto the positive eigenspace of ``rho1 - tau * rho0``."""
    if tau < 0:
        raise PreconditionError(f"tau must be >= 0, got {tau}")
    m1, m0 = _mat(rho1), _mat(rho0)
    if m1.shape != m0.shape:
        raise PreconditionError(f"dimension mismatch: {m1.shape} vs {m0.shape}")
    return positive_projector(m1 - tau * m0, zero_tol)


def _clamp_rate(x: float) -> float:
    if x < -RATE_TOL or x > 1 + RATE_TOL:
        raise PreconditionError(f"rate {x!r} is outside [0, 1]; is the projector valid?")
    return min(max(x, 0.0), 1.0)


def error_rates(p, rho0, rho1) -> ErrorRates:
    """False-alarm ``Tr(P rho0)`` and detection ``Tr(P rho1)`` rates."""
    return ErrorRates(
        p_false=_clamp_rate(trace_product(p, _mat(rho0))),
        p_detect=_clamp_rate(trace_product(p, _mat(rho1))),
    )


def _risk_terms(p0, p1, pf, pd, params: RiskParams):
    c00, c01, c10, c11 = params.costs()
    eps = params.epsilon
    return (
        weight(p0 * pf, eps) * c01
        + weight(p1 * pd, eps) * c11
        + weight(p0 * (1.0 - pf), eps) * c00
        + weight(p1 * (1.0 - pd), eps) * c10
    )


def risk(rho1, rho0, p, phi, params: RiskParams, prior1: float = 0.5) -> float:
    """Probability-weighted receiver risk of measurement ``p`` given ``phi``.

    The posterior comes from ``phi`` and the prior; the error rates are the
    ensemble traces of ``p`` against both densities.
    """
    p0, p1 = posterior(prior1, rho0, rho1, phi)
    rates = error_rates(p, rho0, rho1)
    return float(_risk_terms(p0, p1, rates.p_false, rates.p_detect, params))


@dataclass(frozen=True)
class QlrtSweep:
    """QLRT projectors and their error rates over a threshold grid."""

    taus: np.ndarray
    projectors: np.ndarray
    p_false: np.ndarray
    p_detect: np.ndarray

    def risks(self, p0, p1, params: RiskParams) -> np.ndarray:
        """Risk at every grid point; ``p0``/``p1`` may be arrays (one row each)."""
        p0 = np.asarray(p0, dtype=float)[..., None]
        p1 = np.asarray(p1, dtype=float)[..., None]
        return _risk_terms(p0, p1, self.p_false, self.p_detect, params)


def qlrt_sweep(rho1, rho0, tau_grid=None, zero_tol: float = ZERO_TOL) -> QlrtSweep:
    taus = tau_values(tau_grid)
    m1, m0 = _mat(rho1), _mat(rho0)
    if m1.shape != m0.shape:
        raise PreconditionError(f"dimension mismatch: {m1.shape} vs {m0.shape}")
    projs = positive_projectors(m1[None] - taus[:, None, None] * m0[None], zero_tol)
    pf = np.einsum("nij,ji->n", projs, m0)
    pd = np.einsum("nij,ji->n", projs, m1)
    if np.any(pf < -RATE_TOL) or np.any(pf > 1 + RATE_TOL) or np.any(pd < -RATE_TOL) or np.any(pd > 1 + RATE_TOL):
        raise PreconditionError("error rates fell outside [0, 1]; inputs are not density operators")
    return QlrtSweep(taus, projs, np.clip(pf, 0.0, 1.0), np.clip(pd, 0.0, 1.0))


def _argmin_smallest_tau(values: np.ndarray) -> int:
    best = float(np.min(values))
    tol = TIE_TOL * max(1.0, abs(best))
    return int(np.flatnonzero(values <= best + tol)[0])


def _response_at(sweep: QlrtSweep, idx: int, risk_value: float) -> BestResponse:
    return BestResponse(
        tau_star=float(sweep.taus[idx]),
        projector=sweep.projectors[idx],
        risk_value=float(risk_value),
        rates=ErrorRates(float(sweep.p_false[idx]), float(sweep.p_detect[idx])),
    )


def best_response(rho1, rho0, phi, params: RiskParams, tau_grid=None, prior1: float = 0.5,
                  sweep: QlrtSweep | None = None) -> BestResponse:
    """Risk-minimizing QLRT over the threshold grid for one realized ``phi``.

    Near-ties (within 1e-12 relative) go to the smallest threshold.
    """
    if sweep is None:
        sweep = qlrt_sweep(rho1, rho0, tau_grid)
    p0, p1 = posterior(prior1, rho0, rho1, phi)
    values = sweep.risks(p0, p1, params)
    idx = _argmin_smallest_tau(values)
    return _response_at(sweep, idx, values[idx])


def committed_best_response(rho1, rho0, phis: Sequence, weights, params: RiskParams,
                            tau_grid=None, prior1: float = 0.5,
                            sweep: QlrtSweep | None = None) -> BestResponse:
    """Single QLRT minimizing the weighted mean risk over several states.

    Used when the receiver fixes one measurement for a whole population of
    prospect-state realizations; ``risk_value`` is the weighted mean risk.
    """
    if sweep is None:
        sweep = qlrt_sweep(rho1, rho0, tau_grid)
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != len(phis) or w.size == 0 or np.any(w < 0) or w.sum() <= 0:
        raise PreconditionError("weights must be non-negative, non-empty and match phis")
    w = w / w.sum()
    post = np.array([posterior(prior1, rho0, rho1, phi) for phi in phis])
    values = w @ sweep.risks(post[:, 0], post[:, 1], params)
    idx = _argmin_smallest_tau(values)
    return _response_at(sweep, idx, values[idx])


def decision_probability(phi, p, q: float = 0.0) -> DecisionProbability:
    """``P(a=1 | phi) = g + q`` with ``g = <phi|P|phi>``, clamped to [0, 1]."""
    v = _vec(phi)
    g = float(v @ np.asarray(p, dtype=float) @ v)
    g = min(max(g, 0.0), 1.0)
    return DecisionProbability(g=g, q=float(q), total=min(max(g + q, 0.0), 1.0))


def decide(phi, p, q: float, rng: np.random.Generator) -> int:
    """Bernoulli action draw with probability ``decision_probability(...).total``."""
    return int(rng.random() < decision_probability(phi, p, q).total)
