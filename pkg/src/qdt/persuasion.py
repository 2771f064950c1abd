"""The sender: choose per-hypothesis perception coefficients to maximize an
expected sender objective, given that the receiver best-responds.

Evaluation uses common random numbers: every call to ``sender_value`` inside
one optimization run gets a generator seeded identically, so the objective is
a deterministic function of the coefficients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .detector import RiskParams, committed_best_response, posterior, qlrt_sweep
from .errors import PreconditionError
from .prospect import (
    PerceptionCoefficients,
    SignalModel,
    build_density,
    build_prospect_state,
    random_coefficients,
)

OBJECTIVES = ("induce_action_1", "align_with_truth", "maximize_receiver_error")


@dataclass(frozen=True)
class SenderObjective:
    kind: str = "induce_action_1"
    # Optional per-state payoff multipliers (state 0, state 1).
    weights: tuple | None = None

    def __post_init__(self):
        if self.kind not in OBJECTIVES:
            raise PreconditionError(f"unknown sender objective {self.kind!r}; expected one of {OBJECTIVES}")
        if self.weights is not None and len(self.weights) != 2:
            raise PreconditionError("objective weights need one entry per state")

    def payoff(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        if self.kind == "induce_action_1":
            v = (actions == 1).astype(float)
        elif self.kind == "align_with_truth":
            v = (actions == states).astype(float)
        else:
            v = (actions != states).astype(float)
        if self.weights is not None:
            v = v * np.asarray(self.weights, dtype=float)[states]
        return v


@dataclass(frozen=True)
class OptConfig:
    budget: int = 2000
    sigma0: float = 0.3
    patience: int = 25
    n_mc: int = 2000


@dataclass(frozen=True)
class SenderSolution:
    coeffs1: PerceptionCoefficients
    coeffs0: PerceptionCoefficients
    value: float
    trace: tuple = field(default=())
    # Seed of the common-random-numbers stream; reproduces ``value`` exactly.
    eval_seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "coeffs1": self.coeffs1.to_dict(),
            "coeffs0": self.coeffs0.to_dict(),
            "trace": [{"step": s, "value": v} for s, v in self.trace],
            "eval_seed": self.eval_seed,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "SenderSolution":
        return cls(
            coeffs1=PerceptionCoefficients.from_dict(data["coeffs1"]),
            coeffs0=PerceptionCoefficients.from_dict(data["coeffs0"]),
            value=float(data["value"]),
            trace=tuple((int(t["step"]), float(t["value"])) for t in data["trace"]),
            eval_seed=data.get("eval_seed"),
        )


def project_unit_rows(m) -> PerceptionCoefficients:
    """Scale every row of ``m`` to unit Euclidean norm."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise PreconditionError("expected a 2-D coefficient matrix")
    norms = np.sqrt(np.sum(a * a, axis=1, keepdims=True))
    if np.any(norms == 0):
        raise PreconditionError("cannot normalize a zero row")
    return PerceptionCoefficients(a / norms)


@dataclass(frozen=True)
class ProtocolDraws:
    """One batch of sampled (state, signal, decision-uniform) triples."""

    states: np.ndarray
    signals: np.ndarray
    uniforms: np.ndarray


def draw_protocol(model: SignalModel, n: int, rng: np.random.Generator) -> ProtocolDraws:
    """Sample states from the prior and signals from the state's pmf.

    The draws never look at coefficients, which is what makes common random
    numbers work across candidate signaling schemes.
    """
    if n < 1:
        raise PreconditionError("need at least one Monte-Carlo sample")
    states = (rng.random(n) < model.prior1).astype(int)
    u_sig = rng.random(n)
    cdf0 = np.cumsum(model.pmf0)
    cdf1 = np.cumsum(model.pmf1)
    sig0 = np.searchsorted(cdf0, u_sig * cdf0[-1], side="right")
    sig1 = np.searchsorted(cdf1, u_sig * cdf1[-1], side="right")
    signals = np.minimum(np.where(states == 1, sig1, sig0), model.k - 1)
    uniforms = rng.random(n)
    return ProtocolDraws(states, signals, uniforms)


@dataclass(frozen=True)
class ProtocolOutcome:
    """Receiver measurement and per-sample decisions for one protocol batch."""

    response: object
    decision_prob: np.ndarray
    actions: np.ndarray
    sample_risk: np.ndarray


def play_protocol(coeffs1, coeffs0, model: SignalModel, params: RiskParams, q: float,
                  draws: ProtocolDraws, tau_grid=None) -> ProtocolOutcome:
    """Receiver commits to the QLRT minimizing mean risk over the drawn states,
    then acts on each sample with probability ``clamp(<phi|P|phi> + q)``."""
    rho1 = build_density(model.pmf1, coeffs1)
    rho0 = build_density(model.pmf0, coeffs0)
    sweep = qlrt_sweep(rho1, rho0, tau_grid)

    # Prospect states only take 2K distinct values: group samples by (state, signal).
    keys = draws.states * model.k + draws.signals
    uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    phis = [build_prospect_state(int(key % model.k), coeffs1 if key >= model.k else coeffs0)
            for key in uniq]
    resp = committed_best_response(rho1, rho0, phis, counts, params, prior1=model.prior1, sweep=sweep)

    p = resp.projector
    g = np.array([phi.vec @ p @ phi.vec for phi in phis])
    total = np.clip(np.clip(g, 0.0, 1.0) + q, 0.0, 1.0)
    post1 = np.array([posterior(model.prior1, rho0, rho1, phi)[1] for phi in phis])
    idx = int(np.searchsorted(sweep.taus, resp.tau_star))
    per_state_risk = sweep.risks(1.0 - post1, post1, params)[:, idx]

    prob = total[inverse]
    actions = (draws.uniforms < prob).astype(int)
    return ProtocolOutcome(resp, prob, actions, per_state_risk[inverse])


def sender_value(obj: SenderObjective, coeffs1, coeffs0, model: SignalModel, params: RiskParams,
                 q: float, n_mc: int, rng: np.random.Generator, tau_grid=None) -> float:
    """Monte-Carlo estimate of the sender's expected objective."""
    if coeffs1.k != model.k or coeffs0.k != model.k or coeffs1.d != coeffs0.d:
        raise PreconditionError("coefficient shapes must match the signal model")
    draws = draw_protocol(model, n_mc, rng)
    out = play_protocol(coeffs1, coeffs0, model, params, q, draws, tau_grid)
    return float(np.mean(obj.payoff(draws.states, out.actions)))


def evaluation_rng(eval_seed: int) -> np.random.Generator:
    """Generator used for every objective evaluation of one optimization run."""
    return np.random.default_rng([eval_seed, 0])


def optimize_signaling(obj: SenderObjective, model: SignalModel, params: RiskParams, q: float,
                       opt_config: OptConfig, rng: np.random.Generator, d: int = 2,
                       init=None, tau_grid=None) -> SenderSolution:
    """Accept-if-better random search over unit-row coefficient pairs.

    Each step perturbs every row of both matrices with N(0, sigma^2) noise and
    re-normalizes. ``sigma`` halves after ``patience`` consecutive rejections.
    ``budget`` counts objective evaluations, the initial point included.
    """
    if opt_config.budget < 1:
        raise PreconditionError("optimization budget must be >= 1")
    eval_seed = int(rng.integers(0, 2**63 - 1))
    step_rng = np.random.default_rng([eval_seed, 1])

    def evaluate(c1, c0):
        return sender_value(obj, c1, c0, model, params, q, opt_config.n_mc,
                            evaluation_rng(eval_seed), tau_grid)

    if init is None:
        best1 = random_coefficients(model.k, d, step_rng)
        best0 = random_coefficients(model.k, d, step_rng)
    else:
        best1, best0 = init
    best = evaluate(best1, best0)
    trace = [(0, best)]

    sigma = opt_config.sigma0
    stalls = 0
    for step in range(1, opt_config.budget):
        try:
            cand1 = project_unit_rows(best1.rows + sigma * step_rng.standard_normal(best1.rows.shape))
            cand0 = project_unit_rows(best0.rows + sigma * step_rng.standard_normal(best0.rows.shape))
        except PreconditionError:
            # A row landed exactly on zero; count it as a rejected step.
            cand1 = None
        value = evaluate(cand1, cand0) if cand1 is not None else -np.inf
        if value > best:
            best1, best0, best = cand1, cand0, value
            trace.append((step, value))
            stalls = 0
        else:
            stalls += 1
            if stalls >= opt_config.patience:
                sigma *= 0.5
                stalls = 0
    return SenderSolution(best1, best0, best, tuple(trace), eval_seed)
