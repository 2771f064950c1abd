"""Run configuration: a flat JSON document validated into ``RunConfig``.

Omitted keys take the default profile (K=5, d=2, Gaussians N(0,1) and
N(1,1), reward payoffs 20/5/10/25, epsilon=1).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .detector import RiskParams, TauGrid
from .errors import ConfigError, PreconditionError
from .persuasion import OBJECTIVES, OptConfig, SenderObjective
from .prospect import SignalModel

EXPERIMENTS = ("stp", "roc", "threshold", "persuade", "simulate")
CONVENTIONS = ("cost", "reward")


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "stp"
    k: int = 5
    d: int = 2
    means: tuple = (0.0, 1.0)
    variances: tuple = (1.0, 1.0)
    prior1: float = 0.5
    u00: float = 20.0
    u01: float = 5.0
    u10: float = 10.0
    u11: float = 25.0
    convention: str = "reward"
    epsilon: float = 1.0
    q: float = 0.0
    q_start: float = 0.0
    q_stop: float = 1.0
    q_step: float = 0.001
    tau_n: int = 400
    tau_lo: float = 1e-4
    tau_hi: float = 1e4
    tau_zero: bool = True
    seed: int = 0
    out: str = "out"
    # stp / threshold: hypothesis whose signaling device generates the fixed state
    phi_hypothesis: int = 0
    calibrate: bool = False
    target_p_defect: float = 0.39
    target_p_coop: float = 0.26
    prior_n: int = 99
    # roc: build both densities from one coefficient matrix
    shared_coefficients: bool = False
    n_trials: int = 100_000
    n_mc: int = 2000
    budget: int = 2000
    sigma0: float = 0.3
    patience: int = 25
    objective: str = "induce_action_1"

    def __post_init__(self):
        _validate(self)

    # -- derived objects -------------------------------------------------
    def risk_params(self) -> RiskParams:
        return RiskParams(self.u00, self.u01, self.u10, self.u11, self.epsilon, self.convention)

    def tau_grid(self) -> TauGrid:
        return TauGrid(self.tau_n, self.tau_lo, self.tau_hi, self.tau_zero)

    def signal_model(self, prior1: float | None = None) -> SignalModel:
        return SignalModel.gaussian(self.means, self.variances, self.k,
                                    self.prior1 if prior1 is None else prior1)

    def q_values(self):
        n = int(round((self.q_stop - self.q_start) / self.q_step)) + 1
        return [self.q_start + i * self.q_step for i in range(n)]

    def prior_values(self):
        n = self.prior_n
        return [(i + 1) / (n + 1) for i in range(n)]

    def opt_config(self) -> OptConfig:
        return OptConfig(self.budget, self.sigma0, self.patience, self.n_mc)

    def sender_objective(self) -> SenderObjective:
        return SenderObjective(self.objective)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["means"] = list(self.means)
        out["variances"] = list(self.variances)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x) -> bool:
    return (isinstance(x, (int, float)) and not isinstance(x, bool))


def coerce_field(name: str, value):
    """Convert a raw JSON/CLI value into the field's type or raise ``ConfigError``."""
    if name not in FIELDS:
        raise ConfigError(f"unknown config field {name!r}", field=name)
    default = FIELDS[name].default
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false", field=name)
        return value
    if _is_int(default):
        if not _is_int(value):
            raise ConfigError(f"{name} must be an integer", field=name)
        return value
    if isinstance(default, float):
        if not _is_real(value):
            raise ConfigError(f"{name} must be a number", field=name)
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != 2 or not all(_is_real(v) for v in value):
            raise ConfigError(f"{name} must be a list of two numbers (H0, H1)", field=name)
        return tuple(float(v) for v in value)
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a string", field=name)
    return value


def _require(cond: bool, name: str, message: str):
    if not cond:
        raise ConfigError(f"{name}: {message}", field=name)


def _validate(c: RunConfig):
    for f in dataclasses.fields(c):
        object.__setattr__(c, f.name, coerce_field(f.name, getattr(c, f.name)))
    _require(c.experiment in EXPERIMENTS, "experiment", f"must be one of {EXPERIMENTS}")
    _require(c.k >= 1, "k", "must be >= 1")
    _require(c.d >= 1, "d", "must be >= 1")
    _require(all(v > 0 for v in c.variances), "variances", "must be > 0")
    _require(0.0 <= c.prior1 <= 1.0, "prior1", "must lie in [0, 1]")
    _require(c.convention in CONVENTIONS, "convention", f"must be one of {CONVENTIONS}")
    _require(c.epsilon > 0, "epsilon", "must be > 0")
    try:
        c.risk_params()
    except PreconditionError as exc:
        raise ConfigError(f"payoffs: {exc}", field="u00") from exc
    _require(c.q_step > 0, "q_step", "must be > 0")
    _require(c.q_stop >= c.q_start, "q_stop", "must be >= q_start")
    _require(c.tau_n >= 1, "tau_n", "must be >= 1")
    _require(c.tau_lo > 0, "tau_lo", "must be > 0")
    _require(c.tau_hi >= c.tau_lo, "tau_hi", "must be >= tau_lo")
    _require(0 <= c.seed < 2**64, "seed", "must be a 64-bit unsigned integer")
    _require(bool(c.out), "out", "must be a non-empty path")
    _require(c.phi_hypothesis in (0, 1), "phi_hypothesis", "must be 0 or 1")
    _require(0.0 <= c.target_p_defect <= 1.0, "target_p_defect", "must lie in [0, 1]")
    _require(0.0 <= c.target_p_coop <= 1.0, "target_p_coop", "must lie in [0, 1]")
    _require(not c.calibrate or c.d >= 2, "d", "calibration needs d >= 2")
    _require(c.prior_n >= 1, "prior_n", "must be >= 1")
    _require(c.n_trials >= 1, "n_trials", "must be >= 1")
    _require(c.n_mc >= 1, "n_mc", "must be >= 1")
    _require(c.budget >= 1, "budget", "must be >= 1")
    _require(c.sigma0 > 0, "sigma0", "must be > 0")
    _require(c.patience >= 1, "patience", "must be >= 1")
    _require(c.objective in OBJECTIVES, "objective", f"must be one of {OBJECTIVES}")


def from_mapping(data: dict, base: RunConfig | None = None) -> RunConfig:
    """Overlay ``data`` on ``base`` (defaults when omitted)."""
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    changes = {name: coerce_field(name, value) for name, value in data.items()}
    return dataclasses.replace(base or RunConfig(), **changes)


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse a JSON config document. Blank text yields the defaults."""
    if not text.strip():
        return base or RunConfig()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return from_mapping(data, base)
