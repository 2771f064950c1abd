"""Reproduction experiments: sure-thing-principle sweep, quantum vs classical
ROC curves, optimal threshold against the prior, and Monte-Carlo runs of the
full sender/receiver protocol.

Every experiment is a pure function of a ``RunConfig``; random streams are
derived from ``(seed, tag)`` so one experiment never shifts another's draws.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .detector import (
    best_response,
    committed_best_response,
    decision_probability,
    posterior,
    qlrt_sweep,
    tau_values,
)
from .errors import NumericalError, PreconditionError
from .persuasion import SenderSolution, draw_protocol, optimize_signaling
from .prospect import (
    PerceptionCoefficients,
    ProspectState,
    SignalModel,
    build_density,
    build_prospect_state,
    random_coefficients,
    sample_prospect,
)
from .spectral import trace_product

# Random-stream tags.
COEFFS, PHI, PROTOCOL, OPTIMIZER = 0, 1, 2, 3

STP_TOL = 1e-9
CALIBRATION_TOL = 0.005


def stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([seed, tag])


@dataclass(frozen=True)
class Setup:
    """Signal model, signaling coefficients and the two density operators."""

    model: SignalModel
    coeffs1: PerceptionCoefficients
    coeffs0: PerceptionCoefficients

    @property
    def rho1(self):
        return build_density(self.model.pmf1, self.coeffs1)

    @property
    def rho0(self):
        return build_density(self.model.pmf0, self.coeffs0)

    def coeffs(self, hypothesis: int) -> PerceptionCoefficients:
        return self.coeffs1 if hypothesis == 1 else self.coeffs0


def build_setup(cfg: RunConfig, shared: bool | None = None) -> Setup:
    """Seeded random coefficients for both hypotheses (one matrix if ``shared``)."""
    rng = stream(cfg.seed, COEFFS)
    coeffs1 = random_coefficients(cfg.k, cfg.d, rng)
    coeffs0 = random_coefficients(cfg.k, cfg.d, rng)
    if cfg.shared_coefficients if shared is None else shared:
        coeffs0 = coeffs1
    return Setup(cfg.signal_model(), coeffs1, coeffs0)


def fixed_phi(cfg: RunConfig, setup: Setup) -> ProspectState:
    """The one prospect-state realization held fixed by stp/threshold runs."""
    h = cfg.phi_hypothesis
    return sample_prospect(setup.model.pmf(h), setup.coeffs(h), stream(cfg.seed, PHI))


# ---------------------------------------------------------------------------
# Sure-thing principle
# ---------------------------------------------------------------------------

def check_total_probability(p_unknown: float, p_given_1: float, p_given_0: float,
                            tol: float = STP_TOL) -> bool:
    """True when ``p_unknown`` lies outside the hull of the two conditionals."""
    lo, hi = min(p_given_1, p_given_0), max(p_given_1, p_given_0)
    return p_unknown < lo - tol or p_unknown > hi + tol


@dataclass(frozen=True)
class StpResult:
    p_defect_given_defect: float
    p_defect_given_coop: float
    g: float
    sweep: tuple                      # (q, p_defect_unknown) pairs
    violations: tuple                 # flag per sweep entry
    violation_onset: float | None
    tau_stars: dict = field(default_factory=dict)
    signal_index: int = 0


def _stp_core(cfg: RunConfig, setup: Setup, phi) -> StpResult:
    params = cfg.risk_params()
    rho1, rho0 = setup.rho1, setup.rho0
    sweep = qlrt_sweep(rho1, rho0, cfg.tau_grid())

    def respond(prior1):
        return best_response(rho1, rho0, phi, params, prior1=prior1, sweep=sweep)

    known_defect, known_coop, unknown = respond(1.0), respond(0.0), respond(cfg.prior1)
    p_d = decision_probability(phi, known_defect.projector, 0.0).total
    p_c = decision_probability(phi, known_coop.projector, 0.0).total
    g = decision_probability(phi, unknown.projector, 0.0).g

    points, flags = [], []
    for q in cfg.q_values():
        p = decision_probability(phi, unknown.projector, q).total
        points.append((q, p))
        flags.append(check_total_probability(p, p_d, p_c, STP_TOL))
    onset = next((q for (q, _), f in zip(points, flags) if f), None)
    taus = {"defect": known_defect.tau_star, "coop": known_coop.tau_star, "unknown": unknown.tau_star}
    return StpResult(p_d, p_c, g, tuple(points), tuple(flags), onset, taus, phi.signal_index)


def calibrated_setup(cfg: RunConfig):
    """Coefficients and fixed state tuned to hit the target conditionals.

    In the observed signal's block the fixed state is the first basis vector
    and the two signaling rows are placed in the plane of the first two
    coordinates, at angles chosen so that <phi|P|phi> equals
    ``target_p_defect`` under a known defecting opponent and
    ``target_p_coop`` under a known cooperating one. Of the four sign
    choices, the first whose unknown-state probability stays inside the hull
    at q=0 is returned.
    """
    if cfg.d < 2:
        raise PreconditionError("calibration needs d >= 2")
    base = build_setup(cfg)
    s = fixed_phi(cfg, base).signal_index
    th1 = np.arccos(np.sqrt(cfg.target_p_defect))
    # Under a known cooperator the projector tends to the direction orthogonal to a0.
    th0 = np.arccos(np.sqrt(1.0 - cfg.target_p_coop))
    vec = np.zeros(cfg.k * cfg.d)
    vec[s * cfg.d] = 1.0
    phi = ProspectState(vec, s)
    for sign1 in (1.0, -1.0):
        for sign0 in (1.0, -1.0):
            rows1 = base.coeffs1.rows.copy()
            rows0 = base.coeffs0.rows.copy()
            rows1[s] = 0.0
            rows0[s] = 0.0
            rows1[s, :2] = np.cos(sign1 * th1), np.sin(sign1 * th1)
            rows0[s, :2] = np.cos(sign0 * th0), np.sin(sign0 * th0)
            setup = Setup(base.model, PerceptionCoefficients(rows1), PerceptionCoefficients(rows0))
            res = _stp_core(cfg, setup, phi)
            hit = (abs(res.p_defect_given_defect - cfg.target_p_defect) <= CALIBRATION_TOL
                   and abs(res.p_defect_given_coop - cfg.target_p_coop) <= CALIBRATION_TOL)
            if hit and not res.violations[0] and res.violation_onset is not None:
                return setup, phi
    raise NumericalError("no coefficient arrangement reproduces the target conditionals")


def stp_experiment(cfg: RunConfig) -> StpResult:
    """Defection probability under known and unknown opponent actions, swept
    over the attraction factor."""
    if cfg.calibrate:
        setup, phi = calibrated_setup(cfg)
    else:
        setup = build_setup(cfg)
        phi = fixed_phi(cfg, setup)
    return _stp_core(cfg, setup, phi)


# ---------------------------------------------------------------------------
# ROC curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RocCurve:
    points: tuple                     # (tau, p_false, p_detect), tau ascending
    label: str

    def __post_init__(self):
        taus = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise PreconditionError("ROC points must be sorted by strictly increasing tau")

    @property
    def p_false(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def p_detect(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])

    def auc(self) -> float:
        """Area under the ROC with (0,0) and (1,1) anchors, trapezoid rule."""
        x = np.concatenate(([0.0], self.p_false[::-1], [1.0]))
        y = np.concatenate(([0.0], self.p_detect[::-1], [1.0]))
        return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def roc_quantum(rho1, rho0, tau_grid=None, label: str = "quantum") -> RocCurve:
    sweep = qlrt_sweep(rho1, rho0, tau_grid)
    pts = tuple((float(t), float(f), float(d)) for t, f, d in zip(sweep.taus, sweep.p_false, sweep.p_detect))
    return RocCurve(pts, label)


def roc_classical(pmf1, pmf0, tau_grid=None, epsilon: float = 1.0, label: str = "classical") -> RocCurve:
    """Deterministic signal-wise likelihood-ratio test: accept s iff pmf1[s] > tau*pmf0[s].

    ``epsilon`` does not change the attainable operating points, only which
    one a weighted-risk agent picks, so it is accepted for interface parity.
    """
    if not epsilon > 0:
        raise PreconditionError("epsilon must be > 0")
    f1 = np.asarray(pmf1, dtype=float)
    f0 = np.asarray(pmf0, dtype=float)
    if f1.shape != f0.shape:
        raise PreconditionError("pmf lengths differ")
    pts = []
    for tau in tau_values(tau_grid):
        accept = f1 > tau * f0
        pts.append((float(tau), float(f0[accept].sum()), float(f1[accept].sum())))
    return RocCurve(tuple(pts), label)


def roc_with_attraction(setup: Setup, q: float, tau_grid=None, label: str | None = None) -> RocCurve:
    """Behavioral operating points: per-state decision probabilities clamp(g + q)
    averaged over each hypothesis' prospect-state ensemble."""
    sweep = qlrt_sweep(setup.rho1, setup.rho0, tau_grid)
    model = setup.model
    rates = []
    for h in (0, 1):
        pmf = model.pmf(h)
        vecs = np.array([build_prospect_state(s, setup.coeffs(h)).vec for s in range(model.k)])
        g = np.einsum("si,nij,sj->ns", vecs, sweep.projectors, vecs)
        rates.append(np.clip(np.clip(g, 0.0, 1.0) + q, 0.0, 1.0) @ pmf)
    pts = tuple((float(t), float(f), float(d)) for t, f, d in zip(sweep.taus, rates[0], rates[1]))
    return RocCurve(pts, label or f"quantum_q={q!r}")


def interpolate_roc(curve: RocCurve, p_false) -> np.ndarray:
    """Detection rate of the randomized test mixing neighbouring ROC points."""
    pf = np.concatenate(([0.0], curve.p_false, [1.0]))
    pd = np.concatenate(([0.0], curve.p_detect, [1.0]))
    uniq = np.unique(pf)
    best = np.array([pd[pf == x].max() for x in uniq])
    return np.interp(np.asarray(p_false, dtype=float), uniq, best)


def roc_experiment(cfg: RunConfig) -> list:
    setup = build_setup(cfg)
    grid = cfg.tau_grid()
    curves = [
        roc_quantum(setup.rho1, setup.rho0, grid),
        roc_classical(setup.model.pmf1, setup.model.pmf0, grid, cfg.epsilon),
    ]
    if cfg.q != 0.0:
        curves.append(roc_with_attraction(setup, cfg.q, grid))
    return curves


# ---------------------------------------------------------------------------
# Threshold against the prior
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdCurve:
    points: tuple                     # (prior1, tau_star)

    def __post_init__(self):
        priors = [p for p, _ in self.points]
        if any(not 0.0 < p < 1.0 for p in priors) or any(b <= a for a, b in zip(priors, priors[1:])):
            raise PreconditionError("prior grid must be strictly increasing inside (0, 1)")

    @property
    def priors(self) -> np.ndarray:
        return np.array([p for p, _ in self.points])

    @property
    def tau_stars(self) -> np.ndarray:
        return np.array([t for _, t in self.points])


def threshold_vs_prior(cfg: RunConfig, tau_grid=None) -> ThresholdCurve:
    """Best-response threshold for each prior p(H1), with the state held fixed."""
    setup = build_setup(cfg)
    phi = fixed_phi(cfg, setup)
    rho1, rho0 = setup.rho1, setup.rho0
    sweep = qlrt_sweep(rho1, rho0, cfg.tau_grid() if tau_grid is None else tau_grid)
    params = cfg.risk_params()
    pts = tuple(
        (p, best_response(rho1, rho0, phi, params, prior1=p, sweep=sweep).tau_star)
        for p in cfg.prior_values()
    )
    return ThresholdCurve(pts)


# ---------------------------------------------------------------------------
# Monte-Carlo protocol
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McSummary:
    n_trials: int
    tau_star: float
    n00: int
    n01: int
    n10: int
    n11: int
    p_false_emp: float
    p_detect_emp: float
    p_false_trace: float
    p_detect_trace: float
    p_false_expected: float
    p_detect_expected: float
    mean_risk: float
    mean_sender_value: float

    def to_row(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def _rate(hits: int, total: int) -> float:
    return hits / total if total else float("nan")


def monte_carlo_protocol(cfg: RunConfig, n_trials: int | None = None, rng=None, setup=None) -> McSummary:
    """Commit, observe, signal and decide ``n_trials`` times.

    The receiver commits to one QLRT minimizing risk averaged over the exact
    distribution of prospect states, so empirical rates can be checked
    against ``Tr(P rho_j)``.
    """
    n = cfg.n_trials if n_trials is None else n_trials
    if n < 1:
        raise PreconditionError("n_trials must be >= 1")
    rng = stream(cfg.seed, PROTOCOL) if rng is None else rng
    setup = build_setup(cfg) if setup is None else setup
    model, params = setup.model, cfg.risk_params()
    rho1, rho0 = setup.rho1, setup.rho0
    sweep = qlrt_sweep(rho1, rho0, cfg.tau_grid())

    keys, phis, weights = [], [], []
    for h in (0, 1):
        prior = model.prior1 if h == 1 else model.prior0
        for s in range(model.k):
            w = prior * model.pmf(h)[s]
            if w > 0:
                keys.append(h * model.k + s)
                phis.append(build_prospect_state(s, setup.coeffs(h)))
                weights.append(w)
    resp = committed_best_response(rho1, rho0, phis, weights, params, prior1=model.prior1, sweep=sweep)
    proj = resp.projector
    idx = int(np.searchsorted(sweep.taus, resp.tau_star))

    table = np.full(2 * model.k, -1)
    table[keys] = np.arange(len(keys))
    g = np.clip(np.array([phi.vec @ proj @ phi.vec for phi in phis]), 0.0, 1.0)
    prob = np.clip(g + cfg.q, 0.0, 1.0)
    post1 = np.array([posterior(model.prior1, rho0, rho1, phi)[1] for phi in phis])
    state_risk = sweep.risks(1.0 - post1, post1, params)[:, idx]

    draws = draw_protocol(model, n, rng)
    which = table[draws.states * model.k + draws.signals]
    actions = (draws.uniforms < prob[which]).astype(int)
    states = draws.states
    counts = {(w, a): int(np.sum((states == w) & (actions == a))) for w in (0, 1) for a in (0, 1)}

    expected = []
    for h in (0, 1):
        sel = [i for i, key in enumerate(keys) if key // model.k == h]
        pm = np.array([model.pmf(h)[keys[i] % model.k] for i in sel])
        expected.append(float(prob[sel] @ pm / pm.sum()) if sel else float("nan"))

    return McSummary(
        n_trials=n,
        tau_star=resp.tau_star,
        n00=counts[0, 0], n01=counts[0, 1], n10=counts[1, 0], n11=counts[1, 1],
        p_false_emp=_rate(counts[0, 1], counts[0, 0] + counts[0, 1]),
        p_detect_emp=_rate(counts[1, 1], counts[1, 0] + counts[1, 1]),
        p_false_trace=trace_product(proj, rho0.mat),
        p_detect_trace=trace_product(proj, rho1.mat),
        p_false_expected=expected[0],
        p_detect_expected=expected[1],
        mean_risk=float(np.mean(state_risk[which])),
        mean_sender_value=float(np.mean(cfg.sender_objective().payoff(states, actions))),
    )


# ---------------------------------------------------------------------------
# Persuasion
# ---------------------------------------------------------------------------

def persuade_experiment(cfg: RunConfig) -> SenderSolution:
    return optimize_signaling(
        cfg.sender_objective(), cfg.signal_model(), cfg.risk_params(), cfg.q,
        cfg.opt_config(), stream(cfg.seed, OPTIMIZER), d=cfg.d, tau_grid=cfg.tau_grid(),
    )


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _fmt(x) -> str:
    """Shortest round-trip decimal for floats; integers verbatim."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_stp_csv(result: StpResult, path):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["q", "p_unknown", "violation"])
        for (q, p), flag in zip(result.sweep, result.violations):
            w.writerow([_fmt(q), _fmt(p), _fmt(flag)])


def write_roc_csv(curves, path):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["label", "tau", "p_false", "p_detect"])
        for curve in curves:
            for tau, pf, pd in curve.points:
                w.writerow([curve.label, _fmt(tau), _fmt(pf), _fmt(pd)])


def write_threshold_csv(curve: ThresholdCurve, path):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["prior1", "tau_star"])
        for p, t in curve.points:
            w.writerow([_fmt(p), _fmt(t)])


def write_mc_csv(summary: McSummary, path):
    row = summary.to_row()
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(list(row))
        w.writerow([_fmt(v) for v in row.values()])
