"""Acceptance gate: one test per criterion, each with its pinned tolerance
and runtime budget. The terminal summary prints a PASS/FAIL line for each."""

import time

import numpy as np

from conftest import random_projector
from qdt.cli import OUTPUT_NAME, main
from qdt.config import RunConfig
from qdt.detector import RiskParams, TauGrid, qlrt_projector
from qdt.experiments import (
    build_setup,
    monte_carlo_protocol,
    roc_classical,
    roc_quantum,
    stp_experiment,
    threshold_vs_prior,
)
from qdt.persuasion import OptConfig, SenderObjective, evaluation_rng, optimize_signaling, sender_value
from qdt.prospect import PerceptionCoefficients, SignalModel, build_density, random_coefficients


class Timer:
    def __init__(self, budget):
        self.budget = budget

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.budget, f"took {self.elapsed:.1f} s, budget {self.budget} s"


def test_c1_classical_reduction():
    with Timer(5):
        setup = build_setup(RunConfig(k=5, d=2, means=(0.0, 1.0), variances=(1.0, 1.0)), shared=True)
        grid = TauGrid(400)
        q = np.array(roc_quantum(setup.rho1, setup.rho0, grid).points)
        c = np.array(roc_classical(setup.model.pmf1, setup.model.pmf0, grid).points)
        assert q.shape == c.shape == (401, 3)
        assert np.max(np.abs(q - c)) < 1e-10


def test_c2_helstrom_optimality():
    rng = np.random.default_rng(2)
    with Timer(30):
        trials = failures = 0
        for _ in range(20):
            g1, g0 = rng.standard_normal((2, 10, 10))
            rho1 = g1 @ g1.T / np.trace(g1 @ g1.T)
            rho0 = g0 @ g0.T / np.trace(g0 @ g0.T)
            for tau in np.geomspace(0.05, 20, 20):
                p = qlrt_projector(rho1, rho0, tau)
                best = np.trace(p @ rho1) - tau * np.trace(p @ rho0)
                for _ in range(200):
                    pr = random_projector(10, rng)
                    trials += 1
                    failures += np.trace(pr @ rho1) - tau * np.trace(pr @ rho0) > best + 1e-9
        assert trials == 80_000 and failures == 0


def test_c3_density_invariants():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        k, d = int(rng.integers(1, 9)), int(rng.integers(1, 5))
        pmf = rng.dirichlet(np.ones(k))
        rho = build_density(pmf, random_coefficients(k, d, rng)).mat
        assert abs(np.trace(rho) - 1.0) <= 1e-12
        assert np.linalg.eigvalsh(rho)[0] >= -1e-10
        assert np.array_equal(rho, rho.T)
        mask = np.kron(np.eye(k), np.ones((d, d)))
        assert np.all(rho[mask == 0] == 0.0)


def test_c4_sure_thing_principle():
    with Timer(10):
        res = stp_experiment(RunConfig(q_step=0.001))
        assert res.p_defect_given_defect != res.p_defect_given_coop
        qs = [q for q, _ in res.sweep]
        assert qs[0] == 0.0 and len(qs) == 1001
        ps = [p for _, p in res.sweep]
        for a, b in zip(ps, ps[1:]):
            assert b > a or a == b == 1.0
        assert any(res.violations) and res.violation_onset > 0.0
        assert not res.violations[0]

        cal = stp_experiment(RunConfig(q_step=0.001, calibrate=True))
        assert abs(cal.p_defect_given_defect - 0.39) <= 0.005
        assert abs(cal.p_defect_given_coop - 0.26) <= 0.005
        assert any(cal.violations) and cal.violation_onset > 0.0 and not cal.violations[0]


def test_c5_threshold_vs_prior():
    with Timer(60):
        cfg = RunConfig(prior_n=99)
        curve = threshold_vs_prior(cfg)
        oracle = threshold_vs_prior(cfg, TauGrid(4000))
        cell = np.log(1e4 / 1e-4) / 399
        for tc, tf in zip(curve.tau_stars, oracle.tau_stars):
            if tc == 0.0 or tf == 0.0:
                assert tc == tf
            else:
                assert abs(np.log(tc) - np.log(tf)) <= cell + 1e-12
        taus = curve.tau_stars
        steps = np.diff(taus)
        assert np.all(steps >= 0), "tau* is not non-decreasing in prior1"
        assert np.argmax(steps) >= len(steps) // 2


def test_c6_monte_carlo_consistency():
    with Timer(30):
        mc = monte_carlo_protocol(RunConfig(seed=6), n_trials=100_000)
        assert mc.n_trials == 100_000
        assert abs(mc.p_detect_emp - mc.p_detect_trace) <= 0.01
        assert abs(mc.p_false_emp - mc.p_false_trace) <= 0.01


def test_c7_sender_optimizer():
    rewards = RiskParams(20, 5, 10, 25, convention="reward")
    obj = SenderObjective("induce_action_1")
    opt = OptConfig(budget=300, sigma0=0.3, patience=25, n_mc=2000)
    model = SignalModel.gaussian(k=2)
    with Timer(120):
        for seed in range(3):
            # d = 1: a_s a_s^T never changes, so nothing can improve on the start
            flat = optimize_signaling(obj, model, rewards, 0.0, opt, np.random.default_rng(seed), d=1)
            values = [v for _, v in flat.trace]
            assert values == sorted(values)
            assert flat.trace == ((0, flat.value),)

            sol = optimize_signaling(obj, model, rewards, 0.0, opt, np.random.default_rng(seed), d=2)
            values = [v for _, v in sol.trace]
            assert values == sorted(values)
            restarts = np.random.default_rng([seed, 99])
            best_start = max(
                sender_value(obj, random_coefficients(2, 2, restarts), random_coefficients(2, 2, restarts),
                             model, rewards, 0.0, opt.n_mc, evaluation_rng(sol.eval_seed))
                for _ in range(50)
            )
            assert sol.value >= best_start


def test_c8_determinism(tmp_path):
    for exp, name in sorted(OUTPUT_NAME.items()):
        sidecar = name.rsplit(".", 1)[0] + ".config.json"
        runs = []
        for run in ("a", "b"):
            out = tmp_path / exp / run
            assert main([exp, "--seed", "8", "--out", str(out)]) == 0
            runs.append(((out / name).read_bytes(), (out / sidecar).read_text().replace(str(out), "")))
        assert runs[0] == runs[1], f"{exp} output differs between reruns"
