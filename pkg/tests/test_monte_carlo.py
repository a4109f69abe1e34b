"""Simulator checks: reproducibility, agreement with quadrature, outage.

The simulator is a deliberately independent route: it draws channel
states, evaluates the policy per sample, and averages. Agreement is
asserted at 3 binomial/CLT sigmas so these tests are deterministic for
the pinned seeds yet sensitive to real defects.
"""

import math

import numpy as np
import pytest
from scipy import special

from crcap.capacity import ergodic_capacity
from crcap.fading import CsiKnowledge
from crcap.monte_carlo import (
    SHARD_SIZE,
    SimReport,
    simulate_policy,
    verify_outage,
)
from crcap.onoff import OnOffPolicy
from crcap.power_allocation import NumericSettings, ScenarioConfig, solve_lambda

TIGHT = NumericSettings(lambda_rel_tol=1e-7)
PERFECT = CsiKnowledge.perfect()
NONE = CsiKnowledge.no_csi()
EST = CsiKnowledge.estimated(0.5)


def scenario(sl, cl, p_avg=1.0, i_peak=10.0, eps=0.05):
    return ScenarioConfig(sl_csi=sl, cl_csi=cl, p_avg=p_avg, i_peak=i_peak,
                          epsilon=eps, numerics=TIGHT)


class ConstantPolicy:
    """Minimal external policy: transmit a fixed level regardless of state."""

    def __init__(self, level: float):
        self.level = level
        self.sl_state_kind = "none"
        self.cl_state_kind = "none"

    def power(self, sl_state=None, cl_state=None):
        if sl_state is None:
            return self.level
        return np.full(np.asarray(sl_state).shape[0], self.level)


def test_same_seed_same_report():
    cfg = scenario(PERFECT, NONE)
    pol = solve_lambda(cfg)
    r1 = simulate_policy(pol, cfg, 120_000, seed=5)
    r2 = simulate_policy(pol, cfg, 120_000, seed=5)
    assert r1 == r2


def test_threads_do_not_change_the_report():
    cfg = scenario(PERFECT, EST)
    pol = solve_lambda(cfg)
    serial = simulate_policy(pol, cfg, 200_000, seed=9, threads=1)
    threaded = simulate_policy(pol, cfg, 200_000, seed=9, threads=4)
    assert serial == threaded


def test_different_seed_different_samples():
    cfg = scenario(PERFECT, NONE)
    pol = solve_lambda(cfg)
    r1 = simulate_policy(pol, cfg, 50_000, seed=1)
    r2 = simulate_policy(pol, cfg, 50_000, seed=2)
    assert r1.empirical_rate != r2.empirical_rate


def test_sample_count_not_multiple_of_shard():
    cfg = scenario(PERFECT, NONE)
    pol = solve_lambda(cfg)
    n = SHARD_SIZE + 12_345
    r = simulate_policy(pol, cfg, n, seed=3)
    assert r.n_samples == n


def test_zero_power_policy_exact():
    cfg = scenario(PERFECT, NONE)
    r = simulate_policy(ConstantPolicy(0.0), cfg, 10_000, seed=4)
    assert r.empirical_rate == 0.0
    assert r.empirical_avg_power == 0.0
    assert r.outage_fraction == 0.0


def test_constant_power_matches_closed_form_rate():
    # E log(1+g) = e E1(1) for unit power on Rayleigh
    cfg = scenario(NONE, NONE)
    r = simulate_policy(ConstantPolicy(1.0), cfg, 1_000_000, seed=6)
    closed = math.e * special.exp1(1.0)
    assert abs(r.empirical_rate - closed) <= 3.0 * r.rate_ci
    assert r.empirical_avg_power == pytest.approx(1.0, abs=1e-12)


def test_optimal_policy_rate_matches_quadrature():
    cfg = scenario(PERFECT, PERFECT)
    pol = solve_lambda(cfg)
    res = ergodic_capacity(cfg)
    r = simulate_policy(pol, cfg, 1_000_000, seed=7)
    assert abs(r.empirical_rate - res.capacity) <= 3.0 * r.rate_ci
    assert abs(r.empirical_avg_power - cfg.p_avg) <= 3.0 * r.power_ci


def test_estimated_both_links_matches_quadrature():
    cfg = scenario(EST, EST)
    pol = solve_lambda(cfg)
    res = ergodic_capacity(cfg)
    r = simulate_policy(pol, cfg, 1_000_000, seed=8)
    assert abs(r.empirical_rate - res.capacity) <= 3.0 * r.rate_ci
    assert abs(r.empirical_avg_power - cfg.p_avg) <= 3.0 * r.power_ci


def test_saturated_policy_spends_mean_cap():
    cfg = scenario(PERFECT, EST, p_avg=6.0)
    pol = solve_lambda(cfg)
    assert pol.regime == "saturated"
    r = simulate_policy(pol, cfg, 500_000, seed=10)
    assert abs(r.empirical_avg_power - pol.p_avg_star) <= 3.0 * r.power_ci


def test_perfect_cross_knowledge_zero_outage():
    cfg = scenario(PERFECT, PERFECT)
    pol = solve_lambda(cfg)
    ok, report = verify_outage(pol, cfg, 500_000, seed=11)
    assert ok
    assert report.outage_fraction == 0.0


def test_saturated_estimated_cross_outage_near_epsilon():
    # at saturation the cap binds in every state, so each conditioning
    # decile runs at the full epsilon outage allowance
    cfg = scenario(PERFECT, EST, p_avg=6.0)
    pol = solve_lambda(cfg)
    ok, report = verify_outage(pol, cfg, 1_000_000, seed=12)
    assert ok
    for b in report.bins:
        assert b.count > 50_000
        sigma = math.sqrt(0.05 * 0.95 / b.count)
        assert abs(b.outage_rate - 0.05) <= 4.0 * sigma


def test_no_cross_knowledge_outage_near_epsilon_when_cap_binds():
    # saturated none-cross policy transmits the constant cap, which was
    # built to exceed i_peak/gp with probability exactly epsilon
    cfg = scenario(PERFECT, NONE, p_avg=5.0)
    pol = solve_lambda(cfg)
    ok, report = verify_outage(pol, cfg, 1_000_000, seed=13)
    assert ok
    assert report.outage_fraction == pytest.approx(0.05, abs=3.0 * report.outage_ci)


def test_power_limited_outage_below_epsilon():
    # when the budget component often sits under the cap, realized outage
    # drops strictly below the allowance
    cfg = scenario(PERFECT, NONE, p_avg=1.0)
    pol = solve_lambda(cfg)
    ok, report = verify_outage(pol, cfg, 400_000, seed=14)
    assert ok
    assert report.outage_fraction < 0.05


def test_onoff_policy_through_simulator():
    cfg = scenario(PERFECT, NONE)
    pol = OnOffPolicy(tau=0.56372252, config=cfg)
    r = simulate_policy(pol, cfg, 1_000_000, seed=15)
    assert abs(r.empirical_rate - 0.70334931) <= 3.0 * r.rate_ci
    assert abs(r.empirical_avg_power - 1.0) <= 3.0 * r.power_ci


def test_interface_guard_rejects_mismatched_policy():
    cfg = scenario(PERFECT, PERFECT)

    class WrongKind(ConstantPolicy):
        def __init__(self):
            super().__init__(1.0)
            self.cl_state_kind = "estimate"  # scenario provides a true gain

    with pytest.raises(ValueError):
        simulate_policy(WrongKind(), cfg, 10_000, seed=1)


def test_policy_output_validation():
    cfg = scenario(PERFECT, NONE)

    class Negative(ConstantPolicy):
        def power(self, sl_state=None, cl_state=None):
            return np.full(np.asarray(sl_state).shape[0], -1.0)

    neg = Negative(0.0)
    neg.sl_state_kind = "gain"
    with pytest.raises(ValueError):
        simulate_policy(neg, cfg, 10_000, seed=1)


def test_minimum_sample_count_enforced():
    cfg = scenario(PERFECT, NONE)
    pol = solve_lambda(cfg)
    with pytest.raises(ValueError):
        simulate_policy(pol, cfg, 500, seed=1)


def test_ci_shrinks_like_root_n():
    cfg = scenario(PERFECT, NONE)
    pol = solve_lambda(cfg)
    small = simulate_policy(pol, cfg, 100_000, seed=16)
    large = simulate_policy(pol, cfg, 400_000, seed=16)
    ratio = small.rate_ci / large.rate_ci
    assert ratio == pytest.approx(2.0, abs=0.2)


def test_report_serializes():
    cfg = scenario(PERFECT, EST)
    pol = solve_lambda(cfg)
    r = simulate_policy(pol, cfg, 50_000, seed=17)
    d = r.to_dict()
    assert d["n_samples"] == 50_000 and d["seed"] == 17
    assert len(d["bins"]) == 10
    assert isinstance(r, SimReport)
