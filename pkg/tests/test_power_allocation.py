"""Power-policy checks: caps, components, multiplier search, regimes.

Frozen anchors come from an independent scipy implementation (nested
adaptive quadrature plus brentq on the budget equation) kept outside
this package; both routes agreed before the digits were pinned.
"""

import math

import numpy as np
import pytest
from scipy import integrate, special

from crcap.fading import CsiKnowledge, conditional_power_pdf
from crcap.power_allocation import (
    NumericSettings,
    ScenarioConfig,
    average_power_threshold,
    interference_power_cap,
    invert_rate_integral,
    power_component_avg,
    rate_integral,
    solve_lambda,
)

TIGHT = NumericSettings(lambda_rel_tol=1e-7)


def scenario(sl, cl, p_avg=1.0, i_peak=10.0, eps=0.05, ns=None, **kw):
    return ScenarioConfig(sl_csi=sl, cl_csi=cl, p_avg=p_avg, i_peak=i_peak,
                          epsilon=eps, numerics=ns or NumericSettings(), **kw)


# ----------------------------------------------------------------------
# interference cap

def test_cap_no_knowledge_constant():
    cap = interference_power_cap(None, CsiKnowledge.no_csi(), 10.0, 0.05)
    assert cap == pytest.approx(3.338082006953341, rel=1e-12)


def test_cap_perfect_inverse_gain():
    caps = interference_power_cap(np.array([2.0, 0.5]), CsiKnowledge.perfect(),
                                  10.0, 0.05)
    np.testing.assert_allclose(caps, [5.0, 20.0], rtol=1e-13)


def test_cap_estimated_at_zero_estimate():
    cap = interference_power_cap(0.0, CsiKnowledge.estimated(0.5), 10.0, 0.05)
    assert cap == pytest.approx(6.676164013906681, rel=1e-9)


def test_cap_estimated_decreasing_in_estimate():
    ms = np.linspace(0.0, 8.0, 30)
    caps = interference_power_cap(ms, CsiKnowledge.estimated(0.5), 10.0, 0.05)
    assert np.all(np.diff(caps) < 0)


def test_cap_estimated_meets_conditional_outage_exactly():
    # P(g > i_peak / cap | m) must equal epsilon
    m, alpha, i_peak, eps = 1.3, 0.5, 10.0, 0.05
    cap = interference_power_cap(m, CsiKnowledge.estimated(alpha), i_peak, eps)
    thr = i_peak / cap
    tail, _ = integrate.quad(lambda g: conditional_power_pdf(g, m, alpha),
                             thr, thr + 60.0, limit=300)
    assert tail == pytest.approx(eps, abs=1e-9)


def test_cap_validates_inputs():
    with pytest.raises(ValueError):
        interference_power_cap(1.0, CsiKnowledge.perfect(), -1.0, 0.05)
    with pytest.raises(ValueError):
        interference_power_cap(1.0, CsiKnowledge.perfect(), 10.0, 1.5)


# ----------------------------------------------------------------------
# conditional rate integral and its inverse

def test_rate_integral_at_zero_power_is_conditional_mean():
    assert rate_integral(0.0, 1.0, 0.5) == pytest.approx(1.5, rel=1e-9)
    assert rate_integral(0.0, 4.0, 0.3) == pytest.approx(4.3, rel=1e-9)


def test_rate_integral_frozen_value():
    # m=0, alpha=0.5: closed form 1 - 2 e^2 E1(2)
    assert rate_integral(1.0, 0.0, 0.5) == pytest.approx(
        0.27734276622355483, rel=1e-9)


def test_rate_integral_decreasing_in_power():
    ps = np.array([0.0, 0.5, 1.0, 2.0, 8.0])
    vals = rate_integral(ps, 1.0, 0.5)
    assert np.all(np.diff(vals) < 0)


def test_invert_rate_integral_roundtrip():
    for m, alpha in [(0.0, 0.5), (1.0, 0.5), (3.0, 0.2)]:
        for target in [0.05, 0.3, 0.9]:
            if target >= m + alpha:
                continue
            p = invert_rate_integral(target, m, alpha)
            assert rate_integral(p, m, alpha) == pytest.approx(target, rel=1e-7)


def test_invert_rate_integral_zero_above_conditional_mean():
    # rate_integral(0) = m + alpha, so any target at or above it gives P = 0
    assert invert_rate_integral(1.5, 1.0, 0.5) == 0.0
    assert invert_rate_integral(2.0, 1.0, 0.5) == 0.0


# ----------------------------------------------------------------------
# per-state budget component

def test_component_perfect_water_filling_shape():
    lam = 0.4
    g = np.array([0.2, 0.4, 1.0, 10.0])
    comp = power_component_avg(g, CsiKnowledge.perfect(), lam, p_avg=1.0)
    expect = np.array([0.0, 0.0, 1.0 / lam - 1.0, 1.0 / lam - 0.1])
    np.testing.assert_allclose(comp, expect, rtol=1e-12, atol=1e-12)


def test_component_none_is_constant_budget():
    comp = power_component_avg(None, CsiKnowledge.no_csi(), 0.0, p_avg=2.5)
    assert comp == 2.5


def test_component_estimated_matches_inverse():
    lam = 0.4
    m = np.array([0.0, 0.5, 2.0])
    comp = power_component_avg(m, CsiKnowledge.estimated(0.5), lam, p_avg=1.0)
    for mi, ci in zip(m, comp):
        assert ci == pytest.approx(invert_rate_integral(lam, float(mi), 0.5),
                                   rel=1e-8, abs=1e-10)


# ----------------------------------------------------------------------
# saturation threshold

def test_threshold_no_knowledge_is_the_constant_cap():
    cfg = scenario(CsiKnowledge.perfect(), CsiKnowledge.no_csi())
    assert average_power_threshold(cfg) == pytest.approx(3.338082006953341,
                                                         rel=1e-10)


def test_threshold_perfect_cross_is_infinite():
    cfg = scenario(CsiKnowledge.perfect(), CsiKnowledge.perfect())
    assert average_power_threshold(cfg) == math.inf


def test_threshold_estimated_cross_frozen():
    # independent ncx2 + quad route gave 4.243169
    cfg = scenario(CsiKnowledge.perfect(), CsiKnowledge.estimated(0.5))
    assert average_power_threshold(cfg) == pytest.approx(4.243169, rel=1e-5)


# ----------------------------------------------------------------------
# multiplier search

def test_lambda_perfect_perfect_frozen():
    cfg = scenario(CsiKnowledge.perfect(), CsiKnowledge.perfect(), ns=TIGHT)
    pol = solve_lambda(cfg)
    assert pol.regime == "power_limited"
    assert pol.lam == pytest.approx(0.3936003275, rel=2e-6)
    assert pol.expected_power() == pytest.approx(1.0, rel=3e-7)


def test_lambda_perfect_estimated_frozen():
    cfg = scenario(CsiKnowledge.perfect(), CsiKnowledge.estimated(0.5), ns=TIGHT)
    pol = solve_lambda(cfg)
    assert pol.lam == pytest.approx(0.3931649041, rel=2e-6)
    assert pol.expected_power() == pytest.approx(1.0, rel=3e-7)


def test_lambda_estimated_perfect_frozen():
    cfg = scenario(CsiKnowledge.estimated(0.5), CsiKnowledge.perfect(), ns=TIGHT)
    pol = solve_lambda(cfg)
    assert pol.lam == pytest.approx(0.3918221362, rel=2e-6)
    assert pol.expected_power() == pytest.approx(1.0, rel=1e-6)


def test_lambda_no_cap_binding_reduces_to_water_filling():
    # a huge i_peak makes the cap irrelevant; lambda must match the
    # unconstrained water-filling root of e^-l/l - E1(l) = p_avg
    cfg = scenario(CsiKnowledge.perfect(), CsiKnowledge.no_csi(),
                   i_peak=1e6, ns=TIGHT)
    pol = solve_lambda(cfg)
    assert pol.lam == pytest.approx(0.393773845045, rel=2e-6)


def test_saturated_regime_above_threshold():
    cfg = scenario(CsiKnowledge.perfect(), CsiKnowledge.estimated(0.5), p_avg=6.0)
    pol = solve_lambda(cfg)
    assert pol.regime == "saturated"
    assert pol.lam == 0.0
    assert pol.p_avg_star == pytest.approx(4.243169, rel=1e-4)
    # spends the mean cap, not the budget
    assert pol.expected_power() == pytest.approx(pol.p_avg_star, rel=1e-6)


def test_power_limited_just_below_threshold():
    cfg = scenario(CsiKnowledge.perfect(), CsiKnowledge.no_csi(),
                   p_avg=3.3, ns=TIGHT)
    pol = solve_lambda(cfg)
    assert pol.regime == "power_limited"
    assert pol.expected_power() == pytest.approx(3.3, rel=1e-6)


def test_saturated_no_knowledge_cross():
    cfg = scenario(CsiKnowledge.perfect(), CsiKnowledge.no_csi(), p_avg=5.0)
    pol = solve_lambda(cfg)
    assert pol.regime == "saturated"
    assert pol.power(sl_state=None, cl_state=None) == pytest.approx(
        3.338082006953341, rel=1e-12)


def test_no_sl_knowledge_literal_constant():
    cfg = scenario(CsiKnowledge.no_csi(), CsiKnowledge.perfect(), p_avg=1.0)
    pol = solve_lambda(cfg)
    assert pol.regime == "power_limited"
    gp = np.array([0.5, 2.0, 100.0])
    p = pol.power(sl_state=None, cl_state=gp)
    np.testing.assert_allclose(p, np.minimum(1.0, 10.0 / gp), rtol=1e-12)
    # capping the constant leaves average power strictly under budget
    assert pol.expected_power() < 1.0


def test_no_sl_knowledge_rescaled_constant():
    cfg = scenario(CsiKnowledge.no_csi(), CsiKnowledge.perfect(), p_avg=1.0,
                   ns=TIGHT, rescale_no_csi_budget=True)
    pol = solve_lambda(cfg)
    assert pol.expected_power() == pytest.approx(1.0, rel=1e-6)
    # the enlarged constant exceeds the raw budget
    assert pol.budget_component(None) > 1.0


def test_expected_capped_power_closed_form_perfect_cross():
    # E_gp[min(a, i/gp)] = a(1 - e^{-i/a}) + i E1(i/a) for Rayleigh gp;
    # a saturated=false policy with constant component exercises the
    # same field the solver integrates
    cfg = scenario(CsiKnowledge.no_csi(), CsiKnowledge.perfect(), p_avg=2.0)
    pol = solve_lambda(cfg)
    a, i_peak = 2.0, 10.0
    closed = a * (1 - math.exp(-i_peak / a)) + i_peak * special.exp1(i_peak / a)
    assert pol.expected_power() == pytest.approx(closed, rel=1e-9)


def test_policy_interface_declarations():
    pol = solve_lambda(scenario(CsiKnowledge.perfect(), CsiKnowledge.estimated(0.5)))
    assert pol.needs_sl_state and pol.needs_cl_state
    assert pol.sl_state_kind == "gain"
    assert pol.cl_state_kind == "estimate"
    sat = solve_lambda(scenario(CsiKnowledge.perfect(), CsiKnowledge.no_csi(),
                                p_avg=5.0))
    assert not sat.needs_sl_state and not sat.needs_cl_state
    assert sat.sl_state_kind == "none" and sat.cl_state_kind == "none"


def test_policy_power_is_min_of_components():
    pol = solve_lambda(scenario(CsiKnowledge.perfect(), CsiKnowledge.perfect(),
                                ns=TIGHT))
    g = np.array([0.2, 1.0, 5.0])
    gp = np.array([10.0, 1.0, 0.1])
    p = pol.power(g, gp)
    expect = np.minimum(pol.budget_component(g), pol.cap_component(gp))
    np.testing.assert_allclose(p, expect, rtol=1e-13)
    assert p[0] == 0.0  # below the water-filling cutoff


def test_policy_budget_interp_matches_exact_inversion():
    cfg = scenario(CsiKnowledge.estimated(0.5), CsiKnowledge.no_csi(), ns=TIGHT)
    pol = solve_lambda(cfg)
    ms = np.linspace(0.0, 6.0, 41)
    fast = pol.budget_component(ms)
    exact = np.array([invert_rate_integral(pol.lam, float(m), 0.5) for m in ms])
    np.testing.assert_allclose(fast, exact, atol=5e-8)


def test_saturated_policy_rejects_budget_component():
    pol = solve_lambda(scenario(CsiKnowledge.perfect(), CsiKnowledge.no_csi(),
                                p_avg=5.0))
    with pytest.raises(ValueError):
        pol.budget_component(np.array([1.0]))


def test_scenario_validation():
    with pytest.raises(ValueError):
        scenario(CsiKnowledge.perfect(), CsiKnowledge.perfect(), p_avg=-1.0)
    with pytest.raises(ValueError):
        scenario(CsiKnowledge.perfect(), CsiKnowledge.perfect(), eps=0.0)
    with pytest.raises(ValueError):
        scenario(CsiKnowledge.perfect(), CsiKnowledge.perfect(), i_peak=0.0)


def test_numeric_settings_validation():
    with pytest.raises(ValueError):
        NumericSettings(quad_points=1)
    with pytest.raises(ValueError):
        NumericSettings(tail_mass=0.5)
