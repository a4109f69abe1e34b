"""Ergodic capacity of the optimally powered link, with its low- and
high-budget limits and parameter sweeps.

capacity = E[ log(1 + P(states) * g_direct) ] in nats per channel use,
averaged over both links' fading, with P the policy from
power_allocation.solve_lambda. Expectations of min-of-two-components are
split at the crossing state so every quadrature piece is smooth; the
whole evaluation is repeated with doubled panel counts until two levels
agree, and the last change is reported as the error estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .fading import CsiKnowledge, CsiLevel
from .power_allocation import (
    NumericSettings,
    PowerPolicy,
    ScenarioConfig,
    _CapField,
    _SlGrid,
    average_power_threshold,
    solve_lambda,
)
from .special_functions import NumericsError, exp_integral_e1

__all__ = [
    "CapacityResult",
    "ergodic_capacity",
    "low_budget_asymptote",
    "high_budget_asymptote",
    "capacity_sweep",
    "average_power_threshold",
]


@dataclass(frozen=True)
class CapacityResult:
    """Capacity in nats/use plus the solve diagnostics behind it.

    quadrature_error_estimate is the change in the value under the last
    panel doubling; if refinement stopped without meeting quad_rel_tol the
    estimate is carried honestly (it will simply be larger).
    """

    capacity: float
    lam: float
    p_avg_star: float
    regime: str
    quadrature_error_estimate: float


def _saturated_rate(c):
    """E[log(1 + c * g)] for unit-mean exponential g: e^{1/c} E1(1/c).

    Closed form instead of a quadrature rule because the saturated cap is
    unbounded as the cross state vanishes, and log(1 + c*g) with huge c
    has a log singularity at g = 0 that defeats polynomial rules (a
    rule-based version carried a stubborn ~4e-8 bias here).
    """
    c = np.asarray(c, dtype=float)
    out = np.zeros_like(c)
    pos = c > 0.0
    if np.any(pos):
        out[pos] = exp_integral_e1(1.0 / c[pos], scaled=True)
    return out


def _saturated_value(capf: _CapField, ns: NumericSettings, panels: int) -> float:
    """E[log(1 + cap * g)] with g the marginal direct gain.

    Valid for any direct-link knowledge: at saturation the policy ignores
    the direct link, so the estimate layer integrates out.
    """
    if capf.is_constant:
        return float(_saturated_rate(np.array([capf.constant]))[0])
    t, wt = capf.full_rule(panels)
    return float(wt @ _saturated_rate(capf.cap(t)))


def _capacity_at(policy: PowerPolicy, panels: int) -> float:
    cfg = policy.config
    ns = cfg.numerics
    capf = policy._capf
    if policy.regime == "saturated":
        return _saturated_value(capf, ns, panels)
    sl = _SlGrid(cfg.sl_csi, ns, panels, lam=policy.lam)
    A = sl.budget_component(policy.lam, cfg.p_avg, policy._no_csi_const)
    if capf.is_constant:
        P = np.minimum(A, capf.constant)
        return float(sl.w @ sl.rate_cells(P))
    t_star = capf.crossing_state(A)
    head = sl.rate_cells(A) * capf.cdf(t_star)
    nodes, wt = capf.tail_rule(t_star, panels)
    tail = (wt * sl.rate_cells(capf.cap(nodes))).sum(axis=1)
    return float(sl.w @ (head + tail))


def _refine(evaluate, ns: NumericSettings):
    """Run evaluate(panels) with doubling panels until two levels agree.

    Returns (value, error_estimate); the estimate is honest even when the
    refinement budget runs out before the tolerance is met.
    """
    panels = ns.base_panels
    prev = None
    err = np.inf
    for _ in range(ns.max_refinements + 1):
        val = evaluate(panels)
        if prev is not None:
            err = abs(val - prev)
            if err <= max(ns.quad_rel_tol * abs(val), 1e-12):
                return val, err
        prev = val
        panels *= 2
    return prev, err


def ergodic_capacity(config: ScenarioConfig) -> CapacityResult:
    """Solve the policy for config and integrate its ergodic capacity."""
    policy = solve_lambda(config)
    val, err = _refine(lambda p: _capacity_at(policy, p), config.numerics)
    return CapacityResult(capacity=val, lam=policy.lam,
                          p_avg_star=policy.p_avg_star, regime=policy.regime,
                          quadrature_error_estimate=err)


def low_budget_asymptote(config: ScenarioConfig) -> float:
    """Capacity with the interference constraint dropped.

    As p_avg -> 0 the budget component shrinks below any fixed cap, so
    the capped capacity approaches this value from below. With no
    direct-link knowledge this is the constant-power rate at p_avg.
    """
    ns = config.numerics
    sl_level = config.sl_csi.level

    def evaluate(panels: int) -> float:
        if sl_level is CsiLevel.NONE:
            # constant power on the marginal gain: exact closed form
            return float(_saturated_rate(np.array([config.p_avg]))[0])

        # budget equation without the cap: E[component(lam)] = p_avg;
        # the grid is rebuilt per trial so its edge tracks the kink
        def spent(lam: float):
            sl = _SlGrid(config.sl_csi, ns, panels, lam=lam)
            return sl.mean_budget_component(lam, config.p_avg), sl

        lo, hi = 1e-12, 1.0
        for _ in range(200):
            if spent(hi)[0] <= config.p_avg:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise NumericsError("failed to bracket the capless multiplier")
        lam = hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            e, _ = spent(mid)
            lam = mid
            if abs(e - config.p_avg) <= config.p_avg * 1e-9:
                break
            if e > config.p_avg:
                lo = mid
            else:
                hi = mid
        _, sl = spent(lam)
        A = sl.budget_component(lam, config.p_avg)
        return float(sl.w @ sl.rate_cells(A))

    val, _ = _refine(evaluate, ns)
    return val


def high_budget_asymptote(config: ScenarioConfig) -> float:
    """The saturated-regime capacity: the plateau above the threshold.

    For finite-threshold scenarios this is exactly the capacity at any
    p_avg >= average_power_threshold(config); under perfect cross-link
    knowledge (infinite threshold) it is the p_avg -> infinity limit.
    """
    ns = config.numerics
    capf = _CapField(config.cl_csi, config.i_peak, config.epsilon, ns)
    val, _ = _refine(lambda p: _saturated_value(capf, ns, p), ns)
    return val


def _csi_for_alpha(alpha: float) -> CsiKnowledge:
    if alpha <= 0.0:
        return CsiKnowledge.perfect()
    if alpha >= 1.0:
        return CsiKnowledge.no_csi()
    return CsiKnowledge.estimated(alpha)


def capacity_sweep(config: ScenarioConfig, param: str,
                   values: Sequence[float]) -> List[CapacityResult]:
    """Capacity along a one-parameter family of scenarios.

    param is one of p_avg, i_peak, epsilon, alpha_s, alpha_p. The alpha
    parameters reshape the corresponding knowledge level: 0 means perfect,
    1 means none, anything between is an estimate with that error
    variance.
    """
    out = []
    for v in values:
        v = float(v)
        if param == "p_avg":
            c = config.replace(p_avg=v)
        elif param == "i_peak":
            c = config.replace(i_peak=v)
        elif param == "epsilon":
            c = config.replace(epsilon=v)
        elif param == "alpha_s":
            c = config.replace(sl_csi=_csi_for_alpha(v))
        elif param == "alpha_p":
            c = config.replace(cl_csi=_csi_for_alpha(v))
        else:
            raise ValueError(f"unknown sweep parameter {param!r}")
        out.append(ergodic_capacity(c))
    return out
