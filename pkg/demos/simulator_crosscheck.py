#!/usr/bin/env python3
"""Quadrature engine versus Monte Carlo simulator on one scenario.

Solves the optimal policy for an estimated/estimated scenario, then
feeds the same policy object to the link-level simulator and compares:
ergodic rate against the quadrature capacity, spent average power
against the budget, and the conditional interference outage in each
cross-estimate decile against the configured tolerance. The two code
paths share no numerics, so agreement here is a real check.
"""

from crcap import (
    CsiKnowledge,
    ScenarioConfig,
    ergodic_capacity,
    simulate_policy,
    solve_lambda,
    verify_outage,
)

N_SAMPLES = 1_000_000
SEED = 2024


def main():
    cfg = ScenarioConfig(
        sl_csi=CsiKnowledge.estimated(0.5), cl_csi=CsiKnowledge.estimated(0.5),
        p_avg=1.0, i_peak=10.0, epsilon=0.05)
    res = ergodic_capacity(cfg)
    policy = solve_lambda(cfg)
    print(f"scenario: estimated gains both links (variance 0.5), "
          f"p_avg 1, cap 10, eps 0.05")
    print(f"quadrature capacity      {res.capacity:.6f} npcu "
          f"(error estimate {res.quadrature_error_estimate:.1e})")

    sim = simulate_policy(policy, cfg, N_SAMPLES, seed=SEED, threads=4)
    print(f"simulated rate           {sim.empirical_rate:.6f} npcu "
          f"(+/- {sim.rate_ci:.6f} at 95%)")
    print(f"simulated average power  {sim.empirical_avg_power:.6f} "
          f"(budget {cfg.p_avg:g})")
    print()

    ok, report = verify_outage(policy, cfg, N_SAMPLES, seed=SEED + 1)
    print(f"conditional outage by cross-estimate decile "
          f"(tolerance {cfg.epsilon:g}):")
    print(f"{'decile':>8} {'samples':>10} {'outage':>10}")
    for k, b in enumerate(report.bins):
        print(f"{k:8d} {b.count:10d} {b.outage_rate:10.4f}")
    print(f"outage check passed: {ok}")
    print()
    print("the power-limited policy stays below the cap with margin, so")
    print("outage rates sit well under the tolerance; rerun with p_avg=6")
    print("to watch every decile rise to epsilon at saturation.")


if __name__ == "__main__":
    main()
