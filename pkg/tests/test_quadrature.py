"""Quadrature helper checks against scipy.integrate and exact integrals."""

import math

import numpy as np
import pytest
from scipy import integrate

from crcap.quadrature import (
    adaptive_integral,
    exp_mass_edges,
    panel_rule,
    panel_rule_batch,
)


def test_panel_rule_polynomial_exactness():
    # an n-point Gauss rule is exact through degree 2n-1 on each panel
    nodes, weights = panel_rule([0.0, 1.3, 2.0, 5.0], points=8)
    for k in range(0, 16):
        exact = 5.0 ** (k + 1) / (k + 1)
        assert weights @ nodes**k == pytest.approx(exact, rel=1e-13)


def test_panel_rule_weights_sum_to_length():
    nodes, weights = panel_rule([2.0, 3.0, 10.0], points=6)
    assert weights.sum() == pytest.approx(8.0, rel=1e-14)
    assert nodes.min() > 2.0 and nodes.max() < 10.0


def test_panel_rule_batch_matches_single():
    lo = np.array([0.0, 1.0])
    hi = np.array([2.0, 4.0])
    nodes, weights = panel_rule_batch(lo, hi, n_panels=5, points=7)
    assert nodes.shape == weights.shape == (2, 35)
    for i in range(2):
        edges = np.linspace(lo[i], hi[i], 6)
        n1, w1 = panel_rule(edges, points=7)
        np.testing.assert_allclose(nodes[i], n1, rtol=1e-14)
        np.testing.assert_allclose(weights[i], w1, rtol=1e-14)


def test_panel_rule_batch_empty_rows_get_zero_weight():
    nodes, weights = panel_rule_batch(np.array([1.0, 3.0]), np.array([2.0, 3.0]),
                                      n_panels=3, points=4)
    assert weights[1].sum() == 0.0
    f = nodes**2
    assert weights[0] @ f[0] == pytest.approx((8.0 - 1.0) / 3.0, rel=1e-13)


def test_panel_rule_batch_geometric_integrates_stiff_tail():
    # 1/t on [1e-6, 1]: geometric panels handle the scale span, linear cannot
    nodes, weights = panel_rule_batch(np.array([1e-6]), np.array([1.0]),
                                      n_panels=24, points=12, spacing="geometric")
    val = (weights[0] / nodes[0]).sum()
    assert val == pytest.approx(math.log(1e6), rel=1e-12)


def test_panel_rule_batch_rejects_unknown_spacing():
    with pytest.raises(ValueError):
        panel_rule_batch(np.array([0.0]), np.array([1.0]), 2, 4, spacing="cubic")


def test_exp_mass_edges_equal_mass_panels():
    scale = 0.7
    edges = exp_mass_edges(scale, n_panels=10, tail_mass=1e-8)
    assert edges[0] == 0.0
    masses = np.diff(-np.exp(-edges / scale))
    np.testing.assert_allclose(masses, masses[0], rtol=1e-9)
    # total mass covered is 1 - tail_mass
    assert masses.sum() == pytest.approx(1.0 - 1e-8, rel=1e-12)


def test_exp_mass_edges_integrates_exponential_moments():
    # the final equal-mass panel is wide, so a single unrefined rule
    # carries ~1e-9 error there; the engine refines on top of this
    edges = exp_mass_edges(2.0, n_panels=16, tail_mass=1e-12)
    nodes, weights = panel_rule(edges, points=12)
    pdf = np.exp(-nodes / 2.0) / 2.0
    assert weights @ pdf == pytest.approx(1.0, rel=1e-8)
    assert weights @ (nodes * pdf) == pytest.approx(2.0, rel=1e-7)
    assert weights @ (nodes**2 * pdf) == pytest.approx(8.0, rel=1e-6)


def test_adaptive_integral_smooth():
    val, err = adaptive_integral(np.cos, 0.0, 1.5)
    assert val == pytest.approx(math.sin(1.5), rel=1e-12)
    assert err < 1e-10


def test_adaptive_integral_matches_scipy_on_awkward_integrand():
    f = lambda x: np.log1p(3.0 * x) * np.exp(-x)
    val, err = adaptive_integral(f, 0.0, 40.0, rel_tol=1e-11)
    ref, _ = integrate.quad(f, 0.0, 40.0, epsabs=1e-14, epsrel=1e-13, limit=300)
    assert val == pytest.approx(ref, rel=1e-10)
    assert abs(val - ref) <= max(err, 1e-12) * 10 + 1e-13


def test_adaptive_integral_error_estimate_honest():
    val, err = adaptive_integral(lambda x: np.sqrt(np.abs(x)), -1.0, 1.0,
                                 rel_tol=1e-9)
    assert abs(val - 4.0 / 3.0) <= 50 * max(err, 1e-15)


def test_adaptive_integral_zero_width():
    val, err = adaptive_integral(np.exp, 2.0, 2.0)
    assert val == 0.0 and err == 0.0
