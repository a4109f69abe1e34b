"""Rayleigh fading with MMSE channel estimation.

Both links fade independently with unit-mean exponential power gains and
unit noise power. The transmitter may know a link perfectly, not at all,
or through an MMSE estimate whose error variance alpha in (0, 1) splits
the complex gain h = h_est + h_err with h_est ~ CN(0, 1 - alpha) and
h_err ~ CN(0, alpha) independent.

Three power-gain laws follow:
  * marginal true power  g = |h|^2            ~ Exp(mean 1)
  * estimate power       m = |h_est|^2        ~ Exp(mean 1 - alpha)
  * conditional true power given the estimate ~ noncentral chi-square
    with 2 degrees of freedom: density
      f(g | m) = (1/alpha) exp(-(g + m)/alpha) I0(2 sqrt(m g)/alpha)
    with mean m + alpha and cdf 1 - Q1(sqrt(2m/alpha), sqrt(2g/alpha)),
    Q1 the first-order Marcum function.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .special_functions import bessel_i0_log, marcum_q1

__all__ = [
    "CsiLevel",
    "CsiKnowledge",
    "ChannelDraw",
    "ConditionalPowerLaw",
    "marginal_power_pdf",
    "marginal_power_cdf",
    "marginal_power_quantile",
    "estimate_power_pdf",
    "estimate_power_quantile",
    "conditional_power_pdf",
    "conditional_power_cdf",
    "conditional_power_inv_cdf",
    "conditional_support_bound",
    "sample_channel_pair",
]

_POWER_FLOOR = 1e-12  # guards divisions by a vanishing channel gain


class CsiLevel(Enum):
    """How much the transmitter knows about one link's instantaneous state."""

    NONE = "none"
    PERFECT = "perfect"
    ESTIMATED = "estimated"


@dataclass(frozen=True)
class CsiKnowledge:
    """Transmitter-side knowledge of a single link.

    alpha is the MMSE error variance and is only meaningful (and required)
    at the ESTIMATED level. The limits are represented by the other two
    levels rather than by alpha = 0 or alpha = 1.
    """

    level: CsiLevel
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.level is CsiLevel.ESTIMATED:
            if self.alpha is None or not (0.0 < float(self.alpha) < 1.0):
                raise ValueError("estimated CSI requires 0 < alpha < 1")
            object.__setattr__(self, "alpha", float(self.alpha))
        elif self.alpha is not None:
            raise ValueError(f"{self.level.value} CSI does not take an alpha")

    @classmethod
    def perfect(cls) -> "CsiKnowledge":
        return cls(CsiLevel.PERFECT)

    @classmethod
    def no_csi(cls) -> "CsiKnowledge":
        return cls(CsiLevel.NONE)

    @classmethod
    def estimated(cls, alpha: float) -> "CsiKnowledge":
        return cls(CsiLevel.ESTIMATED, float(alpha))

    @property
    def error_variance(self) -> float:
        """MMSE error variance implied by the level (1 none, 0 perfect)."""
        if self.level is CsiLevel.NONE:
            return 1.0
        if self.level is CsiLevel.PERFECT:
            return 0.0
        return float(self.alpha)

    def describe(self) -> str:
        if self.level is CsiLevel.ESTIMATED:
            return f"estimated(alpha={self.alpha:g})"
        return self.level.value


@dataclass(frozen=True)
class ChannelDraw:
    """Paired Monte Carlo draw of estimate powers and true powers for one link."""

    estimate: np.ndarray
    gain: np.ndarray

    def __post_init__(self):
        if self.estimate.shape != self.gain.shape:
            raise ValueError("estimate and gain arrays must share a shape")


# ----------------------------------------------------------------------
# marginal law of the true power: Exp(1)

def marginal_power_pdf(g):
    g = np.asarray(g, dtype=float)
    out = np.where(g >= 0.0, np.exp(-np.clip(g, 0.0, None)), 0.0)
    return out if out.ndim else float(out)


def marginal_power_cdf(g):
    g = np.asarray(g, dtype=float)
    out = np.where(g >= 0.0, -np.expm1(-np.clip(g, 0.0, None)), 0.0)
    return out if out.ndim else float(out)


def marginal_power_quantile(p):
    p = np.asarray(p, dtype=float)
    if np.any((p < 0.0) | (p >= 1.0)):
        raise ValueError("quantile level must lie in [0, 1)")
    out = -np.log1p(-p)
    return out if out.ndim else float(out)


# ----------------------------------------------------------------------
# law of the estimate power: Exp(1 - alpha)

def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly between 0 and 1")
    return alpha


def estimate_power_pdf(m, alpha: float):
    alpha = _check_alpha(alpha)
    scale = 1.0 - alpha
    m = np.asarray(m, dtype=float)
    out = np.where(m >= 0.0, np.exp(-np.clip(m, 0.0, None) / scale) / scale, 0.0)
    return out if out.ndim else float(out)


def estimate_power_quantile(p, alpha: float):
    alpha = _check_alpha(alpha)
    p = np.asarray(p, dtype=float)
    if np.any((p < 0.0) | (p >= 1.0)):
        raise ValueError("quantile level must lie in [0, 1)")
    out = -(1.0 - alpha) * np.log1p(-p)
    return out if out.ndim else float(out)


# ----------------------------------------------------------------------
# conditional law of the true power given the estimate power

def conditional_power_pdf(g, m, alpha: float):
    """Density of the true power at g given estimate power m.

    Evaluated through the log to survive the large I0 argument regime;
    m = 0 reduces to the Exp(alpha) density.
    """
    alpha = _check_alpha(alpha)
    g = np.asarray(g, dtype=float)
    m = np.asarray(m, dtype=float)
    g_b, m_b = np.broadcast_arrays(g, m)
    gc = np.clip(g_b, 0.0, None)
    log_pdf = -np.log(alpha) - (gc + m_b) / alpha + bessel_i0_log(
        2.0 * np.sqrt(gc * m_b) / alpha
    )
    out = np.where(g_b >= 0.0, np.exp(log_pdf), 0.0)
    return out if out.ndim else float(out)


def conditional_power_cdf(g, m, alpha: float):
    """P(true power <= g | estimate power m) = 1 - Q1(sqrt(2m/a), sqrt(2g/a))."""
    alpha = _check_alpha(alpha)
    g = np.asarray(g, dtype=float)
    m = np.asarray(m, dtype=float)
    g_b, m_b = np.broadcast_arrays(g, m)
    gc = np.clip(g_b, 0.0, None)
    q = marcum_q1(np.sqrt(2.0 * m_b / alpha), np.sqrt(2.0 * gc / alpha))
    out = np.where(g_b >= 0.0, 1.0 - q, 0.0)
    return out if out.ndim else float(out)


def conditional_support_bound(m, alpha: float, tail_mass: float = 1e-10):
    """Upper truncation point leaving at most tail_mass conditional mass above.

    Uses the Gaussian-tail envelope of the underlying Rician amplitude:
    with b = sqrt(2m/alpha) + sqrt(-2 ln tail_mass), the bound is
    alpha * b^2 / 2. Exact (not just a bound) when m = 0.
    """
    alpha = _check_alpha(alpha)
    if not (0.0 < tail_mass < 1.0):
        raise ValueError("tail_mass must lie strictly between 0 and 1")
    m = np.asarray(m, dtype=float)
    b = np.sqrt(2.0 * np.clip(m, 0.0, None) / alpha) + np.sqrt(-2.0 * np.log(tail_mass))
    out = 0.5 * alpha * b * b
    return out if out.ndim else float(out)


def conditional_power_inv_cdf(p, m, alpha: float, tol: float = 1e-10):
    """Quantile of the conditional true-power law, by bisection.

    Vectorized over p and m (broadcast together). Iterates until the cdf
    residual at the midpoint is within tol for every lane.
    """
    alpha = _check_alpha(alpha)
    p_arr = np.asarray(p, dtype=float)
    m_arr = np.asarray(m, dtype=float)
    scalar = p_arr.ndim == 0 and m_arr.ndim == 0
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)):
        raise ValueError("quantile level must lie strictly between 0 and 1")
    if np.any(m_arr < 0.0):
        raise ValueError("estimate power must be nonnegative")
    p_b, m_b = (a.ravel() for a in np.broadcast_arrays(p_arr, m_arr))

    lo = np.zeros_like(p_b)
    hi = np.maximum(m_b + alpha, alpha)
    # grow the bracket until the cdf at hi clears every requested level
    for _ in range(200):
        short = conditional_power_cdf(hi, m_b, alpha) < p_b
        if not np.any(short):
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise RuntimeError("failed to bracket conditional quantile")

    done = np.zeros(p_b.shape, dtype=bool)
    for _ in range(220):
        mid = 0.5 * (lo + hi)
        c = conditional_power_cdf(mid, m_b, alpha)
        done = np.abs(c - p_b) <= tol
        if np.all(done):
            break
        below = c < p_b
        lo = np.where(below & ~done, mid, lo)
        hi = np.where(~below & ~done, mid, hi)
    mid = 0.5 * (lo + hi)
    out = mid.reshape(np.broadcast_shapes(p_arr.shape, m_arr.shape))
    return float(out) if scalar else out


@dataclass(frozen=True)
class ConditionalPowerLaw:
    """True-power law of one link given its estimate power m.

    Thin object view over the conditional_* functions, convenient when a
    single (m, alpha) pair is probed repeatedly.
    """

    m: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        if self.m < 0.0:
            raise ValueError("estimate power must be nonnegative")
        object.__setattr__(self, "m", float(self.m))

    @property
    def mean(self) -> float:
        return self.m + self.alpha

    def pdf(self, g):
        return conditional_power_pdf(g, self.m, self.alpha)

    def cdf(self, g):
        return conditional_power_cdf(g, self.m, self.alpha)

    def quantile(self, p):
        return conditional_power_inv_cdf(p, self.m, self.alpha)

    def support_bound(self, tail_mass: float = 1e-10) -> float:
        return conditional_support_bound(self.m, self.alpha, tail_mass)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw true powers: |sqrt(m) + CN(0, alpha)|^2."""
        s = np.sqrt(self.alpha / 2.0)
        re = np.sqrt(self.m) + rng.normal(0.0, s, size=n)
        im = rng.normal(0.0, s, size=n)
        return re * re + im * im


# ----------------------------------------------------------------------
# joint sampler

def sample_channel_pair(csi: CsiKnowledge, rng: np.random.Generator,
                        n: int) -> ChannelDraw:
    """Draw n iid (estimate power, true power) pairs for one link.

    The draw order is fixed so a given generator state always yields the
    same pairs: estimate real, estimate imag, error real, error imag.
    Perfect CSI returns gain == estimate; absent CSI returns zero
    estimates alongside Exp(1) gains (drawn through the same normal path
    to keep the stream layout identical across levels).
    """
    alpha = csi.error_variance
    s_est = np.sqrt(max(1.0 - alpha, 0.0) / 2.0)
    s_err = np.sqrt(max(alpha, 0.0) / 2.0)
    est_re = rng.normal(0.0, 1.0, size=n) * s_est
    est_im = rng.normal(0.0, 1.0, size=n) * s_est
    err_re = rng.normal(0.0, 1.0, size=n) * s_err
    err_im = rng.normal(0.0, 1.0, size=n) * s_err
    estimate = est_re * est_re + est_im * est_im
    re = est_re + err_re
    im = est_im + err_im
    gain = re * re + im * im
    return ChannelDraw(estimate=estimate, gain=gain)
