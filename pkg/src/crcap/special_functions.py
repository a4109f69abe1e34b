"""Numerically stable special functions for the fading and capacity code.

Everything here accepts scalars or numpy arrays and stays finite over the
argument ranges the engine produces: the Bessel term is kept in the log
domain, the exponential integral has an exp-scaled variant, and the Marcum
series is summed outward from its Poisson mode so huge noncentralities
neither underflow nor lose the head of the sum.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp

__all__ = [
    "NumericsError",
    "bessel_i0_log",
    "exp_integral_e1",
    "marcum_q1",
]

EULER_GAMMA = 0.5772156649015328606

# crossover between the power series and the asymptotic expansion of I0
_I0_SERIES_CUTOFF = 15.0


class NumericsError(RuntimeError):
    """A numerical routine failed to converge within its iteration budget."""


def _as_array(x):
    a = np.asarray(x, dtype=float)
    return a, (a.ndim == 0)


def bessel_i0_log(x):
    """ln I0(x) of the modified Bessel function, without overflow.

    Power series below x = 15, asymptotic expansion above; both branches are
    good to better than 1e-11 relative and the result stays finite up to
    x = 1e6 and beyond (I0 itself overflows past x ~ 709).
    """
    x, scalar = _as_array(x)
    x = np.abs(x)  # I0 is even
    out = np.zeros_like(x)

    small = x <= _I0_SERIES_CUTOFF
    if small.any():
        xs = x[small]
        q = 0.25 * xs * xs
        term = np.ones_like(xs)
        acc = np.ones_like(xs)
        for k in range(1, 90):
            term = term * q / (k * k)
            acc += term
            if np.all(term <= 1e-18 * acc):
                break
        out[small] = np.log(acc)

    big = ~small
    if big.any():
        xb = x[big]
        # I0(x) ~ e^x / sqrt(2 pi x) * sum_k c_k / x^k with
        # c_k = prod_{j<=k} (2j-1)^2 / (8^k k!); truncate at the smallest term
        s = np.ones_like(xb)
        term = np.ones_like(xb)
        for k in range(1, 25):
            term = term * (2 * k - 1) ** 2 / (8.0 * k * xb)
            s += term
            if np.all(term <= 1e-18 * s):
                break
        out[big] = xb - 0.5 * np.log(2.0 * np.pi * xb) + np.log(s)

    return float(out) if scalar else out


def exp_integral_e1(x, scaled=False):
    """Exponential integral E1(x) for x > 0.

    With scaled=True returns e^x E1(x), which stays representable for large x
    where E1 itself underflows. Power series on x <= 1, modified Lentz
    continued fraction above; at least eight significant digits throughout.
    """
    x, scalar = _as_array(x)
    if np.any(x <= 0) or np.any(~np.isfinite(x)):
        raise ValueError("exp_integral_e1 requires finite x > 0")
    out = np.empty_like(x)

    low = x <= 1.0
    if low.any():
        xl = x[low]
        # E1(x) = -gamma - ln x + sum_k (-1)^{k+1} x^k / (k k!)
        term = np.ones_like(xl)
        acc = np.zeros_like(xl)
        for k in range(1, 40):
            term = term * (-xl) / k
            contrib = -term / k
            acc += contrib
            if np.all(np.abs(term) <= 1e-18):
                break
        e1 = -EULER_GAMMA - np.log(xl) + acc
        out[low] = e1 * np.exp(xl) if scaled else e1

    high = ~low
    if high.any():
        xh = x[high]
        # Lentz continued fraction for e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
        tiny = 1e-300
        b = xh + 1.0
        c = np.full_like(xh, 1.0 / tiny)
        d = 1.0 / b
        h = d.copy()
        for i in range(1, 300):
            an = -float(i * i)
            b = b + 2.0
            d = 1.0 / (an * d + b)
            c = b + an / c
            delta = c * d
            h = h * delta
            if np.all(np.abs(delta - 1.0) < 1e-15):
                break
        else:
            raise NumericsError("E1 continued fraction did not converge")
        out[high] = h if scaled else h * np.exp(-xh)

    return float(out) if scalar else out


def marcum_q1(a, b):
    """First-order Marcum Q function Q1(a, b).

    Poisson-mixture form: Q1 = sum_n Pois(n; a^2/2) * P(Pois(b^2/2) <= n),
    summed outward from the Poisson mode with log-domain initialization, so
    a^2/2 in the thousands is fine. Wings truncate when the running term
    drops below 1e-14 of the partial sum; hard cap of 1e5 terms. Absolute
    error is below 1e-10.
    """
    a, a_scalar = _as_array(a)
    b, b_scalar = _as_array(b)
    scalar = a_scalar and b_scalar
    a, b = np.broadcast_arrays(a, b)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("marcum_q1 requires a >= 0 and b >= 0")

    out = np.empty(a.shape, dtype=float)
    zero_b = b == 0.0
    zero_a = (a == 0.0) & ~zero_b
    out[zero_b] = 1.0
    out[zero_a] = np.exp(-0.5 * b[zero_a] ** 2)

    gen = ~zero_b & ~zero_a
    if gen.any():
        out[gen] = _marcum_series(a[gen], b[gen])

    out = np.clip(out, 0.0, 1.0)
    return float(out) if scalar else out


def _marcum_series(a, b):
    shape = a.shape
    u = (0.5 * a * a).ravel()
    v = (0.5 * b * b).ravel()
    n0 = np.floor(u)

    lg = _sp.gammaln(n0 + 1.0)
    pu = np.exp(n0 * np.log(u) - u - lg)   # Pois(u) pmf at the mode
    pv = np.exp(n0 * np.log(v) - v - lg)   # Pois(v) pmf at the same index
    g0 = _sp.gammaincc(n0 + 1.0, v)        # P(Pois(v) <= n0)

    total = pu * g0
    budget = 100_000

    # upward wing; lanes drop out once their term falls below 1e-14 * sum
    pos = np.arange(u.size)
    p, q, g, n = pu.copy(), pv.copy(), g0.copy(), n0.copy()
    uu, vv = u, v
    for _ in range(budget):
        if pos.size == 0:
            break
        n = n + 1.0
        p = p * uu / n
        q = q * vv / n
        g = np.minimum(g + q, 1.0)
        term = p * g
        total[pos] += term
        keep = term > 1e-14 * total[pos]
        pos, p, q, g, n, uu, vv = (x[keep] for x in (pos, p, q, g, n, uu, vv))
    else:
        raise NumericsError("marcum_q1 upward wing exceeded term budget")

    # downward wing from the mode toward n = 0
    keep = n0 > 0
    pos = np.arange(u.size)[keep]
    p, q, g, n = pu[keep], pv[keep], g0[keep], n0[keep]
    uu, vv = u[keep], v[keep]
    for _ in range(budget):
        if pos.size == 0:
            break
        g = np.maximum(g - q, 0.0)   # g at n-1
        p = p * n / uu
        q = q * n / vv
        n = n - 1.0
        term = p * g
        total[pos] += term
        keep = (n > 0) & (term > 1e-14 * total[pos])
        pos, p, q, g, n, uu, vv = (x[keep] for x in (pos, p, q, g, n, uu, vv))
    else:
        raise NumericsError("marcum_q1 downward wing exceeded term budget")

    return total.reshape(shape)
