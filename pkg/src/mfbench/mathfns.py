"""Scalar special functions used by the probabilistic factorization models.

The logistic sigmoid is the squashing function behind the Bernoulli
factorizations; digamma and its inverse drive the variational updates of
the Dirichlet/Beta posteriors.

Accuracy contracts:

- ``digamma``: absolute error <= 1e-10 for x in [1e-6, 1e6].
- ``inverse_digamma``: returns x > 0 with |digamma(x) - y| <= 1e-8.

The ``_*_array`` helpers are internal vectorized twins used by the training
loops; they are not part of the public API.
"""

import math

import numpy as np

EULER_GAMMA = 0.5772156649015329

# Coefficients c_n = B_{2n} / (2n) of the asymptotic expansion
# psi(z) ~ ln z - 1/(2z) - sum_n c_n / z^(2n), valid for large z.
_DIGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
)

# Coefficients of psi'(z) ~ 1/z + 1/(2 z^2) + sum_n B_{2n} / z^(2n+1).
_TRIGAMMA_COEFFS = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
)

# Arguments at or above this value are handled by the asymptotic series
# directly; smaller arguments are shifted up by the recurrence first.
_ASYMPTOTIC_CUTOFF = 6.0


def sigmoid(x: float) -> float:
    """Numerically stable logistic function 1 / (1 + exp(-x)).

    Saturates smoothly at extreme inputs instead of overflowing.
    """
    if x >= 0.0:
        ez = math.exp(-x)
        return 1.0 / (1.0 + ez)
    ez = math.exp(x)
    return ez / (1.0 + ez)


def _digamma_asymptotic(z: float) -> float:
    # Horner evaluation in w = 1/z^2; requires z >= _ASYMPTOTIC_CUTOFF.
    w = 1.0 / (z * z)
    tail = 0.0
    for c in reversed(_DIGAMMA_COEFFS):
        tail = (tail + c) * w
    return math.log(z) - 0.5 / z - tail


def _corrected_reciprocal(d: float):
    """1/d as a (head, tail) pair via a Veltkamp-split product residual.

    Near the domain edge the 1/x term reaches ~1e6, where one rounding
    of the division alone costs ~6e-11 absolutely; the tail term keeps
    the total inside the 1e-10 contract.
    """
    hi = 1.0 / d
    split = 134217729.0 * hi  # 2**27 + 1
    a_hi = split - (split - hi)
    a_lo = hi - a_hi
    split = 134217729.0 * d
    b_hi = split - (split - d)
    b_lo = d - b_hi
    prod = hi * d
    prod_err = ((a_hi * b_hi - prod) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    residual = (prod - 1.0) + prod_err  # hi*d - 1, exactly
    return hi, -residual / d


def digamma(x: float) -> float:
    """Digamma function, the logarithmic derivative of the gamma function.

    Uses the upward recurrence psi(x) = psi(x + 1) - 1/x to shift the
    argument to >= 6, then an asymptotic series with Bernoulli-number
    coefficients. Raises ``ValueError`` for x <= 0.
    """
    if not (x > 0.0) or math.isinf(x):
        if x == math.inf:
            return math.inf
        raise ValueError(f"digamma requires x > 0, got {x}")
    if x >= _ASYMPTOTIC_CUTOFF:
        return _digamma_asymptotic(x)
    shift = int(math.ceil(_ASYMPTOTIC_CUTOFF - x))
    # One exactly-rounded summation over the shift terms (with division
    # residuals) and the series value; separately rounded partial sums
    # would eat the absolute-error budget at tiny x.
    terms = [_digamma_asymptotic(x + shift)]
    for j in range(shift):
        head, tail = _corrected_reciprocal(x + j)
        terms.append(-head)
        terms.append(-tail)
    return math.fsum(terms)


def trigamma(x: float) -> float:
    """First derivative of digamma; positive and decreasing on (0, inf)."""
    if not (x > 0.0):
        raise ValueError(f"trigamma requires x > 0, got {x}")
    acc = 0.0
    while x < _ASYMPTOTIC_CUTOFF:
        acc += 1.0 / (x * x)
        x += 1.0
    w = 1.0 / (x * x)
    tail = 0.0
    for c in reversed(_TRIGAMMA_COEFFS):
        tail = (tail + c) * w
    return acc + 1.0 / x + 0.5 * w + tail / x


def inverse_digamma(y: float) -> float:
    """Inverse of digamma on (0, inf): returns x > 0 with digamma(x) = y.

    The inverse exists and is unique because digamma is strictly
    increasing on (0, inf). Uses the standard initialization
    x0 = exp(y) + 1/2 for y >= -2.22 and x0 = -1 / (y + EULER_GAMMA)
    otherwise, refined by Newton steps until |digamma(x) - y| <= 1e-12
    (well inside the 1e-8 contract).
    """
    if not math.isfinite(y):
        raise ValueError(f"inverse_digamma requires finite y, got {y}")
    if y >= -2.22:
        # exp can overflow for y beyond ~709; clamp to a huge finite seed.
        x = math.exp(y) + 0.5 if y < 700.0 else 1e300
    else:
        x = -1.0 / (y + EULER_GAMMA)
    for iteration in range(100):
        f = digamma(x) - y
        if abs(f) <= 1e-12 and iteration >= 5:
            break
        step = f / trigamma(x)
        nxt = x - step
        while nxt <= 0.0:
            step *= 0.5
            nxt = x - step
        x = nxt
    return x


def _sigmoid_array(x: np.ndarray) -> np.ndarray:
    """Elementwise stable sigmoid for float64 arrays."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _digamma_array(x: np.ndarray) -> np.ndarray:
    """Elementwise digamma for float64 arrays of positive values.

    Same recurrence-plus-series scheme as the scalar version, with plain
    (non-fsum) accumulation of the shift terms; training loops never need
    the last decimal at extreme arguments.
    """
    z = np.asarray(x, dtype=np.float64).copy()
    if z.size and not np.all(z > 0.0):
        raise ValueError("digamma requires positive arguments")
    acc = np.zeros_like(z)
    below = z < _ASYMPTOTIC_CUTOFF
    while np.any(below):
        acc[below] += 1.0 / z[below]
        z[below] += 1.0
        below = z < _ASYMPTOTIC_CUTOFF
    w = 1.0 / (z * z)
    tail = np.zeros_like(z)
    for c in reversed(_DIGAMMA_COEFFS):
        tail += c
        tail *= w
    return np.log(z) - 0.5 / z - tail - acc
