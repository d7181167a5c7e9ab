"""q-scale functions as finite exponential sums.

For the mixed-exponential family, 1 / (psi(lam) - q) has simple poles at the
real roots theta_i of psi(lam) = q, so

    W^(q)(x) = sum_i exp(theta_i x) / psi'(theta_i),   x >= 0,

and every derivative, antiderivative or convolution of a scale function is
again available termwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateRootsError
from .levy_model import (
    LevyModel,
    exponent_derivative,
    laplace_exponent,
    mean_per_unit_time,
    right_inverse_phi,
)

CONDITIONING_WARN = 1e-8
_RTOL = 4 * np.finfo(float).eps


class ConditioningWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class RootSet:
    q: float
    roots: tuple[float, ...]  # decreasing
    weights: tuple[float, ...]  # 1 / psi'(root)

    def __len__(self):
        return len(self.roots)


def expm1_ratio(d, length):
    """(exp(d * length) - 1) / d with the d -> 0 limit ``length``."""
    d = np.asarray(d, dtype=float)
    length = np.asarray(length, dtype=float)
    small = np.abs(d * length) < 1e-12
    safe_d = np.where(small, 1.0, d)
    return np.where(small, length * (1 + 0.5 * d * length), np.expm1(d * length) / safe_d)


@dataclass(frozen=True)
class ExponentialSum:
    """sum_i coef_i exp(exponent_i x) + constant, for x >= 0.

    ``below`` is the value taken for x < 0 (0 for W-type, 1 for Z-type
    functions); the sum itself is never evaluated on negatives.
    """

    coefs: tuple[float, ...]
    exponents: tuple[float, ...]
    constant: float = 0.0
    below: float = 0.0

    def _c(self):
        return np.asarray(self.coefs), np.asarray(self.exponents)

    def __call__(self, x):
        c, e = self._c()
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        val = np.sum(c * np.exp(np.multiply.outer(xp, e)), axis=-1) + self.constant
        out = np.where(x < 0, self.below, val)
        return float(out) if out.ndim == 0 else out

    def derivative(self) -> ExponentialSum:
        c, e = self._c()
        return ExponentialSum(tuple(c * e), self.exponents, 0.0, 0.0)

    def integral(self, x):
        """int_0^x of the sum (0 for x <= 0)."""
        c, e = self._c()
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        val = np.sum(c * expm1_ratio(e, xp[..., None]), axis=-1) + self.constant * xp
        out = np.where(x <= 0, 0.0, val)
        return float(out) if out.ndim == 0 else out

    def terms(self):
        return list(zip(self.coefs, self.exponents))


def _bisect(f, lo, hi):
    return brentq(f, lo, hi, xtol=1e-300, rtol=_RTOL, maxiter=500)


def _push_off_pole(f, pole, direction, sign_wanted):
    """Point just beside ``pole`` (on ``direction`` side) where f has sign ``sign_wanted``."""
    step = 1e-7 * max(1.0, abs(pole))
    for _ in range(6):
        pt = pole + direction * step
        if np.sign(f(pt)) == sign_wanted:
            return pt
        step *= 0.5
    raise RuntimeError(f"could not bracket root next to pole {pole}")


def _expand(f, start, direction, sign_wanted):
    step = 1.0
    pt = start + direction * step
    while np.sign(f(pt)) != sign_wanted:
        step *= 2
        pt = start + direction * step
        if step > 1e300:
            raise RuntimeError("failed to bracket root")
    return pt


def _compute_roots(m: LevyModel, q: float) -> list[float]:
    """All real roots of psi(lam) = q, largest first."""
    psi = lambda lam: laplace_exponent(m, lam) - q  # noqa: E731
    rates = list(m.jumps.rates)
    roots: list[float] = []

    if not rates:
        if m.sigma == 0:
            return [q / m.c]
        s2 = m.sigma**2
        # c lam + s2/2 lam^2 - q = 0 with stable quadratic formula
        disc = math.sqrt(m.c**2 + 2 * s2 * q)
        big = -(m.c + math.copysign(disc, m.c)) / s2 if m.c != 0 else disc / s2
        if big == 0:
            # c > 0 and q = 0 gives big = -2c/s2; c = 0 and q = 0 is degenerate
            raise DegenerateRootsError("double root at 0")
        other = -2 * q / (s2 * big) if q != 0 else 0.0
        if m.c == 0:
            other = -big
        return sorted([big, other], reverse=True)

    # (-alpha_1, inf): psi is convex with psi -> +inf at both ends
    d = lambda lam: exponent_derivative(m, lam)  # noqa: E731
    lo = _push_off_pole(d, -rates[0], +1, -1)
    hi = _expand(d, max(0.0, lo), +1, +1)
    lam_star = _bisect(d, lo, hi)
    fmin = psi(lam_star)
    if fmin >= 0:
        raise DegenerateRootsError(
            "psi(lambda) - q has a double root; q = 0 with zero mean is excluded"
        )
    left = _push_off_pole(psi, -rates[0], +1, +1)
    if q == 0 and mean_per_unit_time(m) < 0:
        # the origin is the smaller root
        theta1, theta2 = right_inverse_phi(m, q), 0.0
    else:
        theta1 = right_inverse_phi(m, q)
        theta2 = _bisect(psi, left, lam_star)
    roots.extend([theta1, theta2])

    # one root between consecutive poles
    for k in range(len(rates) - 1):
        lo = _push_off_pole(psi, -rates[k + 1], +1, +1)
        hi = _push_off_pole(psi, -rates[k], -1, -1)
        roots.append(_bisect(psi, lo, hi))

    if m.sigma > 0:
        hi = _push_off_pole(psi, -rates[-1], -1, -1)
        lo = _expand(psi, hi, -1, +1)
        roots.append(_bisect(psi, lo, hi))
    return roots


@lru_cache(maxsize=4096)
def scale_roots(m: LevyModel, q: float) -> RootSet:
    """Roots of psi(lam) = q and the partial-fraction weights 1/psi'(theta)."""
    q = float(q)
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    if q == 0 and mean_per_unit_time(m) == 0:
        raise DegenerateRootsError("q = 0 requires psi'(0+) != 0")
    roots = sorted(_compute_roots(m, q), reverse=True)
    derivs = [exponent_derivative(m, r) for r in roots]
    for r, dv in zip(roots, derivs):
        if abs(dv) < CONDITIONING_WARN:
            warnings.warn(
                f"near-multiple root {r} (psi'={dv:.3e}); scale function poorly conditioned",
                ConditioningWarning,
                stacklevel=2,
            )
    return RootSet(q=q, roots=tuple(roots), weights=tuple(1.0 / dv for dv in derivs))


def scale_function(m: LevyModel, q: float) -> ExponentialSum:
    rs = scale_roots(m, q)
    return ExponentialSum(rs.weights, rs.roots)


def W(m: LevyModel, q: float, x):
    return scale_function(m, q)(x)


def W_prime(m: LevyModel, q: float, x):
    """Termwise derivative; right derivative at 0, zero on negatives."""
    return scale_function(m, q).derivative()(x)


def W_antiderivative(m: LevyModel, q: float, x):
    return scale_function(m, q).integral(x)


def Z(m: LevyModel, q: float, x):
    """Z^(q)(x) = 1 + q int_0^x W^(q)."""
    if q == 0:
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        return float(out) if out.ndim == 0 else out
    return 1.0 + q * W_antiderivative(m, q, x)


def Z_sum(m: LevyModel, q: float) -> ExponentialSum:
    """Z^(q) as q sum_i exp(theta_i x) / (psi'(theta_i) theta_i), valid for q > 0."""
    rs = scale_roots(m, q)
    coefs = tuple(q * w / t for w, t in zip(rs.weights, rs.roots))
    return ExponentialSum(coefs, rs.roots, 0.0, 1.0)


def W_at_infinity(m: LevyModel) -> float:
    """lim_{x->inf} W(x) = 1 / psi'(0+)."""
    mean = mean_per_unit_time(m)
    if mean <= 0:
        raise ValueError(f"W(0, x) diverges unless psi'(0+) > 0 (got {mean})")
    return 1.0 / mean
