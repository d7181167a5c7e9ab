"""Spectrally negative Levy processes with mixed-exponential jumps.

The family covered here is

    X_t = c t + sigma B_t - sum_{k <= N_t} xi_k,

with N a Poisson process of rate ``eta`` and xi_k drawn from a mixture of
exponential laws with weights a_i and rates alpha_i.  Its Laplace exponent

    psi(lam) = c lam + sigma^2 lam^2 / 2 + eta (sum_i a_i alpha_i / (lam + alpha_i) - 1)

is a rational function, which is what makes every scale function downstream
a finite exponential sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .errors import ModelError, PoleError, RefractionTooLargeError

POLE_EPS = 1e-9


@dataclass(frozen=True)
class JumpSpec:
    """Compound Poisson claims with hyperexponential sizes.

    ``terms`` holds ``(weight, rate)`` pairs sorted by strictly increasing rate.
    """

    eta: float = 0.0
    terms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        terms = tuple((float(w), float(r)) for w, r in self.terms)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "eta", float(self.eta))
        if not math.isfinite(self.eta) or self.eta < 0:
            raise ModelError(f"jump rate must be finite and >= 0, got {self.eta}", "process.jump_rate")
        if (self.eta > 0) != bool(terms):
            raise ModelError(
                "jump mixture terms must be given exactly when the jump rate is positive",
                "process.jumps",
            )
        if not terms:
            return
        weights = [w for w, _ in terms]
        rates = [r for _, r in terms]
        if any(not (w > 0) for w in weights):
            raise ModelError("mixture weights must be > 0", "process.jumps")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ModelError(f"mixture weights must sum to 1, got {sum(weights)!r}", "process.jumps")
        if rates[0] <= 0 or any(r2 <= r1 for r1, r2 in zip(rates, rates[1:])):
            raise ModelError("jump rates must satisfy 0 < alpha_1 < ... < alpha_n", "process.jumps")

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for _, r in self.terms])

    @property
    def mean_size(self) -> float:
        return sum(w / r for w, r in self.terms)


@dataclass(frozen=True)
class LevyModel:
    """Drift ``c``, Gaussian coefficient ``sigma`` and jump specification.

    For ``sigma == 0`` the process has bounded variation and ``c`` is its
    drift (premium rate); for ``sigma > 0`` it is the linear coefficient of psi.
    """

    c: float
    sigma: float = 0.0
    jumps: JumpSpec = field(default_factory=JumpSpec)

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "sigma", float(self.sigma))
        if not math.isfinite(self.c):
            raise ModelError("drift must be finite", "process.drift")
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise ModelError(f"sigma must be finite and >= 0, got {self.sigma}", "process.sigma")
        if self.sigma == 0 and self.c <= 0:
            raise ModelError(
                "a model with sigma = 0 needs a positive drift, otherwise its paths are decreasing",
                "process.drift",
            )

    @property
    def bounded_variation(self) -> bool:
        return self.sigma == 0.0

    @property
    def n_terms(self) -> int:
        return len(self.jumps.terms)


@dataclass(frozen=True)
class RefractedModel:
    """Process U solving dU = dX - alpha 1{U > b} dt.

    ``alpha = 0`` is accepted and gives U = X; it is the degenerate case used
    to check reductions to the unrefracted identities.
    """

    x_model: LevyModel
    alpha: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "b", float(self.b))
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ModelError(f"alpha must be finite and >= 0, got {self.alpha}", "refraction.alpha")
        if not math.isfinite(self.b) or self.b <= 0:
            raise ModelError(f"threshold b must be > 0, got {self.b}", "refraction.b")
        if self.x_model.bounded_variation and self.alpha >= self.x_model.c:
            raise RefractionTooLargeError(
                "for a bounded-variation model the refraction rate must satisfy "
                f"0 < alpha < c (got alpha={self.alpha}, c={self.x_model.c}); "
                "refracting would remove the whole drift",
                "refraction.alpha",
            )

    @property
    def y_model(self) -> LevyModel:
        return refract(self)

    @property
    def net_drift(self) -> float:
        """E[X_1] - alpha."""
        return mean_per_unit_time(self.x_model) - self.alpha

    def unrefracted(self) -> RefractedModel:
        return replace(self, alpha=0.0)

    def with_threshold(self, b: float) -> RefractedModel:
        return replace(self, b=b)


def _check_poles(m: LevyModel, lam) -> None:
    if m.n_terms == 0:
        return
    lam = np.asarray(lam, dtype=float)
    dist = np.abs(lam[..., None] + m.jumps.rates)
    if np.any(dist < POLE_EPS):
        raise PoleError(f"lambda={lam} lies within {POLE_EPS} of a pole -alpha_i")


def laplace_exponent(m: LevyModel, lam):
    """psi(lam), the log of E[exp(lam X_1)].

    Beyond the Levy domain lam > -alpha_1 the rational extension is returned;
    root finding for the scale functions needs it there.
    """
    _check_poles(m, lam)
    lam_arr = np.asarray(lam, dtype=float)
    out = m.c * lam_arr + 0.5 * m.sigma**2 * lam_arr**2
    if m.n_terms:
        a, r = m.jumps.weights, m.jumps.rates
        # eta * (sum a r/(lam+r) - 1) = -eta * sum a lam/(lam+r); exact zero at lam = 0
        out = out - m.jumps.eta * np.sum(a * lam_arr[..., None] / (lam_arr[..., None] + r), axis=-1)
    return float(out) if out.ndim == 0 else out


def exponent_derivative(m: LevyModel, lam):
    """psi'(lam), analytically."""
    _check_poles(m, lam)
    lam_arr = np.asarray(lam, dtype=float)
    out = m.c + m.sigma**2 * lam_arr
    if m.n_terms:
        a, r = m.jumps.weights, m.jumps.rates
        out = out - m.jumps.eta * np.sum(a * r / (lam_arr[..., None] + r) ** 2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def exponent_second_derivative(m: LevyModel, lam):
    _check_poles(m, lam)
    lam_arr = np.asarray(lam, dtype=float)
    out = m.sigma**2 + 0.0 * lam_arr
    if m.n_terms:
        a, r = m.jumps.weights, m.jumps.rates
        out = out + 2 * m.jumps.eta * np.sum(a * r / (lam_arr[..., None] + r) ** 3, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def mean_per_unit_time(m: LevyModel) -> float:
    """E[X_1] = psi'(0+) = c - eta * sum a_i / alpha_i."""
    return m.c - m.jumps.eta * m.jumps.mean_size


def _grow_bracket(f, lo: float, step: float = 1.0) -> float:
    hi = lo + step
    while f(hi) <= 0:
        step *= 2.0
        hi = lo + step
        if step > 1e300:
            raise RuntimeError("failed to bracket root")
    return hi


def right_inverse_phi(m: LevyModel, q: float) -> float:
    """Largest root Phi(q) of psi(lam) = q on [0, inf)."""
    q = float(q)
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    mean = mean_per_unit_time(m)
    if q == 0 and mean >= 0:
        return 0.0

    def f(lam):
        return laplace_exponent(m, lam) - q

    lo = 0.0
    if q == 0:
        # negative mean: psi dips below 0 right of the origin; start past the minimum
        lo = _argmin_right(m)
    hi = _grow_bracket(f, lo, step=max(1.0, 2 * q / max(abs(m.c), 1.0)))
    root = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _newton_polish(m, root, q)


def _argmin_right(m: LevyModel) -> float:
    """Minimiser of psi on (-alpha_1, inf); requires psi'(0) < 0 so it is > 0."""
    d = lambda lam: exponent_derivative(m, lam)  # noqa: E731
    hi = _grow_bracket(d, 0.0)
    return brentq(d, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)


def _newton_polish(m: LevyModel, root: float, q: float) -> float:
    d = exponent_derivative(m, root)
    if d != 0:
        cand = root - (laplace_exponent(m, root) - q) / d
        if abs(laplace_exponent(m, cand) - q) < abs(laplace_exponent(m, root) - q):
            return cand
    return root


def refract(rm: RefractedModel) -> LevyModel:
    """Y_t = X_t - alpha t: same sigma and jumps, drift lowered by alpha."""
    x = rm.x_model
    if x.bounded_variation and rm.alpha >= x.c:
        raise RefractionTooLargeError(
            f"alpha={rm.alpha} must be below the drift c={x.c}", "refraction.alpha"
        )
    return LevyModel(c=x.c - rm.alpha, sigma=x.sigma, jumps=x.jumps)
