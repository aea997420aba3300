"""Closed-form spectral constants for the fractional Hardy operator.

Everything here is exact special-function arithmetic, no grids involved:

    form_constant(d, a)       A(d,a) = a * G((d+a)/2) / (2^(1-a) * pi^(d/2) * G(1-a/2)),
                              the jump-kernel normalization of (-Delta)^(a/2).
    riesz_constant_std(d, a)  G((d-a)/2) / (2^a * pi^(d/2) * G(a/2)), the constant
                              for which  const * int |x-y|^(a-d) f(y) dy  inverts
                              the fractional Laplacian (standard normalization).
    coupling_F(d, a, b)       F(b) = 2^a G((a+b)/2) G((d-b)/2) / (G(b/2) G((d-a-b)/2)),
                              the coupling for which |x|^(-b) is harmonic for
                              (-Delta)^(a/2) - F(b)|x|^(-a).  F(0)=F(d-a)=0 by
                              convention, F is symmetric about beta_c=(d-a)/2 and
                              increases on [0, beta_c].
    hardy_best_constant(d, a) c* = 2^a G((d+a)/4)^2 / G((d-a)/4)^2 = F(beta_c), the
                              sharp constant in the fractional Hardy inequality.
    beta_of_c(d, a, c)        the unique b in (0, beta_c] with F(b)=c (bisection).

Gamma is a Lanczos approximation (g=607/128, 15 terms) and digamma is the usual
recurrence-plus-asymptotic-series evaluation, so the module has no dependency
beyond ``math``.  All functions are pure and re-entrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainValidationError, FracHardyError

__all__ = [
    "ModelParams",
    "SpectralConstants",
    "gamma_fn",
    "digamma_fn",
    "form_constant",
    "riesz_constant_std",
    "coupling_F",
    "hardy_best_constant",
    "hardy_best_constant_naive",
    "beta_of_c",
    "critical_point_check",
]

# Lanczos coefficients, g = 607/128, accurate to ~1e-15 relative for Re z > 0.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEF = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)


def _validate_positive(x: float, what: str) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainValidationError(f"{what} must be a finite positive real, got {x!r}")
    return x


def gamma_fn(x: float) -> float:
    """Gamma function for x > 0 via the Lanczos sum (reflection below 1/2)."""
    x = _validate_positive(x, "gamma argument")
    if x < 0.5:
        # reflection keeps relative accuracy near the pole at 0
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


# Bernoulli quotients B_{2k}/(2k) for the digamma asymptotic series.
_DIGAMMA_TAIL = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma_fn(x: float) -> float:
    """Digamma Phi(x) = Gamma'(x)/Gamma(x) for x > 0."""
    x = _validate_positive(x, "digamma argument")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = 0.0
    p = inv2
    for coef in _DIGAMMA_TAIL:
        tail += coef * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - tail


def _validate_dims(d: int, alpha: float) -> tuple[int, float]:
    if int(d) != d or not 1 <= int(d) <= 3:
        raise DomainValidationError(f"dimension d must be an integer in 1..3, got {d!r}")
    alpha = float(alpha)
    if not (0.0 < alpha < 2.0 and alpha < d):
        raise DomainValidationError(
            f"order alpha must satisfy 0 < alpha < min(2, d); got alpha={alpha}, d={d}"
        )
    return int(d), alpha


def form_constant(d: int, alpha: float) -> float:
    """Jump-kernel normalization A(d, alpha) of the fractional Laplacian."""
    d, alpha = _validate_dims(d, alpha)
    return (
        alpha
        * gamma_fn((d + alpha) / 2.0)
        / (2.0 ** (1.0 - alpha) * math.pi ** (d / 2.0) * gamma_fn(1.0 - alpha / 2.0))
    )


def riesz_constant_std(d: int, alpha: float) -> float:
    """Standard Riesz-kernel normalization inverting (-Delta)^(alpha/2)."""
    d, alpha = _validate_dims(d, alpha)
    return gamma_fn((d - alpha) / 2.0) / (
        2.0**alpha * math.pi ** (d / 2.0) * gamma_fn(alpha / 2.0)
    )


def coupling_F(d: int, alpha: float, beta: float) -> float:
    """Coupling F(beta) making |x|^(-beta) harmonic; 0 at both endpoints."""
    d, alpha = _validate_dims(d, alpha)
    beta = float(beta)
    if beta < 0.0 or beta > d - alpha:
        raise DomainValidationError(
            f"beta must lie in [0, d-alpha] = [0, {d - alpha}], got {beta}"
        )
    if beta == 0.0 or beta == d - alpha:
        return 0.0
    return (
        2.0**alpha
        * gamma_fn((alpha + beta) / 2.0)
        * gamma_fn((d - beta) / 2.0)
        / (gamma_fn(beta / 2.0) * gamma_fn((d - (alpha + beta)) / 2.0))
    )


def hardy_best_constant(d: int, alpha: float) -> float:
    """Sharp Hardy constant c* = 2^alpha * G((d+alpha)/4)^2 / G((d-alpha)/4)^2."""
    d, alpha = _validate_dims(d, alpha)
    return 2.0**alpha * (gamma_fn((d + alpha) / 4.0) / gamma_fn((d - alpha) / 4.0)) ** 2


def hardy_best_constant_naive(d: int, alpha: float) -> float:
    """The ((d-alpha)/2)^2 stand-in for c*.

    Correct only in the limit alpha -> 2; kept solely for the audit line that
    quantifies how far it is from the Gamma-formula constant.
    """
    d, alpha = _validate_dims(d, alpha)
    return ((d - alpha) / 2.0) ** 2


def beta_of_c(d: int, alpha: float, c: float) -> float:
    """Invert F on (0, beta_c] by bisection, to absolute tolerance 1e-12.

    Bisection rather than Newton: monotonicity on [0, beta_c] is guaranteed,
    and F is flat near its maximum at beta_c where Newton would struggle.
    """
    d, alpha = _validate_dims(d, alpha)
    c = float(c)
    c_star = hardy_best_constant(d, alpha)
    if c <= 0.0 or c > c_star * (1.0 + 1e-12):
        raise DomainValidationError(f"coupling c must lie in (0, c*] = (0, {c_star}], got {c}")
    if c >= c_star:
        return (d - alpha) / 2.0
    lo, hi = 0.0, (d - alpha) / 2.0
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if coupling_F(d, alpha, mid) < c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_point_check(d: int, alpha: float) -> float:
    """Locate the unique root of F' on (0, d-alpha) numerically.

    Scans a central finite difference of F for sign changes and contracts the
    single bracket by bisection to |root - beta_c| <= 1e-8.  More than one
    sign change means the monotone-increase/decrease structure of F failed at
    working precision, which is reported as an error rather than a root.
    """
    d, alpha = _validate_dims(d, alpha)
    width = d - alpha
    eps = 1e-7 * width

    def dF(b: float) -> float:
        return coupling_F(d, alpha, b + eps) - coupling_F(d, alpha, b - eps)

    n_scan = 2001
    xs = [width * (i + 0.5) / n_scan for i in range(n_scan)]
    vals = [dF(b) for b in xs]
    brackets = [
        (xs[i], xs[i + 1]) for i in range(n_scan - 1) if vals[i] > 0.0 >= vals[i + 1]
    ]
    if len(brackets) != 1:
        raise FracHardyError(
            f"expected exactly one sign change of F', found {len(brackets)} "
            f"(would falsify the single-maximum structure at working precision)"
        )
    lo, hi = brackets[0]
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if dF(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ModelParams:
    """Dimension d, order alpha (0 < alpha < min(2, d)) and coupling c in [0, c*]."""

    d: int
    alpha: float
    c: float = 0.0

    def __post_init__(self):
        d, alpha = _validate_dims(self.d, self.alpha)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "alpha", alpha)
        c = float(self.c)
        c_star = hardy_best_constant(d, alpha)
        if not (0.0 <= c <= c_star * (1.0 + 1e-12)):
            raise DomainValidationError(f"coupling c={c} outside [0, c*] = [0, {c_star}]")
        object.__setattr__(self, "c", c)

    @property
    def c_star(self) -> float:
        return hardy_best_constant(self.d, self.alpha)

    @property
    def beta_c(self) -> float:
        return (self.d - self.alpha) / 2.0

    @property
    def beta(self) -> float:
        """Singularity exponent beta(c); 0 for the free operator."""
        if self.c == 0.0:
            return 0.0
        return beta_of_c(self.d, self.alpha, min(self.c, self.c_star))

    @property
    def is_critical(self) -> bool:
        return self.c >= (1.0 - 1e-9) * self.c_star


@dataclass(frozen=True)
class SpectralConstants:
    """The closed-form constants attached to a (d, alpha) pair."""

    d: int
    alpha: float
    form_const: float = field(init=False)
    riesz_const_std: float = field(init=False)
    c_star: float = field(init=False)
    beta_c: float = field(init=False)

    def __post_init__(self):
        d, alpha = _validate_dims(self.d, self.alpha)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "form_const", form_constant(d, alpha))
        object.__setattr__(self, "riesz_const_std", riesz_constant_std(d, alpha))
        object.__setattr__(self, "c_star", hardy_best_constant(d, alpha))
        object.__setattr__(self, "beta_c", (d - alpha) / 2.0)
