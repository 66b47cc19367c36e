"""Model parameters and the overflow-safe scalar helpers built on them.

The interaction weight between spins 0 and 2 is ``theta ** (2 ** p)``.
For ``p = 10`` the exponent is 1024, so the weight leaves the double
range for any ``theta`` outside roughly ``(0.5, 2)``.  Everything here
keeps the *logarithm* of that weight exact and derives the float value
(which may flush to ``0.0`` or ``inf``) from it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

from psos_gibbs.errors import DomainError

RESIDUAL_TOL = 1e-10
AMBIGUITY_BAND = 1e-12

_LOG_MAX = math.log(1.7976931348623157e308)


def residual_tol() -> float:
    """Residual tolerance, overridable through the ``PSOS_TOL`` variable."""
    raw = os.environ.get("PSOS_TOL")
    if not raw:
        return RESIDUAL_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise DomainError(f"PSOS_TOL={raw!r} is not a number") from exc
    if not tol > 0:
        raise DomainError(f"PSOS_TOL must be positive, got {raw!r}")
    return tol


def safe_exp(v: float) -> float:
    """``exp`` that saturates to ``inf`` instead of raising OverflowError."""
    if v > _LOG_MAX:
        return math.inf
    return math.exp(v)


def power(theta: float, exponent: float) -> float:
    """``theta ** exponent`` evaluated as ``exp(exponent * ln theta)``."""
    if theta <= 0:
        raise DomainError(f"theta must be positive, got {theta}")
    return safe_exp(exponent * math.log(theta))


def logsumexp(values) -> float:
    """Log of a sum of exponentials; ``-inf`` entries are allowed."""
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def log1pexp(v: float) -> float:
    """``ln(1 + e**v)`` without overflow."""
    if v > 35.0:
        return v + math.exp(-v)
    return math.log1p(math.exp(v))


@dataclass(frozen=True)
class ModelParams:
    """Parameters ``(theta, p)`` of the p-SOS model on a Cayley tree.

    ``theta = exp(J)``; states are ``{0, ..., m}`` and every vertex has
    ``k`` successors.  The closed-form machinery needs ``k = m = 2``.
    """

    theta: float
    p: float
    k: int = 2
    m: int = 2

    def __post_init__(self):
        theta = float(self.theta)
        p = float(self.p)
        if not (math.isfinite(theta) and theta > 0):
            raise DomainError(f"theta must be positive and finite, got {self.theta}")
        if not (math.isfinite(p) and p > 0):
            raise DomainError(f"p must be positive and finite, got {self.p}")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be an integer >= 1, got {self.k}")
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"m must be an integer >= 1, got {self.m}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "m", int(self.m))

    @property
    def log_theta(self) -> float:
        return math.log(self.theta)

    @property
    def log_theta_pow(self) -> float:
        """``2**p * ln(theta)``, the exact log of the 0-2 coupling weight."""
        return (2.0 ** self.p) * math.log(self.theta)

    @property
    def theta_pow(self) -> float:
        """``theta ** (2 ** p)``; underflows to 0.0 / overflows to inf."""
        return safe_exp(self.log_theta_pow)

    @property
    def theta_pow_inv(self) -> float:
        return safe_exp(-self.log_theta_pow)

    def require_binary(self):
        if self.k != 2 or self.m != 2:
            raise DomainError(
                f"closed-form analysis needs k = m = 2, got k={self.k}, m={self.m}"
            )
