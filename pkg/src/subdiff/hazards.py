"""Escape-rate laws for trapped particles.

A hazard model supplies the instantaneous escape rate ``d(a)`` of a particle
that has been trapped for duration ``a``, the cumulative hazard
``D(a) = int_0^a d``, the survival probability ``exp(-D(a))`` and closed-form
inverse-CDF sampling of waiting times.  Two laws are supported: the power law
``d(a) = alpha / (1 + a)`` whose survival ``(1 + a)**-alpha`` has a heavy
tail, and a constant rate (exponential waiting times).

All operations are pure functions of their arguments; random sampling takes
the uniform variate as input, so the module owns no RNG state and is safe to
call concurrently.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


def _as_age(a):
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("age must be nonnegative")
    return a


def _as_uniform(u):
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u > 1)):
        raise ValueError("uniform variate must lie in (0, 1]")
    return u


class HazardModel(ABC):
    """Common interface of the escape-rate laws."""

    @abstractmethod
    def hazard(self, a):
        """Escape rate d(a) at age ``a >= 0``."""

    @abstractmethod
    def cumulative_hazard(self, a):
        """D(a) = int_0^a d(a') da', closed form."""

    @abstractmethod
    def sample_waiting_time(self, u, age=0.0):
        """Waiting time until the next renewal, by inverse-CDF sampling.

        Parameters
        ----------
        u : float or ndarray
            Uniform variate(s) in (0, 1].
        age : float or ndarray
            Current trap age.  The wait ``w`` solves
            ``survival(age + w) / survival(age) = u``; with ``age=0`` this is
            the fresh waiting time, i.e. ``survival(w) = u``.
        """

    def survival(self, a):
        """Probability exp(-D(a)) of remaining trapped past age ``a``."""
        return np.exp(-self.cumulative_hazard(a))

    def survival_ratio(self, a_from, a_to):
        """survival(a_to) / survival(a_from) for a_to >= a_from, computed
        through the cumulative-hazard difference so deep tails do not
        underflow to 0/0."""
        return np.exp(self.cumulative_hazard(a_from) - self.cumulative_hazard(a_to))


@dataclass(frozen=True)
class PowerLawHazard(HazardModel):
    """d(a) = alpha / (1 + a); survival (1 + a)**-alpha.

    For ``alpha`` in (0, 1) the survival tail is so heavy that the waiting
    time has infinite mean, the regime that produces sub-diffusion.
    """

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def hazard(self, a):
        return self.alpha / (1.0 + _as_age(a))

    def cumulative_hazard(self, a):
        return self.alpha * np.log1p(_as_age(a))

    def survival(self, a):
        # closed form, not quadrature
        return (1.0 + _as_age(a)) ** (-self.alpha)

    def sample_waiting_time(self, u, age=0.0):
        u = _as_uniform(u)
        age = _as_age(age)
        return (1.0 + age) * (u ** (-1.0 / self.alpha) - 1.0)


@dataclass(frozen=True)
class ConstantHazard(HazardModel):
    """Constant escape rate d0; exponential (memoryless) waiting times."""

    d0: float

    def __post_init__(self):
        if not self.d0 > 0:
            raise ValueError("d0 must be positive")

    def hazard(self, a):
        return self.d0 * np.ones_like(_as_age(a))

    def cumulative_hazard(self, a):
        return self.d0 * _as_age(a)

    def sample_waiting_time(self, u, age=0.0):
        u = _as_uniform(u)
        _as_age(age)
        w = -np.log(u) / self.d0
        return w * np.ones_like(np.asarray(age, dtype=float)) if np.ndim(age) else w
