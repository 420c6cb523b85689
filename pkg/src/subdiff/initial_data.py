"""Initial data in product form u0(a, x) = rho0(x) * g(a).

Age profiles are probability densities in trap age; spatial profiles carry
the mass.  The defaults are the exponential age profile g(a) = r e^{-r a}
(integrable against (1 + a)^alpha for every alpha, as the sub-diffusive
scaling requires) and, in space, either the periodic cosine bump
1 + cos(x) on [0, 2*pi) or a whole-line Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, optimize

from subdiff.hazards import ConstantHazard, HazardModel, PowerLawHazard

DOMAIN_LENGTH = 2.0 * np.pi


@dataclass(frozen=True)
class ExponentialAgeProfile:
    """g(a) = rate * exp(-rate * a) on a >= 0."""

    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def pdf(self, a):
        a = np.asarray(a, dtype=float)
        return self.rate * np.exp(-self.rate * a)

    def cdf(self, a):
        return -np.expm1(-self.rate * np.asarray(a, dtype=float))

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size=size)

    def cell_masses(self, edges):
        """Exact integrals of the pdf over cells bounded by ``edges``."""
        return -np.diff(np.exp(-self.rate * np.asarray(edges, dtype=float)))

    def tail_mass(self, a):
        return np.exp(-self.rate * a)

    def weighted_tail_norm(self, alpha):
        """int (1 + a)**alpha g(a) da, finite for every alpha >= 0."""
        val, _ = integrate.quad(
            lambda a: (1.0 + a) ** alpha * self.pdf(a), 0.0, np.inf
        )
        return val


@dataclass(frozen=True)
class CosineProfile:
    """rho0(x) = 1 + cos(x) on the periodic domain [0, 2*pi)."""

    def density(self, x):
        return 1.0 + np.cos(np.asarray(x, dtype=float))

    @property
    def total_mass(self):
        return DOMAIN_LENGTH

    @property
    def sup(self):
        return 2.0

    @property
    def periodic(self):
        return True

    def cell_averages(self, edges):
        edges = np.asarray(edges, dtype=float)
        return np.diff(edges + np.sin(edges)) / np.diff(edges)

    def sample(self, rng, size):
        """Rejection sampling against the uniform envelope."""
        out = np.empty(size)
        filled = 0
        while filled < size:
            n = max(2 * (size - filled), 16)
            x = rng.uniform(0.0, DOMAIN_LENGTH, n)
            keep = x[rng.uniform(0.0, 2.0, n) < 1.0 + np.cos(x)]
            take = min(keep.size, size - filled)
            out[filled : filled + take] = keep[:take]
            filled += take
        return out


@dataclass(frozen=True)
class GaussianProfile:
    """Whole-line Gaussian bump of unit mass (times ``mass``)."""

    center: float = 0.0
    width: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.width > 0 and self.mass > 0):
            raise ValueError("width and mass must be positive")

    def density(self, x):
        z = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.mass * np.exp(-0.5 * z**2) / (self.width * np.sqrt(2 * np.pi))

    @property
    def total_mass(self):
        return self.mass

    @property
    def sup(self):
        return self.mass / (self.width * np.sqrt(2 * np.pi))

    @property
    def periodic(self):
        return False

    def sample(self, rng, size):
        return rng.normal(self.center, self.width, size)


@dataclass(frozen=True)
class InitialAgeData:
    """Product initial data u0(a, x) = spatial.density(x) * age.pdf(a)."""

    spatial: CosineProfile | GaussianProfile
    age: ExponentialAgeProfile

    def u0(self, a, x):
        return self.spatial.density(x) * self.age.pdf(a)

    @property
    def total_mass(self):
        return self.spatial.total_mass

    def bound_constant(self, model: HazardModel) -> float:
        """Smallest C0 with u0(a, x) <= C0 * survival(a).

        Equals sup(rho0) * sup_a g(a) / survival(a); the age factor is
        resolved in closed form for the two hazard laws.
        """
        if isinstance(model, PowerLawHazard):
            a_star = model.alpha / self.age.rate - 1.0
            a_star = max(a_star, 0.0)
        elif isinstance(model, ConstantHazard):
            if self.age.rate < model.d0:
                # g / survival = rate * exp((d0 - rate) a) grows without bound
                return np.inf
            a_star = 0.0
        else:  # pragma: no cover - generic fallback
            res = optimize.minimize_scalar(
                lambda a: -self.age.pdf(a) / model.survival(a),
                bounds=(0.0, 1e4),
                method="bounded",
            )
            a_star = res.x
        return self.spatial.sup * float(self.age.pdf(a_star) / model.survival(a_star))
