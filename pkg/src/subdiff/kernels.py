"""Scaled spatial jump kernels.

A jump kernel is the transition density ``omega_eps(x, y)`` of the landing
point ``y`` of a particle jumping from ``x``.  All kernels here are
one-dimensional, symmetric and translation invariant: the displacement
``z = (y - x) / eps`` has a fixed shape density supported (at least
effectively) on [-1, 1], so jumps have range ``eps``.

Moments are reported in normalized units: ``second_moment`` is
``eps**-2 * int (y-x)**2 omega dy`` and ``third_abs_moment`` the analogous
``eps**-3`` quantity; both are independent of ``eps`` by construction.

Sampling is pure: it maps uniform variates supplied by the caller through
closed-form transforms (the module owns no RNG state).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, stats


class JumpKernel(ABC):
    """Common interface of the displacement laws."""

    epsilon: float
    dimension: int

    def _check(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.dimension != 1:
            raise ValueError("only dimension 1 is supported")

    # displacement in z = (y - x)/eps units
    @abstractmethod
    def shape_density(self, z):
        """Density of the normalized displacement z, mass one on [-1, 1]."""

    @abstractmethod
    def shape_cdf(self, z):
        """CDF of the normalized displacement."""

    @property
    @abstractmethod
    def n_uniforms(self) -> int:
        """Uniform variates consumed per sampled displacement."""

    @abstractmethod
    def sample_displacement(self, u):
        """Physical displacement(s) y - x from uniform variates.

        ``u`` has shape ``(..., n_uniforms)`` (or ``(n_uniforms,)`` for a
        single draw); the result drops the last axis.
        """

    @property
    @abstractmethod
    def second_moment(self) -> float:
        """int z**2 shape_density(z) dz  (= eps**-2 second moment)."""

    @property
    @abstractmethod
    def third_abs_moment(self) -> float:
        """int |z|**3 shape_density(z) dz  (= eps**-3 third absolute moment)."""

    def density(self, x, y):
        """Transition density omega_eps(x, y)."""
        z = (np.asarray(y, dtype=float) - np.asarray(x, dtype=float)) / self.epsilon
        return self.shape_density(z) / self.epsilon

    def characteristic(self, u):
        """E[cos(u Z)] for the normalized displacement Z (exact symbol).

        Default implementation integrates the shape density numerically;
        kernels with closed forms override it.  The physical convolution
        symbol at wavenumber k is ``characteristic(k * epsilon)``.
        """
        u = np.atleast_1d(np.asarray(u, dtype=float))
        z = np.linspace(-1.0, 1.0, 2001)
        fz = self.shape_density(z)
        out = np.trapezoid(np.cos(np.outer(u, z)) * fz, z, axis=1)
        norm = np.trapezoid(fz, z)
        return out / norm

    def sample_jump(self, x, u):
        """Landing point for a jump from ``x`` given uniform variates ``u``."""
        return np.asarray(x, dtype=float) + self.sample_displacement(u)

    def cell_averages(self, dx):
        """Kernel mass per grid cell, for discrete convolution.

        Returns an odd-length stencil ``w`` with ``w[k]`` the probability of
        landing in the cell offset by ``k - len(w)//2`` cells, computed from
        exact CDF differences so that ``sum(w) == 1``.
        """
        if dx <= 0:
            raise ValueError("dx must be positive")
        half = int(np.ceil(self.epsilon / dx)) + 1
        edges = (np.arange(-half, half + 2) - 0.5) * dx / self.epsilon
        w = np.diff(self.shape_cdf(edges))
        w = np.clip(w, 0.0, None)
        return w / w.sum()


@dataclass(frozen=True)
class TriangularKernel(JumpKernel):
    """Triangular displacement law: density (1 - |z|) on [-1, 1].

    Sampled exactly as the difference of two independent uniforms.
    """

    epsilon: float
    dimension: int = 1

    def __post_init__(self):
        self._check()

    def shape_density(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(np.abs(z) < 1.0, 1.0 - np.abs(z), 0.0)

    def shape_cdf(self, z):
        z = np.clip(np.asarray(z, dtype=float), -1.0, 1.0)
        return np.where(z < 0, 0.5 * (1.0 + z) ** 2, 1.0 - 0.5 * (1.0 - z) ** 2)

    @property
    def n_uniforms(self):
        return 2

    def sample_displacement(self, u):
        u = np.asarray(u, dtype=float)
        return self.epsilon * (u[..., 0] - u[..., 1])

    def characteristic(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.ones_like(u)
        big = np.abs(u) > 1e-4
        ub = u[big]
        out[big] = 2.0 * (1.0 - np.cos(ub)) / ub**2
        us = u[~big]
        out[~big] = 1.0 - us**2 / 12.0  # series; exact to ~1e-18 here
        return out

    @property
    def second_moment(self):
        return 1.0 / 6.0

    @property
    def third_abs_moment(self):
        return 1.0 / 10.0


@dataclass(frozen=True)
class TruncatedGaussianKernel(JumpKernel):
    """Gaussian displacement of scale ``sigma`` truncated to [-1, 1]."""

    epsilon: float
    sigma: float = 0.3
    dimension: int = 1

    def __post_init__(self):
        self._check()
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @cached_property
    def _dist(self):
        b = 1.0 / self.sigma
        return stats.truncnorm(-b, b, loc=0.0, scale=self.sigma)

    def shape_density(self, z):
        return self._dist.pdf(np.asarray(z, dtype=float))

    def shape_cdf(self, z):
        return self._dist.cdf(np.asarray(z, dtype=float))

    @property
    def n_uniforms(self):
        return 1

    def sample_displacement(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape and u.shape[-1] == 1:
            u = u[..., 0]
        return self.epsilon * self._dist.ppf(u)

    @cached_property
    def second_moment(self):
        val, _ = integrate.quad(lambda z: z**2 * self._dist.pdf(z), -1, 1)
        return val

    @cached_property
    def third_abs_moment(self):
        val, _ = integrate.quad(lambda z: abs(z) ** 3 * self._dist.pdf(z), -1, 1)
        return val


@dataclass(frozen=True)
class DiracKernel(JumpKernel):
    """Degenerate zero-displacement kernel (no spatial mixing).

    Useful as the identity limit in tests: with this kernel the spatial model
    reduces to independent copies of the age-only renewal equation.  It does
    not satisfy the positive-second-moment assumption of the scaling limit.
    """

    epsilon: float = 1.0
    dimension: int = 1

    def __post_init__(self):
        self._check()

    def shape_density(self, z):
        raise NotImplementedError("point mass has no density")

    def shape_cdf(self, z):
        return np.where(np.asarray(z, dtype=float) >= 0.0, 1.0, 0.0)

    @property
    def n_uniforms(self):
        return 0

    def sample_displacement(self, u):
        u = np.asarray(u, dtype=float)
        shape = u.shape[:-1] if u.ndim else ()
        return np.zeros(shape)

    def characteristic(self, u):
        return np.ones_like(np.atleast_1d(np.asarray(u, dtype=float)))

    @property
    def second_moment(self):
        return 0.0

    @property
    def third_abs_moment(self):
        return 0.0

    def cell_averages(self, dx):
        if dx <= 0:
            raise ValueError("dx must be positive")
        return np.array([1.0])
