"""Particle-level Monte Carlo of the microscopic renewal jump process.

Each particle carries an independent RNG stream derived from the master seed
and its index, so trajectories are reproducible from ``(seed, index)`` alone
and results do not depend on execution order or batching.  A particle starts
at a position drawn from the initial density with a trap age drawn from the
initial age profile, waits for the age-conditional residual waiting time
(closed-form inversion for both hazard laws), jumps by ``eps`` times a
normalized kernel displacement at each renewal, and repeats; macroscopic
time is ``eps**beta`` times the internal clock.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from subdiff.hazards import ConstantHazard, HazardModel, PowerLawHazard
from subdiff.kernels import JumpKernel

__all__ = [
    "DensityEstimate",
    "MsdResult",
    "ParticleSnapshots",
    "bootstrap_l1_noise",
    "empirical_density",
    "msd",
    "simulate_particles",
]


@dataclass(frozen=True)
class ParticleSnapshots:
    """Unwrapped particle positions recorded at fixed macroscopic times."""

    times: np.ndarray
    positions: np.ndarray  # (n_times, n_particles)
    x0: np.ndarray
    eps: float
    beta: float
    seed: int


def _expected_renewals(model: HazardModel, tau: float) -> float:
    if isinstance(model, ConstantHazard):
        return model.d0 * tau
    if isinstance(model, PowerLawHazard):
        al = min(model.alpha, 1.0)
        return max((1.0 + tau) ** al, 4.0)
    return 16.0


def simulate_particles(
    model: HazardModel,
    kernel: JumpKernel,
    eps: float,
    beta: float,
    n_particles: int,
    snapshot_times,
    spatial_profile,
    age_profile,
    seed: int,
) -> ParticleSnapshots:
    """Simulate ``n_particles`` independent renewal walkers.

    ``snapshot_times`` are macroscopic; positions are recorded unwrapped
    (callers wrap them onto a periodic domain if needed).  Per particle the
    draw order is fixed (start position, initial age, waiting times, then
    jump variates), so the whole ensemble is a pure function of the seed.
    """
    if eps <= 0 or beta <= 0:
        raise ValueError("eps and beta must be positive")
    times = np.sort(np.atleast_1d(np.asarray(snapshot_times, dtype=float)))
    if times[0] < 0:
        raise ValueError("snapshot times must be nonnegative")
    taus = times / eps**beta
    tau_max = float(taus[-1])

    block = max(16, int(1.5 * _expected_renewals(model, tau_max)) + 2)
    n_uni = kernel.n_uniforms

    positions = np.empty((times.size, n_particles))
    x0 = np.empty(n_particles)
    for i in range(n_particles):
        rng = np.random.default_rng([seed, i])
        xi = float(spatial_profile.sample(rng, 1)[0])
        x0[i] = xi
        a0 = float(age_profile.sample(rng))

        first = float(model.sample_waiting_time(rng.random(), age=a0))
        if first > tau_max:
            positions[:, i] = xi
            continue
        waits = [np.array([first])]
        total = first
        while total <= tau_max:
            fresh = model.sample_waiting_time(rng.random(block))
            waits.append(fresh)
            total += float(fresh.sum())
        event_times = np.cumsum(np.concatenate(waits))
        n_events = int(np.searchsorted(event_times, tau_max, side="right"))

        if n_uni:
            u = rng.random((n_events, n_uni))
            disp = kernel.sample_displacement(u)
        else:
            disp = np.zeros(n_events)
        walked = np.concatenate(([0.0], np.cumsum(disp)))
        idx = np.searchsorted(event_times[:n_events], taus, side="right")
        positions[:, i] = xi + walked[idx]

    return ParticleSnapshots(
        times=times, positions=positions, x0=x0, eps=eps, beta=beta, seed=seed
    )


@dataclass(frozen=True)
class MsdResult:
    """Ensemble mean squared displacement with a log-log power-law fit."""

    t: np.ndarray
    msd: np.ndarray
    slope: float
    intercept: float
    fit_window: tuple


def msd(snapshots: ParticleSnapshots, fit_window=(10.0, 1e3)) -> MsdResult:
    """Mean squared displacement from each particle's own start.

    The exponent is the least-squares slope of ``log msd`` against ``log t``
    over the (inclusive) fit window; times with zero spread or t = 0 are
    excluded.  Raises if fewer than two usable points remain.
    """
    disp = snapshots.positions - snapshots.x0
    values = np.mean(disp**2, axis=1)
    t = snapshots.times
    lo, hi = fit_window
    usable = (t >= lo) & (t <= hi) & (values > 0)
    if np.count_nonzero(usable) < 2:
        raise ValueError("degenerate input: need two positive msd points in window")
    slope, intercept = np.polyfit(np.log(t[usable]), np.log(values[usable]), 1)
    return MsdResult(
        t=t, msd=values, slope=float(slope), intercept=float(intercept),
        fit_window=(float(lo), float(hi)),
    )


@dataclass(frozen=True)
class DensityEstimate:
    """Histogram density normalized to a prescribed total mass."""

    centers: np.ndarray
    density: np.ndarray
    below: int
    above: int
    total_mass: float
    n_samples: int


def empirical_density(positions, edges, total_mass=1.0) -> DensityEstimate:
    """Bin positions into a normalized density (bin mass / bin width).

    Samples outside the grid are counted in the ``below`` / ``above``
    overflow tallies, so the histogram plus overflow carries exactly
    ``total_mass``.
    """
    positions = np.asarray(positions, dtype=float).ravel()
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly increasing with >= 2 entries")
    counts, _ = np.histogram(positions, bins=edges)
    below = int(np.count_nonzero(positions < edges[0]))
    above = int(np.count_nonzero(positions >= edges[-1]))
    n = positions.size
    widths = np.diff(edges)
    density = counts / n * total_mass / widths
    return DensityEstimate(
        centers=0.5 * (edges[:-1] + edges[1:]),
        density=density,
        below=below,
        above=above,
        total_mass=total_mass,
        n_samples=n,
    )


def bootstrap_l1_noise(positions, edges, total_mass, n_boot=200, seed=0):
    """Bootstrap estimate of the L1 sampling noise of an empirical density.

    Resamples the multinomial bin occupation and returns the mean L1
    distance between resampled and observed densities (integer counts keep
    the reduction schedule independent).
    """
    est = empirical_density(positions, edges, total_mass)
    n = est.n_samples
    widths = np.diff(np.asarray(edges, dtype=float))
    counts = est.density * widths * n / total_mass
    probs = np.concatenate((counts, [est.below, est.above])) / n
    rng = np.random.default_rng([seed, 987654321])
    draws = rng.multinomial(n, probs, size=n_boot)
    boot_density = draws[:, : widths.size] / n * total_mass / widths
    l1 = np.abs(boot_density - est.density) @ widths
    return float(np.mean(l1))
