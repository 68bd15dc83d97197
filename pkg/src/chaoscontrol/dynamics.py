"""Lorenz system simulation with fixed-step RK4 and an optional additive force.

The integrator treats an external force as piecewise constant over each step
(zero-order hold): the force vector is added to the vector field in all four
RK4 stages.  A generic :func:`rk4_step` is exposed for arbitrary derivative
functions; the Lorenz-specialized loop in :func:`simulate` performs the exact
same arithmetic in the same order, so both paths agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationError

__all__ = [
    "LorenzParams",
    "IntegratorConfig",
    "Trajectory",
    "lorenz_deriv",
    "rk4_step",
    "step_rk4",
    "simulate",
    "random_initial_state",
    "relax_to_attractor",
]


@dataclass(frozen=True)
class LorenzParams:
    """Order parameters (sigma, rho, beta) of the Lorenz equations."""

    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0

    def __post_init__(self):
        for name in ("sigma", "rho", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"LorenzParams.{name} must be finite")
        if self.beta <= 0:
            raise ValueError("LorenzParams.beta must be positive")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integrator settings.  Only RK4 is implemented.

    ``dt`` is the sampling interval of every recorded series.  Each interval
    is advanced by ``substeps`` equal RK4 steps of size dt/substeps: in the
    strongly driven Lorenz regimes studied here the Jacobian spectral radius
    peaks above 2.8/dt during bursts, where a single dt-sized RK4 step sits
    outside its linear stability region and trajectories blow up mid-run.
    External forces are held constant over the whole interval regardless of
    substepping.
    """

    dt: float = 0.05
    method: str = "rk4"
    substeps: int = 5

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("IntegratorConfig.dt must be positive")
        if self.method != "rk4":
            raise ValueError(f"unsupported integration method {self.method!r}")
        if self.substeps < 1:
            raise ValueError("IntegratorConfig.substeps must be >= 1")


@dataclass
class Trajectory:
    """Uniformly sampled multivariate time series.

    Attributes:
        dt: sampling step.
        samples: (n_samples, dim) float array.
        t0: time of the first sample.
    """

    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=float)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, None]
        # zero-length trajectories are allowed (n_steps=0 predictions)
        if not self.dt > 0:
            raise ValueError("Trajectory.dt must be positive")
        if not np.isfinite(self.samples).all():
            raise ValueError("Trajectory contains non-finite samples")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def segment(self, start: int, stop: int | None = None) -> "Trajectory":
        """Contiguous sub-trajectory with the start time adjusted."""
        sub = self.samples[start:stop]
        return Trajectory(self.dt, sub.copy(), t0=self.t0 + self.dt * start)


def lorenz_deriv(u, p: LorenzParams) -> np.ndarray:
    """Lorenz vector field (sigma*(y-x), x*(rho-z)-y, x*y-beta*z)."""
    x, y, z = float(u[0]), float(u[1]), float(u[2])
    return np.array(
        [p.sigma * (y - x), x * (p.rho - z) - y, x * y - p.beta * z]
    )


def rk4_step(f, u, dt: float, force=None) -> np.ndarray:
    """One classical RK4 step of du/dt = f(u) + force.

    ``force`` is held constant across all four stages (zero-order hold).
    Works for any state dimension; ``f`` maps an array to its derivative.
    """
    u = np.asarray(u, dtype=float)
    if force is None:
        force = np.zeros_like(u)
    else:
        force = np.asarray(force, dtype=float)
    k1 = f(u) + force
    k2 = f(u + (0.5 * dt) * k1) + force
    k3 = f(u + (0.5 * dt) * k2) + force
    k4 = f(u + dt * k3) + force
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _lorenz_rk4(x, y, z, sigma, rho, beta, dt, fx, fy, fz):
    """Scalar Lorenz RK4 step; arithmetic mirrors rk4_step exactly."""
    h = 0.5 * dt
    k1x = sigma * (y - x) + fx
    k1y = x * (rho - z) - y + fy
    k1z = x * y - beta * z + fz

    x2, y2, z2 = x + h * k1x, y + h * k1y, z + h * k1z
    k2x = sigma * (y2 - x2) + fx
    k2y = x2 * (rho - z2) - y2 + fy
    k2z = x2 * y2 - beta * z2 + fz

    x3, y3, z3 = x + h * k2x, y + h * k2y, z + h * k2z
    k3x = sigma * (y3 - x3) + fx
    k3y = x3 * (rho - z3) - y3 + fy
    k3z = x3 * y3 - beta * z3 + fz

    x4, y4, z4 = x + dt * k3x, y + dt * k3y, z + dt * k3z
    k4x = sigma * (y4 - x4) + fx
    k4y = x4 * (rho - z4) - y4 + fy
    k4z = x4 * y4 - beta * z4 + fz

    s = dt / 6.0
    return (
        x + s * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y + s * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        z + s * (k1z + 2.0 * k2z + 2.0 * k3z + k4z),
    )


def _advance_interval(x, y, z, sigma, rho, beta, dt, substeps, fx, fy, fz):
    """Advance one sampling interval dt via ``substeps`` equal RK4 steps.

    The force (fx, fy, fz) is held constant across the whole interval.
    """
    h = dt / substeps
    for _ in range(substeps):
        x, y, z = _lorenz_rk4(x, y, z, sigma, rho, beta, h, fx, fy, fz)
    return x, y, z


def step_rk4(u, p: LorenzParams, cfg: IntegratorConfig, force=None) -> np.ndarray:
    """Advance the Lorenz state by one sampling interval [t, t+dt].

    An optional constant force is added to the vector field and held fixed
    (zero-order hold) across every RK4 stage of the interval.

    Raises:
        IntegrationError: if the resulting state is non-finite.
    """
    if force is None:
        fx = fy = fz = 0.0
    else:
        fx, fy, fz = float(force[0]), float(force[1]), float(force[2])
    out = _advance_interval(
        float(u[0]), float(u[1]), float(u[2]),
        p.sigma, p.rho, p.beta, cfg.dt, cfg.substeps, fx, fy, fz,
    )
    if not (math.isfinite(out[0]) and math.isfinite(out[1]) and math.isfinite(out[2])):
        raise IntegrationError("RK4 step produced a non-finite state", step=0)
    return np.array(out)


def simulate(
    u0,
    p: LorenzParams,
    cfg: IntegratorConfig,
    n_steps: int,
    t0: float = 0.0,
) -> Trajectory:
    """Integrate the unforced Lorenz system for ``n_steps`` sampling intervals.

    Returns a trajectory of ``n_steps + 1`` samples starting at ``u0``.

    Raises:
        IntegrationError: carries the index of the first failing step.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    out = np.empty((n_steps + 1, 3))
    x, y, z = float(u0[0]), float(u0[1]), float(u0[2])
    out[0] = (x, y, z)
    sigma, rho, beta, dt, m = p.sigma, p.rho, p.beta, cfg.dt, cfg.substeps
    for i in range(1, n_steps + 1):
        x, y, z = _advance_interval(x, y, z, sigma, rho, beta, dt, m, 0.0, 0.0, 0.0)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            raise IntegrationError(
                f"integration failed at step {i}", step=i
            )
        out[i] = (x, y, z)
    return Trajectory(cfg.dt, out, t0=t0)


def random_initial_state(rng: np.random.Generator) -> np.ndarray:
    """Initial condition drawn uniformly from [-1, 1]^3."""
    return rng.uniform(-1.0, 1.0, size=3)


def relax_to_attractor(
    u0,
    p: LorenzParams,
    cfg: IntegratorConfig,
    transient_steps: int = 1000,
) -> np.ndarray:
    """Integrate through a discarded transient and return the final state."""
    if transient_steps < 1:
        return np.asarray(u0, dtype=float).copy()
    return simulate(u0, p, cfg, transient_steps).samples[-1]
