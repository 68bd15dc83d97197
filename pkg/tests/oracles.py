"""Independent reference implementations used only by the test suite.

Each oracle recomputes a quantity the package derives, through a
different algorithm (explicit normal equations, tangent-space exponent
integration, exhaustive enumeration), so agreement is evidence rather
than tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from chaoscontrol import LorenzParams


def ridge_normal_equations(design: np.ndarray, targets: np.ndarray, beta: float) -> np.ndarray:
    """Brute-force ridge readout: (X^T X + beta I)^-1 X^T Y, transposed.

    Deliberately the textbook normal-equations route, which the shipped
    solver avoids for conditioning reasons; on small well-conditioned
    instances both must agree to near machine precision.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    gram = x.T @ x + beta * np.eye(x.shape[1])
    return np.linalg.solve(gram, x.T @ y).T


def lorenz_jacobian(u, p: LorenzParams) -> np.ndarray:
    x, y, z = float(u[0]), float(u[1]), float(u[2])
    return np.array(
        [
            [-p.sigma, p.sigma, 0.0],
            [p.rho - z, -1.0, -x],
            [y, x, -p.beta],
        ]
    )


def benettin_lyapunov(
    p: LorenzParams,
    u0,
    dt: float = 0.05,
    substeps: int = 5,
    n_steps: int = 20_000,
    transient_steps: int = 1000,
    seed: int = 0,
) -> float:
    """Largest Lyapunov exponent by tangent-space integration.

    Integrates the state and one tangent vector side by side (RK4 on the
    augmented system), renormalizing the tangent once per sampling
    interval and averaging the log stretch factors.  Independent of the
    package's neighbor-tracking estimator.
    """

    def deriv(state):
        u, w = state[:3], state[3:]
        du = np.array(
            [
                p.sigma * (u[1] - u[0]),
                u[0] * (p.rho - u[2]) - u[1],
                u[0] * u[1] - p.beta * u[2],
            ]
        )
        dw = lorenz_jacobian(u, p) @ w
        return np.concatenate([du, dw])

    def rk4(state, h):
        k1 = deriv(state)
        k2 = deriv(state + 0.5 * h * k1)
        k3 = deriv(state + 0.5 * h * k2)
        k4 = deriv(state + h * k3)
        return state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    h = dt / substeps
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(3)
    w /= np.linalg.norm(w)
    state = np.concatenate([np.asarray(u0, dtype=float), w])

    for _ in range(transient_steps * substeps):
        state = rk4(state, h)
    state[3:] /= np.linalg.norm(state[3:])

    log_sum = 0.0
    for _ in range(n_steps):
        for _ in range(substeps):
            state = rk4(state, h)
        norm = np.linalg.norm(state[3:])
        log_sum += math.log(norm)
        state[3:] /= norm
    return log_sum / (n_steps * dt)


def count_monomials(n_vars: int, orders) -> int:
    """Exhaustive count of distinct monomials with total degree in orders.

    Enumerates exponent vectors directly (cartesian product filtered by
    total degree) instead of multiset combinatorics.
    """
    orders = set(orders)
    max_order = max(orders)
    count = 0
    for exponents in itertools.product(range(max_order + 1), repeat=n_vars):
        if sum(exponents) in orders:
            count += 1
    return count


def enumerate_monomials(n_vars: int, orders) -> set:
    """All distinct monomials as sorted variable-index tuples."""
    out = set()
    for order in sorted(set(orders)):
        for combo in itertools.product(range(n_vars), repeat=order):
            out.add(tuple(sorted(combo)))
    return out
