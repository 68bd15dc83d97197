"""Next-generation reservoir computer.

The feature map is deterministic: the current sample is concatenated with
k-1 earlier samples spaced s steps apart, and all unique monomials of the
configured orders are evaluated on that vector.  The readout is ridge
regression onto one-step increments, so the trained model acts as a
one-step integrator: v(t+dt) = v(t) + W_out r(t).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence

import numpy as np

from .dynamics import Trajectory
from .errors import DivergenceError, InsufficientDataError
from .ridge import ridge_fit

__all__ = [
    "NgrcConfig",
    "MonomialLibrary",
    "NgrcModel",
    "build_library",
    "shift_expand",
    "poly_features",
    "build_design",
    "train",
    "predict_autonomous",
]

DEFAULT_DIVERGENCE_BOUND = 1e3


@dataclass(frozen=True)
class NgrcConfig:
    """Feature-map and training settings.

    ``k`` counts the total tapped samples (the current one included);
    ``s`` is the spacing between taps in steps.  The first k*s rows of any
    training series are treated as warm-up and excluded from the regression.
    """

    k: int = 1
    s: int = 57
    orders: tuple[int, ...] = (1, 2, 3, 4)
    ridge_beta: float = 1e-4

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.s < 1:
            raise ValueError("s must be >= 1")
        orders = tuple(self.orders)
        if len(orders) == 0:
            raise ValueError("orders must be non-empty")
        if any(int(o) != o or o < 1 for o in orders):
            raise ValueError("orders must be positive integers")
        if len(set(orders)) != len(orders):
            raise ValueError("orders must not repeat")
        object.__setattr__(self, "orders", tuple(int(o) for o in orders))
        if self.ridge_beta < 0:
            raise ValueError("ridge_beta must be >= 0")

    @property
    def warmup(self) -> int:
        return self.k * self.s

    @property
    def tap_span(self) -> int:
        """Samples needed to evaluate one feature vector: (k-1)*s + 1."""
        return (self.k - 1) * self.s + 1


@dataclass(frozen=True)
class MonomialLibrary:
    """Ordered table of unique monomials over a fixed input dimension.

    Each monomial is stored as a sorted tuple of variable indices with
    repetition (x0^2 x2 -> (0, 0, 2)).  Ordering is canonical: by total
    degree, then by the number of distinct variables, then by index tuple,
    which for two variables and orders {1, 2} yields (x, y, x^2, y^2, xy).
    """

    input_dim: int
    monomials: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.monomials)


def build_library(input_dim: int, orders: Sequence[int]) -> MonomialLibrary:
    """Enumerate the unique monomials of each requested order."""
    if input_dim < 1:
        raise ValueError("input_dim must be >= 1")
    monos = []
    for order in orders:
        monos.extend(
            itertools.combinations_with_replacement(range(input_dim), order)
        )
    monos.sort(key=lambda m: (len(m), len(set(m)), m))
    expected = sum(comb(input_dim + o - 1, o) for o in orders)
    assert len(set(monos)) == len(monos) == expected
    return MonomialLibrary(input_dim=input_dim, monomials=tuple(monos))


@dataclass
class NgrcModel:
    """Trained readout plus the tap buffer needed to restart prediction.

    ``tap_buffer`` holds the trailing (k-1)*s + 1 training samples, so the
    closed loop continues directly from the end of the training data.
    """

    config: NgrcConfig
    library: MonomialLibrary
    W_out: Optional[np.ndarray] = None
    tap_buffer: Optional[np.ndarray] = None

    @property
    def trained(self) -> bool:
        return self.W_out is not None

    @property
    def last_sample(self) -> np.ndarray:
        return self.tap_buffer[-1]

    def stepper(
        self,
        seed_history: Optional[Trajectory] = None,
        bound: float = DEFAULT_DIVERGENCE_BOUND,
    ) -> "_NgrcStepper":
        """Autonomous stepper seeded from ``seed_history`` or the stored taps."""
        if not self.trained:
            raise ValueError("model must be trained before prediction")
        span = self.config.tap_span
        if seed_history is None:
            history = self.tap_buffer
        else:
            history = seed_history.samples
        if history is None or len(history) < span:
            raise InsufficientDataError(
                f"prediction needs at least {span} trailing samples"
            )
        return _NgrcStepper(self, history[-span:], bound)


def shift_expand(history: Trajectory, t: int, k: int, s: int) -> np.ndarray:
    """Concatenate samples at times t, t-s, ..., t-(k-1)s, newest first.

    Raises:
        InsufficientDataError: t < (k-1)*s or t beyond the series.
    """
    samples = history.samples
    if t >= len(samples):
        raise InsufficientDataError(f"index {t} beyond series of {len(samples)}")
    if t - (k - 1) * s < 0:
        raise InsufficientDataError(
            f"index {t} needs {(k - 1) * s} earlier samples"
        )
    taps = [samples[t - i * s] for i in range(k)]
    return np.concatenate(taps)


def poly_features(v: np.ndarray, lib: MonomialLibrary) -> np.ndarray:
    """Evaluate every library monomial at v, in canonical order."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != lib.input_dim:
        raise ValueError(
            f"expected {lib.input_dim} variables, got {v.shape[-1]}"
        )
    out = np.empty(v.shape[:-1] + (len(lib),))
    for j, mono in enumerate(lib.monomials):
        feat = v[..., mono[0]].copy()
        for idx in mono[1:]:
            feat *= v[..., idx]
        out[..., j] = feat
    return out


def build_design(
    data: Trajectory, cfg: NgrcConfig, lib: Optional[MonomialLibrary] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Feature rows and one-step-increment targets for the regression.

    Row t (for warm-up <= t <= T-2) holds the features of the taps ending at
    t and the target data(t+1) - data(t): T - k*s - 1 rows in total.

    Raises:
        InsufficientDataError: series shorter than warm-up + 2.
    """
    if lib is None:
        lib = build_library(data.dim * cfg.k, cfg.orders)
    samples = data.samples
    t_total = len(samples)
    if t_total < cfg.warmup + 2:
        raise InsufficientDataError(
            f"need more than {cfg.warmup + 1} samples, got {t_total}"
        )
    rows = range(cfg.warmup, t_total - 1)
    taps = np.stack([shift_expand(data, t, cfg.k, cfg.s) for t in rows])
    design = poly_features(taps, lib)
    targets = samples[cfg.warmup + 1 :] - samples[cfg.warmup : -1]
    return design, targets


def train(data: Trajectory, cfg: NgrcConfig) -> NgrcModel:
    """Fit the one-step-increment readout; deterministic given data+config.

    Raises:
        InsufficientDataError, IllConditionedError: propagated.
    """
    lib = build_library(data.dim * cfg.k, cfg.orders)
    design, targets = build_design(data, cfg, lib)
    w_out = ridge_fit(design, targets, cfg.ridge_beta)
    span = cfg.tap_span
    return NgrcModel(
        config=cfg,
        library=lib,
        W_out=w_out,
        tap_buffer=data.samples[-span:].copy(),
    )


class _NgrcStepper:
    """Closed-loop iterator over v(t+dt) = v(t) + W_out r(t)."""

    def __init__(self, model: NgrcModel, history: np.ndarray, bound: float):
        self._cfg = model.config
        self._lib = model.library
        self._W = model.W_out
        self._buf = np.array(history, dtype=float)  # ring of tap_span samples
        self._bound = bound
        self._step = 0

    def _taps(self) -> np.ndarray:
        k, s = self._cfg.k, self._cfg.s
        return np.concatenate([self._buf[-1 - i * s] for i in range(k)])

    def step(self) -> np.ndarray:
        v = self._buf[-1] + self._W @ poly_features(self._taps(), self._lib)
        self._step += 1
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > self._bound:
            raise DivergenceError(
                f"autonomous prediction left |v| <= {self._bound:g}",
                phase="predict", step=self._step,
            )
        if len(self._buf) > 1:
            self._buf[:-1] = self._buf[1:]
        self._buf[-1] = v
        return v


def predict_autonomous(
    m: NgrcModel,
    n_steps: int,
    dt: float,
    seed_history: Optional[Trajectory] = None,
    bound: float = DEFAULT_DIVERGENCE_BOUND,
    t0: float = 0.0,
) -> Trajectory:
    """Run the closed loop for ``n_steps`` steps.

    The tap buffer is seeded from ``seed_history`` when given, otherwise from
    the trailing training samples stored on the model.

    Raises:
        DivergenceError: if any emitted sample exceeds ``bound``.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    stepper = m.stepper(seed_history, bound)
    dim = m.library.input_dim // m.config.k
    out = np.empty((n_steps, dim))
    for i in range(n_steps):
        out[i] = stepper.step()
    return Trajectory(dt, out, t0=t0)
