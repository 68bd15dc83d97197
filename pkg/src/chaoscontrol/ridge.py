"""Shared ridge-regression solver for the linear readouts.

Both predictor families train their readout by minimising
``sum ||W x_t - y_t||^2 + beta ||W||_F^2`` over the rows of a design
matrix.  The minimiser is the solution of the regularized normal
equations ``(X^T X + beta I) W^T = X^T Y``; it is computed here through
the SVD of the design matrix, which is algebraically identical but does
not square the condition number.  Forming the Gram matrix explicitly
loses half the available precision, and with penalties as small as 1e-11
against feature columns spanning ten orders of magnitude that loss is
fatal: readouts fitted from the explicit normal equations track the
training rows but are dominated by noise along the weak singular
directions and destabilise closed-loop prediction.  Directions below the
``RIDGE_RCOND`` numerical-rank cutoff are excluded for the same reason.
No column scaling is applied; ``beta`` acts on the raw feature scale.
"""

from __future__ import annotations

import numpy as np

from .errors import IllConditionedError

__all__ = ["ridge_fit", "RIDGE_RCOND"]

# Relative numerical-rank cutoff: singular directions below this fraction of
# the largest singular value are treated as rank-deficient and excluded from
# the solution.  With very small penalties the ridge filter s/(s^2 + beta)
# peaks at 1/(2 sqrt(beta)) near s = sqrt(beta); directions in that band are
# dominated by arithmetic noise for the reservoir designs used here, and
# keeping them makes the trained readout track the data while amplifying any
# off-trajectory perturbation, which destabilises closed-loop prediction.
# 3e-8 (about sqrt(machine epsilon)) removes that band without touching any
# direction that carries signal; well-conditioned designs are unaffected.
RIDGE_RCOND = 3e-8


def ridge_fit(design: np.ndarray, targets: np.ndarray, beta: float) -> np.ndarray:
    """Solve the ridge problem, returning the readout in (targets, features) shape.

    Args:
        design: (n_rows, n_features) matrix of regressor rows.
        targets: (n_rows, n_targets) matrix of regression targets.
        beta: non-negative penalty on the squared Frobenius norm of the readout.

    Raises:
        IllConditionedError: if the factorization fails or the readout is
            not finite.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("design and targets must be 2-d with matching row counts")
    if beta < 0:
        raise ValueError("ridge penalty must be non-negative")

    try:
        u, s, vt = np.linalg.svd(x, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(
            f"SVD of the design matrix failed (beta={beta:g})"
        ) from exc
    # filter factors s/(s^2+beta) on the numerically significant directions;
    # beta=0 degenerates to the truncated pseudoinverse.  Overflow in s*s
    # is benign: an inf denominator zeroes the direction's factor.
    with np.errstate(over="ignore"):
        denom = s * s + beta
        significant = s >= RIDGE_RCOND * s[0] if s.size else s.astype(bool)
        factors = np.where(
            significant & (denom > 0),
            np.divide(s, np.where(denom > 0, denom, 1.0)),
            0.0,
        )
    w = (vt.T * factors) @ (u.T @ y)
    if not np.all(np.isfinite(w)):
        raise IllConditionedError(
            f"ridge solve produced non-finite readout (beta={beta:g})"
        )
    # C-order copy: the transpose view picks a different BLAS path than a
    # contiguous array, which breaks bit-for-bit reproducibility of readouts
    # that round-trip through serialization.
    return np.ascontiguousarray(w.T)
