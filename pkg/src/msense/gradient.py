"""Sample and population gradients, the factored gradient step, and the
population coefficient operators.

The loss is L(F) = (1/4n) sum_i (y_i - <A_i, F F^T>)^2, whose gradient for
symmetric A_i is G^n(F) = (1/n) sum_i (<A_i, F F^T> - y_i) A_i F.  The
idealized (population) gradient is G(F) = (F F^T - X*) F, and the deviation
matrix Delta(F) = (1/n) sum_i (<A_i, F F^T> - y_i) A_i - (F F^T - X*) ties
them together through G^n - G = Delta F.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .linalg import as_symmetric

STEP_MODES = ("explicit", "theory")


@dataclass(frozen=True)
class FactorState:
    """Current factor F (d x k) plus iteration counter."""

    F: np.ndarray
    iter: int = 0

    def __post_init__(self):
        f = np.asarray(self.F, dtype=float)
        if f.ndim != 2 or f.shape[1] < 1:
            raise InputError(f"factor must be d x k with k >= 1, got {f.shape}")
        if not np.all(np.isfinite(f)):
            raise InputError("factor contains non-finite entries")
        object.__setattr__(self, "F", f)


@dataclass(frozen=True)
class StepSize:
    """Constant step size; zero is allowed in explicit mode for no-op steps."""

    eta: float
    mode: str = "explicit"

    def __post_init__(self):
        if self.mode not in STEP_MODES:
            raise InputError(f"step mode must be one of {STEP_MODES}")
        if self.mode == "theory" and not self.eta > 0:
            raise InputError(f"theory step size must be positive, got {self.eta}")
        if not self.eta >= 0:
            raise InputError(f"step size must be nonnegative, got {self.eta}")


def theory_step_size(gt):
    """eta = 1/(100 sigma_1), the constant step size of the analysis."""
    if gt.sigma1 <= 0:
        raise InputError("sigma1 must be positive")
    return StepSize(eta=1.0 / (100.0 * gt.sigma1), mode="theory")


def _check_factor(f, d, what="factor"):
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or f.shape[0] != d:
        raise InputError(f"{what} must be {d} x k, got {f.shape}")
    return f


def loss_value(f, s):
    """Empirical loss (1/4n) sum_i (y_i - <A_i, F F^T>)^2."""
    f = _check_factor(f, s.d)
    ffT = f @ f.T
    total = 0.0
    for sl, a in s.iter_blocks():
        vals = a.reshape(a.shape[0], -1) @ ffT.ravel()
        total += float(np.sum((s.observations[sl] - vals) ** 2))
    return total / (4.0 * s.n)


def _weighted_sensing_sum(f, s):
    """(1/n) sum_i (<A_i, F F^T> - y_i) A_i, accumulated block by block."""
    ffT = f @ f.T
    w = np.zeros((s.d, s.d))
    for sl, a in s.iter_blocks():
        flat = a.reshape(a.shape[0], -1)
        resid = flat @ ffT.ravel() - s.observations[sl]
        w += (resid @ flat).reshape(s.d, s.d)
    return w / s.n


def sample_gradient(f, s):
    """Finite-sample gradient of the quartic loss at F.

    Scalar residuals are accumulated first, then the weighted matrix sum,
    then one multiply by F (O(n d^2) + O(d^2 k)).
    """
    if s.n < 1:
        raise InputError("sensing set is empty")
    f = _check_factor(f, s.d)
    return _weighted_sensing_sum(f, s) @ f


def population_gradient(f, gt):
    """Idealized gradient (F F^T - X*) F."""
    f = _check_factor(f, gt.d)
    return (f @ f.T - gt.Xstar) @ f


def deviation_matrix(f, gt, s):
    """Deviation Delta between the empirical and idealized sensing operators.

    Delta(F) = (1/n) sum_i (<A_i, F F^T> - y_i) A_i - (F F^T - X*); symmetric,
    and sample_gradient - population_gradient = Delta @ F exactly.
    """
    f = _check_factor(f, gt.d)
    if s.d != gt.d:
        raise InputError(f"sensing dimension {s.d} != ground truth {gt.d}")
    delta = _weighted_sensing_sum(f, s) - (f @ f.T - gt.Xstar)
    return as_symmetric(delta, tol=1e-9)


def fgd_step(state, grad, step):
    """One factored gradient descent update F' = F - eta * grad."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.F.shape:
        raise InputError(f"gradient shape {grad.shape} != factor {state.F.shape}")
    return FactorState(F=state.F - step.eta * grad, iter=state.iter + 1)


def op_MU(s_coef, t_coef, ds, eta):
    """Population update of the signal coefficients:
    M_U(S) = S - eta (S S^T S + S T^T T - diag(ds) S)."""
    s_coef = np.asarray(s_coef, dtype=float)
    t_coef = np.asarray(t_coef, dtype=float)
    ds = np.asarray(ds, dtype=float)
    if s_coef.ndim != 2 or t_coef.ndim != 2 or s_coef.shape[1] != t_coef.shape[1]:
        raise InputError("S and T must share the column count k")
    if ds.shape != (s_coef.shape[0],):
        raise InputError(f"ds must have length {s_coef.shape[0]}")
    return s_coef - eta * (
        s_coef @ s_coef.T @ s_coef + s_coef @ t_coef.T @ t_coef - ds[:, None] * s_coef
    )


def op_MV(t_coef, s_coef, dt, eta):
    """Population update of the over-parameterization coefficients:
    M_V(T) = T - eta (T T^T T + T S^T S - diag(dt) T)."""
    s_coef = np.asarray(s_coef, dtype=float)
    t_coef = np.asarray(t_coef, dtype=float)
    dt = np.asarray(dt, dtype=float)
    if s_coef.ndim != 2 or t_coef.ndim != 2 or s_coef.shape[1] != t_coef.shape[1]:
        raise InputError("S and T must share the column count k")
    if dt.shape != (t_coef.shape[0],):
        raise InputError(f"dt must have length {t_coef.shape[0]}")
    return t_coef - eta * (
        t_coef @ t_coef.T @ t_coef + t_coef @ s_coef.T @ s_coef - dt[:, None] * t_coef
    )
