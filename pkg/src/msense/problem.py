"""Ground-truth construction and sub-Gaussian sensing ensembles.

The observation model is y_i = <A_i, X*> + eps_i with <A, X> = sum_ij A_ij X_ij.
Each A_i is symmetric: upper-triangle and diagonal entries are drawn i.i.d.
with unit variance from the chosen distribution and mirrored below the
diagonal.  Everything is generated in fixed-size blocks from per-block
Philox streams, so the dense and regenerate-on-the-fly memory modes produce
bit-identical ensembles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .linalg import orthonormalize
from .rng import stream

BLOCK = 512

DISTRIBUTIONS = ("gaussian", "rademacher")
MEMORY_MODES = ("dense", "regenerate")


@dataclass(frozen=True)
class GroundTruth:
    """The planted matrix X* and its fixed eigen-split.

    X* = U diag(ds) U^T + V diag(dt) V^T with U (d x r), V (d x (d-r))
    jointly orthonormal.  ds is the signal spectrum (descending, positive),
    dt the over-parameterization spectrum (|dt| descending, below ds[-1]).
    """

    d: int
    r: int
    U: np.ndarray
    V: np.ndarray
    ds: np.ndarray
    dt: np.ndarray
    Xstar: np.ndarray
    sigma1: float
    sigma_r: float
    sigma_r_plus_1: float
    kappa: float


def _validate_spectrum(d, r, ds, dt):
    if not 1 <= r <= d:
        raise InputError(f"need 1 <= r <= d, got r={r}, d={d}")
    ds = np.asarray(ds, dtype=float)
    if ds.shape != (r,):
        raise InputError(f"ds must have length r={r}, got {ds.shape}")
    if np.any(ds <= 0) or np.any(np.diff(ds) > 0):
        raise InputError("ds must be positive and descending")
    if isinstance(dt, str):
        if dt != "zeros":
            raise InputError(f"dt shorthand must be 'zeros', got {dt!r}")
        dt = np.zeros(d - r)
    dt = np.asarray(dt, dtype=float)
    if dt.shape != (d - r,):
        raise InputError(f"dt must have length d-r={d - r}, got {dt.shape}")
    if np.any(np.diff(np.abs(dt)) > 0):
        raise InputError("dt must be descending in absolute value")
    if dt.size and np.max(np.abs(dt)) >= ds[-1]:
        raise InputError(
            f"spectrum gap violated: max|dt|={np.max(np.abs(dt))} >= ds[r-1]={ds[-1]}"
        )
    return ds, dt


def generate_ground_truth(d, r, ds, dt, seed):
    """Construct a GroundTruth with a seeded random orthonormal basis.

    (U, V) come from orthonormalizing a seeded Gaussian d x d matrix and
    splitting the first r / last d-r columns; identical arguments give a
    bitwise-identical result.
    """
    ds, dt = _validate_spectrum(d, r, ds, dt)
    rng = stream(seed, "basis")
    basis = orthonormalize(rng.standard_normal((d, d)))
    U, V = basis[:, :r], basis[:, r:]
    Xstar = (U * ds) @ U.T + (V * dt) @ V.T
    Xstar = 0.5 * (Xstar + Xstar.T)
    return GroundTruth(
        d=d,
        r=r,
        U=U,
        V=V,
        ds=ds,
        dt=dt,
        Xstar=Xstar,
        sigma1=float(ds[0]),
        sigma_r=float(ds[-1]),
        sigma_r_plus_1=float(np.max(np.abs(dt))) if dt.size else 0.0,
        kappa=float(ds[0] / ds[-1]),
    )


def _draw_block(d, lo, hi, distribution, seed):
    """Sensing matrices for block-aligned indices [lo, hi)."""
    assert lo % BLOCK == 0 and hi - lo <= BLOCK
    rng = stream(seed, "sensing", lo // BLOCK)
    span = hi - lo
    if distribution == "gaussian":
        g = rng.standard_normal((span, d, d))
    elif distribution == "rademacher":
        g = rng.integers(0, 2, size=(span, d, d)).astype(float) * 2.0 - 1.0
    else:
        raise InputError(f"unknown distribution {distribution!r}")
    upper = np.triu(g, 1)
    a = upper + np.transpose(upper, (0, 2, 1))
    idx = np.arange(d)
    a[:, idx, idx] = g[:, idx, idx]
    return a


def _noise_block(lo, hi, sigma, seed):
    rng = stream(seed, "noise", lo // BLOCK)
    return sigma * rng.standard_normal(hi - lo)


@dataclass
class SensingSet:
    """n sensing matrices with observations y_i = <A_i, X*> + eps_i.

    In dense mode ``matrices`` stacks all A_i; in regenerate mode it is None
    and blocks are recomputed from (seed, block index) on demand.
    """

    n: int
    d: int
    sigma: float
    distribution: str
    seed: int
    observations: np.ndarray
    epsilon: np.ndarray
    memory_mode: str = "dense"
    matrices: np.ndarray | None = None
    _model: "QuadraticModel | None" = field(default=None, repr=False)

    def iter_blocks(self):
        """Yield (slice, A_block) pairs in fixed index order."""
        for lo in range(0, self.n, BLOCK):
            hi = min(lo + BLOCK, self.n)
            if self.matrices is not None:
                yield slice(lo, hi), self.matrices[lo:hi]
            else:
                yield slice(lo, hi), _draw_block(
                    self.d, lo, hi, self.distribution, self.seed
                )

    def quadratic_model(self):
        """Cache and return the empirical quadratic model of the loss."""
        if self._model is None:
            self._model = QuadraticModel.build(self)
        return self._model


class QuadraticModel:
    """Precomputed sensing operator H(M) = (1/n) sum_i <A_i, M> A_i and
    data term bbar = (1/n) sum_i y_i A_i.

    The sample gradient is (H(F F^T) - bbar) F, so iterating costs O(d^4)
    per step instead of O(n d^2) once the model is built.
    """

    def __init__(self, h, bbar):
        self.h = h  # (d^2, d^2)
        self.bbar = bbar  # (d, d)
        self.d = bbar.shape[0]

    @classmethod
    def build(cls, s: SensingSet):
        d = s.d
        h = np.zeros((d * d, d * d))
        bbar = np.zeros(d * d)
        for sl, a in s.iter_blocks():
            flat = a.reshape(a.shape[0], d * d)
            h += flat.T @ flat
            bbar += s.observations[sl] @ flat
        h /= s.n
        bbar /= s.n
        return cls(h, bbar.reshape(d, d))

    def apply(self, m):
        return (self.h @ np.asarray(m).ravel()).reshape(self.d, self.d)

    def gradient(self, f):
        return (self.apply(f @ f.T) - self.bbar) @ f

    def deviation(self, f, xstar):
        m = f @ f.T - xstar
        return self.apply(f @ f.T) - self.bbar - m


def generate_sensing(gt, n, sigma, distribution="gaussian", seed=0, memory_mode="dense"):
    """Draw a SensingSet against a GroundTruth; reproducible from seed."""
    if n < 1:
        raise InputError(f"need n >= 1, got {n}")
    if sigma < 0:
        raise InputError(f"need sigma >= 0, got {sigma}")
    if distribution not in DISTRIBUTIONS:
        raise InputError(f"distribution must be one of {DISTRIBUTIONS}")
    if memory_mode not in MEMORY_MODES:
        raise InputError(f"memory_mode must be one of {MEMORY_MODES}")
    d = gt.d
    y = np.empty(n)
    eps = np.empty(n)
    dense = [] if memory_mode == "dense" else None
    for lo in range(0, n, BLOCK):
        hi = min(lo + BLOCK, n)
        a = _draw_block(d, lo, hi, distribution, seed)
        e = _noise_block(lo, hi, sigma, seed)
        y[lo:hi] = a.reshape(hi - lo, d * d) @ gt.Xstar.ravel() + e
        eps[lo:hi] = e
        if dense is not None:
            dense.append(a)
    matrices = np.concatenate(dense, axis=0) if dense is not None else None
    return SensingSet(
        n=n,
        d=d,
        sigma=float(sigma),
        distribution=distribution,
        seed=int(seed),
        observations=y,
        epsilon=eps,
        memory_mode=memory_mode,
        matrices=matrices,
    )


def inner_product(a, x):
    """Entrywise matrix inner product sum_ij A_ij X_ij."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if a.shape != x.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {x.shape}")
    return float(np.vdot(a, x))
