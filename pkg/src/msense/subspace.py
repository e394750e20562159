"""Subspace decomposition of iterates, per-iteration metrics, initializers,
and numerical verification of the contraction statements.

An iterate F splits as F = U S + V T against the ground-truth basis; all
progress quantities are functions of S S^T, T T^T and S T^T.  The master
quantity is D = max(|SS^T - DS*|, |TT^T|, |ST^T|) (spectral norms) and its
noise-floored companion A = max(D - 50 eps_stat, 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError
from .gradient import (
    FactorState,
    deviation_matrix,
    op_MU,
    op_MV,
    population_gradient,
    sample_gradient,
)
from .linalg import frobenius_norm, spectral_norm
from .rng import stream

# Noise-floor multiplier in A = D - 50 eps_stat and the (10, 4) pair in the
# deviation hypothesis; overridable for sensitivity studies.
FLOOR_MULTIPLIER = 50.0
DELTA_HYP_D_FACTOR = 10.0
DELTA_HYP_SIGMA_FACTOR = 4.0


@dataclass(frozen=True)
class Decomposition:
    S: np.ndarray  # r x k
    T: np.ndarray  # (d-r) x k


def decompose(f, gt):
    """Split F into subspace coefficients S = U^T F, T = V^T F."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or f.shape[0] != gt.d:
        raise InputError(f"factor must be {gt.d} x k, got {f.shape}")
    return Decomposition(S=gt.U.T @ f, T=gt.V.T @ f)


@dataclass(frozen=True)
class DerivedScales:
    """Statistical floor eps_stat = kappa sqrt(d log d / n) sigma and the
    linear-phase endpoint eps_comp = sqrt(k kappa^2 d log d / n) sigma_r."""

    eps_stat: float
    eps_comp: float


def derived_scales(gt, n, sigma, k):
    """Scales for a run; population runs (n=None) have both scales zero."""
    if n is None:
        return DerivedScales(0.0, 0.0)
    rate = np.sqrt(gt.d * np.log(gt.d) / n)
    return DerivedScales(
        eps_stat=float(gt.kappa * rate * sigma),
        eps_comp=float(np.sqrt(k) * gt.kappa * rate * gt.sigma_r),
    )


@dataclass(frozen=True)
class IterateMetrics:
    t: int
    ss_err: float  # |S S^T - DS*|_2
    st_norm: float  # |S T^T|_2
    tt_norm: float  # |T T^T|_2
    tt_err: float  # |T T^T - DT*|_2
    D: float
    A: float
    err_spec: float  # |F F^T - X*|_2
    err_fro: float  # |F F^T - X*|_F
    grad_norm: float  # |G|_F of the gradient at this iterate
    delta_norm: float | None = None  # |Delta|_2, tracked on request


def metrics_from_parts(t, f, gt, scales, grad_norm, delta_norm=None):
    """Assemble IterateMetrics from an iterate and a precomputed gradient norm."""
    dec = decompose(f, gt)
    s, tc = dec.S, dec.T
    ssT = s @ s.T
    ttT = tc @ tc.T
    ss_err = spectral_norm(ssT - np.diag(gt.ds))
    st_norm = spectral_norm(s @ tc.T)
    tt_norm = spectral_norm(ttT)
    tt_err = spectral_norm(ttT - np.diag(gt.dt))
    m = f @ f.T - gt.Xstar
    d_val = max(ss_err, tt_norm, st_norm)
    a_val = max(d_val - FLOOR_MULTIPLIER * scales.eps_stat, 0.0)
    return IterateMetrics(
        t=int(t),
        ss_err=ss_err,
        st_norm=st_norm,
        tt_norm=tt_norm,
        tt_err=tt_err,
        D=d_val,
        A=a_val,
        err_spec=spectral_norm(m),
        err_fro=frobenius_norm(m),
        grad_norm=float(grad_norm),
        delta_norm=delta_norm,
    )


def compute_metrics(f, gt, scales, s=None, track_delta=False, t=0):
    """Measure one iterate.

    Uses the sample gradient when a sensing set is given, otherwise the
    population gradient.  delta_norm is computed only on request and
    requires a sensing set.
    """
    if track_delta and s is None:
        raise InputError("track_delta requires a sensing set")
    f = np.asarray(f, dtype=float)
    grad = sample_gradient(f, s) if s is not None else population_gradient(f, gt)
    delta_norm = None
    if track_delta:
        delta_norm = spectral_norm(deviation_matrix(f, gt, s))
    return metrics_from_parts(t, f, gt, scales, frobenius_norm(grad), delta_norm)


def exact_factor(gt, k):
    """Best rank-<=k PSD factor of X* built from its known eigen-split."""
    vals = np.concatenate([gt.ds, gt.dt])
    vecs = np.concatenate([gt.U, gt.V], axis=1)
    order = np.argsort(-vals, kind="stable")[:k]
    lam = np.clip(vals[order], 0.0, None)
    f = vecs[:, order] * np.sqrt(lam)
    if k > len(order):  # k > d never happens; keep shape
        f = np.pad(f, ((0, 0), (0, k - len(order))))
    return f


def planted_init(gt, k, rho, seed):
    """Constructed F0 guaranteed to satisfy the basin assumption.

    Starts from the exact padded factor, adds a seeded Gaussian perturbation,
    and rescales it so |F0 F0^T - X*|_2 = 0.7 rho sigma_r u with
    u ~ Uniform(0.5, 1].
    """
    if k < gt.r:
        raise InputError(f"planted initialization needs k >= r, got k={k} < r={gt.r}")
    if not 0 < rho <= 0.07:
        raise InputError(f"need 0 < rho <= 0.07, got {rho}")
    rng = stream(seed, "init")
    base = exact_factor(gt, k)
    pert = rng.standard_normal((gt.d, k))
    u = 1.0 - 0.5 * rng.uniform()  # Uniform(0.5, 1]
    target = 0.7 * rho * gt.sigma_r * u

    def dist(c):
        f = base + c * pert
        return spectral_norm(f @ f.T - gt.Xstar)

    if dist(0.0) >= target:
        raise InputError(
            "exact factor already farther than the perturbation target; "
            "rank/spectrum leaves no room for the planted construction"
        )
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if dist(hi) >= target:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise NumericError("could not bracket the perturbation scale")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if dist(mid) < target:
            lo = mid
        else:
            hi = mid
    # lo keeps dist strictly below the target, so the basin premise holds.
    return FactorState(F=base + lo * pert, iter=0)


def spectral_init(s, k):
    """Initialization from the spectrum of the data surrogate.

    M = (1/n) sum_i y_i A_i is symmetrized; F0 keeps the top-k eigenpairs by
    algebraic value with negative eigenvalues clipped to zero.
    """
    if not 1 <= k <= s.d:
        raise InputError(f"need 1 <= k <= d, got k={k}, d={s.d}")
    m = np.zeros((s.d, s.d))
    for sl, a in s.iter_blocks():
        m += (s.observations[sl] @ a.reshape(a.shape[0], -1)).reshape(s.d, s.d)
    m = 0.5 * (m + m.T) / s.n
    w, v = np.linalg.eigh(m)
    idx = np.argsort(-w, kind="stable")[:k]
    lam = np.clip(w[idx], 0.0, None)
    return FactorState(F=v[:, idx] * np.sqrt(lam), iter=0)


def random_init(d, k, scale, seed):
    """F0 with i.i.d. Normal(0, scale^2) entries (initialization near the origin)."""
    if scale <= 0:
        raise InputError(f"scale must be positive, got {scale}")
    rng = stream(seed, "init")
    return FactorState(F=scale * rng.standard_normal((d, k)), iter=0)


@dataclass(frozen=True)
class InitReport:
    lhs: float  # |F0 F0^T - X*|_2
    ss0: float  # |S0 S0^T - DS*|_2
    tt0: float  # |T0 T0^T - DT*|_2
    st0: float  # |S0 T0^T|_2
    rho: float
    assumption_ok: bool  # lhs <= rho sigma_r
    lemma_ok: bool  # lhs <= 0.7 rho sigma_r implies max of the three <= rho sigma_r


def check_initialization(f0, gt, rho):
    """Pure measurement of an initialization against the basin conditions."""
    if rho <= 0:
        raise InputError(f"rho must be positive, got {rho}")
    f0 = np.asarray(f0, dtype=float)
    dec = decompose(f0, gt)
    lhs = spectral_norm(f0 @ f0.T - gt.Xstar)
    ss0 = spectral_norm(dec.S @ dec.S.T - np.diag(gt.ds))
    tt0 = spectral_norm(dec.T @ dec.T.T - np.diag(gt.dt))
    st0 = spectral_norm(dec.S @ dec.T.T)
    bound = rho * gt.sigma_r
    premise = lhs <= 0.7 * bound
    conclusion = max(ss0, tt0, st0) <= bound
    return InitReport(
        lhs=lhs,
        ss0=ss0,
        tt0=tt0,
        st0=st0,
        rho=float(rho),
        assumption_ok=lhs <= bound,
        lemma_ok=(not premise) or conclusion,
    )


REGION_BOUND = 0.1  # region radius in units of sigma_r for inequality verification


def region_sample(gt, k, seed, bound=REGION_BOUND, max_tries=10000):
    """Draw (S, T) near the exact factor with all three region norms below
    ``bound * sigma_r`` (rejection sampling)."""
    if k < gt.r:
        raise InputError("contraction verification region requires k >= r")
    rng = stream(seed, "region")
    base = decompose(exact_factor(gt, k), gt)
    limit = bound * gt.sigma_r
    for _ in range(max_tries):
        amp = rng.uniform(0.0, 2.0 * bound) * gt.sigma_r
        s = base.S + amp * rng.standard_normal(base.S.shape) / np.sqrt(k)
        t = base.T + amp * rng.standard_normal(base.T.shape) / np.sqrt(gt.d)
        ss = spectral_norm(s @ s.T - np.diag(gt.ds))
        tt = spectral_norm(t @ t.T - np.diag(gt.dt))
        st = spectral_norm(s @ t.T)
        if max(ss, tt, st) <= limit and min(ss, tt, st) > 0.0:
            return s, t
    raise NumericError(f"region sampling failed after {max_tries} tries")


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def slack(self):
        return self.rhs - self.lhs


@dataclass(frozen=True)
class ContractionReport:
    checks: tuple
    eta: float
    tolerance: float

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]


def verify_population_contraction(s, t, gt, eta):
    """Evaluate both sides of the eight one-step population inequalities.

    The first four bound the updated Gram blocks (contraction); the last
    four bound the mixed old/new products (non-expansion).  pass means
    lhs <= rhs + 1e-9 sigma_r.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    ds_mat = np.diag(gt.ds)
    dt_mat = np.diag(gt.dt)
    ss = spectral_norm(s @ s.T - ds_mat)
    tt_err = spectral_norm(t @ t.T - dt_mat)
    st = spectral_norm(s @ t.T)
    limit = REGION_BOUND * gt.sigma_r
    if max(ss, tt_err, st) > limit * (1 + 1e-12):
        raise InputError(
            "verification hypotheses unmet: region norms "
            f"({ss:.4g}, {tt_err:.4g}, {st:.4g}) exceed {limit:.4g}"
        )
    if eta > 1.0 / (100.0 * gt.sigma1) * (1 + 1e-12):
        raise InputError("verification hypotheses unmet: eta exceeds 1/(100 sigma_1)")

    sr = gt.sigma_r
    tt = spectral_norm(t @ t.T)
    dt_norm = spectral_norm(dt_mat)
    ms = op_MU(s, t, gt.ds, eta)
    mt = op_MV(t, s, gt.dt, eta)
    eye_tt = np.eye(t.shape[0])

    raw = [
        ("ss_contraction",
         spectral_norm(ds_mat - ms @ ms.T),
         (1 - eta * sr) * ss + 3 * eta * st**2),
        ("st_contraction",
         spectral_norm(ms @ mt.T),
         (1 - eta * sr) * st),
        ("tt_contraction",
         spectral_norm(mt @ mt.T),
         tt * (1 - eta * tt + 2 * eta * dt_norm)),
        ("tt_err_contraction",
         spectral_norm(mt @ mt.T - dt_mat),
         tt_err * spectral_norm(eye_tt - 2 * eta * (t @ t.T)) + 3 * eta * st**2),
        ("ss_half_contraction",
         spectral_norm(ds_mat - ms @ s.T),
         (1 - eta * sr) * ss + eta * st**2),
        ("st_mixed_nonexpansion",
         spectral_norm(ms @ t.T),
         st),
        ("ts_mixed_nonexpansion",
         spectral_norm(mt @ s.T),
         st),
        ("tt_half_nonexpansion",
         spectral_norm(mt @ t.T),
         tt + eta * st**2),
    ]
    tol = 1e-9 * sr
    checks = tuple(
        InequalityCheck(name, float(lhs), float(rhs), lhs <= rhs + tol)
        for name, lhs, rhs in raw
    )
    return ContractionReport(checks=checks, eta=float(eta), tolerance=tol)


@dataclass(frozen=True)
class SampleCheck:
    name: str
    lhs: float
    rhs: float
    status: str  # pass | fail | vacuous


@dataclass(frozen=True)
class SampleContractionReport:
    checks: tuple
    hypothesis_held: bool  # |Delta|_2 within the assumed deviation envelope
    above_floor: bool  # D_t > 50 eps_stat, the regime of the contraction
    delta_lhs: float
    delta_rhs: float

    @property
    def all_ok(self):
        return all(c.status != "fail" for c in self.checks)


def _resolve_eta(config):
    eta = config.eta
    if eta == "theory":
        return 1.0 / (100.0 * float(np.asarray(config.ds, dtype=float)[0]))
    return float(eta)


def verify_sample_contraction(m_before, m_after, scales, config):
    """Check the finite-sample one-step contraction statements between two
    consecutive iterates.

    Verifies the ss / st contractions and the floored recursion
    A' <= (1 - eta A / 2) A, conditioned on the deviation hypothesis
    |Delta|_2 <= 10 sqrt(k d log d / n) D + 4 sqrt(d log d / n) sigma.
    A failed inequality whose hypothesis does not hold is vacuous.
    """
    if m_before.delta_norm is None:
        raise InputError("sample contraction check needs delta_norm on the before-iterate")
    if m_after.t != m_before.t + 1:
        raise InputError("iterates must be consecutive")
    ds = np.asarray(config.ds, dtype=float)
    sr = float(ds[-1])
    eta = _resolve_eta(config)
    d, k, n, sigma = config.d, config.k, config.n, config.sigma
    c_kd = np.sqrt(k * d * np.log(d) / n)
    c_d = np.sqrt(d * np.log(d) / n)
    tol = 1e-9 * sr

    delta_rhs = DELTA_HYP_D_FACTOR * c_kd * m_before.D + DELTA_HYP_SIGMA_FACTOR * c_d * sigma
    hypothesis_held = m_before.delta_norm <= delta_rhs + tol
    above_floor = m_before.D > FLOOR_MULTIPLIER * scales.eps_stat
    applicable = hypothesis_held and above_floor

    raw = [
        ("ss_sample_contraction",
         m_after.ss_err,
         (1 - 0.7 * eta * sr) * m_before.ss_err + c_kd * m_before.D + 0.4 * c_d * sigma),
        ("st_sample_contraction",
         m_after.st_norm,
         (1 - eta * sr) * m_before.st_norm + c_kd * m_before.D + 0.4 * c_d * sigma),
        ("floored_recursion",
         m_after.A,
         (1 - 0.5 * eta * m_before.A) * m_before.A),
    ]
    checks = []
    for name, lhs, rhs in raw:
        if lhs <= rhs + tol:
            status = "pass"
        elif not applicable:
            status = "vacuous"
        else:
            status = "fail"
        checks.append(SampleCheck(name, float(lhs), float(rhs), status))
    return SampleContractionReport(
        checks=tuple(checks),
        hypothesis_held=bool(hypothesis_held),
        above_floor=bool(above_floor),
        delta_lhs=float(m_before.delta_norm),
        delta_rhs=float(delta_rhs),
    )
