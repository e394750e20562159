"""Experiment orchestration: configured runs, parameter sweeps, and
convergence-phase detection.

A run builds the ground truth and sensing set from its seed, iterates the
factored gradient step, and records per-iteration subspace metrics.  Runs
are deterministic per config; sweeps derive one seed per grid cell and
merge results in grid order regardless of worker count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivergenceError, InputError
from .gradient import population_gradient
from .linalg import frobenius_norm, spectral_norm
from .problem import DISTRIBUTIONS, MEMORY_MODES, generate_ground_truth, generate_sensing
from .rng import stable_hash64
from .subspace import (
    derived_scales,
    metrics_from_parts,
    planted_init,
    random_init,
    spectral_init,
)

INIT_MODES = ("planted", "spectral", "random")
GRADIENT_MODES = ("sample", "population")
SWEEP_PARAMS = ("n", "k", "sigma", "d")

DIVERGENCE_FACTOR = 1e6  # abort when err_spec > 1e6 * sigma_1
PLATEAU_FRACTION = 0.10  # final fraction of iterations defining the plateau
BURN_IN_FRACTION = 0.05  # iterations skipped before the envelope check


def worker_count():
    """Worker threads for sweeps; capped by the MSENSE_THREADS env var."""
    cap = os.environ.get("MSENSE_THREADS")
    default = os.cpu_count() or 1
    if cap is None:
        return default
    try:
        cap = int(cap)
    except ValueError:
        raise InputError(f"MSENSE_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(default, cap))


@dataclass(frozen=True)
class InitSpec:
    mode: str = "planted"
    rho: float = 0.07
    scale: float = 0.1

    def __post_init__(self):
        if self.mode not in INIT_MODES:
            raise InputError(f"init.mode must be one of {INIT_MODES}, got {self.mode!r}")
        if self.rho <= 0:
            raise InputError(f"init.rho must be positive, got {self.rho}")
        if self.scale <= 0:
            raise InputError(f"init.scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of one run; mirrors the JSON config file field for field."""

    d: int
    r: int
    k: int
    n: int
    iters: int
    seed: int
    sigma: float = 0.0
    ds: tuple = (1.0, 0.9, 0.8)
    dt: object = "zeros"
    eta: object = 0.1  # positive float or "theory" for 1/(100 sigma_1)
    init: InitSpec = field(default_factory=InitSpec)
    gradient_mode: str = "sample"
    distribution: str = "gaussian"
    track_delta: bool = False
    delta_every: int = 1
    memory_mode: str = "dense"
    output: str | None = None

    def __post_init__(self):
        if self.k < 1:
            raise InputError(f"k must be >= 1, got {self.k}")
        if self.iters < 1:
            raise InputError(f"iters must be >= 1, got {self.iters}")
        if self.n < 1:
            raise InputError(f"n must be >= 1, got {self.n}")
        if self.sigma < 0:
            raise InputError(f"sigma must be >= 0, got {self.sigma}")
        if len(self.ds) != self.r:
            raise InputError(f"ds must have length r={self.r}, got {len(self.ds)}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise InputError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if self.distribution not in DISTRIBUTIONS:
            raise InputError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.memory_mode not in MEMORY_MODES:
            raise InputError(f"memory_mode must be one of {MEMORY_MODES}")
        if self.delta_every < 1:
            raise InputError(f"delta_every must be >= 1, got {self.delta_every}")
        if self.init.mode == "planted" and self.k < self.r:
            raise InputError("planted initialization requires k >= r")
        if self.init.mode == "spectral" and self.gradient_mode == "population":
            raise InputError("spectral initialization needs a sensing set (sample mode)")
        if not (self.eta == "theory" or (isinstance(self.eta, (int, float)) and self.eta > 0)):
            raise InputError(f"eta must be a positive number or 'theory', got {self.eta!r}")

    @property
    def sigma1(self):
        return float(self.ds[0])

    @property
    def sigma_r(self):
        return float(self.ds[-1])

    def eta_value(self):
        if self.eta == "theory":
            return 1.0 / (100.0 * self.sigma1)
        return float(self.eta)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "init" in data:
            if not isinstance(data["init"], dict):
                raise InputError("init must be an object")
            init_known = {f for f in InitSpec.__dataclass_fields__}
            init_unknown = set(data["init"]) - init_known
            if init_unknown:
                raise InputError(f"unknown init keys: {sorted(init_unknown)}")
            data["init"] = InitSpec(**data["init"])
        if "ds" in data:
            data["ds"] = tuple(float(x) for x in data["ds"])
        if "dt" in data and not isinstance(data["dt"], str):
            data["dt"] = tuple(float(x) for x in data["dt"])
        missing = {"d", "r", "k", "n", "iters", "seed"} - set(data)
        if missing:
            raise InputError(f"missing required config keys: {sorted(missing)}")
        return cls(**data)

    def to_dict(self):
        out = {
            "d": self.d, "r": self.r, "k": self.k, "n": self.n,
            "iters": self.iters, "seed": self.seed, "sigma": self.sigma,
            "ds": list(self.ds),
            "dt": self.dt if isinstance(self.dt, str) else list(self.dt),
            "eta": self.eta,
            "init": {"mode": self.init.mode, "rho": self.init.rho, "scale": self.init.scale},
            "gradient_mode": self.gradient_mode,
            "distribution": self.distribution,
            "track_delta": self.track_delta,
            "delta_every": self.delta_every,
            "memory_mode": self.memory_mode,
            "output": self.output,
        }
        return out


@dataclass
class Trajectory:
    config: ExperimentConfig
    metrics: list
    elapsed_ms: list

    def column(self, name):
        from .csvio import metrics_column

        return metrics_column(self.metrics, name)


def _initial_factor(config, gt, sensing):
    if config.init.mode == "planted":
        return planted_init(gt, config.k, config.init.rho, config.seed)
    if config.init.mode == "spectral":
        return spectral_init(sensing, config.k)
    return random_init(config.d, config.k, config.init.scale, config.seed)


def run_experiment(config, write_output=True):
    """Run one configured experiment and return its Trajectory.

    Records metrics for the initial factor (t=0) and after each of the
    ``iters`` steps.  Aborts with DivergenceError (carrying the partial
    trajectory) when err_spec exceeds 1e6 sigma_1.
    """
    gt = generate_ground_truth(config.d, config.r, config.ds, config.dt, config.seed)
    population = config.gradient_mode == "population"
    sensing = None
    model = None
    if not population:
        sensing = generate_sensing(
            gt, config.n, config.sigma, config.distribution, config.seed, config.memory_mode
        )
        model = sensing.quadratic_model()
    scales = derived_scales(gt, None if population else config.n, config.sigma, config.k)
    eta = config.eta_value()
    state = _initial_factor(config, gt, sensing)
    f = state.F

    metrics = []
    elapsed = []
    guard = DIVERGENCE_FACTOR * gt.sigma1
    last = time.perf_counter()
    for t in range(config.iters + 1):
        if population:
            grad = population_gradient(f, gt)
            delta_norm = 0.0 if config.track_delta and t % config.delta_every == 0 else None
        else:
            grad = model.gradient(f)
            delta_norm = None
            if config.track_delta and t % config.delta_every == 0:
                delta_norm = spectral_norm(model.deviation(f, gt.Xstar))
        row = metrics_from_parts(t, f, gt, scales, frobenius_norm(grad), delta_norm)
        now = time.perf_counter()
        metrics.append(row)
        elapsed.append((now - last) * 1000.0)
        last = now
        if not np.isfinite(row.err_spec) or row.err_spec > guard:
            partial = Trajectory(config=config, metrics=metrics, elapsed_ms=elapsed)
            raise DivergenceError(
                f"run diverged at t={t}: err_spec={row.err_spec:.3e} > {guard:.3e}",
                trajectory=partial,
                residual=row.err_spec,
            )
        if t < config.iters:
            f = f - eta * grad

    traj = Trajectory(config=config, metrics=metrics, elapsed_ms=elapsed)
    if write_output and config.output:
        from .csvio import write_trajectory_csv

        write_trajectory_csv(traj, config.output)
    return traj


@dataclass(frozen=True)
class CellResult:
    param: str
    value: object
    cell_seed: int
    plateau_err_fro: float | None
    plateau_err_fro_sq: float | None
    D_final: float | None
    status: str  # ok | diverged


@dataclass(frozen=True)
class SweepResult:
    param: str
    values: tuple
    rows: tuple
    slope: float | None  # log-log slope of plateau err_fro^2 vs n
    intercept: float | None


def _cell_config(base, param, value):
    if param == "n":
        return replace(base, n=int(value), output=None)
    if param == "k":
        return replace(base, k=int(value), output=None)
    if param == "sigma":
        return replace(base, sigma=float(value), output=None)
    if param == "d":
        return replace(base, d=int(value), output=None)
    raise InputError(f"sweep param must be one of {SWEEP_PARAMS}, got {param!r}")


def _run_cell(base, param, value):
    cell_seed = (base.seed ^ stable_hash64(param, value)) % 2**64
    config = replace(_cell_config(base, param, value), seed=cell_seed)
    try:
        traj = run_experiment(config, write_output=False)
    except DivergenceError:
        return CellResult(param, value, cell_seed, None, None, None, "diverged")
    err = traj.column("err_fro")
    window = max(1, int(np.ceil(len(err) * PLATEAU_FRACTION)))
    plateau = float(np.median(err[-window:]))
    return CellResult(
        param=param,
        value=value,
        cell_seed=cell_seed,
        plateau_err_fro=plateau,
        plateau_err_fro_sq=plateau**2,
        D_final=float(traj.metrics[-1].D),
        status="ok",
    )


def sweep(base_config, param, values, out=None):
    """One run per grid value with derived cell seeds; cells execute
    concurrently and results merge in grid order."""
    if param not in SWEEP_PARAMS:
        raise InputError(f"sweep param must be one of {SWEEP_PARAMS}, got {param!r}")
    values = list(values)
    if len(values) < 1:
        raise InputError("sweep needs at least one value")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InputError("sweep values must be strictly increasing")
    for v in values:
        _cell_config(base_config, param, v)  # validate every cell up front

    workers = min(worker_count(), len(values))
    if workers == 1:
        rows = [_run_cell(base_config, param, v) for v in values]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _run_cell(base_config, param, v), values))

    slope = intercept = None
    if param == "n" and base_config.sigma > 0:
        ok = [(r.value, r.plateau_err_fro_sq) for r in rows if r.status == "ok"]
        positive = [(v, p) for v, p in ok if p and p > 0]
        if len(positive) >= 2:
            lx = np.log([v for v, _ in positive])
            ly = np.log([p for _, p in positive])
            slope_, intercept_ = np.polyfit(lx, ly, 1)
            slope, intercept = float(slope_), float(intercept_)

    result = SweepResult(
        param=param, values=tuple(values), rows=tuple(rows), slope=slope, intercept=intercept
    )
    if out:
        from .csvio import write_sweep_csv

        write_sweep_csv(result, out)
    return result


@dataclass(frozen=True)
class PhaseReport:
    head_window: tuple | None  # (t0, t1) of the fitted geometric stretch
    head_slope: float | None  # d log(ss_err) / dt over the head window
    head_r2: float | None
    tail_c: float | None  # constant in D ~ c/t (or A ~ c/t when noisy)
    tail_residual: float | None  # relative l2 residual of the c/t fit
    recursion_pass_rate: float | None  # fraction of steps with A' <= (1 - eta A/2) A
    envelope_pass: bool | None  # A_t <= 4/(eta t + 4/A_0) past burn-in
    eta: float | None


def _linear_fit_r2(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = np.var(y) * len(y)
    r2 = 1.0 if total == 0 else 1.0 - float(np.sum(resid**2)) / float(total)
    return float(slope), float(intercept), r2


def detect_phases(traj, config=None, eta=None):
    """Fit the linear-then-sublinear structure of a trajectory.

    Head: linear fit of log(ss_err) over the first contiguous decreasing
    stretch, right edge chosen on a coarse grid maximizing R^2.  Tail: c/t
    fit over the final 50% of iterations against D (noiseless) or A (noisy).
    Also reports the pass rate of the one-step floored recursion and whether
    the 4/(eta t + 4/A_0) envelope holds past the burn-in.
    """
    metrics = traj.metrics if hasattr(traj, "metrics") else list(traj)
    if len(metrics) < 50:
        raise InputError(f"need at least 50 recorded iterations, got {len(metrics)}")
    if config is not None:
        eta = config.eta_value()
        noisy = config.sigma > 0 and config.gradient_mode == "sample"
    else:
        a_col = np.array([m.A for m in metrics])
        d_col = np.array([m.D for m in metrics])
        noisy = bool(np.any(a_col < d_col))

    t = np.array([m.t for m in metrics], dtype=float)
    ss = np.array([m.ss_err for m in metrics])
    d_vals = np.array([m.D for m in metrics])
    a_vals = np.array([m.A for m in metrics])

    # Head fit.
    head_window = head_slope = head_r2 = None
    dec = ss[1:] < ss[:-1]
    start = None
    for i, flag in enumerate(dec):
        if flag:
            start = i
            break
    if start is not None and np.all(ss[start:] > 0):
        end = start + 1
        while end < len(ss) - 1 and ss[end + 1] < ss[end]:
            end += 1
        if end - start >= 10:
            candidates = np.unique(
                np.linspace(start + 10, end, num=min(20, end - start - 9), dtype=int)
            )
            best = None
            for cand in candidates:
                sl, _, r2 = _linear_fit_r2(t[start : cand + 1], np.log(ss[start : cand + 1]))
                if best is None or r2 > best[2] + 1e-12:
                    best = (int(cand), sl, r2)
            head_window = (int(t[start]), best[0])
            head_slope, head_r2 = best[1], best[2]

    # Tail fit on the final 50%.
    tail_c = tail_residual = None
    half = len(metrics) // 2
    y = (a_vals if noisy else d_vals)[half:]
    tt = t[half:]
    mask = tt > 0
    if np.any(mask) and np.any(y[mask] > 0):
        tt, y = tt[mask], y[mask]
        c = float(np.sum(y / tt) / np.sum(1.0 / tt**2))
        denom = float(np.linalg.norm(y))
        tail_c = c
        tail_residual = float(np.linalg.norm(y - c / tt)) / denom if denom > 0 else 0.0

    # Recursion pass rate and envelope.
    recursion_pass_rate = None
    envelope_pass = None
    if eta is not None:
        tol = 1e-12 * max(1.0, a_vals[0])
        lhs = a_vals[1:]
        rhs = (1.0 - 0.5 * eta * a_vals[:-1]) * a_vals[:-1]
        recursion_pass_rate = float(np.mean(lhs <= rhs + tol))
        a0 = a_vals[0]
        burn = int(np.ceil(len(metrics) * BURN_IN_FRACTION))
        if a0 <= 0:
            envelope_pass = bool(np.all(a_vals[burn:] <= tol))
        else:
            bound = 4.0 / (eta * t[burn:] + 4.0 / a0)
            envelope_pass = bool(np.all(a_vals[burn:] <= bound + tol))

    return PhaseReport(
        head_window=head_window,
        head_slope=head_slope,
        head_r2=head_r2,
        tail_c=tail_c,
        tail_residual=tail_residual,
        recursion_pass_rate=recursion_pass_rate,
        envelope_pass=envelope_pass,
        eta=eta,
    )
