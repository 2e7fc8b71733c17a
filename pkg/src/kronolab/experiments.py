"""Monte Carlo verification runs and their reports.

A run samples the ensemble per trial, computes the spectrum, and records
the two sup-deviations over an E-grid of the spectral window:

    sup_E |m(E + i eta) - m_law(E + i eta)|   and
    sup_E |N(E, eta) / (eta N) - f_law(E)|,

plus KS distance and atom-mass errors.  Seeding is fully deterministic:
per-trial seeds are a splitmix64 mix of (master_seed, trial, stream), so a
report is bit-identical no matter how many workers ran it.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import law, spectra
from .ensembles import (
    DENSE_CAP,
    KroneckerUnitary,
    UnitaryMatrix,
    build_ensemble,
    dft_unitary,
    make_projection,
    sample_haar,
)
from .errors import DataFormatError, DomainError, NumericalFailure
from .seeding import (
    STREAM_PROJ1,
    STREAM_PROJ2,
    STREAM_UNITARY,
    STREAM_V,
    derive_seed,
)
from .serialize import load_unitary

__all__ = [
    "ExperimentConfig",
    "TrialResult",
    "DeviationReport",
    "ConcentrationReport",
    "SweepResult",
    "eta_schedule",
    "run_kron_trials",
    "run_fixed_factor_trials",
    "concentration_probe",
    "fit_power_law",
    "convergence_sweep",
    "write_report",
    "load_report_config",
    "replay_report",
    "worker_count",
]

ATOM_TOL = 1e-6
PROBE_CAP = 1024


def worker_count() -> int:
    """Worker pool size; capped by the KRONO_THREADS environment variable."""
    raw = os.environ.get("KRONO_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError(f"KRONO_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def eta_schedule(n: int, s: float, beta: float, rho: float,
                 eta_ceiling: float = 0.5) -> float:
    """Asymptotic window height rho^{1/4} (ln n)^{s/2 + 5/2} / n^beta.

    At desk-scale n the formula exceeds any usable window, so values above
    ``eta_ceiling`` are clamped with a warning; runs therefore usually set
    eta directly and keep this schedule for illustration.
    """
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if s <= 0 or beta <= 0 or rho <= 0:
        raise DomainError(f"schedule parameters must be positive, got s={s}, beta={beta}, rho={rho}")
    value = rho**0.25 * math.log(n) ** (s / 2.0 + 2.5) / n**beta
    if value > eta_ceiling:
        warnings.warn(
            f"eta schedule gives {value:.4g} > ceiling {eta_ceiling}; clamping",
            stacklevel=2,
        )
        return eta_ceiling
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a verification run; everything needed for replay."""

    n: int
    p: float
    q: float
    eta: float
    kappa: float
    k: int = 1
    mode: str = "kron"  # "kron" | "fixed_factor"
    trials: int = 10
    master_seed: int = 1
    grid_points: int = 201
    proj1_kind: str = "coordinate"
    proj2_kind: str = "coordinate"
    n2: int | None = None
    v_spec: str | None = None
    eta_ceiling: float = 0.5
    dense_cap: int = DENSE_CAP
    # optional schedule bookkeeping (recorded, not enforced)
    c0: float | None = None
    s: float | None = None
    alpha: float | None = None
    beta: float | None = None
    rho: float | None = None

    def __post_init__(self):
        law.LawParams(self.p, self.q)  # validates the fractions
        if self.k < 1:
            raise DomainError(f"k must be at least 1, got {self.k}")
        if self.n < 2:
            raise DomainError(f"n must be at least 2, got {self.n}")
        if self.trials < 1:
            raise DomainError(f"trials must be at least 1, got {self.trials}")
        if self.grid_points < 2:
            raise DomainError(f"grid_points must be at least 2, got {self.grid_points}")
        if self.eta <= 0 or self.eta > self.eta_ceiling:
            raise DomainError(
                f"eta must lie in (0, {self.eta_ceiling}], got {self.eta}"
            )
        if self.mode not in ("kron", "fixed_factor"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.mode == "fixed_factor":
            if self.k != 1:
                raise DomainError("fixed_factor mode uses k=1 with a second factor")
            if self.v_spec is None:
                raise DomainError("fixed_factor mode requires v_spec")

    @property
    def params(self) -> law.LawParams:
        return law.LawParams(self.p, self.q)

    @property
    def ambient_dim(self) -> int:
        if self.mode == "fixed_factor":
            if self.n2 is None:
                raise DomainError("fixed_factor mode requires n2")
            return self.n * self.n2
        return self.n**self.k

    def window(self) -> law.SpectralWindow:
        return law.SpectralWindow(self.params, self.kappa, self.eta, self.eta_ceiling)

    def hypothesis_satisfied(self) -> bool:
        """k <= c0 ln n with c0 < 1/2 (natural log; c0 defaults to 0.499)."""
        c0 = self.c0 if self.c0 is not None else 0.499
        return self.k <= c0 * math.log(self.n)

    def exponent_budget(self) -> float | None:
        """alpha + 2 beta when the schedule parameters are set (else None)."""
        if self.alpha is None or self.beta is None:
            return None
        return self.alpha + 2.0 * self.beta

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(**data)


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    sup_m_dev: float
    sup_count_dev: float
    ks: float
    atom0_err: float
    atom1_err: float
    wall_ms: float


@dataclass(frozen=True)
class DeviationReport:
    config: ExperimentConfig
    eta_used: float
    e_lo: float
    e_hi: float
    trials: tuple[TrialResult, ...]
    mean_sup_m_dev: float
    max_sup_m_dev: float
    mean_sup_count_dev: float
    max_sup_count_dev: float
    mean_ks: float
    max_ks: float
    mean_atom0_err: float
    mean_atom1_err: float
    reference_bound: float | None
    interrupted: bool = False
    per_e: dict | None = None

    def __post_init__(self):
        if not self.trials:
            raise DomainError("a report needs at least one completed trial")


def _aggregate(config: ExperimentConfig, eta: float, e_lo: float, e_hi: float,
               trials: list[TrialResult], interrupted: bool = False,
               per_e: dict | None = None) -> DeviationReport:
    if not trials:
        raise DomainError("a report needs at least one completed trial")
    sup_m = [t.sup_m_dev for t in trials]
    sup_c = [t.sup_count_dev for t in trials]
    ks = [t.ks for t in trials]
    ref = None
    if config.alpha is not None:
        ref = 1.0 / (config.n**config.alpha * config.kappa**2)
    return DeviationReport(
        config=config,
        eta_used=eta,
        e_lo=e_lo,
        e_hi=e_hi,
        trials=tuple(trials),
        mean_sup_m_dev=float(np.mean(sup_m)),
        max_sup_m_dev=float(np.max(sup_m)),
        mean_sup_count_dev=float(np.mean(sup_c)),
        max_sup_count_dev=float(np.max(sup_c)),
        mean_ks=float(np.mean(ks)),
        max_ks=float(np.max(ks)),
        mean_atom0_err=float(np.mean([t.atom0_err for t in trials])),
        mean_atom1_err=float(np.mean([t.atom1_err for t in trials])),
        reference_bound=ref,
        interrupted=interrupted,
        per_e=per_e,
    )


def _build_projection(kind: str, dim: int, fraction: float, seed: int, dense_cap: int):
    if kind == "coordinate":
        return make_projection("coordinate", dim, fraction)
    if kind == "haar_rotated":
        return make_projection("haar_rotated", dim, fraction, seed=seed, dense_cap=dense_cap)
    raise DomainError(f"unsupported projection kind for runs: {kind!r}")


def resolve_fixed_factor(spec: str, n2: int | None, master_seed: int) -> UnitaryMatrix:
    """Build the deterministic second tensor factor from its config string."""
    if spec == "identity":
        if n2 is None:
            raise DomainError("identity factor needs n2")
        return UnitaryMatrix(np.eye(n2, dtype=np.complex128))
    if spec == "dft":
        if n2 is None:
            raise DomainError("dft factor needs n2")
        return dft_unitary(n2)
    if spec.startswith("haar:"):
        if n2 is None:
            raise DomainError("haar factor needs n2")
        return sample_haar(n2, int(spec.split(":", 1)[1]))
    if spec == "haar_fixed":
        if n2 is None:
            raise DomainError("haar factor needs n2")
        return sample_haar(n2, derive_seed(master_seed, STREAM_V))
    if spec.startswith("file:"):
        path = spec.split(":", 1)[1]
        u = load_unitary(path)
        u.validate(1e-10)
        if n2 is not None and u.dim != n2:
            raise DataFormatError(f"factor file has size {u.dim}, expected {n2}")
        return u
    raise DomainError(f"unknown factor specification {spec!r}")


def _trial_statistics(config: ExperimentConfig, spectrum: spectra.Spectrum,
                      es: np.ndarray, law_m: np.ndarray, law_f: np.ndarray,
                      eta: float) -> tuple[float, float, float, float, float, dict]:
    n_dim = spectrum.size
    zs = es + 1j * eta
    emp_m = spectra.stieltjes_grid(spectrum, zs)
    m_dev = np.abs(emp_m - law_m)
    counts = spectra.count_window_grid(spectrum, es, eta)
    count_dev = np.abs(counts / (eta * n_dim) - law_f)
    ks = spectra.ks_distance(spectrum, config.params)
    mass_zero, mass_one = law.atom_masses(config.params)
    frac_zero = float(np.mean(spectrum.values < ATOM_TOL))
    frac_one = float(np.mean(spectrum.values > 1.0 - ATOM_TOL))
    per_e = {"m_dev": m_dev, "count_dev": count_dev}
    return (
        float(np.max(m_dev)),
        float(np.max(count_dev)),
        float(ks),
        abs(frac_zero - mass_zero),
        abs(frac_one - mass_one),
        per_e,
    )


def _run_trials(config: ExperimentConfig, build_middle, keep_per_e: bool) -> DeviationReport:
    if config.ambient_dim > config.dense_cap:
        raise DomainError(
            f"ambient dimension {config.ambient_dim} exceeds dense cap {config.dense_cap}"
        )
    window = config.window()  # validates the window is nonempty
    es = window.e_grid(config.grid_points)
    params = config.params
    law_m = law.stieltjes(params, es + 1j * config.eta)
    law_f = law._density_array(params, es)
    dim = config.ambient_dim

    def one_trial(t: int) -> tuple[TrialResult, dict]:
        t0 = time.perf_counter()
        seed_u = derive_seed(config.master_seed, t, STREAM_UNITARY)
        middle = build_middle(seed_u)
        proj1 = _build_projection(
            config.proj1_kind, dim, config.p,
            derive_seed(config.master_seed, t, STREAM_PROJ1), config.dense_cap,
        )
        proj2 = _build_projection(
            config.proj2_kind, dim, config.q,
            derive_seed(config.master_seed, t, STREAM_PROJ2), config.dense_cap,
        )
        ensemble = build_ensemble(proj1, proj2, middle, dense_cap=config.dense_cap)
        spectrum = spectra.eigenvalues(ensemble)
        sup_m, sup_c, ks, a0, a1, per_e = _trial_statistics(
            config, spectrum, es, law_m, law_f, config.eta
        )
        wall_ms = (time.perf_counter() - t0) * 1e3
        return TrialResult(t, seed_u, sup_m, sup_c, ks, a0, a1, wall_ms), per_e

    workers = worker_count()
    results: list[tuple[TrialResult, dict] | None] = [None] * config.trials
    interrupted = False
    try:
        if workers == 1:
            for t in range(config.trials):
                results[t] = one_trial(t)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for t, res in enumerate(pool.map(one_trial, range(config.trials))):
                    results[t] = res
    except KeyboardInterrupt:
        interrupted = True

    done = [r for r in results if r is not None]
    if not done:
        raise KeyboardInterrupt("interrupted before any trial completed")
    trials = [r[0] for r in done]
    per_e = None
    if keep_per_e:
        per_e = {
            "e": es.tolist(),
            "mean_m_dev": np.mean([r[1]["m_dev"] for r in done], axis=0).tolist(),
            "mean_count_dev": np.mean([r[1]["count_dev"] for r in done], axis=0).tolist(),
        }
    e_lo, e_hi = window.e_bounds
    return _aggregate(config, config.eta, e_lo, e_hi, trials, interrupted, per_e)


def run_kron_trials(config: ExperimentConfig, keep_per_e: bool = False) -> DeviationReport:
    """Monte Carlo deviations for  Pi_1 U^(x)k Pi_2 U^(x)k* Pi_1  with Haar U."""
    if config.mode != "kron":
        raise DomainError(f"run_kron_trials needs mode='kron', got {config.mode!r}")

    def build_middle(seed_u: int) -> KroneckerUnitary:
        return KroneckerUnitary(sample_haar(config.n, seed_u), power=config.k)

    return _run_trials(config, build_middle, keep_per_e)


def run_fixed_factor_trials(config: ExperimentConfig, keep_per_e: bool = False) -> DeviationReport:
    """Monte Carlo deviations for  Pi_1 (U (x) V) Pi_2 (U (x) V)* Pi_1  with fixed V."""
    if config.mode != "fixed_factor":
        raise DomainError(
            f"run_fixed_factor_trials needs mode='fixed_factor', got {config.mode!r}"
        )
    v = resolve_fixed_factor(config.v_spec, config.n2, config.master_seed)

    def build_middle(seed_u: int) -> KroneckerUnitary:
        u = sample_haar(config.n, seed_u)
        if v.dim == 1:
            # a scalar second factor is a global phase; drop the tensor leg
            return KroneckerUnitary(UnitaryMatrix(u.entries * v.entries[0, 0]), power=1)
        return KroneckerUnitary(u, power=1, factor_v=v)

    return _run_trials(config, build_middle, keep_per_e)


def run_config(config: ExperimentConfig, keep_per_e: bool = False) -> DeviationReport:
    """Dispatch on config.mode."""
    if config.mode == "kron":
        return run_kron_trials(config, keep_per_e)
    return run_fixed_factor_trials(config, keep_per_e)


# --- concentration probe ----------------------------------------------------


@dataclass(frozen=True)
class ConcentrationReport:
    """Leave-one-out quadratic forms w_j* P R_j(z) P w_j over one or many draws."""

    z: complex
    n: int
    k: int
    draws: int
    distinct_count: int
    d_hat: complex            # mean over distinct-tuple indices and draws
    delta_hat: float          # max |form_j - d_hat| over the same set
    cross_draw_variance: float
    per_draw_means: tuple[complex, ...]
    repeated_mean: complex | None  # mean over repeated-index columns (k >= 2)

    def __post_init__(self):
        if self.d_hat.imag <= 0:
            raise NumericalFailure(f"Im D_hat = {self.d_hat.imag} is not positive")


def distinct_tuple_indices(n: int, k: int) -> np.ndarray:
    """Flat indices whose index tuple has k pairwise-distinct components."""
    if k == 1:
        return np.arange(n)
    idx = np.indices((n,) * k).reshape(k, -1)
    distinct = np.ones(idx.shape[1], dtype=bool)
    for a in range(k):
        for b in range(a + 1, k):
            distinct &= idx[a] != idx[b]
    return np.nonzero(distinct)[0]


def leave_one_out_forms(ensemble_block: np.ndarray, w: np.ndarray, mask_p: np.ndarray,
                        q_diag: np.ndarray, z: complex) -> np.ndarray:
    """All N quadratic forms w_j* P R_j(z) P w_j from one full resolvent.

    R_j removes the rank-one contribution Q_jj P w_j w_j* P, so by the
    Sherman-Morrison downdate the form equals g_j / (1 - Q_jj g_j) with
    g_j = w_j* P R(z) P w_j; this replaces N dense inversions by one.
    """
    r_block = np.linalg.inv(ensemble_block - z * np.eye(ensemble_block.shape[0]))
    wp = w[mask_p, :]
    g = np.einsum("ij,ij->j", wp.conj(), r_block @ wp)
    denom = 1.0 - q_diag * g
    if np.any(np.abs(denom) < 1e-12):
        raise NumericalFailure(f"singular leave-one-out resolvent at z={z}")
    return g / denom


def concentration_probe(config: ExperimentConfig, z: complex, draws: int,
                        keep_forms: bool = False):
    """Spread of the leave-one-out quadratic forms at a comfortably complex z.

    Works in the coordinate frame: W = W1* U^(x)k W2* with coordinate cores
    P, Q of ranks floor(p N), floor(q N).  Requires Im z >= 0.3 (the easy
    region where the resolvent is well conditioned) and small N, since every
    draw materializes W densely.
    """
    z = complex(z)
    if z.imag < 0.3:
        raise DomainError(f"probe requires Im z >= 0.3, got {z.imag}")
    if draws < 1:
        raise DomainError("need at least one draw")
    dim = config.n**config.k
    if dim > PROBE_CAP:
        raise DomainError(f"probe dimension {dim} exceeds cap {PROBE_CAP}")
    r1 = int(math.floor(config.p * dim + 1e-9))
    r2 = int(math.floor(config.q * dim + 1e-9))
    mask_p = np.arange(r1)
    q_diag = np.zeros(dim)
    q_diag[:r2] = 1.0
    distinct = distinct_tuple_indices(config.n, config.k)
    repeated = np.setdiff1d(np.arange(dim), distinct)

    all_forms = np.empty((draws, dim), dtype=np.complex128)
    for d in range(draws):
        seed_u = derive_seed(config.master_seed, d, STREAM_UNITARY)
        u = sample_haar(config.n, seed_u)
        w = KroneckerUnitary(u, power=config.k).dense()
        if config.proj1_kind == "haar_rotated":
            w1 = sample_haar(dim, derive_seed(config.master_seed, d, STREAM_PROJ1))
            w = w1.entries.conj().T @ w
        if config.proj2_kind == "haar_rotated":
            w2 = sample_haar(dim, derive_seed(config.master_seed, d, STREAM_PROJ2))
            w = w @ w2.entries.conj().T
        b = w[np.ix_(mask_p, np.arange(r2))]
        block = b @ b.conj().T
        all_forms[d] = leave_one_out_forms(block, w, mask_p, q_diag, z)

    distinct_forms = all_forms[:, distinct]
    d_hat = complex(np.mean(distinct_forms))
    delta_hat = float(np.max(np.abs(distinct_forms - d_hat)))
    per_draw = tuple(complex(v) for v in np.mean(distinct_forms, axis=1))
    cross_var = float(np.var(np.abs(np.asarray(per_draw) - d_hat)))
    repeated_mean = complex(np.mean(all_forms[:, repeated])) if repeated.size else None
    report = ConcentrationReport(
        z=z, n=config.n, k=config.k, draws=draws,
        distinct_count=int(distinct.size), d_hat=d_hat, delta_hat=delta_hat,
        cross_draw_variance=cross_var, per_draw_means=per_draw,
        repeated_mean=repeated_mean,
    )
    if keep_forms:
        return report, all_forms
    return report


# --- convergence sweep ------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    sizes: tuple[int, ...]
    deviations: tuple[float, ...]
    slope: float
    stderr: float
    intercept: float


def fit_power_law(sizes, deviations) -> tuple[float, float, float]:
    """Least-squares slope of log(deviation) against log(size).

    Returns (slope, standard error of the slope, intercept).
    """
    sizes = np.asarray(sizes, dtype=float)
    deviations = np.asarray(deviations, dtype=float)
    if sizes.size < 3:
        raise DomainError(f"need at least 3 sizes, got {sizes.size}")
    if np.any(deviations <= 0):
        raise DomainError("deviations must be positive for a log-log fit")
    x = np.log(sizes)
    y = np.log(deviations)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    dof = x.size - 2
    sigma2 = float(np.sum(resid**2) / dof) if dof > 0 else 0.0
    stderr = math.sqrt(sigma2 / sxx)
    return slope, stderr, intercept


def convergence_sweep(configs, statistic: str = "mean_sup_m_dev",
                      reports: list[DeviationReport] | None = None) -> SweepResult:
    """Run configs of increasing ambient size and fit the deviation decay rate.

    Precomputed ``reports`` (matching ``configs`` positionally) are reused
    instead of rerunning.
    """
    configs = list(configs)
    if len(configs) < 3:
        raise DomainError(f"need at least 3 sizes, got {len(configs)}")
    sizes = [c.ambient_dim for c in configs]
    if sorted(sizes) != sizes or len(set(sizes)) != len(sizes):
        raise DomainError("configs must come in strictly increasing ambient size")
    if reports is None:
        reports = [run_config(c) for c in configs]
    devs = [getattr(r, statistic) for r in reports]
    slope, stderr, intercept = fit_power_law(sizes, devs)
    return SweepResult(tuple(sizes), tuple(devs), slope, stderr, intercept)


# --- report I/O --------------------------------------------------------------

CSV_COLUMNS = [
    "trial", "n", "k", "N", "p", "q", "eta", "kappa", "grid_points",
    "sup_m_dev", "sup_count_dev", "ks", "atom0_err", "seed", "wall_ms",
]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_report(report: DeviationReport, path: str, fmt: str = "csv") -> None:
    """Persist a report.

    CSV is the byte-reproducible artifact: identical config and seed give
    identical bytes, so the volatile wall_ms column is written as 0 there.
    JSON carries the full config echo, per-trial results, measured timings,
    and (when kept) the per-E deviation arrays.
    """
    cfg = report.config
    if fmt == "csv":
        try:
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                for t in report.trials:
                    writer.writerow([
                        t.trial, cfg.n, cfg.k, cfg.ambient_dim,
                        _fmt(cfg.p), _fmt(cfg.q), _fmt(report.eta_used), _fmt(cfg.kappa),
                        cfg.grid_points, _fmt(t.sup_m_dev), _fmt(t.sup_count_dev),
                        _fmt(t.ks), _fmt(t.atom0_err), t.seed, 0,
                    ])
        except OSError as exc:
            raise DataFormatError(f"cannot write CSV report to {path}: {exc}") from exc
    elif fmt == "json":
        payload = report_to_dict(report)
        try:
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise DataFormatError(f"cannot write JSON report to {path}: {exc}") from exc
    else:
        raise DomainError(f"unknown report format {fmt!r}")


def report_to_dict(report: DeviationReport) -> dict:
    cfg = report.config
    return {
        "schema": "kronolab.report.v1",
        "config": cfg.to_dict(),
        "window": {"e_lo": report.e_lo, "e_hi": report.e_hi, "eta": report.eta_used},
        "aggregates": {
            "mean_sup_m_dev": report.mean_sup_m_dev,
            "max_sup_m_dev": report.max_sup_m_dev,
            "mean_sup_count_dev": report.mean_sup_count_dev,
            "max_sup_count_dev": report.max_sup_count_dev,
            "mean_ks": report.mean_ks,
            "max_ks": report.max_ks,
            "mean_atom0_err": report.mean_atom0_err,
            "mean_atom1_err": report.mean_atom1_err,
        },
        "reference_bound": report.reference_bound,
        "interrupted": report.interrupted,
        "trials": [asdict(t) for t in report.trials],
        "per_e": report.per_e,
    }


def load_report_config(path: str) -> ExperimentConfig:
    """Recover the run configuration from a JSON report."""
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot parse report {path}: {exc}") from exc
    if payload.get("schema") != "kronolab.report.v1":
        raise DataFormatError(f"{path} is not a kronolab report")
    return ExperimentConfig.from_dict(payload["config"])


def replay_report(path: str) -> tuple[DeviationReport, bool]:
    """Re-run a JSON report's config and compare all deterministic numbers.

    Returns the fresh report and whether it matches the stored one exactly
    (timings excluded).
    """
    with open(path) as fh:
        stored = json.load(fh)
    config = ExperimentConfig.from_dict(stored["config"])
    fresh = run_config(config, keep_per_e=stored.get("per_e") is not None)
    fresh_dict = report_to_dict(fresh)
    match = _reports_equal(stored, fresh_dict)
    return fresh, match


def _reports_equal(a: dict, b: dict) -> bool:
    keys = ["config", "window", "aggregates", "reference_bound", "per_e"]
    if any(a.get(k) != b.get(k) for k in keys):
        return False
    ta, tb = a["trials"], b["trials"]
    if len(ta) != len(tb):
        return False
    for ra, rb in zip(ta, tb):
        for key in ("trial", "seed", "sup_m_dev", "sup_count_dev", "ks",
                    "atom0_err", "atom1_err"):
            if ra[key] != rb[key]:
                return False
    return True
