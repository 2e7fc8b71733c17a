"""Eigenvalue computation and empirical spectral statistics.

Everything downstream of an eigensolve lives here: windowed counting,
the empirical Stieltjes transform (1/N) tr (C - z)^{-1} and its direct
resolvent cross-check, Kolmogorov-Smirnov distance to the limit law, and
unfolded nearest-neighbor spacings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import law
from .ensembles import CompressedEnsemble
from .errors import DomainError, NumericalFailure

__all__ = [
    "Spectrum",
    "EmpiricalStieltjes",
    "SpacingSummary",
    "eigenvalues",
    "count_window",
    "counting_density",
    "empirical_stieltjes",
    "stieltjes_grid",
    "resolvent_trace_direct",
    "ks_distance",
    "spacing_stats",
]

_CLAMP_TOL = 1e-8


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues in [0, 1] plus run metadata."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=float))
        if vals.size and (vals[0] < -_CLAMP_TOL or vals[-1] > 1.0 + _CLAMP_TOL):
            raise NumericalFailure(
                f"eigenvalues escape [0,1] beyond roundoff: range [{vals[0]}, {vals[-1]}]"
            )
        object.__setattr__(self, "values", np.clip(vals, 0.0, 1.0))

    @property
    def size(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class EmpiricalStieltjes:
    """Value of (1/N) sum 1/(lambda_i - z) at one point z."""

    z: complex
    value: complex


def eigenvalues(ensemble: CompressedEnsemble, validate: bool = False,
                method: str = "auto", meta: dict | None = None) -> Spectrum:
    """Full spectrum of the compressed ensemble.

    ``auto`` exploits coordinate projections: the operator is B B* on the
    rank-r1 block (B the masked middle block) and zero elsewhere, so the
    spectrum is eig(B B*) plus N - r1 exact zeros, identical to the dense
    eigendecomposition.  ``dense`` forces the N x N path; ``validate`` also
    spot-checks five eigenpair residuals on the dense matrix.
    """
    n = ensemble.dim
    if n > ensemble.dense_cap:
        raise DomainError(f"eigensolve at N={n} exceeds dense cap {ensemble.dense_cap}")
    full_meta = dict(ensemble.meta)
    full_meta.update(meta or {})

    block = ensemble.compressed_block() if method == "auto" else None
    if block is not None and not validate:
        nonzero = np.linalg.eigvalsh(block @ block.conj().T)
        vals = np.concatenate([np.zeros(n - block.shape[0]), nonzero])
    else:
        dense = ensemble.dense()
        herm_defect = float(np.linalg.norm(dense - dense.conj().T, np.inf))
        if herm_defect > 1e-9:
            raise NumericalFailure(f"materialization is not Hermitian: defect {herm_defect:.3e}")
        if validate:
            w, v = np.linalg.eigh(dense)
            picks = np.linspace(0, n - 1, min(5, n)).astype(int)
            for i in picks:
                resid = np.linalg.norm(dense @ v[:, i] - w[i] * v[:, i])
                if resid > 1e-8:
                    raise NumericalFailure(f"eigenpair residual {resid:.3e} at index {i}")
            vals = w
        else:
            vals = np.linalg.eigvalsh(dense)
    return Spectrum(vals, meta=full_meta)


def count_window(spectrum: Spectrum, e: float, eta: float) -> int:
    """Number of eigenvalues in the closed window [E - eta/2, E + eta/2]."""
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    vals = spectrum.values
    lo = np.searchsorted(vals, e - eta / 2.0, side="left")
    hi = np.searchsorted(vals, e + eta / 2.0, side="right")
    return int(hi - lo)


def counting_density(spectrum: Spectrum, e: float, eta: float) -> float:
    """Window count normalized to a density estimate: N(E, eta) / (eta N)."""
    return count_window(spectrum, e, eta) / (eta * spectrum.size)


def count_window_grid(spectrum: Spectrum, es: np.ndarray, eta: float) -> np.ndarray:
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    vals = spectrum.values
    lo = np.searchsorted(vals, es - eta / 2.0, side="left")
    hi = np.searchsorted(vals, es + eta / 2.0, side="right")
    return (hi - lo).astype(np.int64)


def empirical_stieltjes(spectrum: Spectrum, z: complex) -> EmpiricalStieltjes:
    """(1/N) sum_i 1/(lambda_i - z); for real z it must avoid the spectrum."""
    z = complex(z)
    vals = spectrum.values
    if z.imag == 0.0:
        if 0.0 <= z.real <= 1.0 and vals.size and np.min(np.abs(vals - z.real)) < 1e-14:
            raise DomainError(f"z={z} collides with an eigenvalue")
    value = complex(np.mean(1.0 / (vals - z)))
    return EmpiricalStieltjes(z, value)


def stieltjes_grid(spectrum: Spectrum, zs: np.ndarray) -> np.ndarray:
    """Vectorized empirical transform over a grid of complex points."""
    zs = np.asarray(zs, dtype=np.complex128)
    return np.mean(1.0 / (spectrum.values[None, :] - zs[:, None]), axis=1)


def resolvent_trace_direct(ensemble: CompressedEnsemble, z: complex) -> complex:
    """(1/N) tr (C - zI)^{-1} by a factorization of the shifted dense matrix.

    Independent of the eigendecomposition path; used to cross-validate
    :func:`empirical_stieltjes`.
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("resolvent trace requires Im z > 0")
    shifted = ensemble.dense() - z * np.eye(ensemble.dim)
    try:
        lu, piv = scipy.linalg.lu_factor(shifted)
        inv = scipy.linalg.lu_solve((lu, piv), np.eye(ensemble.dim, dtype=np.complex128))
    except scipy.linalg.LinAlgError as exc:
        cond = np.linalg.cond(shifted, 1)
        raise NumericalFailure(f"resolvent solve broke down at z={z} (cond~{cond:.2e})") from exc
    return complex(np.trace(inv) / ensemble.dim)


def ks_distance(spectrum: Spectrum, params: law.LawParams) -> float:
    """sup_x |F_emp(x) - F_law(x)|, evaluated at eigenvalues and their left limits."""
    vals = spectrum.values
    n = vals.size
    if n == 0:
        return 0.0
    f_law = law.cdf_grid(params, vals)
    mass_zero, mass_one = law.atom_masses(params)
    f_law_left = f_law - np.where(vals == 0.0, mass_zero, 0.0) - np.where(
        vals == 1.0, mass_one, 0.0
    )
    # right-continuous empirical CDF; ties share the highest rank
    ecdf_hi = np.searchsorted(vals, vals, side="right") / n
    ecdf_lo = np.searchsorted(vals, vals, side="left") / n
    upper = np.max(np.abs(ecdf_hi - f_law))
    lower = np.max(np.abs(ecdf_lo - f_law_left))
    return float(max(upper, lower))


@dataclass(frozen=True)
class SpacingSummary:
    """Unfolded nearest-neighbor spacing statistics inside a spectral window."""

    mean: float
    variance: float
    hist_edges: np.ndarray
    hist_density: np.ndarray
    count: int


def spacing_stats(spectrum: Spectrum, window: law.SpectralWindow,
                  density_fn=None, bins: int = 24) -> SpacingSummary:
    """Spacings s_i = (lam_{i+1} - lam_i) * N * f(lam_i) for eigenvalues in the window.

    Unfolding uses the limit density by default (deterministic normalization);
    pass ``density_fn`` to unfold against another profile.
    """
    lo, hi = window.e_bounds
    vals = spectrum.values
    inside = vals[(vals >= lo) & (vals <= hi)]
    if inside.size < 10:
        raise DomainError(f"only {inside.size} eigenvalues in the window; need at least 10")
    if density_fn is None:
        local = law._density_array(window.params, inside[:-1])
    else:
        local = np.asarray([density_fn(x) for x in inside[:-1]], dtype=float)
    spacings = np.diff(inside) * spectrum.size * local
    hist, edges = np.histogram(spacings, bins=bins, density=True)
    return SpacingSummary(
        mean=float(np.mean(spacings)),
        variance=float(np.var(spacings)),
        hist_edges=edges,
        hist_density=hist,
        count=int(spacings.size),
    )
