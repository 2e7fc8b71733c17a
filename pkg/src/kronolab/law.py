"""The MANOVA limit law for two-sided compressions of Haar unitaries.

For compression ratios ``p, q in (0, 1)`` the limiting spectral measure is

    (1 - min(p,q)) delta_0 + max(p+q-1, 0) delta_1
        + sqrt((lam_plus - x)(x - lam_minus)) / (2 pi x (1-x)) on [lam_minus, lam_plus],

with bulk edges ``lam_pm = p + q - 2pq +- sqrt(4pq(1-p)(1-q))``.  This module
evaluates the density, the atoms, the CDF, the Stieltjes transform

    m(z) = (z + p + q - 2 + sqrt(z^2 - 2(p+q-2pq)z + (p-q)^2)) / (2 z (1-z)),

and the perturbed self-consistent equation

    m = -(1-q)/z - q / (z - (1 + (1-p)/(z m))) + Lambda,

whose Lambda = 0 solution is the transform itself.  The square root above is
double valued; the branch is fixed numerically by requiring Im m > 0 on the
upper half plane and, when both candidates qualify, by proximity to the
-1/z large-|z| asymptote.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NumericalFailure, PoleError

__all__ = [
    "LawParams",
    "SupportEdges",
    "SpectralWindow",
    "LawEvaluation",
    "support_edges",
    "atom_masses",
    "density",
    "stieltjes",
    "fixed_point_residual",
    "solve_perturbed",
    "invert_to_density",
    "cdf",
    "cdf_grid",
    "evaluate",
    "probe_transform_bounds",
]

_EDGE_QUADRATIC_TOL = 1e-12


@dataclass(frozen=True)
class LawParams:
    """Compression ratios of the two projections, both strictly inside (0, 1)."""

    p: float
    q: float

    def __post_init__(self):
        for name, value in (("p", self.p), ("q", self.q)):
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise DomainError(f"{name} must be a finite real number, got {value!r}")
            if not 0.0 < value < 1.0:
                raise DomainError(f"{name} must lie strictly in (0, 1), got {value}")


@dataclass(frozen=True)
class SupportEdges:
    """Endpoints of the bulk support, both in [0, 1]."""

    lambda_minus: float
    lambda_plus: float

    @property
    def width(self) -> float:
        return self.lambda_plus - self.lambda_minus


@dataclass(frozen=True)
class SpectralWindow:
    """Evaluation region: E in [lam_- + kappa, lam_+ - kappa], eta in [floor, ceiling]."""

    params: LawParams
    kappa: float
    eta_floor: float
    eta_ceiling: float = 0.5

    def __post_init__(self):
        if self.kappa <= 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not 0 < self.eta_floor <= self.eta_ceiling:
            raise DomainError(
                f"need 0 < eta_floor <= eta_ceiling, got ({self.eta_floor}, {self.eta_ceiling})"
            )
        edges = support_edges(self.params)
        if edges.lambda_minus + self.kappa >= edges.lambda_plus - self.kappa:
            raise DomainError(
                f"kappa={self.kappa} empties the window [{edges.lambda_minus}, {edges.lambda_plus}]"
            )

    @property
    def e_bounds(self) -> tuple[float, float]:
        edges = support_edges(self.params)
        return edges.lambda_minus + self.kappa, edges.lambda_plus - self.kappa

    def e_grid(self, count: int) -> np.ndarray:
        lo, hi = self.e_bounds
        return np.linspace(lo, hi, count)


@dataclass(frozen=True)
class LawEvaluation:
    """A single law evaluation bundled with the atom masses."""

    point: complex
    value: complex
    atom_mass_zero: float
    atom_mass_one: float


def support_edges(params: LawParams) -> SupportEdges:
    """Bulk edges lam_pm = p + q - 2pq +- sqrt(4pq(1-p)(1-q))."""
    p, q = params.p, params.q
    center = p + q - 2.0 * p * q
    half = math.sqrt(4.0 * p * q * (1.0 - p) * (1.0 - q))
    lo, hi = center - half, center + half
    lo = max(lo, 0.0)  # guard roundoff at p == q
    for root in (lo, hi):
        # both roots satisfy x^2 - 2(p+q-2pq)x + (p-q)^2 = 0
        resid = root * root - 2.0 * center * root + (p - q) ** 2
        if abs(resid) > _EDGE_QUADRATIC_TOL:  # pragma: no cover
            raise NumericalFailure(f"edge quadratic residual {resid!r} exceeds tolerance")
    return SupportEdges(lo, hi)


def atom_masses(params: LawParams) -> tuple[float, float]:
    """Point masses at 0 and 1: (1 - min(p,q), max(p+q-1, 0))."""
    mass_zero = 1.0 - min(params.p, params.q)
    mass_one = max(params.p + params.q - 1.0, 0.0)
    return mass_zero, mass_one


def density(params: LawParams, x: float) -> float:
    """Absolutely continuous part of the law at a real point.

    Returns 0 outside the open bulk ``(lam_-, lam_+)``; the atoms at 0 and 1
    are reported separately by :func:`atom_masses`.
    """
    edges = support_edges(params)
    if x in (0.0, 1.0) and edges.lambda_minus < x < edges.lambda_plus:
        # cannot occur for valid params (lam_- >= 0, lam_+ <= 1); kept as a guard
        raise DomainError(f"density formula has a pole at x={x}")
    if x <= edges.lambda_minus or x >= edges.lambda_plus:
        return 0.0
    return math.sqrt((edges.lambda_plus - x) * (x - edges.lambda_minus)) / (
        2.0 * math.pi * x * (1.0 - x)
    )


def _density_array(params: LawParams, x: np.ndarray) -> np.ndarray:
    edges = support_edges(params)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > edges.lambda_minus) & (x < edges.lambda_plus)
    xi = x[inside]
    out[inside] = np.sqrt((edges.lambda_plus - xi) * (xi - edges.lambda_minus)) / (
        2.0 * np.pi * xi * (1.0 - xi)
    )
    return out


def _stieltjes_candidates(params: LawParams, z):
    p, q = params.p, params.q
    disc = z * z - 2.0 * (p + q - 2.0 * p * q) * z + (p - q) ** 2
    w = np.sqrt(np.asarray(disc, dtype=np.complex128))
    denom = 2.0 * z * (1.0 - z)
    return (z + (p + q - 2.0) + w) / denom, (z + (p + q - 2.0) - w) / denom


def stieltjes(params: LawParams, z):
    """Stieltjes transform m(z) of the law for Im z > 0 (scalar or array).

    The branch of the square root is resolved per point: keep the candidate
    with Im m > 0; if both qualify, keep the one closer to the -1/z
    asymptote (smaller |m z + 1|).
    """
    z_arr = np.asarray(z, dtype=np.complex128)
    if np.any(z_arr.imag <= 0):
        raise DomainError("stieltjes transform requires Im z > 0")
    if np.any(z_arr == 0) or np.any(z_arr == 1):
        raise PoleError("stieltjes transform has poles at z = 0 and z = 1")
    m_plus, m_minus = _stieltjes_candidates(params, z_arr)
    pos_plus = m_plus.imag > 0
    pos_minus = m_minus.imag > 0
    if not np.all(pos_plus | pos_minus):
        raise AssertionError("no Herglotz branch found for Im z > 0; branch logic broken")
    tie = pos_plus & pos_minus
    pick_plus = np.where(
        tie,
        np.abs(m_plus * z_arr + 1.0) <= np.abs(m_minus * z_arr + 1.0),
        pos_plus,
    )
    out = np.where(pick_plus, m_plus, m_minus)
    if np.isscalar(z) or np.ndim(z) == 0:
        return complex(out)
    return out


def fixed_point_residual(m, z, params: LawParams, lam=0.0):
    """Residual of the perturbed self-consistent equation at a candidate m.

    Returns ``m - [-(1-q)/z - q/(z - (1 + (1-p)/(z m))) + Lambda]``; zero iff
    ``m`` solves the equation with perturbation ``lam``.
    """
    p, q = params.p, params.q
    z = complex(z)
    m = complex(m)
    if z == 0 or z == 1:
        raise PoleError(f"equation undefined at z={z}")
    if m == 0:
        raise PoleError("equation undefined at m=0")
    inner = z - (1.0 + (1.0 - p) / (z * m))
    if abs(inner) < 1e-14:
        raise PoleError(f"inner denominator vanishes at z={z}, m={m}")
    return m - (-(1.0 - q) / z - q / inner + lam)


def _perturbed_coefficients(params: LawParams, z: complex, lam: complex):
    # clearing denominators in the self-consistent equation gives
    # A m^2 + B m + C = 0 with the coefficients below; at Lambda = 0 the
    # roots reduce to the two branches of the closed-form transform
    p, q = params.p, params.q
    a = z * z * (z - 1.0)
    b = z * (z - 2.0 + p + q) - lam * z * z * (z - 1.0)
    c = (1.0 - p) * (lam * z - (1.0 - q))
    return a, b, c


def solve_perturbed(z, params: LawParams, lam=0.0) -> complex:
    """Root of the perturbed equation on the branch connected to the transform.

    At ``lam = 0`` this equals :func:`stieltjes`; for ``lam != 0`` the root
    closer to the unperturbed transform is returned (the continuation of the
    Stieltjes branch, which is the physical choice for small perturbations).
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("solve_perturbed requires Im z > 0")
    if z == 0 or z == 1:
        raise PoleError(f"equation degenerates at z={z}")
    lam = complex(lam)
    a, b, c = _perturbed_coefficients(params, z, lam)
    disc = np.sqrt(complex(b * b - 4.0 * a * c))
    # numerically stable root pairing
    if abs(b - disc) > abs(b + disc):
        big = -(b - disc) / 2.0
    else:
        big = -(b + disc) / 2.0
    roots = (big / a, c / big) if big != 0 else ((-b + disc) / (2 * a), (-b - disc) / (2 * a))
    anchor = stieltjes(params, z)
    return min(roots, key=lambda r: abs(r - anchor))


def invert_to_density(params: LawParams, x: float, omega: float) -> float:
    """Stieltjes inversion (1/pi) Im m(x + i omega); tends to the density as omega -> 0."""
    if omega <= 0:
        raise DomainError(f"omega must be positive, got {omega}")
    return stieltjes(params, complex(x, omega)).imag / math.pi


# --- CDF machinery ---------------------------------------------------------
#
# The bulk density has inverse-square-root singularities at the edges, so all
# quadrature is done after the substitutions x = lam_- + t^2 (left half) and
# x = lam_+ - t^2 (right half), which make the integrand smooth.


def _left_integrand(params: LawParams, edges: SupportEdges):
    def g(t):
        x = edges.lambda_minus + t * t
        return _density_array(params, np.asarray(x)) * 2.0 * t

    return g


def _right_integrand(params: LawParams, edges: SupportEdges):
    def g(t):
        x = edges.lambda_plus - t * t
        return _density_array(params, np.asarray(x)) * 2.0 * t

    return g


def _continuous_mass_below(params: LawParams, x: float) -> float:
    """Adaptive Gauss-Kronrod integral of the density over [lam_-, min(x, lam_+)]."""
    edges = support_edges(params)
    if x <= edges.lambda_minus:
        return 0.0
    x = min(x, edges.lambda_plus)
    mid = 0.5 * (edges.lambda_minus + edges.lambda_plus)
    gl = _left_integrand(params, edges)
    gr = _right_integrand(params, edges)
    t_mid_l = math.sqrt(mid - edges.lambda_minus)
    t_mid_r = math.sqrt(edges.lambda_plus - mid)
    if x <= mid:
        val, _ = integrate.quad(gl, 0.0, math.sqrt(x - edges.lambda_minus), epsabs=1e-10, limit=200)
        return val
    left, _ = integrate.quad(gl, 0.0, t_mid_l, epsabs=1e-10, limit=200)
    tail, _ = integrate.quad(gr, 0.0, math.sqrt(edges.lambda_plus - x), epsabs=1e-10, limit=200)
    right_total, _ = integrate.quad(gr, 0.0, t_mid_r, epsabs=1e-10, limit=200)
    return left + (right_total - tail)


def cdf(params: LawParams, x: float) -> float:
    """Right-continuous CDF of the full law (atoms at 0 and 1 included)."""
    mass_zero, mass_one = atom_masses(params)
    if math.isinf(x):
        return 0.0 if x < 0 else 1.0
    total = 0.0
    if x >= 0.0:
        total += mass_zero
    total += _continuous_mass_below(params, x)
    if x >= 1.0:
        total += mass_one
    return min(total, 1.0)


@lru_cache(maxsize=64)
def _cdf_interpolator(params: LawParams):
    """Monotone interpolant of the continuous CDF, built once per parameter pair."""
    edges = support_edges(params)
    mid = 0.5 * (edges.lambda_minus + edges.lambda_plus)
    nodes = 8193
    tl = np.linspace(0.0, math.sqrt(mid - edges.lambda_minus), nodes)
    tr = np.linspace(0.0, math.sqrt(edges.lambda_plus - mid), nodes)
    gl = _left_integrand(params, edges)(tl)
    gr = _right_integrand(params, edges)(tr)
    fl = integrate.cumulative_simpson(gl, x=tl, initial=0.0)
    fr = integrate.cumulative_simpson(gr, x=tr, initial=0.0)
    total = fl[-1] + fr[-1]
    x_left = edges.lambda_minus + tl * tl
    x_right = (edges.lambda_plus - tr * tr)[::-1]
    f_left = fl
    f_right = (total - fr)[::-1]
    xs = np.concatenate([x_left, x_right[1:]])
    fs = np.concatenate([f_left, f_right[1:]])
    xs, keep = np.unique(xs, return_index=True)
    return PchipInterpolator(xs, fs[keep], extrapolate=False), float(total)


def cdf_grid(params: LawParams, x) -> np.ndarray:
    """Vectorized CDF via a cached monotone interpolant (abs. error < 1e-7)."""
    x = np.asarray(x, dtype=float)
    edges = support_edges(params)
    mass_zero, mass_one = atom_masses(params)
    interp, total = _cdf_interpolator(params)
    out = np.zeros_like(x)
    out[x >= 0.0] += mass_zero
    inside = (x > edges.lambda_minus) & (x < edges.lambda_plus)
    out[inside] += interp(x[inside])
    out[x >= edges.lambda_plus] += total
    out[x >= 1.0] += mass_one
    return np.minimum(out, 1.0)


def continuous_mass(params: LawParams) -> float:
    """Quadrature value of the total bulk mass (should equal 1 - atoms)."""
    edges = support_edges(params)
    return _continuous_mass_below(params, edges.lambda_plus)


def evaluate(params: LawParams, point) -> LawEvaluation:
    """Convenience record: density at a real point or transform at a complex one."""
    mass_zero, mass_one = atom_masses(params)
    point_c = complex(point)
    if point_c.imag == 0:
        value = density(params, point_c.real)
    else:
        value = stieltjes(params, point_c)
    return LawEvaluation(point_c, value, mass_zero, mass_one)


def probe_transform_bounds(
    window: SpectralWindow, grid_size: int, eta_points: int = 20
) -> tuple[float, float]:
    """Empirical (c_hat, C_hat): min Im m / sqrt(kappa) and max |m| over the window.

    The law's square-root edge behavior makes Im m of order sqrt(kappa) at
    distance kappa inside the bulk; this probe estimates the constants on a
    grid rather than proving them.
    """
    if grid_size < 2:
        raise DomainError(f"grid_size must be at least 2, got {grid_size}")
    es = window.e_grid(grid_size)
    etas = np.linspace(window.eta_floor, window.eta_ceiling, eta_points)
    zs = es[:, None] + 1j * etas[None, :]
    m = stieltjes(window.params, zs.ravel())
    c_hat = float(np.min(m.imag) / math.sqrt(window.kappa))
    big_c_hat = float(np.max(np.abs(m)))
    return c_hat, big_c_hat
