"""Haar sampling, matrix-free Kronecker powers, projections, and the
compressed ensemble  Pi_1 U^(x)k Pi_2 U^(x)k* Pi_1  (or the U (x) V variant).

The Kronecker operator is applied by mode contractions (see ``_kernels``),
so only the n x n factor is ever stored; dense materialization is available
below a configurable cap for eigensolves and oracle checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import _kernels
from .errors import DataFormatError, DenseCapError, DomainError
from .seeding import generator

__all__ = [
    "DENSE_CAP",
    "UnitaryMatrix",
    "KroneckerUnitary",
    "RotatedKronecker",
    "Projection",
    "CompressedEnsemble",
    "sample_haar",
    "dft_unitary",
    "tuple_to_flat",
    "flat_to_tuple",
    "kron_apply",
    "make_projection",
    "build_ensemble",
    "reduce_to_coordinate_frame",
]

DENSE_CAP = 8192


@dataclass(frozen=True)
class UnitaryMatrix:
    """A dense complex unitary with the seed it was drawn from (if any)."""

    entries: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        m = self.entries
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"unitary must be square, got shape {m.shape}")
        object.__setattr__(self, "entries", np.ascontiguousarray(m, dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def unitarity_defect(self) -> float:
        """Operator-norm distance of U U* from the identity."""
        gram = self.entries @ self.entries.conj().T
        gram[np.diag_indices_from(gram)] -= 1.0
        return float(np.linalg.norm(gram, 2))

    def validate(self, tol: float = 1e-10) -> "UnitaryMatrix":
        defect = self.unitarity_defect()
        if defect > tol:
            raise DataFormatError(f"matrix is not unitary: defect {defect:.3e} > {tol:.0e}")
        return self


def sample_haar(n: int, seed: int) -> UnitaryMatrix:
    """Draw a Haar-distributed unitary from U(n), deterministically per seed.

    Ginibre + QR with the diagonal phase of R pushed back into Q; without
    that correction the QR gauge is not Haar.
    """
    if n < 1:
        raise DomainError(f"dimension must be at least 1, got {n}")
    rng = generator(seed)
    ginibre = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(ginibre)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return UnitaryMatrix(q, seed=seed)


def dft_unitary(n: int) -> UnitaryMatrix:
    """Unitary discrete Fourier transform of size n."""
    if n < 1:
        raise DomainError(f"dimension must be at least 1, got {n}")
    idx = np.arange(n)
    entries = np.exp(-2j * np.pi * np.outer(idx, idx) / n) / math.sqrt(n)
    return UnitaryMatrix(entries)


def tuple_to_flat(index_tuple, n: int) -> int:
    """Lexicographic flattening of a 1-based tuple (i_1, ..., i_k), i_1 most significant."""
    flat = 0
    for component in index_tuple:
        if not 1 <= component <= n:
            raise DomainError(f"tuple component {component} outside 1..{n}")
        flat = flat * n + (component - 1)
    return flat


def flat_to_tuple(flat: int, n: int, k: int) -> tuple[int, ...]:
    """Inverse of :func:`tuple_to_flat`."""
    if not 0 <= flat < n**k:
        raise DomainError(f"flat index {flat} outside 0..{n ** k - 1}")
    out = []
    for _ in range(k):
        flat, rem = divmod(flat, n)
        out.append(rem + 1)
    return tuple(reversed(out))


@dataclass(frozen=True)
class KroneckerUnitary:
    """U^(x)k for a single factor, or U (x) V for a fixed second factor."""

    factor_u: UnitaryMatrix
    power: int = 1
    factor_v: UnitaryMatrix | None = None

    def __post_init__(self):
        if self.power < 1:
            raise DomainError(f"tensor power must be at least 1, got {self.power}")
        if self.factor_v is not None and self.power != 1:
            raise DomainError("the two-factor form U (x) V requires power == 1")

    @property
    def mode_dims(self) -> tuple[int, ...]:
        if self.factor_v is not None:
            return (self.factor_u.dim, self.factor_v.dim)
        return (self.factor_u.dim,) * self.power

    @property
    def dim(self) -> int:
        return int(np.prod(self.mode_dims))

    def _mode_matrices(self, adjoint: bool) -> list[np.ndarray]:
        mats = [self.factor_u.entries] * self.power
        if self.factor_v is not None:
            mats = [self.factor_u.entries, self.factor_v.entries]
        if adjoint:
            mats = [np.ascontiguousarray(m.conj().T) for m in mats]
        return mats

    def apply(self, x: np.ndarray, adjoint: bool = False) -> np.ndarray:
        if x.shape != (self.dim,):
            raise DomainError(f"vector length {x.shape} does not match ambient dim {self.dim}")
        return _kernels.apply_modes(self._mode_matrices(adjoint), x)

    def dense(self) -> np.ndarray:
        return reduce(np.kron, self._mode_matrices(adjoint=False))


def kron_apply(kron: KroneckerUnitary, x: np.ndarray, conjugate_transpose: bool = False):
    """Matrix-free application of U^(x)k (or its adjoint) to a vector."""
    return kron.apply(np.asarray(x, dtype=np.complex128), adjoint=conjugate_transpose)


class RotatedKronecker:
    """The sandwiched operator W1* (U^(x)k) W2*, used by the coordinate-frame
    reduction; either rotation may be None (identity)."""

    def __init__(self, w1: UnitaryMatrix | None, kron: KroneckerUnitary,
                 w2: UnitaryMatrix | None):
        for w in (w1, w2):
            if w is not None and w.dim != kron.dim:
                raise DomainError("rotation dimension does not match the Kronecker operator")
        self.w1 = w1
        self.kron = kron
        self.w2 = w2

    @property
    def dim(self) -> int:
        return self.kron.dim

    def apply(self, x: np.ndarray, adjoint: bool = False) -> np.ndarray:
        if adjoint:  # (W1* K W2*)* = W2 K* W1
            y = self.w1.entries @ x if self.w1 is not None else x
            y = self.kron.apply(y, adjoint=True)
            return self.w2.entries @ y if self.w2 is not None else y
        y = self.w2.entries.conj().T @ x if self.w2 is not None else x
        y = self.kron.apply(y)
        return self.w1.entries.conj().T @ y if self.w1 is not None else y

    def dense(self) -> np.ndarray:
        m = self.kron.dense()
        if self.w2 is not None:
            m = m @ self.w2.entries.conj().T
        if self.w1 is not None:
            m = self.w1.entries.conj().T @ m
        return m


@dataclass(frozen=True)
class Projection:
    """Rank-r orthogonal projection, stored as a coordinate mask or a basis.

    ``rotation`` records the unitary W with  Pi = W P_coord W*  when the
    projection was built by rotating a coordinate one; the coordinate-frame
    reduction needs it.
    """

    dim: int
    rank: int
    kind: str  # "coordinate" | "haar_rotated" | "explicit_basis"
    mask: np.ndarray | None = None
    basis: np.ndarray | None = None
    rotation: UnitaryMatrix | None = None
    seed: int | None = None

    def __post_init__(self):
        if not 1 <= self.rank <= self.dim - 1:
            raise DomainError(f"rank must be in [1, {self.dim - 1}], got {self.rank}")
        if self.kind == "coordinate":
            if self.mask is None:
                raise DomainError("coordinate projection needs a mask of length rank")
            mask = np.sort(np.asarray(self.mask, dtype=np.intp))
            if len(mask) != self.rank or len(np.unique(mask)) != self.rank:
                raise DomainError("mask must hold rank distinct indices")
            if mask[0] < 0 or mask[-1] >= self.dim:
                raise DomainError(f"mask indices outside 0..{self.dim - 1}")
            object.__setattr__(self, "mask", mask)
        elif self.kind in ("haar_rotated", "explicit_basis"):
            if self.basis is None or self.basis.shape != (self.dim, self.rank):
                raise DomainError("basis projection needs an (N, r) orthonormal basis")
            object.__setattr__(
                self, "basis", np.ascontiguousarray(self.basis, dtype=np.complex128)
            )
        else:
            raise DomainError(f"unknown projection kind {self.kind!r}")

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "coordinate":
            out = np.zeros_like(v, dtype=np.complex128)
            out[self.mask] = v[self.mask]
            return out
        return self.basis @ (self.basis.conj().T @ v)

    def materialize(self) -> np.ndarray:
        if self.kind == "coordinate":
            out = np.zeros((self.dim, self.dim), dtype=np.complex128)
            out[self.mask, self.mask] = 1.0
            return out
        return self.basis @ self.basis.conj().T

    def idempotency_defect(self) -> float:
        pi = self.materialize()
        return float(np.linalg.norm(pi @ pi - pi, 2))


def _rank_from_fraction(fraction: float, dim: int) -> int:
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"fraction must lie strictly in (0, 1), got {fraction}")
    rank = int(math.floor(fraction * dim + 1e-9))
    if not 1 <= rank <= dim - 1:
        raise DomainError(
            f"fraction {fraction} at dimension {dim} gives rank {rank}, outside [1, {dim - 1}]"
        )
    return rank


def make_projection(
    kind: str,
    dim: int,
    fraction: float,
    seed: int | None = None,
    basis: np.ndarray | None = None,
    dense_cap: int = DENSE_CAP,
) -> Projection:
    """Construct a projection of rank floor(fraction * N).

    ``coordinate`` selects the first r coordinates, ``haar_rotated``
    conjugates that by a fresh Haar unitary of size N (dense; requires
    N <= dense_cap), and ``explicit_basis`` wraps a user-supplied
    orthonormal basis after validation.
    """
    if kind == "explicit_basis":
        if basis is None:
            raise DomainError("explicit_basis requires a basis array")
        basis = np.asarray(basis, dtype=np.complex128)
        if basis.ndim != 2 or basis.shape[0] != dim:
            raise DomainError(f"basis shape {basis.shape} does not match dimension {dim}")
        gram = basis.conj().T @ basis
        defect = float(np.linalg.norm(gram - np.eye(basis.shape[1]), 2))
        if defect > 1e-10:
            raise DataFormatError(f"supplied basis is not orthonormal: defect {defect:.3e}")
        return Projection(dim, basis.shape[1], kind, basis=basis)

    rank = _rank_from_fraction(fraction, dim)
    if kind == "coordinate":
        return Projection(dim, rank, kind, mask=np.arange(rank))
    if kind == "haar_rotated":
        if dim > dense_cap:
            raise DenseCapError(f"haar_rotated projection at N={dim} exceeds cap {dense_cap}")
        if seed is None:
            raise DomainError("haar_rotated projection requires a seed")
        w = sample_haar(dim, seed)
        return Projection(
            dim, rank, kind, basis=w.entries[:, :rank].copy(), rotation=w, seed=seed
        )
    raise DomainError(f"unknown projection kind {kind!r}")


class CompressedEnsemble:
    """Hermitian contraction  Pi_1 M Pi_2 M* Pi_1  with matrix-free apply.

    ``middle`` is either a :class:`KroneckerUnitary` or a
    :class:`RotatedKronecker`; the spectrum always lies in [0, 1].
    """

    def __init__(self, proj1: Projection, proj2: Projection, middle,
                 dense_cap: int = DENSE_CAP, meta: dict | None = None):
        if not (proj1.dim == proj2.dim == middle.dim):
            raise DomainError(
                f"dimension mismatch: projections {proj1.dim}, {proj2.dim}, operator {middle.dim}"
            )
        self.proj1 = proj1
        self.proj2 = proj2
        self.middle = middle
        self.dense_cap = dense_cap
        self.meta = dict(meta or {})
        self._dense = None

    @property
    def dim(self) -> int:
        return self.middle.dim

    @property
    def kron(self) -> KroneckerUnitary:
        mid = self.middle
        return mid.kron if isinstance(mid, RotatedKronecker) else mid

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.complex128)
        if v.shape != (self.dim,):
            raise DomainError(f"vector length {v.shape} does not match ambient dim {self.dim}")
        y = self.proj1.apply(v)
        y = self.middle.apply(y, adjoint=True)
        y = self.proj2.apply(y)
        y = self.middle.apply(y, adjoint=False)
        return self.proj1.apply(y)

    def coordinate_masks(self):
        """(mask1, mask2) when both projections are coordinate masks, else None."""
        if self.proj1.kind == "coordinate" and self.proj2.kind == "coordinate":
            return self.proj1.mask, self.proj2.mask
        return None

    def dense(self) -> np.ndarray:
        """Dense N x N materialization (cached); raises above the cap."""
        if self._dense is not None:
            return self._dense
        n = self.dim
        if n > self.dense_cap:
            raise DenseCapError(f"dense materialization at N={n} exceeds cap {self.dense_cap}")
        masks = self.coordinate_masks()
        m = self.middle.dense()
        if masks is not None:
            mask1, mask2 = masks
            block = m[np.ix_(mask1, mask2)]
            out = np.zeros((n, n), dtype=np.complex128)
            out[np.ix_(mask1, mask1)] = block @ block.conj().T
        else:
            p1 = self.proj1.materialize()
            p2 = self.proj2.materialize()
            out = p1 @ m @ p2 @ m.conj().T @ p1
        self._dense = out
        return out

    def compressed_block(self) -> np.ndarray | None:
        """M restricted to (mask1, mask2) when both projections are coordinate.

        The ensemble then equals B B* on the mask1 block and vanishes
        elsewhere, which the eigensolver exploits.
        """
        masks = self.coordinate_masks()
        if masks is None:
            return None
        mask1, mask2 = masks
        return self.middle.dense()[np.ix_(mask1, mask2)]


def build_ensemble(proj1: Projection, proj2: Projection, kron: KroneckerUnitary,
                   dense_cap: int = DENSE_CAP, meta: dict | None = None) -> CompressedEnsemble:
    """Assemble  Pi_1 (U^(x)k) Pi_2 (U^(x)k)* Pi_1."""
    return CompressedEnsemble(proj1, proj2, kron, dense_cap=dense_cap, meta=meta)


def reduce_to_coordinate_frame(proj1: Projection, proj2: Projection, kron: KroneckerUnitary,
                               dense_cap: int = DENSE_CAP,
                               meta: dict | None = None) -> CompressedEnsemble:
    """Equivalent ensemble  P W Q W* P  with W = W1* U^(x)k W2*.

    Writing Pi_i = W_i P_i W_i* with coordinate cores P_i, the compressed
    operator is unitarily conjugate to P1 W Q W* P1 restricted to coordinate
    projections, so the two share their spectrum.  Requires projections that
    carry their rotation (coordinate or haar_rotated kinds).
    """
    cores = []
    rotations = []
    for proj in (proj1, proj2):
        if proj.kind == "coordinate":
            cores.append(proj)
            rotations.append(None)
        elif proj.kind == "haar_rotated":
            cores.append(Projection(proj.dim, proj.rank, "coordinate",
                                    mask=np.arange(proj.rank)))
            rotations.append(proj.rotation)
        else:
            raise DomainError(
                "coordinate-frame reduction needs a stored rotation; "
                f"projection kind {proj.kind!r} does not carry one"
            )
    middle = RotatedKronecker(rotations[0], kron, rotations[1])
    return CompressedEnsemble(cores[0], cores[1], middle, dense_cap=dense_cap, meta=meta)
