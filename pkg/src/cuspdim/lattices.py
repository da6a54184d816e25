"""Exact geometry of unimodular lattices in R^d.

A point of the space X = SL_d(R)/SL_d(Z) is a covolume-1 lattice given
by a basis matrix whose columns generate it.  The cusp functions

    delta(x)      = length of the shortest nonzero vector (sup or euclid)
    delta_w(x)    = shortest weighted quasinorm (see `quasinorm`)

are computed by exhaustive enumeration over a coefficient box that
provably contains every minimizer, so the values are exact up to float
roundoff.  d <= 5 keeps the boxes tractable; there is no approximate
(LLL/BKZ) path.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DeterminantError,
    DimensionMismatch,
    EnumerationBudgetExceeded,
    RankError,
    UnsupportedDimension,
    ValidationError,
)

DET_TOL = 1e-9
CELL_BUDGET = 10**8
# Ties between minimizing vectors are broken on the coefficient vector:
# canonical sign (first nonzero coefficient positive), then smallest
# when compared from the last coordinate backwards, so that on Z^2 the
# generator (1,0) wins against (0,1).
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class Lattice:
    """Unimodular lattice; `basis` columns are the generators."""

    dim: int
    basis: np.ndarray
    tol: float = DET_TOL

    def to_json(self):
        return {"dim": self.dim, "basis": [float(v) for v in self.basis.reshape(-1)]}

    @staticmethod
    def from_json(obj):
        d = int(obj["dim"])
        basis = np.asarray(obj["basis"], dtype=float).reshape(d, d)
        return make_lattice(basis)


@dataclass(frozen=True)
class WeightVector:
    """Expansion/contraction weights (i, j): positive, each block sums to 1."""

    i: tuple
    j: tuple

    def __post_init__(self):
        i = tuple(float(v) for v in self.i)
        j = tuple(float(v) for v in self.j)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        if not i or not j:
            raise ValidationError("weights", "both weight blocks must be nonempty")
        if min(i) <= 0 or min(j) <= 0:
            raise ValidationError("weights", "weights must be positive")
        if abs(sum(i) - 1.0) > 1e-12 or abs(sum(j) - 1.0) > 1e-12:
            raise ValidationError("weights", "each weight block must sum to 1 within 1e-12")

    @property
    def m(self):
        return len(self.i)

    @property
    def n(self):
        return len(self.j)

    @property
    def d(self):
        return len(self.i) + len(self.j)

    @property
    def alpha(self):
        return min(min(self.i), min(self.j))

    @property
    def equal(self):
        """True when the quasinorm degenerates to the sup norm (all i_k = 1/m, j_l = 1/n)."""
        return all(abs(v - 1.0 / self.m) < 1e-12 for v in self.i) and all(
            abs(v - 1.0 / self.n) < 1e-12 for v in self.j
        )


EQUAL_WEIGHTS_2D = WeightVector((1.0,), (1.0,))


@dataclass(frozen=True)
class ShortVec:
    """A minimizing lattice vector: vec = basis @ coeffs."""

    coeffs: tuple
    vec: np.ndarray
    length: float


def make_lattice(basis, tol=DET_TOL):
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
        raise ValidationError("basis", "basis must be a square matrix")
    d = basis.shape[0]
    if not 2 <= d <= 5:
        raise UnsupportedDimension(f"supported dimensions are 2..5, got {d}")
    det = float(np.linalg.det(basis))
    if abs(det) < 1e-12 or np.linalg.matrix_rank(basis) < d:
        raise RankError()
    if abs(det - 1.0) > tol:
        raise DeterminantError(det, tol)
    return Lattice(dim=d, basis=basis, tol=tol)


def _vec_norm(V, norm):
    if norm == "euclid":
        return np.sqrt(np.sum(V * V, axis=1))
    if norm == "sup":
        return np.max(np.abs(V), axis=1)
    raise ValidationError("norm", f"unknown norm {norm!r}")


def _iter_coeff_box(basis, bounds, budget):
    """Yield (C, V) slabs over the integer box |c_k| <= bounds[k], origin removed.

    Slabbed along axis 0 so memory stays bounded while the total cell
    count is only limited by `budget`.
    """
    bounds = [int(b) for b in bounds]
    cells = 1
    for b in bounds:
        cells *= 2 * b + 1
    if cells > budget:
        raise EnumerationBudgetExceeded(
            f"coefficient box has {cells} cells, budget is {budget}"
        )
    d = len(bounds)
    tail_axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds[1:]]
    tail_cells = cells // (2 * bounds[0] + 1)
    slab = max(1, int(4_000_000 // max(tail_cells, 1)))
    first = np.arange(-bounds[0], bounds[0] + 1, dtype=np.int64)
    for lo in range(0, len(first), slab):
        axes = [first[lo : lo + slab]] + tail_axes
        grids = np.meshgrid(*axes, indexing="ij")
        C = np.stack([g.reshape(-1) for g in grids], axis=1)
        mask = np.any(C != 0, axis=1)
        C = C[mask]
        if len(C) == 0:
            continue
        V = C.astype(float) @ basis.T
        yield C, V


def _canonical(coeffs):
    """Flip sign so the first nonzero coefficient is positive."""
    for v in coeffs:
        if v != 0:
            return coeffs if v > 0 else tuple(-w for w in coeffs)
    return coeffs


def _pick_min(C, lengths):
    """Minimum with deterministic tie-breaking on canonical coefficients."""
    best = float(np.min(lengths))
    near = np.nonzero(lengths <= best + _TIE_TOL * max(1.0, best))[0]
    cands = [_canonical(tuple(int(v) for v in C[i])) for i in near]
    # smallest when read from the last coordinate: (1,0) beats (0,1) on Z^2
    chosen = min(cands, key=lambda c: tuple(reversed(c)))
    return chosen, best


def shortest_vector(lat, norm="euclid", budget=CELL_BUDGET):
    """Exact shortest nonzero vector of the lattice in the given norm.

    The search box comes from an incumbent: the shortest basis column
    has norm R, any minimizer v satisfies |c_k| = |(B^-1 v)_k| <=
    row_k(B^-1) applied to the norm-R ball.
    """
    B = lat.basis
    Binv = np.linalg.inv(B)
    incumbent = float(np.min(_vec_norm(B.T, norm)))
    if norm == "euclid":
        row = np.sqrt(np.sum(Binv * Binv, axis=1))
    else:
        row = np.sum(np.abs(Binv), axis=1)
    bounds = np.floor(row * incumbent + 1e-9).astype(int)
    bounds = np.maximum(bounds, 1)
    best_len = np.inf
    best_C = None
    best_lengths = []
    keep_C = []
    for C, V in _iter_coeff_box(B, bounds, budget):
        lengths = _vec_norm(V, norm)
        cut = min(best_len, float(np.min(lengths)))
        m = lengths <= cut + _TIE_TOL * max(1.0, cut)
        keep_C.append(C[m])
        best_lengths.append(lengths[m])
        best_len = cut
    C = np.concatenate(keep_C)
    lengths = np.concatenate(best_lengths)
    coeffs, length = _pick_min(C, lengths)
    vec = B @ np.asarray(coeffs, dtype=float)
    return ShortVec(coeffs=coeffs, vec=vec, length=length)


def delta(lat, norm="sup", budget=CELL_BUDGET):
    """Cusp function: length of the shortest nonzero vector."""
    return shortest_vector(lat, norm, budget).length


def quasinorm(v, w):
    """Weighted quasinorm max(||p||_i^(1/m), ||q||_j^(1/n)).

    p is the first m coordinates, q the last n, and ||p||_i =
    max_k |p_k|^(1/i_k).  At equal weights this is the sup norm.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != w.d:
        raise DimensionMismatch(f"vector length {v.shape[-1]} != weight dimension {w.d}")
    p = np.abs(v[..., : w.m])
    q = np.abs(v[..., w.m :])
    ei = np.array([1.0 / (w.m * ik) for ik in w.i])
    ej = np.array([1.0 / (w.n * jl) for jl in w.j])
    return float(np.max(np.concatenate([p**ei, q**ej], axis=-1), axis=-1))


def _quasinorm_rows(V, w):
    p = np.abs(V[:, : w.m])
    q = np.abs(V[:, w.m :])
    ei = np.array([1.0 / (w.m * ik) for ik in w.i])
    ej = np.array([1.0 / (w.n * jl) for jl in w.j])
    return np.max(np.concatenate([p**ei, q**ej], axis=1), axis=1)


def shortest_vector_weighted(lat, w, budget=CELL_BUDGET):
    """Exact quasinorm minimizer.

    Every unimodular lattice has a nonzero vector of quasinorm <= 1
    (the quasinorm ball of radius b is a box of volume (2b)^d, so
    Minkowski applies at b = 1); the incumbent is therefore capped at
    1 and sharpened by the basis columns.  A candidate of quasinorm
    <= b lies in the box |v_k| <= b^(m i_k), |v_{m+l}| <= b^(n j_l).
    """
    if lat.dim != w.d:
        raise DimensionMismatch(f"lattice dim {lat.dim} != weight dimension {w.d}")
    B = lat.basis
    Binv = np.linalg.inv(B)
    col_q = _quasinorm_rows(B.T, w)
    b = min(1.0, float(np.min(col_q))) + 1e-9
    amb = np.array(
        [b ** (w.m * ik) for ik in w.i] + [b ** (w.n * jl) for jl in w.j]
    )
    bounds = np.floor(np.abs(Binv) @ amb + 1e-9).astype(int)
    bounds = np.maximum(bounds, 1)
    best_len = np.inf
    keep_C = []
    best_lengths = []
    for C, V in _iter_coeff_box(B, bounds, budget):
        lengths = _quasinorm_rows(V, w)
        cut = min(best_len, float(np.min(lengths)))
        m = lengths <= cut + _TIE_TOL * max(1.0, cut)
        keep_C.append(C[m])
        best_lengths.append(lengths[m])
        best_len = cut
    C = np.concatenate(keep_C)
    lengths = np.concatenate(best_lengths)
    coeffs, length = _pick_min(C, lengths)
    vec = B @ np.asarray(coeffs, dtype=float)
    return ShortVec(coeffs=coeffs, vec=vec, length=length)


def delta_weighted(lat, w, budget=CELL_BUDGET):
    """Weighted cusp function delta_{i,j}: inf of the quasinorm over the lattice."""
    return shortest_vector_weighted(lat, w, budget).length


def injectivity_shape(delta_val, d):
    """Monomial shapes (delta^d, delta^(d/(d-1))) bracketing the injectivity radius.

    The absolute constants in front are not pinned down; only the
    exponents are meaningful.
    """
    if delta_val <= 0:
        raise ValidationError("delta_val", "must be positive")
    return (delta_val**d, delta_val ** (d / (d - 1)))
