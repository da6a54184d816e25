"""Tessellations, Bowen-box counting, survivor covers, and dimension fits.

The unipotent coordinate space P = M_{m,n}(R) (dimension L = mn) is
tiled by cubes of side r/(4 sqrt(L)) on the grid side*Z^L, with the
representative cube (0, side)^L.  Conjugation by the time-t flow
contracts coordinate kappa = (k, l) by exp(-(i_k + j_l) t), giving the
anisotropic Bowen boxes.  Three computations live here:

  * count_S_rt      - exact number of grid translates whose Bowen box
                      meets the base cube, checked against an upper
                      bound of the product-volume form
  * survivor_cover  - the recursive cover of the set of h whose orbit
                      has not certifiably entered {delta_w < c^(1/d)}
                      by level k (centers tested at time k*t with a
                      conservative safety factor, so boxes are only
                      discarded when the whole box is certainly inside)
  * box_dimension_fit / cf_digit_oracle - a log-log box-count estimate
                      and a continued-fraction cylinder oracle that is
                      fully independent of the dynamical code path

For m = n = 1 the per-box cusp function is evaluated by an exact
integer-pair Gauss reduction: basis vectors of g_T u_h x0 are tracked
as integer combinations of the original generators and re-expanded in
extended precision each step, because a naive float reduction loses
the short vector once e^{2T} exceeds 1/eps_machine.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BudgetExceeded,
    DegenerateFit,
    DimensionMismatch,
    DomainError,
    ValidationError,
)
from .flows import g_t, u_A
from .lattices import delta_weighted, make_lattice

BOX_BUDGET = 10**7
CF_BUDGET = 10**7
R_CAP = 1.0
_NEAR_INT_TOL = 1e-9


@dataclass(frozen=True)
class Tessellation:
    """Cubes of the given side on the grid side*Z^L; base cube (0, side)^L."""

    L: int
    r: float
    side: float
    offset: float = 0.0


def tessellation_new(L, r):
    if int(L) != L or L < 1:
        raise ValidationError("L", "must be a positive integer")
    if r <= 0:
        raise ValidationError("r", "must be positive")
    return Tessellation(L=int(L), r=float(r), side=float(r) / (4.0 * math.sqrt(L)))


def _lambdas(w):
    """Contraction rates i_k + j_l, coordinate order (k, l) row-major."""
    return np.array([ik + jl for ik in w.i for jl in w.j])


def _per_axis_count(E, tol=_NEAR_INT_TOL):
    """Translates of a length-1/E interval meeting (0, 1), open boxes.

    Exactly ceil(E), except that E within relative tol of an integer is
    taken as that integer (the open intervals then tile without the
    extra boundary translate).
    """
    R = round(E)
    if abs(E - R) <= tol * E:
        return int(R)
    return int(math.ceil(E))


def count_S_rt(tess, w, t, tol=_NEAR_INT_TOL):
    """Exact count of gamma in Lambda_r with g_{-t} V_r gamma g_t meeting V_r."""
    if t < 0:
        raise ValidationError("t", "must be nonnegative")
    if tess.L != w.m * w.n:
        raise DimensionMismatch(f"tessellation L={tess.L} != m*n={w.m * w.n}")
    total = 1
    for lam in _lambdas(w):
        total *= _per_axis_count(math.exp(lam * t), tol)
    return total


def count_S_rt_brute(tess, w, t, tol=_NEAR_INT_TOL):
    """Independent enumeration oracle: test every translate's interval overlap.

    Works per coordinate (the boxes are axis-aligned products) over
    |gamma_kappa| <= ceil(e^{lambda_max t}) + 2, with the same relative
    tolerance convention for the open-interval comparisons.
    """
    if t < 0:
        raise ValidationError("t", "must be nonnegative")
    total = 1
    for lam in _lambdas(w):
        f = math.exp(-lam * t)
        G = int(math.ceil(math.exp(lam * t))) + 2
        cnt = 0
        for gamma in range(-G, G + 1):
            lo = gamma * f
            hi = (gamma + 1) * f
            # open intervals (lo, hi) vs (0, 1) in units of the cube side
            if lo < 1.0 - tol and hi > tol:
                cnt += 1
        total *= cnt
    return total


def lemma61_bound(tess, w, t, K3, lambda0=None):
    """Volume-ratio bound e^{(sum lambda) t} (1 + K3 e^{-lambda0 t} / vol(V_r))."""
    if K3 <= 0:
        raise ValidationError("K3", "must be positive")
    lams = _lambdas(w)
    lam0 = float(np.min(lams)) if lambda0 is None else float(lambda0)
    vol = tess.side**tess.L
    return math.exp(float(np.sum(lams)) * t) * (1.0 + K3 * math.exp(-lam0 * t) / vol)


def calibrate_K3(tess, w, t_grid):
    """Smallest K3 making the bound dominate the exact count on the grid.

    Measured once as the max observed excess; any larger K3 also works.
    """
    lams = _lambdas(w)
    lam0 = float(np.min(lams))
    vol = tess.side**tess.L
    need = 1e-12
    for t in t_grid:
        exact = count_S_rt(tess, w, t)
        ratio = math.exp(float(np.sum(lams)) * t)
        excess = (exact / ratio - 1.0) * vol * math.exp(lam0 * t)
        need = max(need, excess)
    return need * (1.0 + 1e-12)


@dataclass(frozen=True)
class CoverLevel:
    k: int
    centers: np.ndarray  # (count, L)
    half_sides: np.ndarray  # (L,) uniform within the level
    count: int

    @property
    def boxes(self):
        h = tuple(float(v) for v in self.half_sides)
        return [(tuple(float(v) for v in c), h) for c in self.centers]


@dataclass(frozen=True)
class CoverResult:
    """List-like sequence of CoverLevel plus run metadata."""

    levels: list
    truncated: bool
    eps: float
    safety: float
    total_boxes: int

    def __iter__(self):
        return iter(self.levels)

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, k):
        return self.levels[k]


def _coeff_guard(*arrays):
    # int64 products in the reduction stay exact only below 2^31
    for a in arrays:
        if np.any(np.abs(a) > (1 << 31)):
            raise RuntimeError("Gauss reduction coefficients exceeded the exact-int64 range")


def sup_delta_flow_batch(h, T, basis):
    """Exact delta_sup(g_T u_h x0) for a batch of h, d = 2, equal weights.

    Integer coefficient pairs of both working basis vectors are carried
    through the Gauss reduction and re-expanded in extended precision
    every step; with |coeffs| <= 2^31 the arithmetic is exact, and the
    final sup minimizer over a reduced pair has coefficients in
    {(1,0), (0,1), (1,1), (1,-1)} (a^2 - |ab| + b^2 <= 2).
    """
    h = np.asarray(h, dtype=np.longdouble)
    N = h.shape[0]
    if N == 0:
        return np.empty(0)
    B = np.asarray(basis, dtype=np.longdouble)
    eT = np.exp(np.longdouble(T))
    emT = np.exp(-np.longdouble(T))

    def vecs(a, b):
        v1 = B[0, 0] * a + B[0, 1] * b
        v2 = B[1, 0] * a + B[1, 1] * b
        return eT * (v1 + h * v2), emT * v2

    a1 = np.ones(N, dtype=np.int64)
    b1 = np.zeros(N, dtype=np.int64)
    a2 = np.zeros(N, dtype=np.int64)
    b2 = np.ones(N, dtype=np.int64)
    for _ in range(96):
        u0, u1 = vecs(a1, b1)
        w0, w1 = vecs(a2, b2)
        n1 = u0 * u0 + u1 * u1
        n2 = w0 * w0 + w1 * w1
        swap = n2 < n1
        if np.any(swap):
            a1s, b1s = a1.copy(), b1.copy()
            a1[swap], b1[swap] = a2[swap], b2[swap]
            a2[swap], b2[swap] = a1s[swap], b1s[swap]
            u0, u1, w0, w1 = np.where(swap, w0, u0), np.where(swap, w1, u1), np.where(swap, u0, w0), np.where(swap, u1, w1)
            n1 = np.where(swap, n2, n1)
        mu = np.rint((u0 * w0 + u1 * w1) / n1).astype(np.int64)
        if not np.any(swap) and not np.any(mu):
            break
        _coeff_guard(mu, a1, b1)
        a2 -= mu * a1
        b2 -= mu * b1
        _coeff_guard(a2, b2)
    best = None
    for ca, cb in ((1, 0), (0, 1), (1, 1), (1, -1)):
        v0, v1 = vecs(ca * a1 + cb * a2, ca * b1 + cb * b2)
        s = np.maximum(np.abs(v0), np.abs(v1))
        best = s if best is None else np.minimum(best, s)
    return best.astype(np.float64)


def default_safety(w, side):
    """Quasinorm distortion of u_W with ||W||_inf <= side/2 (conjugated box radius).

    Exact multiplicative factor 1 + n side/2 at equal weights; for
    general weights the worst quasinorm exponent is applied on top,
    which is conservative.
    """
    p = max(max(1.0 / (w.m * ik) for ik in w.i), max(1.0 / (w.n * jl) for jl in w.j))
    return (1.0 + w.n * side / 2.0) ** p


def _delta_at_centers(centers, T, x0, w):
    if w.d == 2 and w.equal:
        return sup_delta_flow_batch(centers[:, 0], T, x0.basis)
    G = g_t(w, T)
    out = np.empty(len(centers))
    for idx, hrow in enumerate(centers):
        U = u_A(hrow.reshape(w.m, w.n), w.m, w.n)
        out[idx] = delta_weighted(make_lattice(G @ U), w)
    return out


def survivor_cover(
    x0,
    w,
    c,
    r,
    t,
    k_max,
    budget=BOX_BUDGET,
    safety=None,
    r_cap=R_CAP,
    tol=_NEAR_INT_TOL,
):
    """Recursive Bowen-box cover of the h whose orbit avoids U(c^(1/d)).

    Level 0 is the single cube V_r = (0, side)^L.  Level k+1 refines
    every surviving box into its conjugated-tessellation sub-boxes and
    keeps a sub-box unless its center certifiably enters U at time
    (k+1) t: survive iff delta_w(g_{(k+1)t} u_center x0) >= eps/safety.
    The safety factor covers the distance from the center to any point
    of the box after conjugation, so discarding is sound (conservative
    keep).  Children are placed on the refined grid from the parent's
    low corner, the last translate per axis snapped inward, so level
    k+1 boxes stay inside the closure of their parent while covering
    it.  Hitting the total box budget truncates the run gracefully.
    """
    if not 0 < c < 1:
        raise ValidationError("c", "must be in (0, 1)")
    if not 0 < r <= r_cap:
        raise ValidationError("r", f"must be in (0, {r_cap}]")
    if t <= 0:
        raise ValidationError("t", "must be positive")
    if int(k_max) != k_max or k_max < 1:
        raise ValidationError("k_max", "must be a positive integer")
    if x0.dim != w.d:
        raise DimensionMismatch(f"x0 dim {x0.dim} != weight dimension {w.d}")
    L = w.m * w.n
    tess = tessellation_new(L, r)
    side = tess.side
    lams = _lambdas(w)
    eps = c ** (1.0 / w.d)
    if safety is None:
        safety = default_safety(w, side)
    thresh = eps / safety

    lows = np.zeros((1, L))
    sides0 = np.full(L, side)
    levels = [
        CoverLevel(k=0, centers=lows + sides0 / 2.0, half_sides=sides0 / 2.0, count=1)
    ]
    total = 1
    truncated = False
    m_axis = [_per_axis_count(math.exp(lam * t), tol) for lam in lams]
    n_children = int(np.prod(m_axis))
    for k in range(1, int(k_max) + 1):
        if len(lows) == 0:
            break
        child_sides = side * np.exp(-lams * k * t)
        parent_sides = side * np.exp(-lams * (k - 1) * t)
        if total + len(lows) * n_children > budget:
            truncated = True
            break
        offsets = []
        for ax in range(L):
            off = np.arange(m_axis[ax]) * child_sides[ax]
            # snap the last translate inward: containment in the parent
            # closure and full coverage both hold
            off = np.minimum(off, parent_sides[ax] - child_sides[ax])
            offsets.append(off)
        grids = np.meshgrid(*offsets, indexing="ij")
        off_grid = np.stack([g.reshape(-1) for g in grids], axis=1)
        child_lows = (lows[:, None, :] + off_grid[None, :, :]).reshape(-1, L)
        centers = child_lows + child_sides / 2.0
        total += len(centers)
        dvals = _delta_at_centers(centers, k * t, x0, w)
        keep = dvals >= thresh
        lows = child_lows[keep]
        lvl = CoverLevel(
            k=k,
            centers=centers[keep],
            half_sides=child_sides / 2.0,
            count=int(np.count_nonzero(keep)),
        )
        # nesting check: the furthest child edge stays within the parent
        for ax in range(L):
            assert offsets[ax][-1] + child_sides[ax] <= parent_sides[ax] * (1 + 1e-12)
        levels.append(lvl)
        if lvl.count == 0:
            break
    return CoverResult(
        levels=levels,
        truncated=truncated,
        eps=eps,
        safety=float(safety),
        total_boxes=total,
    )


@dataclass(frozen=True)
class CoveringBound:
    value: float
    base: float
    clamped: bool


def covering_bound(r, t, k, mu_sigma_r_U, consts):
    """Evaluate K0 e^{L k lambda_max t} (1 - K1 mu + K2 e^{-lambda1 t}/r^L)^k."""
    for key in ("K0", "K1", "K2", "lambda1", "lambda_max", "L"):
        if key not in consts or consts[key] <= 0:
            raise ValidationError(key, "must be present and positive")
    base = 1.0 - consts["K1"] * mu_sigma_r_U + consts["K2"] * math.exp(
        -consts["lambda1"] * t
    ) / (r ** consts["L"])
    clamped = base < 0
    b = max(base, 0.0)
    value = consts["K0"] * math.exp(consts["L"] * k * consts["lambda_max"] * t) * b**k
    return CoveringBound(value=value, base=base, clamped=clamped)


def dim_upper_formula(L, t, base):
    """The covering-exponent form L + log(base)/t."""
    if base <= 0:
        raise DomainError("base must be positive")
    return L + math.log(base) / t


@dataclass(frozen=True)
class DimensionEstimate:
    levels_used: list
    log_counts: list
    slope: float
    intercept: float
    r2: float


def box_dimension_fit(levels, sizes=None, include_transient=False):
    """Least-squares slope of log(count) against log(1/size).

    `levels` is a CoverResult/list of CoverLevel, or a plain list of
    counts paired with explicit `sizes`.  Level 0 (the single starting
    cube) is excluded as a transient unless include_transient is set.
    Needs >= 3 usable levels with positive counts.
    """
    if sizes is None:
        ks = [lv.k for lv in levels]
        counts = [lv.count for lv in levels]
        sizes = [2.0 * float(np.max(lv.half_sides)) for lv in levels]
    else:
        ks = list(range(len(levels)))
        counts = [int(getattr(lv, "count", lv)) for lv in levels]
        sizes = [float(s) for s in sizes]
    pts = []
    for k, cnt, sz in zip(ks, counts, sizes):
        if not include_transient and k == 0:
            continue
        if cnt <= 0:
            break
        pts.append((k, math.log(1.0 / sz), math.log(cnt)))
    if len(pts) < 3:
        raise DegenerateFit(f"{len(pts)} usable levels, need >= 3")
    X = np.array([p[1] for p in pts])
    Y = np.array([p[2] for p in pts])
    A = np.stack([X, np.ones_like(X)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - (slope * X + intercept)
    sstot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 if sstot < 1e-30 else max(0.0, 1.0 - float(np.sum(resid**2)) / sstot)
    return DimensionEstimate(
        levels_used=[p[0] for p in pts],
        log_counts=Y.tolist(),
        slope=float(slope),
        intercept=float(intercept),
        r2=min(1.0, r2),
    )


def _cf_lengths(N, depth):
    """Cylinder interval lengths 1/(q_k (q_k + q_{k-1})) at the given depth."""
    cur = np.array([1], dtype=np.int64)  # q_0
    prev = np.array([0], dtype=np.int64)  # q_{-1}
    digits = np.arange(1, N + 1, dtype=np.int64)
    for _ in range(depth):
        new_cur = (digits[:, None] * cur[None, :] + prev[None, :]).reshape(-1)
        prev = np.tile(cur, N)
        cur = new_cur
    q = cur.astype(np.float64)
    qp = prev.astype(np.float64)
    return 1.0 / (q * (q + qp))


def cf_digit_oracle(N, depth, cap=CF_BUDGET):
    """Box-dimension estimate of E_N = {all partial quotients <= N}.

    Enumerates all depth-level continued-fraction cylinders with digits
    <= N and returns the exponent s at which the total s-weighted
    cylinder length is the same at depths depth-1 and depth (the
    root of log sum l^s across two consecutive depths).  Entirely
    independent of the dynamical code path.
    """
    if int(N) != N or N < 1:
        raise ValidationError("N", "must be a positive integer")
    if int(depth) != depth or depth < 4:
        raise ValidationError("depth", "must be an integer >= 4")
    if N**depth > cap:
        raise BudgetExceeded(f"N^depth = {N ** depth} exceeds cap {cap}")
    if N == 1:
        return 0.0  # single cylinder per depth: the one-point golden tail
    l_prev = _cf_lengths(N, depth - 1)
    l_cur = _cf_lengths(N, depth)

    def f(s):
        return math.log(float(np.sum(l_cur**s))) - math.log(float(np.sum(l_prev**s)))

    return float(brentq(f, 0.0, 1.0, xtol=1e-12, rtol=8.9e-16))
