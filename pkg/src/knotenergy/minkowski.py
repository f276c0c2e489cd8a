"""Exterior algebra over Minkowski space R^{n+2}_1 and the sphere-space models.

Vectors carry the negative-norm coordinate at index 0.  A blade of grade
``k = q + 2`` is stored by its Plücker coordinates: the ``k x k`` minors of
the matrix whose columns are the factors, one per sorted multi-index in
lexicographic order.  With this convention the blade pseudo-metric is

    <p, p'> = sum_I sig_I p_I p'_I,   sig_I = +1 if I starts with 0, else -1,

which equals minus the Gram determinant of the factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .curve import PolyCurve
from .energy import arc_parameters
from .moebius import lift_to_sphere, light_cone_lift


class MinkowskiError(ValueError):
    pass


def metric(m: int) -> np.ndarray:
    """Diagonal metric ``diag(-1, 1, ..., 1)`` of R^m_1."""
    j = np.ones(m)
    j[0] = -1.0
    return np.diag(j)


def mink_inner(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1] != v.shape[-1]:
        raise MinkowskiError("dimension mismatch")
    return np.sum(u * v, axis=-1) - 2.0 * u[..., 0] * v[..., 0]


@lru_cache(maxsize=None)
def multi_indices(m: int, k: int) -> tuple:
    return tuple(combinations(range(m), k))


@lru_cache(maxsize=None)
def _index_array(m: int, k: int) -> np.ndarray:
    return np.array(multi_indices(m, k), dtype=int).reshape(-1, k)


@lru_cache(maxsize=None)
def _position(m: int, k: int) -> dict:
    return {I: a for a, I in enumerate(multi_indices(m, k))}


@lru_cache(maxsize=None)
def signature(q: int, n: int) -> np.ndarray:
    idx = _index_array(n + 2, q + 2)
    sig = np.where(idx[:, 0] == 0, 1.0, -1.0)
    sig.setflags(write=False)
    return sig


def blade_dim(q: int, n: int) -> int:
    return math.comb(n + 2, q + 2)


@dataclass(frozen=True, eq=False)
class Blade:
    q: int
    n: int
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape[-1] != blade_dim(self.q, self.n):
            raise MinkowskiError(
                f"expected {blade_dim(self.q, self.n)} coordinates for (q, n) = ({self.q}, {self.n})")
        object.__setattr__(self, "coords", coords)

    @property
    def legend(self) -> list:
        return ["".join(str(i) for i in I) for I in multi_indices(self.n + 2, self.q + 2)]

    def to_json(self) -> dict:
        return {"q": self.q, "n": self.n, "indices": self.legend, "coords": self.coords.tolist()}

    def __neg__(self):
        return Blade(self.q, self.n, -self.coords)


@dataclass(frozen=True, eq=False)
class SphereElem:
    """A unit-pseudonorm decomposable blade: an oriented q-sphere in S^n."""

    blade: Blade

    @property
    def coords(self):
        return self.blade.coords


def _as_matrix(vectors) -> np.ndarray:
    mat = np.asarray(vectors, dtype=float)
    if mat.ndim < 2:
        raise MinkowskiError("wedge needs a list of vectors")
    return mat


def wedge(vectors) -> Blade:
    """Plücker coordinates of ``v_1 ^ ... ^ v_k``.

    ``vectors`` has shape ``(k, m)`` or ``(..., k, m)`` for a batch.
    """
    mat = _as_matrix(vectors)
    k, m = mat.shape[-2:]
    if not 2 <= k <= m:
        raise MinkowskiError("need between 2 and m vectors")
    idx = _index_array(m, k)
    cols = np.swapaxes(mat, -1, -2)        # (..., m, k): factors as columns
    minors = cols[..., idx, :]             # (..., N, k, k)
    coords = np.linalg.det(minors) if k > 2 else (
        minors[..., 0, 0] * minors[..., 1, 1] - minors[..., 0, 1] * minors[..., 1, 0])
    return Blade(k - 2, m - 2, coords)


def blade_inner(a: Blade, b: Blade):
    if (a.q, a.n) != (b.q, b.n):
        raise MinkowskiError("blades of different type")
    return np.sum(signature(a.q, a.n) * a.coords * b.coords, axis=-1)


def gram_inner(us, vs) -> float:
    """Minus the Gram determinant ``det <u_a, v_b>`` of two factor lists."""
    us = np.asarray(us, float)
    vs = np.asarray(vs, float)
    g = us @ metric(us.shape[-1]) @ np.swapaxes(vs, -1, -2)
    return -np.linalg.det(g)


def _sorted_sign(indices):
    """Sign of the sorting permutation, or 0 on a repeat."""
    idx = list(indices)
    if len(set(idx)) < len(idx):
        return 0, None
    sign = 1
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            if idx[a] > idx[b]:
                sign = -sign
    return sign, tuple(sorted(idx))


@lru_cache(maxsize=None)
def _plucker_tables(m: int, k: int):
    pos = _position(m, k)
    a_idx, b_idx, signs = [], [], []
    for head in combinations(range(m), k - 1):
        for tail in combinations(range(m), k + 1):
            ai, bi, sg = [], [], []
            for l, jl in enumerate(tail):
                s, key = _sorted_sign(head + (jl,))
                rest = tail[:l] + tail[l + 1:]
                ai.append(pos[key] if s else 0)
                bi.append(pos[rest])
                sg.append(s * (-1) ** l)
            if any(sg):
                a_idx.append(ai)
                b_idx.append(bi)
                signs.append(sg)
    return np.array(a_idx), np.array(b_idx), np.array(signs, dtype=float)


def plucker_residuals(b: Blade) -> np.ndarray:
    """All quadratic Plücker relations evaluated on ``b``.

    For sorted ``I'`` of size k-1 and ``J`` of size k+1 the relation is
    ``sum_l (-1)^l p[I' + j_l] p[J - j_l] = 0``.  Every relation is checked,
    since no independent subset is singled out.
    """
    m, k = b.n + 2, b.q + 2
    a_idx, b_idx, signs = _plucker_tables(m, k)
    if len(signs) == 0:
        return np.zeros(b.coords.shape[:-1] + (0,))
    p = b.coords
    return np.sum(signs * p[..., a_idx] * p[..., b_idx], axis=-1)


def plucker_residual(b: Blade) -> np.ndarray:
    """Largest relation residual relative to ``|p|^2``."""
    res = plucker_residuals(b)
    if res.shape[-1] == 0:
        return np.zeros(b.coords.shape[:-1])
    scale = np.sum(b.coords**2, axis=-1)
    return np.max(np.abs(res), axis=-1) / np.where(scale > 0, scale, 1.0)


def pseudonorm_sq(b: Blade):
    return blade_inner(b, b)


def psi_G(vectors) -> SphereElem:
    """Normalized wedge of a basis of a plane meeting the light cone transversally."""
    b = wedge(vectors)
    nn = float(pseudonorm_sq(b))
    if not nn > 0:
        raise MinkowskiError(f"pseudonorm squared {nn:.3g} <= 0: plane misses the light cone transversally")
    return SphereElem(Blade(b.q, b.n, b.coords / math.sqrt(nn)))


def psi_matrix(A, q: int, n: int) -> np.ndarray:
    """Matrix of the induced action on grade-(q+2) blades: the (I, J) minors of ``A``."""
    A = np.asarray(A, dtype=float)
    m, k = n + 2, q + 2
    if A.shape != (m, m):
        raise MinkowskiError(f"expected a {m}x{m} matrix")
    idx = _index_array(m, k)
    sub = A[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(sub)


def apply_psi(A, b: Blade) -> Blade:
    return Blade(b.q, b.n, b.coords @ psi_matrix(A, b.q, b.n).T)


# -- Lorentz group samples -----------------------------------------------------

def rotation(m: int, i: int, j: int, angle: float) -> np.ndarray:
    if 0 in (i, j) or i == j:
        raise MinkowskiError("rotation planes must avoid the time axis")
    r = np.eye(m)
    c, s = math.cos(angle), math.sin(angle)
    r[i, i] = r[j, j] = c
    r[i, j], r[j, i] = -s, s
    return r


def boost(m: int, k: int, rapidity: float) -> np.ndarray:
    if k == 0:
        raise MinkowskiError("boost direction must be spatial")
    b = np.eye(m)
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    b[0, 0] = b[k, k] = ch
    b[0, k] = b[k, 0] = sh
    return b


def random_lorentz(rng: np.random.Generator, m: int, factors: int = 6, max_rapidity: float = 1.0) -> np.ndarray:
    """Product of random spatial rotations and (0, k) boosts."""
    a = np.eye(m)
    for _ in range(factors):
        if rng.random() < 0.5 and m > 2:
            i, j = rng.choice(np.arange(1, m), size=2, replace=False)
            a = rotation(m, int(i), int(j), rng.uniform(-np.pi, np.pi)) @ a
        else:
            k = int(rng.integers(1, m))
            a = boost(m, k, rng.uniform(-max_rapidity, max_rapidity)) @ a
    return a


def lorentz_residual(A) -> float:
    j = metric(len(A))
    return float(np.abs(A.T @ j @ A - j).max())


# -- oriented 2-spheres of S^3 as points of de Sitter space ----------------------

def desitter_from_sphere(center, radius: float, orientation: int = 1) -> np.ndarray:
    """Unit spacelike normal ``sigma`` to the hyperplane cutting out the sphere.

    The sphere is ``{X in S^3 : <X, center> = cos(radius)}``.  The lifts
    ``(1, X)`` of its points satisfy ``<(1, X), sigma> = 0`` and the cap
    around ``center`` is the side where that product is positive; reversing
    the orientation swaps the sides.
    """
    m = np.asarray(center, dtype=float)
    if abs(np.linalg.norm(m) - 1.0) > 1e-9:
        raise MinkowskiError("centre must lie on the unit 3-sphere")
    if not 0.0 < radius < math.pi or math.sin(radius) < 1e-12:
        raise MinkowskiError("radius must lie strictly between 0 and pi")
    if orientation not in (1, -1):
        raise MinkowskiError("orientation must be +1 or -1")
    return orientation * np.concatenate([[math.cos(radius)], m]) / math.sin(radius)


def sphere_from_desitter(sigma) -> tuple[np.ndarray, float, int]:
    """Inverse of :func:`desitter_from_sphere`, always returning orientation +1."""
    sigma = np.asarray(sigma, dtype=float)
    nn = float(mink_inner(sigma, sigma))
    if abs(nn - 1.0) > 1e-9:
        raise MinkowskiError("sigma must have unit pseudonorm")
    spatial = np.linalg.norm(sigma[1:])
    return sigma[1:] / spatial, math.atan2(1.0, sigma[0]), 1


def hodge_vector(b: Blade) -> np.ndarray:
    """Vector ``c`` with ``c . v = det[v, factors]`` for a grade m-1 blade."""
    m = b.n + 2
    if b.q + 2 != m - 1:
        raise MinkowskiError("Hodge vector needs a hyperplane blade")
    # multi_indices(m, m-1) lists complements of m-1, m-2, ..., 0
    comp = b.coords[..., ::-1]
    return comp * (-1.0) ** np.arange(m)


def desitter_from_blade(b: Blade) -> np.ndarray:
    """Unit normal of the hyperplane spanned by an oriented 4-blade in R^5_1."""
    sig = metric(b.n + 2) @ hodge_vector(b)
    nn = float(mink_inner(sig, sig))
    if not nn > 0:
        raise MinkowskiError("hyperplane is not timelike")
    return sig / math.sqrt(nn)


def blade_from_desitter(sigma) -> SphereElem:
    """Unit 4-blade spanning ``sigma^perp``, oriented to map back to ``sigma``."""
    sigma = np.asarray(sigma, dtype=float)
    m = len(sigma)
    j = metric(m)
    # basis of the Minkowski-orthogonal complement: Euclidean complement of J sigma
    _, _, vt = np.linalg.svd((j @ sigma)[None, :])
    basis = vt[1:]
    elem = psi_G(basis)
    if desitter_from_blade(elem.blade) @ j @ sigma < 0:
        basis = basis.copy()
        basis[0] = -basis[0]
        elem = psi_G(basis)
    return elem


# -- the 0-sphere map and its signed area --------------------------------------

def _wedge2(x, y):
    m = x.shape[-1]
    idx = _index_array(m, 2)
    return x[..., idx[:, 0]] * y[..., idx[:, 1]] - x[..., idx[:, 1]] * y[..., idx[:, 0]]


def s_map(x, y) -> SphereElem:
    """Point of Theta(0, 3) for the pair ``{x, y}`` of distinct points on S^3."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.allclose(x, y, rtol=0, atol=1e-14):
        raise MinkowskiError("coincident points")
    return psi_G(np.stack([light_cone_lift(x), light_cone_lift(y)]))


def _s_array(X, Y):
    """Batched s-map on light-cone lifts, shape (..., 10)."""
    inner = mink_inner(X, Y)
    return _wedge2(X, Y) / np.abs(inner)[..., None]


def fd_weights(nodes, x0) -> np.ndarray:
    """Weights of the first-derivative stencil on arbitrary ``nodes`` at ``x0``.

    On five equally spaced nodes this is the centred difference with one
    Richardson step.
    """
    t = np.asarray(nodes, float) - x0
    k = len(t)
    vander = np.vander(t, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[1] = 1.0
    return np.linalg.solve(vander, rhs)


def _sphere_lift(c: PolyCurve) -> tuple[np.ndarray, np.ndarray]:
    """Light-cone lifts of the vertices and the parameter used for derivatives.

    Curves in R^3 are lifted through stereographic projection and keep their
    own arclength parameter; curves in R^4 must already lie on S^3.
    """
    s, _, _ = arc_parameters(c)
    v = c.vertices
    if c.dim == 3:
        q = lift_to_sphere(v)
    elif c.dim == 4:
        q = v / np.linalg.norm(v, axis=1, keepdims=True)
    else:
        raise MinkowskiError("curve must live in R^3 or on S^3")
    X = np.concatenate([np.ones((len(q), 1)), q], axis=1)
    return X, s


def _stencil(c: PolyCurve, s, i, total):
    n = c.n
    offs = np.arange(-2, 3)
    idx = (i + offs) % n
    delta = s[idx] - s[i]
    delta = np.where((offs > 0) & (delta < 0), delta + total, delta)
    delta = np.where((offs < 0) & (delta > 0), delta - total, delta)
    return idx, fd_weights(delta, 0.0)


@dataclass
class AreaSample:
    area: np.ndarray       # <s_x, s_y>
    xx: np.ndarray         # <s_x, s_x>
    yy: np.ndarray         # <s_y, s_y>
    xx_scale: np.ndarray   # Euclidean |s_x|^2
    yy_scale: np.ndarray


def signed_area_grid(c: PolyCurve, rows, cols, other: PolyCurve | None = None) -> AreaSample:
    """``<s_x, s_y>`` on a grid of vertex pairs, plus the lightlike checks.

    Partial derivatives use 5-point centred stencils in arclength.  With
    ``other`` given, ``x`` runs over ``c`` and ``y`` over ``other``.
    """
    if not c.closed or (other is not None and not other.closed):
        raise MinkowskiError("signed area needs closed curves")
    d = c if other is None else other
    X, sx_par = _sphere_lift(c)
    Y, sy_par = _sphere_lift(d)
    lx, ly = arc_parameters(c)[2], arc_parameters(d)[2]
    rows = np.atleast_1d(np.asarray(rows))
    cols = np.atleast_1d(np.asarray(cols))
    sig = signature(0, X.shape[1] - 2)

    st_x = [_stencil(c, sx_par, i, lx) for i in rows]
    st_y = [_stencil(d, sy_par, j, ly) for j in cols]
    ix = np.array([s[0] for s in st_x])       # (R, 5)
    wx = np.array([s[1] for s in st_x])
    iy = np.array([s[0] for s in st_y])       # (C, 5)
    wy = np.array([s[1] for s in st_y])

    with np.errstate(invalid="ignore", divide="ignore"):
        # s_x: vary x over the stencil with y fixed
        sx = np.einsum("rk,rckp->rcp", wx, _s_array(X[ix][:, None, :, :], Y[cols][None, :, None, :]))
        sy = np.einsum("ck,rckp->rcp", wy, _s_array(X[rows][:, None, None, :], Y[iy][None, :, :, :]))
    if other is None:
        same = rows[:, None] == cols[None, :]
        sx[same] = np.nan
        sy[same] = np.nan
    return AreaSample(
        np.sum(sig * sx * sy, axis=-1),
        np.sum(sig * sx * sx, axis=-1),
        np.sum(sig * sy * sy, axis=-1),
        np.sum(sx * sx, axis=-1),
        np.sum(sy * sy, axis=-1),
    )


def signed_area_density(c: PolyCurve, i: int, j: int) -> float:
    """Density of the signed area form ``<s_x, s_y> dx dy`` at vertex pair (i, j)."""
    if i % c.n == j % c.n:
        raise MinkowskiError("need two distinct vertices")
    return float(signed_area_grid(c, [i], [j]).area[0, 0])
