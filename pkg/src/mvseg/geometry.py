"""Riemannian manifolds used as pixel value spaces, and the intrinsic mean.

Every manifold works on batched NumPy arrays: a point array has shape
``(..., *point_shape)`` and a tangent array ``(..., *tangent_shape)``, and the
leading axes broadcast.  Representations:

============  ===============  =================  ======================
manifold      point            tangent            metric
============  ===============  =================  ======================
Euclidean(n)  ``(n,)``         ``(n,)``           dot product
Sphere1       ``(2,)`` unit    ``(2,)`` ⟂ point   embedded dot product
Sphere2       ``(3,)`` unit    ``(3,)`` ⟂ point   embedded dot product
SO3           ``(3, 3)``       ``(3,)`` axis*ang  dot of axis vectors
SPD(n)        ``(n, n)``       ``(n, n)`` sym     affine invariant
============  ===============  =================  ======================
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    CutLocusError,
    InvalidArgumentError,
    NonConvergenceError,
    NumericalError,
)
from .parallel import map_chunks

# file-format kind codes
EUCLIDEAN, SPHERE1, SPHERE2, SO3_TAG, SPD_TAG = 0, 1, 2, 3, 4

SMALL_ANGLE = 1e-7
EIG_FLOOR = 1e-12
# relative rise of the mean squared distance tolerated before backtracking
BACKTRACK_SLACK = 1e-12


def _norm(x, axis=-1):
    return np.sqrt(np.sum(x * x, axis=axis))


def _first_bad(bad):
    return int(np.flatnonzero(np.ravel(bad))[0])


class Manifold:
    """Common interface.  Subclasses implement ``exp``, ``_log``, ``inner``."""

    tag = None
    point_shape = ()
    tangent_shape = ()

    @property
    def dim_param(self):
        return 0

    @property
    def elem_len(self):
        return int(np.prod(self.point_shape))

    def __eq__(self, other):
        return (
            isinstance(other, Manifold)
            and self.tag == other.tag
            and self.dim_param == other.dim_param
        )

    def __hash__(self):
        return hash((self.tag, self.dim_param))

    def __repr__(self):
        return self.name

    @property
    def name(self):
        return type(self).__name__

    def _batch_shape(self, x, shape):
        nd = len(shape)
        if x.shape[x.ndim - nd:] != shape:
            raise InvalidArgumentError(
                f"{self.name}: expected trailing shape {shape}, got {x.shape}"
            )
        return x.shape[: x.ndim - nd]

    def _check_pair(self, p, v, v_shape):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        self._batch_shape(p, self.point_shape)
        self._batch_shape(v, v_shape)
        return p, v

    def exp(self, p, v):
        raise NotImplementedError

    def _log(self, p, q):
        """Return ``(v, bad)`` where ``bad`` flags cut-locus pairs."""
        raise NotImplementedError

    def inner(self, p, u, v):
        raise NotImplementedError

    def log(self, p, q):
        """Riemannian Log map; raises :class:`CutLocusError` on the cut locus."""
        p, q = self._check_pair(p, q, self.point_shape)
        v, bad = self._log(p, q)
        if np.any(bad):
            idx = _first_bad(bad)
            raise CutLocusError(
                f"{self.name}: Log undefined (cut locus) at pair {idx}", index=idx
            )
        return v

    def log_or_zero(self, p, q):
        """Log map with cut-locus pairs replaced by zero vectors.

        Returns ``(v, bad)`` so callers can count substitutions.
        """
        p, q = self._check_pair(p, q, self.point_shape)
        v, bad = self._log(p, q)
        if np.any(bad):
            v = np.where(self._expand(bad, self.tangent_shape), 0.0, v)
        return v, bad

    def norm(self, p, v):
        return np.sqrt(np.maximum(self.inner(p, v, v), 0.0))

    def dist(self, p, q):
        return self.norm(p, self.log(p, q))

    def zero_tangent(self, p):
        p = np.asarray(p, dtype=float)
        batch = self._batch_shape(p, self.point_shape)
        return np.zeros(batch + self.tangent_shape)

    def is_point(self, p):
        """Boolean array, one entry per point, for the point invariants."""
        raise NotImplementedError

    def validate(self, p):
        ok = self.is_point(p)
        if not np.all(ok):
            idx = _first_bad(~ok)
            raise InvalidArgumentError(f"{self.name}: point {idx} is not on the manifold")

    def random_point(self, rng, size=()):
        raise NotImplementedError

    def random_tangent(self, p, rng):
        """Standard Gaussian tangent vector in an orthonormal basis at ``p``."""
        raise NotImplementedError

    @staticmethod
    def _expand(a, shape):
        return np.reshape(a, np.shape(a) + (1,) * len(shape))


@dataclass(frozen=True, eq=False, repr=False)
class Euclidean(Manifold):
    n: int = 1
    tag = EUCLIDEAN

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidArgumentError("Euclidean(n) requires n >= 1")

    @property
    def name(self):
        return f"Euclidean({self.n})"

    @property
    def dim_param(self):
        return self.n

    @property
    def point_shape(self):
        return (self.n,)

    tangent_shape = point_shape

    def exp(self, p, v):
        p, v = self._check_pair(p, v, self.point_shape)
        return p + v

    def _log(self, p, q):
        v = q - p
        return v, np.zeros(v.shape[:-1], dtype=bool)

    def inner(self, p, u, v):
        return np.sum(np.asarray(u, float) * np.asarray(v, float), axis=-1)

    def dist(self, p, q):
        return _norm(np.asarray(q, float) - np.asarray(p, float))

    def is_point(self, p):
        return np.all(np.isfinite(p), axis=-1)

    def random_point(self, rng, size=()):
        return rng.standard_normal(np.shape(np.empty(size)) + (self.n,))

    def random_tangent(self, p, rng):
        return rng.standard_normal(np.shape(p))


class _Sphere(Manifold):
    """Unit sphere in R^d with the embedded metric."""

    d = 3
    unit_tol = 1e-9

    @property
    def point_shape(self):
        return (self.d,)

    @property
    def tangent_shape(self):
        return (self.d,)

    def exp(self, p, v):
        p, v = self._check_pair(p, v, self.tangent_shape)
        nv = _norm(v)[..., None]
        safe = np.where(nv > 0, nv, 1.0)
        out = np.cos(nv) * p + np.sin(nv) * v / safe
        return out / _norm(out)[..., None]

    def inner(self, p, u, v):
        return np.sum(np.asarray(u, float) * np.asarray(v, float), axis=-1)

    def is_point(self, p):
        p = np.asarray(p, float)
        return np.abs(_norm(p) - 1.0) <= self.unit_tol

    def random_point(self, rng, size=()):
        x = rng.standard_normal(np.shape(np.empty(size)) + (self.d,))
        return x / _norm(x)[..., None]


@dataclass(frozen=True, eq=False, repr=False)
class Sphere2(_Sphere):
    d = 3
    tag = SPHERE2
    antipodal_tol = 1e-9

    def _log(self, p, q):
        c = np.sum(p * q, axis=-1)
        w = q - c[..., None] * p
        s = _norm(w)
        theta = np.arctan2(s, c)
        # theta / sin(theta) -> 1 as theta -> 0
        factor = np.where(theta < SMALL_ANGLE, 1.0, theta / np.where(s > 0, s, 1.0))
        bad = c <= -1.0 + self.antipodal_tol
        return factor[..., None] * w, bad

    def dist(self, p, q):
        p, q = self._check_pair(p, q, self.point_shape)
        c = np.sum(p * q, axis=-1)
        bad = c <= -1.0 + self.antipodal_tol
        if np.any(bad):
            idx = _first_bad(bad)
            raise CutLocusError(f"Sphere2: antipodal pair {idx}", index=idx)
        return np.arctan2(_norm(np.cross(p, q)), c)

    def random_tangent(self, p, rng):
        p = np.asarray(p, float)
        z = rng.standard_normal(p.shape)
        return z - np.sum(z * p, axis=-1)[..., None] * p


@dataclass(frozen=True, eq=False, repr=False)
class Sphere1(_Sphere):
    """Unit circle; Log uses the signed angle wrapped to (-pi, pi]."""

    d = 2
    tag = SPHERE1

    def _log(self, p, q):
        cross = p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0]
        ang = np.arctan2(cross, np.sum(p * q, axis=-1))
        ang = np.where(ang <= -np.pi, np.pi, ang)
        perp = np.stack([-p[..., 1], p[..., 0]], axis=-1)
        return ang[..., None] * perp, np.zeros(ang.shape, dtype=bool)

    def dist(self, p, q):
        p, q = self._check_pair(p, q, self.point_shape)
        cross = p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0]
        return np.abs(np.arctan2(cross, np.sum(p * q, axis=-1)))

    def random_tangent(self, p, rng):
        p = np.asarray(p, float)
        perp = np.stack([-p[..., 1], p[..., 0]], axis=-1)
        return rng.standard_normal(p.shape[:-1])[..., None] * perp


def hat(v):
    """Skew-symmetric matrix of a 3-vector: ``hat(v) @ x == cross(v, x)``."""
    v = np.asarray(v, float)
    z = np.zeros(v.shape[:-1])
    x, y, w = v[..., 0], v[..., 1], v[..., 2]
    return np.stack(
        [
            np.stack([z, -w, y], axis=-1),
            np.stack([w, z, -x], axis=-1),
            np.stack([-y, x, z], axis=-1),
        ],
        axis=-2,
    )


def rotation_exp(v):
    """Matrix exponential of ``hat(v)`` via the Rodrigues closed form."""
    v = np.asarray(v, float)
    theta = _norm(v)[..., None, None]
    K = hat(v)
    t2 = theta * theta
    small = theta < 1e-4
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - t2 / 6.0, np.sin(theta) / safe)
    b = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(theta)) / (safe * safe))
    eye = np.broadcast_to(np.eye(3), K.shape)
    return eye + a * K + b * (K @ K)


@dataclass(frozen=True, eq=False, repr=False)
class SO3(Manifold):
    tag = SO3_TAG
    point_shape = (3, 3)
    tangent_shape = (3,)
    cut_tol = 1e-6

    def exp(self, p, v):
        p, v = self._check_pair(p, v, self.tangent_shape)
        return p @ rotation_exp(v)

    def _log(self, p, q):
        R = np.swapaxes(p, -1, -2) @ q
        axis = np.stack(
            [
                R[..., 2, 1] - R[..., 1, 2],
                R[..., 0, 2] - R[..., 2, 0],
                R[..., 1, 0] - R[..., 0, 1],
            ],
            axis=-1,
        )
        s = 0.5 * _norm(axis)
        c = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
        theta = np.arctan2(s, c)
        # theta / (2 sin(theta)) -> 1/2 as theta -> 0
        factor = np.where(theta < SMALL_ANGLE, 0.5, theta / (2.0 * np.where(s > 0, s, 1.0)))
        bad = theta > np.pi - self.cut_tol
        return factor[..., None] * axis, bad

    def inner(self, p, u, v):
        return np.sum(np.asarray(u, float) * np.asarray(v, float), axis=-1)

    def is_point(self, p):
        p = np.asarray(p, float)
        gram = np.swapaxes(p, -1, -2) @ p
        ortho = np.all(np.abs(gram - np.eye(3)) <= 1e-8, axis=(-2, -1))
        det = np.linalg.det(p)
        return ortho & (np.abs(det - 1.0) <= 1e-8)

    def random_point(self, rng, size=()):
        shape = np.shape(np.empty(size))
        A = rng.standard_normal(shape + (3, 3))
        Q, Rm = np.linalg.qr(A)
        Q = Q * np.sign(np.diagonal(Rm, axis1=-2, axis2=-1))[..., None, :]
        flip = np.linalg.det(Q) < 0
        Q[..., :, 0] = np.where(flip[..., None], -Q[..., :, 0], Q[..., :, 0])
        return Q

    def random_tangent(self, p, rng):
        p = np.asarray(p, float)
        return rng.standard_normal(p.shape[:-2] + (3,))


def sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


@dataclass(frozen=True, eq=False, repr=False)
class SPD(Manifold):
    """Symmetric positive-definite matrices with the affine-invariant metric.

    A point ``p = u diag(lam) u^T`` is factored as ``p = g g^T`` with
    ``g = u sqrt(lam)``; tangent vectors are whitened by ``g^{-1} X g^{-T}``.
    """

    n: int = 3
    tag = SPD_TAG
    sym_tol = 1e-9

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidArgumentError("SPD(n) requires n >= 1")

    @property
    def name(self):
        return f"SPD({self.n})"

    @property
    def dim_param(self):
        return self.n

    @property
    def point_shape(self):
        return (self.n, self.n)

    @property
    def tangent_shape(self):
        return (self.n, self.n)

    @staticmethod
    def _eigh(a):
        if not np.all(np.isfinite(a)):
            raise NumericalError("SPD: non-finite matrix entries")
        try:
            return np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SPD: eigendecomposition failed: {exc}") from exc

    def factor(self, p):
        """Return ``(g, g_inv)`` with ``p = g g^T``."""
        lam, u = self._eigh(np.asarray(p, float))
        root = np.sqrt(np.maximum(lam, EIG_FLOOR))
        g = u * root[..., None, :]
        g_inv = np.swapaxes(u, -1, -2) / root[..., :, None]
        return g, g_inv

    @staticmethod
    def _congruence(a, x):
        return a @ x @ np.swapaxes(a, -1, -2)

    def exp(self, p, v):
        p, v = self._check_pair(p, v, self.tangent_shape)
        g, g_inv = self.factor(p)
        sig, w = self._eigh(self._congruence(g_inv, sym(v)))
        gv = g @ w
        return sym((gv * np.exp(sig)[..., None, :]) @ np.swapaxes(gv, -1, -2))

    @staticmethod
    def _check_definite(sig):
        # marginally indefinite inputs are clamped; clearly indefinite ones are errors
        scale = np.max(np.abs(sig), axis=-1)
        bad = ~(sig[..., 0] > -EIG_FLOOR * np.maximum(scale, 1.0))
        if np.any(bad):
            idx = _first_bad(bad)
            raise InvalidArgumentError(f"SPD: matrix {idx} is not positive definite")

    def _log(self, p, q):
        g, g_inv = self.factor(p)
        sig, w = self._eigh(self._congruence(g_inv, q))
        self._check_definite(sig)
        gv = g @ w
        v = sym((gv * np.log(np.maximum(sig, EIG_FLOOR))[..., None, :]) @ np.swapaxes(gv, -1, -2))
        return v, np.zeros(v.shape[:-2], dtype=bool)

    def whiten(self, p, v):
        _, g_inv = self.factor(p)
        return self._congruence(g_inv, np.asarray(v, float))

    def inner(self, p, u, v):
        _, g_inv = self.factor(p)
        uw = self._congruence(g_inv, np.asarray(u, float))
        vw = self._congruence(g_inv, np.asarray(v, float))
        return np.sum(uw * vw, axis=(-2, -1))

    def dist(self, p, q):
        p, q = self._check_pair(p, q, self.point_shape)
        _, g_inv = self.factor(p)
        q = np.asarray(q, float)
        if not np.all(np.isfinite(q)):
            raise NumericalError("SPD: non-finite matrix entries")
        sig = np.linalg.eigvalsh(self._congruence(g_inv, q))
        self._check_definite(sig)
        return _norm(np.log(np.maximum(sig, EIG_FLOOR)))

    def is_point(self, p):
        p = np.asarray(p, float)
        finite = np.all(np.isfinite(p), axis=(-2, -1))
        symmetric = np.all(np.abs(p - np.swapaxes(p, -1, -2)) <= self.sym_tol, axis=(-2, -1))
        safe = np.where(finite[..., None, None], p, 1.0)
        return finite & symmetric & (np.linalg.eigvalsh(sym(safe))[..., 0] > 0)

    def random_point(self, rng, size=(), scale=1.0):
        shape = np.shape(np.empty(size))
        eye = np.broadcast_to(np.eye(self.n), shape + (self.n, self.n))
        S = sym(rng.standard_normal(shape + (self.n, self.n)))
        return self.exp(eye, scale * S)

    def random_tangent(self, p, rng):
        p = np.asarray(p, float)
        g, _ = self.factor(p)
        S = sym(rng.standard_normal(p.shape))
        return sym(self._congruence(g, S))


_NAMES = {
    "s1": Sphere1,
    "sphere1": Sphere1,
    "s2": Sphere2,
    "sphere2": Sphere2,
    "so3": SO3,
}


def parse_manifold(text):
    """Parse ``euclidean:n``, ``r:n``, ``s1``, ``s2``, ``so3`` or ``spd:n``."""
    key, _, arg = str(text).strip().lower().partition(":")
    if key in _NAMES:
        if arg:
            raise InvalidArgumentError(f"manifold {key!r} takes no dimension")
        return _NAMES[key]()
    if key in ("euclidean", "r", "spd", "pd"):
        try:
            n = int(arg) if arg else (1 if key in ("euclidean", "r") else 3)
        except ValueError:
            raise InvalidArgumentError(f"bad manifold dimension in {text!r}") from None
        return Euclidean(n) if key in ("euclidean", "r") else SPD(n)
    raise InvalidArgumentError(f"unknown manifold {text!r}")


def manifold_from_tag(tag, dim_param):
    if tag == EUCLIDEAN:
        return Euclidean(dim_param)
    if tag == SPD_TAG:
        return SPD(dim_param)
    if tag in (SPHERE1, SPHERE2, SO3_TAG):
        if dim_param != 0:
            raise InvalidArgumentError(f"kind tag {tag} requires dim_param 0")
        return {SPHERE1: Sphere1, SPHERE2: Sphere2, SO3_TAG: SO3}[tag]()
    raise InvalidArgumentError(f"unknown kind tag {tag}")


def format_manifold(m):
    if isinstance(m, Euclidean):
        return f"euclidean:{m.n}"
    if isinstance(m, SPD):
        return f"spd:{m.n}"
    return {Sphere1: "s1", Sphere2: "s2", SO3: "so3"}[type(m)]


@dataclass(frozen=True)
class MeanSolverParams:
    """Stopping rule for the intrinsic mean: stop once the Riemannian norm of
    the averaged Log step is at most ``tolerance``."""

    tolerance: float = 1e-8
    max_iters: int = 100

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidArgumentError("tolerance must be > 0")
        if int(self.max_iters) < 1:
            raise InvalidArgumentError("max_iters must be >= 1")


def tangent_mean(manifold, mu, points, workers=1):
    """Average of ``Log_mu(x_i)`` over the leading axis of ``points``."""
    return _mean_step(manifold, mu, points, workers)[0]


def _mean_step(manifold, mu, points, workers):
    """Averaged Log and the mean squared distance ``(1/N) sum d(mu, x_i)^2``."""
    def one(chunk):
        v = manifold.log(mu, chunk)
        return v, manifold.inner(mu, v, v)

    logs, sq = map_chunks(one, points, workers)
    return logs.mean(axis=0), float(sq.mean())


def intrinsic_mean(manifold, points, params=None, init=None, workers=1):
    """Karcher mean by fixed-point tangent averaging.

    Starting from ``init`` (the first point when omitted), repeat
    ``step = mean_i Log_mu(x_i)``, ``mu = Exp_mu(step)`` until the Riemannian
    norm of ``step`` is at most ``params.tolerance``.

    The unit step can overshoot on widely spread data (it diverges on some
    SPD clouds).  As a safeguard, a sweep whose mean squared distance exceeds
    the previous one is discarded and the previous step is retried at half
    length; the reduced length is kept from then on.  On well-behaved data the
    objective decreases every sweep and the plain iteration is unchanged.

    Parameters
    ----------
    manifold : Manifold
    points : ndarray, shape (N, *point_shape)
    params : MeanSolverParams, optional
    init : ndarray, optional
        Warm-start iterate.
    workers : int
        Threads used for the per-point Log evaluations.

    Returns
    -------
    ndarray
        The mean, of shape ``point_shape``.

    Raises
    ------
    NonConvergenceError
        After ``params.max_iters`` sweeps; ``.last`` holds the last iterate.
    CutLocusError
        With ``.iteration`` set to the sweep index.
    """
    params = params or MeanSolverParams()
    points = np.asarray(points, dtype=float)
    manifold._batch_shape(points, manifold.point_shape)
    points = points.reshape((-1,) + manifold.point_shape)
    if points.shape[0] == 0:
        raise InvalidArgumentError("intrinsic_mean of an empty point set")
    mu = points[0].copy() if init is None else np.array(init, dtype=float)
    length = 1.0
    prev = None
    for it in range(int(params.max_iters)):
        try:
            step, objective = _mean_step(manifold, mu, points, workers)
        except CutLocusError as exc:
            exc.iteration = it
            raise
        if prev is not None and objective > prev[2] + BACKTRACK_SLACK * max(prev[2], 1.0):
            length *= 0.5
            mu = manifold.exp(prev[0], length * prev[1])
            continue
        size = float(manifold.norm(mu, step))
        if size <= params.tolerance:
            return manifold.exp(mu, step)
        prev = (mu, step, objective)
        mu = manifold.exp(mu, length * step)
    raise NonConvergenceError(
        f"intrinsic mean did not converge in {params.max_iters} iterations",
        last=mu,
        iterations=int(params.max_iters),
    )
