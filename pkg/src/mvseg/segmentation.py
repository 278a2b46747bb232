"""Geodesic active contours and Chan-Vese contours on manifold-valued images.

Both solvers evolve a level-set field ``phi`` (negative inside) by explicit
Euler steps, reinitialize it periodically and stop when the mean absolute
update inside the band ``|phi| < 3`` stays below ``convergence_tol`` for three
consecutive steps.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import levelset as ls
from .errors import InvalidArgumentError, NonConvergenceError, NumericalBlowupError
from .geometry import MeanSolverParams, intrinsic_mean
from .image import gradient_magnitude, stopping_function
from .parallel import map_chunks

CONVERGENCE_BAND = 3.0
CONVERGENCE_CHECKS = 3
REINIT_SWEEPS = 10


@dataclass
class GacParams:
    """Parameters of the geodesic active contour flow.

    ``balloon`` is a constant normal speed scaled by ``g``: negative values
    shrink the contour, positive values inflate it, ``0`` gives the pure
    geodesic flow.
    """

    dt: float = 0.2
    max_iters: int = 2000
    convergence_tol: float = 1e-4
    reinit_every: int = 25
    balloon: float = 0.0
    epsilon: float = ls.DEFAULT_EPSILON

    def __post_init__(self):
        if not 0 < self.dt <= 0.5:
            raise InvalidArgumentError("dt must lie in (0, 0.5]")
        if int(self.max_iters) < 1:
            raise InvalidArgumentError("max_iters must be >= 1")


@dataclass
class ChanVeseParams:
    """Parameters of the Chan-Vese flow.

    ``mu=None`` selects ``0.1 * (max - min)`` of the initial squared-distance
    fields, so one default works whatever the manifold's distance scale.
    """

    lambda1: float = 1.0
    lambda2: float = 1.0
    mu: Optional[float] = None
    nu: float = 0.0
    dt: float = 0.5
    max_iters: int = 500
    mean_update_every: int = 1
    reinit_every: int = 25
    convergence_tol: float = 1e-4
    epsilon: float = ls.DEFAULT_EPSILON
    mean_params: MeanSolverParams = field(default_factory=MeanSolverParams)

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise InvalidArgumentError("lambda1 and lambda2 must be positive")
        if self.mu is not None and self.mu < 0:
            raise InvalidArgumentError("mu must be non-negative")
        if not self.dt > 0:
            raise InvalidArgumentError("dt must be positive")
        if int(self.max_iters) < 1 or int(self.mean_update_every) < 1:
            raise InvalidArgumentError("max_iters and mean_update_every must be >= 1")


@dataclass
class EnergyTerms:
    """Weighted energy contributions."""

    length: float
    area: float
    data_in: float
    data_out: float

    @property
    def total(self):
        return self.length + self.area + self.data_in + self.data_out


@dataclass
class SegmentationResult:
    phi: np.ndarray
    mask: np.ndarray
    energy_trace: list
    iterations: int
    converged: bool
    mean_inside: Optional[np.ndarray] = None
    mean_outside: Optional[np.ndarray] = None
    warnings: dict = field(default_factory=dict)
    # (iteration, EnergyTerms) pairs behind energy_trace
    energy_terms: list = field(default_factory=list)
    mu: Optional[float] = None


class _Convergence:
    def __init__(self, tol):
        self.tol = tol
        self.streak = 0

    def update(self, phi_new, delta):
        band = np.abs(phi_new) < CONVERGENCE_BAND
        change = float(np.abs(delta[band]).mean()) if band.any() else 0.0
        self.streak = self.streak + 1 if change < self.tol else 0
        return self.streak >= CONVERGENCE_CHECKS


def _check_finite(phi, it):
    if not np.all(np.isfinite(phi)):
        raise NumericalBlowupError(f"non-finite level set at iteration {it}", iteration=it)


def _check_dims(img, phi0):
    phi0 = np.asarray(phi0, dtype=float)
    if phi0.shape != img.shape:
        raise InvalidArgumentError(f"level set shape {phi0.shape} != image shape {img.shape}")
    return phi0.copy()


# ---------------------------------------------------------------- GAC


def upwind_advection(phi, vx, vy):
    """Upwind ``v . grad phi`` for ``phi_t = v . grad phi``.

    Information travels against ``v``, so a positive component takes the
    forward difference.
    """
    dxm, dxp, dym, dyp = ls.one_sided(phi)
    return vx * np.where(vx > 0, dxp, dxm) + vy * np.where(vy > 0, dyp, dym)


def gac_speed(phi, g, balloon=0.0):
    """Right-hand side ``g |grad phi| kappa + grad g . grad phi - balloon g |grad phi|``."""
    kappa = ls.curvature_divergence(phi)
    grad = ls.gradient_norm(phi)
    gx, gy = np.gradient(g)
    speed = g * grad * kappa + upwind_advection(phi, gx, gy)
    if balloon:
        front = balloon * g
        speed = speed - front * ls.godunov_norm(phi, front)
    return speed


def gac_speed_compact(phi, g, eta=ls.GRAD_FLOOR):
    """``|grad phi| div(g grad phi / |grad phi|)`` by central differences."""
    gx, gy = ls.central_gradient(phi)
    norm = np.maximum(np.hypot(gx, gy), eta)
    div = np.gradient(g * gx / norm, axis=0) + np.gradient(g * gy / norm, axis=1)
    return np.hypot(gx, gy) * div


def geodesic_length(phi, g, epsilon=ls.DEFAULT_EPSILON):
    """Edge-weighted contour length ``sum(g delta_eps |grad phi|)`` on a redistanced copy."""
    sd = ls.reinitialize(phi, REINIT_SWEEPS)
    return float(np.sum(g * ls.dirac_eps(sd, epsilon) * ls.gradient_norm(sd)))


def segment_gac(img, phi0, params=None, callback=None, g=None):
    """Geodesic active contour evolution on a manifold-valued image.

    Parameters
    ----------
    img : ManifoldImage
    phi0 : ndarray, shape (H, W)
        Initial level set, negative inside.
    params : GacParams, optional
    callback : callable, optional
        Called as ``callback(iteration, phi)`` after every step.
    g : ndarray, optional
        Precomputed stopping field; computed from ``img`` when omitted.
    """
    params = params or GacParams()
    phi = _check_dims(img, phi0)
    warnings = {"cut_locus": 0}
    if g is None:
        grad, warnings["cut_locus"] = gradient_magnitude(img, return_count=True)
        g = stopping_function(grad)
    conv = _Convergence(params.convergence_tol)
    trace, terms = [], []
    converged = False
    it = 0
    for it in range(1, int(params.max_iters) + 1):
        delta = params.dt * gac_speed(phi, g, params.balloon)
        phi = phi + delta
        _check_finite(phi, it)
        if params.reinit_every and it % params.reinit_every == 0:
            phi = ls.reinitialize(phi, REINIT_SWEEPS)
        length = geodesic_length(phi, g, params.epsilon)
        terms.append((it, EnergyTerms(length, 0.0, 0.0, 0.0)))
        trace.append(length)
        if callback is not None:
            callback(it, phi)
        if conv.update(phi, delta):
            converged = True
            break
    return SegmentationResult(
        phi=phi,
        mask=ls.extract_mask(phi),
        energy_trace=trace,
        iterations=it,
        converged=converged,
        warnings=warnings,
        energy_terms=terms,
    )


# ---------------------------------------------------------------- Chan-Vese


def squared_distance_field(img, mu, workers=1):
    """``d(I(x, y), mu)^2`` for every pixel."""
    m = img.manifold
    flat = img.pixels()
    d = map_chunks(lambda chunk: m.dist(mu, chunk), flat, workers)
    return (d * d).reshape(img.shape)


def chan_vese_data_force(d1sq, d2sq, lambda1=1.0, lambda2=1.0):
    """Region competition ``-lambda1 d1^2 + lambda2 d2^2``.

    Positive where a pixel fits the inside mean better than the outside one.
    """
    return -lambda1 * d1sq + lambda2 * d2sq


def contour_length(phi, epsilon=ls.DEFAULT_EPSILON):
    """``sum(delta_eps(phi) |grad phi|)`` evaluated on a redistanced copy of ``phi``.

    The smoothed-delta sum is only a length estimate when ``|grad phi|`` is
    close to one; redistancing first makes it depend on the contour alone.
    """
    sd = ls.reinitialize(phi, REINIT_SWEEPS)
    return float(np.sum(ls.dirac_eps(sd, epsilon) * ls.gradient_norm(sd)))


def compute_energy(img, phi, mu1, mu2, params, d1sq=None, d2sq=None, mu=None, workers=1):
    """Discrete Chan-Vese energy, term by term.

    ``mu * sum(delta_eps(phi) |grad phi|) + nu * #{phi < 0}
    + lambda1 * sum_in d1^2 + lambda2 * sum_out d2^2``.
    """
    if d1sq is None:
        d1sq = squared_distance_field(img, mu1, workers)
    if d2sq is None:
        d2sq = squared_distance_field(img, mu2, workers)
    mu = params.mu if mu is None else mu
    mu = 0.0 if mu is None else mu
    inside = ls.extract_mask(phi)
    length = contour_length(phi, params.epsilon)
    return EnergyTerms(
        length=mu * length,
        area=params.nu * float(inside.sum()),
        data_in=params.lambda1 * float(d1sq[inside].sum()),
        data_out=params.lambda2 * float(d2sq[~inside].sum()),
    )


class _RegionMeans:
    """Intrinsic means of the two regions, warm-started between updates."""

    def __init__(self, img, params, workers):
        self.img = img
        self.params = params
        self.workers = workers
        self.means = [None, None]
        self.mask = None
        self.empty_region = 0
        self.nonconvergence = 0

    def update(self, inside):
        if self.mask is not None and np.array_equal(inside, self.mask):
            return False
        flat = self.img.pixels()
        for k, region in enumerate((inside, ~inside)):
            sel = region.ravel()
            if not sel.any():
                self.empty_region += 1
                if self.means[k] is None:
                    raise InvalidArgumentError("initial contour leaves a region empty")
                continue
            try:
                self.means[k] = intrinsic_mean(
                    self.img.manifold,
                    flat[sel],
                    self.params.mean_params,
                    init=self.means[k],
                    workers=self.workers,
                )
            except NonConvergenceError as exc:
                self.nonconvergence += 1
                self.means[k] = exc.last
        self.mask = inside.copy()
        return True


def segment_chan_vese(img, phi0, params=None, callback=None, workers=1):
    """Chan-Vese evolution with intrinsic region means.

    Each step moves ``phi`` by
    ``dt * delta_eps(phi) * (mu kappa + nu + lambda1 d1^2 - lambda2 d2^2)``,
    where ``d1, d2`` are geodesic distances to the inside and outside intrinsic
    means.  With ``phi`` negative inside this is gradient descent on the
    energy of :func:`compute_energy`.

    Means are recomputed every ``mean_update_every`` steps (reused when the
    region split has not changed) and the energy is recorded at each of those
    steps.

    Parameters
    ----------
    img : ManifoldImage
    phi0 : ndarray, shape (H, W)
    params : ChanVeseParams, optional
    callback : callable, optional
        Called as ``callback(iteration, phi)`` after every step.
    workers : int
        Threads for per-pixel Log and distance evaluations.
    """
    params = params or ChanVeseParams()
    phi = _check_dims(img, phi0)
    inside = ls.extract_mask(phi)
    if inside.all() or not inside.any():
        raise InvalidArgumentError("initial contour must leave both regions non-empty")

    means = _RegionMeans(img, params, workers)
    means.update(inside)
    d1sq = squared_distance_field(img, means.means[0], workers)
    d2sq = squared_distance_field(img, means.means[1], workers)
    mu = params.mu
    if mu is None:
        both = np.concatenate([d1sq.ravel(), d2sq.ravel()])
        mu = 0.1 * float(both.max() - both.min())

    trace = []
    terms = []

    def record(iteration):
        e = compute_energy(img, phi, None, None, params, d1sq=d1sq, d2sq=d2sq, mu=mu)
        terms.append((iteration, e))
        trace.append(e.total)

    record(0)
    conv = _Convergence(params.convergence_tol)
    converged = False
    it = 0
    for it in range(1, int(params.max_iters) + 1):
        force = chan_vese_data_force(d1sq, d2sq, params.lambda1, params.lambda2)
        bracket = mu * ls.curvature_divergence(phi) + params.nu - force
        delta = params.dt * ls.dirac_eps(phi, params.epsilon) * bracket
        phi = phi + delta
        _check_finite(phi, it)
        if params.reinit_every and it % params.reinit_every == 0:
            phi = ls.reinitialize(phi, REINIT_SWEEPS)
        if it % params.mean_update_every == 0:
            if means.update(ls.extract_mask(phi)):
                d1sq = squared_distance_field(img, means.means[0], workers)
                d2sq = squared_distance_field(img, means.means[1], workers)
            record(it)
        if callback is not None:
            callback(it, phi)
        if conv.update(phi, delta):
            converged = True
            break

    return SegmentationResult(
        phi=phi,
        mask=ls.extract_mask(phi),
        energy_trace=trace,
        iterations=it,
        converged=converged,
        mean_inside=means.means[0],
        mean_outside=means.means[1],
        warnings={
            "empty_region": means.empty_region,
            "mean_nonconvergence": means.nonconvergence,
        },
        energy_terms=terms,
        mu=mu,
    )
