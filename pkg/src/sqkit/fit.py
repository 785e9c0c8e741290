"""Robust superquadric recovery from noisy, outlier-laden point clouds.

The surface model treats each point as drawn either from a Gaussian
around the superquadric (radial distance, zero mean, variance sigma^2)
or from a uniform outlier component over an inflated bounding volume.
Fitting alternates a posterior step over that mixture, a bounded damped
least-squares update of the 11 parameters, and a periodic switch that
tries the axis-relabeled duals of the current estimate and keeps the
labeling with the highest likelihood.  Every accepted move is checked
against the objective, so the likelihood trace is non-decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

from . import kernels
from .core import (
    EPS_MAX,
    EPS_MIN,
    AlgorithmError,
    Superquadric,
    canonicalize,
    duality_candidates,
    radial_distance_many,
    rotvec_to_matrix,
)
from .mesh import PointCloud

_SIGMA2_FLOOR = 1e-4  # mm^2; keeps the Gaussian from collapsing onto exact points
_SCALE_FLOOR = 0.1  # mm
_SWITCH_MARGIN = 1e-9
_RESP_CUTOFF = 1e-3


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 60
    tol: float = 1e-6
    w0: float = 0.1
    sigma_init: float | None = None  # default 5% of the bbox diagonal
    eps_bounds: tuple[float, float] = (EPS_MIN, EPS_MAX)
    scale_min: float = _SCALE_FLOOR
    scale_max: float | None = None  # default 2x the bbox diagonal
    switch_every: int = 5
    estimate_w0: bool = False
    max_lm_iters: int = 15
    seed: int = 0  # reserved; the fit itself is deterministic

    def __post_init__(self):
        if not 0.0 <= self.w0 < 1.0:
            raise ValueError(f"w0 must be in [0, 1), got {self.w0}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class FitReport:
    theta: Superquadric
    sigma: float
    responsibilities: np.ndarray
    loglik_trace: list[float]
    iterations: int
    converged: bool
    switched: bool

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.to_dict(),
            "sigma": float(self.sigma),
            "loglik_trace": [float(v) for v in self.loglik_trace],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "switched": bool(self.switched),
        }


def _cloud_points(cloud) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (n, 3) points, got {pts.shape}")
    return np.ascontiguousarray(pts, dtype=np.float64)


def initialize(cloud, scale_floor: float = _SCALE_FLOOR) -> Superquadric:
    """Moment-based starting estimate: centroid pose, principal axes,
    inflated half-extent scales, eps = (1, 1)."""
    pts = _cloud_points(cloud)
    n = pts.shape[0]
    if n < 11:
        raise AlgorithmError(f"underdetermined: {n} points for 11 parameters")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / n
    evals, evecs = np.linalg.eigh(cov)  # ascending
    if evals[2] <= 0.0 or evals[0] < 1e-10 * evals[2]:
        raise AlgorithmError("degenerate cloud: rank-deficient covariance")
    if evals[2] <= 1.15 * evals[0]:
        # near-isotropic cloud: the eigenvectors are solver noise, and a
        # skew frame here strands cube-like shapes in a prism basin
        axes = np.eye(3)
    else:
        axes = evecs[:, ::-1].copy()  # descending variance
        for j in range(2):
            k = int(np.argmax(np.abs(axes[:, j])))
            if axes[k, j] < 0.0:
                axes[:, j] = -axes[:, j]
        axes[:, 2] = np.cross(axes[:, 0], axes[:, 1])
    local = centered @ axes
    half = (local.max(axis=0) - local.min(axis=0)) / 2.0
    scales = np.maximum(1.2 * half, scale_floor)
    return Superquadric.from_params(1.0, 1.0, scales, rotation=axes, translation=centroid)


def _radial_raw(vec: np.ndarray, pts: np.ndarray) -> np.ndarray:
    rot = rotvec_to_matrix(vec[5:8])
    local = np.ascontiguousarray((pts - vec[8:11]) @ rot)
    return kernels.radial_values(local, vec[0], vec[1], vec[2], vec[3], vec[4])


def _gauss_logpdf(d: np.ndarray, sigma: float) -> np.ndarray:
    # Isotropic Gaussian over the 3-vector displacement to the surface,
    # evaluated at magnitude d.  The -3/2 exponent (rather than scalar
    # -1/2) is what lets sigma contract past the outlier-inflated
    # plateau: the matching update sigma^2 = sum(g d^2)/(3 sum(g)) sits
    # a factor 3 below the scalar estimate, so the posterior tightens
    # and far points actually lose their inlier weight.
    s2 = max(sigma * sigma, _SIGMA2_FLOOR)
    return -1.5 * np.log(2.0 * np.pi * s2) - d * d / (2.0 * s2)


def loglik(cloud, theta: Superquadric, sigma: float, w0: float, outlier_volume: float) -> float:
    pts = _cloud_points(cloud)
    lp_in = _gauss_logpdf(radial_distance_many(theta, pts), sigma)
    if w0 <= 0.0:
        return float(lp_in.sum())
    lp_out = np.log(w0) - np.log(outlier_volume)
    return float(np.logaddexp(np.log1p(-w0) + lp_in, lp_out).sum())


def e_step(cloud, theta: Superquadric, sigma: float, w0: float, outlier_volume: float) -> np.ndarray:
    """Posterior probability that each point belongs to the surface."""
    pts = _cloud_points(cloud)
    if w0 <= 0.0:
        return np.ones(pts.shape[0])
    lp_in = np.log1p(-w0) + _gauss_logpdf(radial_distance_many(theta, pts), sigma)
    lp_out = np.log(w0) - np.log(outlier_volume)
    return expit(lp_in - lp_out)


def _default_bounds(pts: np.ndarray, config: FitConfig) -> tuple[np.ndarray, np.ndarray]:
    span = pts.max(axis=0) - pts.min(axis=0)
    diag = float(np.linalg.norm(span))
    scale_hi = config.scale_max if config.scale_max is not None else max(2.0 * diag, config.scale_min * 2.0)
    lo = np.array([config.eps_bounds[0], config.eps_bounds[0]] + [config.scale_min] * 3 + [-np.inf] * 6)
    hi = np.array([config.eps_bounds[1], config.eps_bounds[1]] + [scale_hi] * 3 + [np.inf] * 6)
    return lo, hi


def m_step(
    cloud,
    responsibilities: np.ndarray,
    theta: Superquadric,
    config: FitConfig | None = None,
) -> tuple[Superquadric, float]:
    """Weighted damped least-squares update of theta, then the closed-form
    sigma.  Steps are kept only when they lower the weighted squared
    radial error, so the objective never regresses."""
    config = config or FitConfig()
    pts = _cloud_points(cloud)
    w = np.asarray(responsibilities, dtype=np.float64)
    if w.shape != (pts.shape[0],):
        raise ValueError(f"responsibilities shape {w.shape} does not match {pts.shape[0]} points")
    if int(np.count_nonzero(w > _RESP_CUTOFF)) < 11:
        raise AlgorithmError("all points rejected as outliers")
    lo, hi = _default_bounds(pts, config)

    sw = np.sqrt(w)

    def resid(vec):
        return sw * _radial_raw(vec, pts)

    x0 = theta.theta()
    np.clip(x0, lo, hi, out=x0)
    r0 = resid(x0)
    obj0 = float(r0 @ r0)
    res = least_squares(
        resid,
        x0,
        jac="2-point",
        bounds=(lo, hi),
        method="trf",
        x_scale="jac",
        ftol=1e-11,
        xtol=1e-11,
        gtol=1e-11,
        max_nfev=13 * config.max_lm_iters,
    )
    # trust-region steps only ever lower the cost, but keep the guard so
    # the EM objective provably never regresses
    x = res.x if 2.0 * res.cost < obj0 else x0
    d = _radial_raw(x, pts)
    sigma2 = max(float(np.dot(w, d * d)) / (3.0 * w.sum()), _SIGMA2_FLOOR)
    return Superquadric.from_theta(x), float(np.sqrt(sigma2))


_RZ45 = rotvec_to_matrix(np.array([0.0, 0.0, np.pi / 4.0]))


def _equatorial_conjugates(theta: Superquadric) -> list[Superquadric]:
    """Near-duplicate encodings for equator-symmetric shapes.

    When ax ~ ay, a 45 degree rotation about the local z axis combined
    with the conjugate exponent 2 - eps2 (and scales times
    2^(1/2 - eps2/2)) traces almost the same surface; local optimizers
    routinely settle in that basin.  Restarting from the conjugate of
    each axis labeling lets the switch hop out.

    Only offered for interior eps2.  Near the bounds the pairing is a
    genuine equivalence (a square section is exactly a rotated diamond),
    and hopping there would trade a cuboid's natural small-eps encoding
    for the rotated one without improving the surface."""
    out = []
    for cand in duality_candidates(theta):
        if not 0.15 <= cand.shape.eps2 <= 1.85:
            continue
        e2 = cand.shape.eps2
        e2c = min(max(2.0 - e2, EPS_MIN), EPS_MAX)
        m = 2.0 ** (0.5 - e2 / 2.0)
        a = cand.scale.as_array()
        scales = np.maximum(np.array([a[0] * m, a[1] * m, a[2]]), _SCALE_FLOOR)
        out.append(
            Superquadric.from_params(
                cand.shape.eps1, e2c, scales,
                cand.pose.rotation @ _RZ45, cand.pose.translation,
            )
        )
    return out


def _fold_square_encoding(pts, responsibilities, theta, config):
    """Reporting convention for square cross-sections.

    An equal-axis eps2 ~ 2 superquadric is a 45 degree rotated square
    prism, exactly the surface the aligned near-zero-eps2 encoding
    approximates from the other side.  Optimizers prefer the rotated
    form (its walls are exact), but cuboid-like objects conventionally
    report small exponents, so fold back to the aligned encoding when
    that costs essentially nothing in residual.  Only the reported
    parameters move; the likelihood trace is already frozen."""
    sh, sc = theta.shape, theta.scale
    if sh.eps2 < 1.85 or abs(sc.ax - sc.ay) > 0.05 * max(sc.ax, sc.ay):
        return theta
    e2c = min(max(2.0 - sh.eps2, EPS_MIN), EPS_MAX)
    m = 2.0 ** (0.5 - sh.eps2 / 2.0)
    scales = np.maximum(np.array([sc.ax * m, sc.ay * m, sc.az]), _SCALE_FLOOR)
    cand = Superquadric.from_params(
        sh.eps1, e2c, scales, theta.pose.rotation @ _RZ45, theta.pose.translation
    )
    try:
        alt, _ = m_step(pts, responsibilities, cand, config)
    except AlgorithmError:
        return theta
    w = responsibilities
    d1 = radial_distance_many(alt, pts)
    e1 = float(np.sqrt(np.dot(w, d1 * d1) / w.sum()))
    if e1 <= 0.01 * float(np.mean(alt.scale.as_array())):
        return alt
    return theta


def _switch_full(cloud, responsibilities, theta, sigma, w0, outlier_volume, config,
                 conjugates=True):
    """Try the axis-relabeled duals plus (optionally) the equatorial
    conjugates, refine each with one bounded least-squares pass, and keep
    the best labeling.  Returns (theta, sigma, loglik, switched); the
    returned likelihood is never below that of the incoming estimate."""
    refine_cfg = replace(config, max_lm_iters=max(3, config.max_lm_iters // 4))
    base_ll = loglik(cloud, theta, sigma, w0, outlier_volume)
    best_same = (base_ll, theta, sigma)
    best_dual = None
    candidates = duality_candidates(theta)
    if conjugates:
        candidates = candidates + _equatorial_conjugates(theta)
    for k, cand in enumerate(candidates):
        try:
            th, sg = m_step(cloud, responsibilities, cand, refine_cfg)
        except AlgorithmError:
            continue
        ll = loglik(cloud, th, sg, w0, outlier_volume)
        if k == 0:
            if ll > best_same[0]:
                best_same = (ll, th, sg)
        elif best_dual is None or ll > best_dual[0]:
            best_dual = (ll, th, sg)
    if best_dual is not None and best_dual[0] > best_same[0] + _SWITCH_MARGIN:
        ll, th, sg = best_dual
        return th, sg, ll, True
    ll, th, sg = best_same
    return th, sg, ll, False


def switch_step(
    cloud,
    responsibilities: np.ndarray,
    theta: Superquadric,
    sigma: float,
    w0: float,
    outlier_volume: float,
    config: FitConfig | None = None,
) -> tuple[Superquadric, bool]:
    theta_out, _, _, switched = _switch_full(
        cloud, responsibilities, theta, sigma, w0, outlier_volume, config or FitConfig()
    )
    return theta_out, switched


def fit(cloud, config: FitConfig | None = None) -> FitReport:
    config = config or FitConfig()
    pts = _cloud_points(cloud)
    theta = initialize(pts, config.scale_min)
    span = pts.max(axis=0) - pts.min(axis=0)
    diag = float(np.linalg.norm(span))
    outlier_volume = max(float(np.prod(span)) * 1.10, 1e-30)
    sigma = config.sigma_init if config.sigma_init is not None else 0.05 * diag
    sigma = max(float(sigma), float(np.sqrt(_SIGMA2_FLOOR)))
    w0 = config.w0

    trace: list[float] = []
    prev_ll = None
    iterations = 0
    converged = False
    switched_any = False
    while iterations < config.max_iters:
        gamma = e_step(pts, theta, sigma, w0, outlier_volume)
        if config.estimate_w0:
            w0 = float(np.clip(np.mean(1.0 - gamma), 0.0, 0.95))
        theta, sigma = m_step(pts, gamma, theta, config)
        ll = loglik(pts, theta, sigma, w0, outlier_volume)
        trace.append(ll)
        iterations += 1
        at_convergence = prev_ll is not None and abs(ll - prev_ll) / max(1.0, abs(prev_ll)) < config.tol
        if iterations % config.switch_every == 0 or at_convergence:
            gamma = e_step(pts, theta, sigma, w0, outlier_volume)
            # conjugate restarts only once the labeling has settled: offering
            # them mid-descent lets a half-converged cuboid hop to the rotated
            # encoding before the plain basin has had a chance to win
            th2, sg2, ll2, did = _switch_full(
                pts, gamma, theta, sigma, w0, outlier_volume, config,
                conjugates=at_convergence,
            )
            if did:
                switched_any = True
                theta, sigma = th2, sg2
                trace.append(ll2)
                prev_ll = ll2
                continue  # a new labeling restarts the convergence test
        if at_convergence:
            converged = True
            break
        prev_ll = ll

    gamma = e_step(pts, theta, sigma, w0, outlier_volume)
    theta = _fold_square_encoding(pts, gamma, theta, config)
    return FitReport(
        theta=canonicalize(theta),
        sigma=float(sigma),
        responsibilities=gamma,
        loglik_trace=trace,
        iterations=iterations,
        converged=converged,
        switched=switched_any,
    )
