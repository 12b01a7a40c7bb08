"""B-spline trajectory denoising.

Each axis is represented by a clamped uniform B-spline over the frame index. The
control points of both axes are optimized jointly against a weighted sum of
non-squared Euclidean norms: fidelity to the samples, first-difference
continuity, local centering over ``K`` neighbours, and a coupled term on the
continuity of the 2D velocity magnitude and direction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from scipy.optimize import minimize

from .trajectory import Trajectory

ZERO_SPEED = 1e-9


class DenoiseError(ValueError):
    pass


@dataclass(frozen=True)
class FitConfig:
    w1: float = 0.7
    w2: float = 30.0
    w3: float = 20.0
    w4: float = 30.0
    K: int = 2
    spline_degree: int = 3
    control_point_spacing: float = 10.0
    max_iterations: int = 500
    convergence_tolerance: float = 1e-6

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3, self.w4) < 0:
            raise DenoiseError("loss weights must be non-negative")
        if self.K < 1:
            raise DenoiseError("K must be >= 1")
        if self.spline_degree < 2:
            raise DenoiseError("spline_degree must be >= 2")
        if not self.control_point_spacing > 0:
            raise DenoiseError("control_point_spacing must be positive")


# -- loss terms ------------------------------------------------------------------

def _norm(r) -> float:
    return float(np.sqrt(np.sum(np.square(r))))


def loss_position(fit_x, raw_x) -> float:
    fit_x, raw_x = np.asarray(fit_x, float), np.asarray(raw_x, float)
    if fit_x.shape != raw_x.shape or fit_x.size < 1:
        raise DenoiseError("fit and raw sequences must have equal non-zero length")
    return _norm(fit_x - raw_x)


def loss_velocity_continuity(fit_x) -> float:
    fit_x = np.asarray(fit_x, float)
    if fit_x.size < 2:
        raise DenoiseError("need at least 2 values")
    return _norm(np.diff(fit_x))


def centering_residuals(x, K: int) -> np.ndarray:
    x = np.asarray(x, float)
    n = x.size
    if n < 2 * K + 1:
        raise DenoiseError(f"need at least 2K+1={2 * K + 1} values, got {n}")
    acc = np.zeros(n - 2 * K)
    for k in range(1, K + 1):
        acc += x[K - k : n - K - k] + x[K + k : n - K + k]
    return x[K : n - K] - acc / (2 * K)


def loss_local_centering(fit_x, K: int) -> float:
    return _norm(centering_residuals(fit_x, K))


def _velocity_parts(x, y):
    v = np.column_stack((np.diff(x), np.diff(y)))
    m = np.hypot(v[:, 0], v[:, 1])
    u = np.zeros_like(v)
    moving = m >= ZERO_SPEED
    u[moving] = v[moving] / m[moving, None]
    return v, m, u, moving


def loss_combined_xy(fit_x, fit_y) -> float:
    fit_x, fit_y = np.asarray(fit_x, float), np.asarray(fit_y, float)
    if fit_x.shape != fit_y.shape or fit_x.size < 3:
        raise DenoiseError("x and y must have equal length >= 3")
    _, m, u, _ = _velocity_parts(fit_x, fit_y)
    return _norm(np.diff(m)) + _norm(np.diff(u, axis=0))


def total_loss(x, y, raw_x, raw_y, cfg: FitConfig) -> float:
    """L^X + L^Y with the coupled XY term counted once."""
    per_axis = 0.0
    for f, r in ((x, raw_x), (y, raw_y)):
        per_axis += (
            cfg.w1 * loss_position(f, r)
            + cfg.w2 * loss_velocity_continuity(f)
            + cfg.w3 * loss_local_centering(f, cfg.K)
        )
    return per_axis + cfg.w4 * loss_combined_xy(x, y)


def _safe_unit(r):
    n = _norm(r)
    return (r / n if n > 0 else np.zeros_like(r)), n


def loss_and_gradient(x, y, raw_x, raw_y, cfg: FitConfig):
    """Total loss and its gradient with respect to the per-frame x and y values."""
    n = x.size
    K = cfg.K
    total = 0.0
    grads = []
    for f, r in ((x, raw_x), (y, raw_y)):
        g = np.zeros(n)
        e, nrm = _safe_unit(f - r)
        total += cfg.w1 * nrm
        g += cfg.w1 * e

        e, nrm = _safe_unit(np.diff(f))
        total += cfg.w2 * nrm
        g[1:] += cfg.w2 * e
        g[:-1] -= cfg.w2 * e

        e, nrm = _safe_unit(centering_residuals(f, K))
        total += cfg.w3 * nrm
        g[K : n - K] += cfg.w3 * e
        for k in range(1, K + 1):
            g[K - k : n - K - k] -= cfg.w3 * e / (2 * K)
            g[K + k : n - K + k] -= cfg.w3 * e / (2 * K)
        grads.append(g)

    v, m, u, moving = _velocity_parts(x, y)
    gv = np.zeros_like(v)
    e, nrm = _safe_unit(np.diff(m))
    total += cfg.w4 * nrm
    gm = np.zeros_like(m)
    gm[1:] += e
    gm[:-1] -= e
    gv[moving] += (gm[moving] / m[moving])[:, None] * v[moving]

    e, nrm = _safe_unit(np.diff(u, axis=0))
    total += cfg.w4 * nrm
    gu = np.zeros_like(u)
    gu[1:] += e
    gu[:-1] -= e
    proj = np.sum(gu * u, axis=1)
    gv[moving] += (gu[moving] - proj[moving, None] * u[moving]) / m[moving, None]

    gx, gy = grads
    gx[1:] += cfg.w4 * gv[:, 0]
    gx[:-1] -= cfg.w4 * gv[:, 0]
    gy[1:] += cfg.w4 * gv[:, 1]
    gy[:-1] -= cfg.w4 * gv[:, 1]
    return total, gx, gy


# -- spline fitting ----------------------------------------------------------------

def spline_basis(frames, cfg: FitConfig) -> np.ndarray:
    """Dense design matrix of a clamped uniform B-spline evaluated at ``frames``."""
    t = np.asarray(frames, dtype=float)
    k = cfg.spline_degree
    lo, hi = t[0], t[-1]
    n_spans = max(1, math.ceil((hi - lo) / cfg.control_point_spacing))
    interior = np.linspace(lo, hi, n_spans + 1)[1:-1]
    knots = np.concatenate(([lo] * (k + 1), interior, [hi] * (k + 1)))
    return BSpline.design_matrix(t, knots, k).toarray()


@dataclass
class FitResult:
    trajectory: Trajectory
    control_points: np.ndarray
    loss: float
    baseline_loss: float
    converged: bool
    iterations: int


def _objective(params, B, raw_x, raw_y, cfg):
    nc = B.shape[1]
    cx, cy = params[:nc], params[nc:]
    x, y = B @ cx, B @ cy
    L, gx, gy = loss_and_gradient(x, y, raw_x, raw_y, cfg)
    return L, np.concatenate((B.T @ gx, B.T @ gy))


def fit_trajectory(raw: Trajectory, cfg: FitConfig = FitConfig()) -> FitResult:
    """Denoise one trajectory; the output keeps the input frame set."""
    n = len(raw)
    if n < 2 * cfg.K + 1:
        raise DenoiseError(f"{raw.agent_id}: need at least {2 * cfg.K + 1} samples to fit")
    raw_x, raw_y = raw.x.copy(), raw.y.copy()
    B = spline_basis(raw.frames, cfg)
    c0, *_ = np.linalg.lstsq(B, raw.xy, rcond=None)
    x0 = np.concatenate((c0[:, 0], c0[:, 1]))

    best = {"f": math.inf, "p": x0}

    def fun(p):
        f, g = _objective(p, B, raw_x, raw_y, cfg)
        if f < best["f"]:
            best["f"], best["p"] = f, p.copy()
        return f, g

    res = minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.max_iterations, "ftol": cfg.convergence_tolerance, "gtol": 1e-10},
    )
    nc = B.shape[1]
    params = best["p"]
    ctrl = np.column_stack((params[:nc], params[nc:]))
    xy = B @ ctrl
    baseline = total_loss(raw_x, raw_y, raw_x, raw_y, cfg)
    # a line-search abort after the loss has stalled counts as converged
    converged = bool(res.success) or res.nit < cfg.max_iterations and "ABNORMAL" in str(res.message)
    if not converged:
        warnings.warn(f"{raw.agent_id}: denoising stopped after {res.nit} iterations without converging", RuntimeWarning)
    return FitResult(raw.with_positions(xy), ctrl, best["f"], baseline, converged, int(res.nit))


def denoise(trajectories, cfg: FitConfig = FitConfig()) -> list[Trajectory]:
    return [fit_trajectory(tr, cfg).trajectory for tr in trajectories]
