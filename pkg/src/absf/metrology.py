"""Trace evaluation: rigid registration, changeover detection, radius fit.

The evaluation mirrors the physical measurement pipeline: register the
tracker samples onto the planned-path point set (point-to-point ICP with
the closed-form orthogonal update), locate the straight-to-curved
changeover, fit a circle to the curved portion, and report the achieved
radius against the nominal one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial import cKDTree

from .errors import (
    ChangeoverNotFoundError,
    DegenerateGeometryError,
    IllConditionedFitError,
)

__all__ = [
    "RigidTransform",
    "MetrologyReport",
    "icp_register",
    "split_straight_curved",
    "ChangeoverResult",
    "fit_radius",
    "radius_error",
    "kabsch",
]

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid map p -> R p + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float)
        tr = np.asarray(self.translation, dtype=float)
        if rot.shape != (3, 3) or tr.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation a 3-vector")
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > 1e-6:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rot) - 1.0) > 1e-6:
            raise ValueError("rotation must be proper (det +1)")
        rot.flags.writeable = False
        tr.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform equal to applying ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def rotation_angle_deg(self) -> float:
        r = self.rotation
        # atan2 form stays accurate for angles near 0 and near pi
        axis = 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
        s = float(np.linalg.norm(axis))
        c = (float(np.trace(r)) - 1.0) / 2.0
        return math.degrees(math.atan2(s, c))

    def to_dict(self) -> dict:
        return {
            "rotation": [[float(v) for v in row] for row in self.rotation],
            "translation": [float(v) for v in self.translation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RigidTransform":
        return cls(np.asarray(d["rotation"], float), np.asarray(d["translation"], float))


@dataclass(frozen=True)
class MetrologyReport:
    """Per-side evaluation summary (one row of the results table)."""

    transform: RigidTransform
    icp_rmse: float
    changeover_index: int | None
    fitted_r: float | None
    ideal_r: float | None
    radius_error_pct: float | None

    def to_dict(self) -> dict:
        return {
            "transform": self.transform.to_dict(),
            "icp_rmse_mm": round(float(self.icp_rmse), 4),
            "changeover_index": self.changeover_index,
            "fitted_r_mm": None if self.fitted_r is None else round(float(self.fitted_r), 3),
            "ideal_r_mm": None if self.ideal_r is None else float(self.ideal_r),
            "radius_error_pct": None
            if self.radius_error_pct is None
            else round(float(self.radius_error_pct), 1),
        }


def kabsch(source: np.ndarray, target: np.ndarray) -> RigidTransform:
    """Closed-form least-squares rigid map for paired point sets."""
    p = np.asarray(source, float)
    q = np.asarray(target, float)
    cp, cq = p.mean(axis=0), q.mean(axis=0)
    h = (p - cp).T @ (q - cq)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidTransform(rot, cq - rot @ cp)


def _check_nondegenerate(points: np.ndarray, label: str):
    pts = np.asarray(points, float)
    if len(pts) < 3:
        raise DegenerateGeometryError(f"{label} cloud has fewer than 3 points")
    s = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if s[1] <= 1e-9 * max(s[0], 1.0):
        raise DegenerateGeometryError(f"{label} cloud is collinear")


def _principal_axes(points: np.ndarray) -> np.ndarray:
    c = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(c, full_matrices=False)
    return vt  # rows: principal directions, descending variance


def _coarse_align(source: np.ndarray, target: np.ndarray) -> RigidTransform:
    """Principal-axes pre-alignment; the axis-sign ambiguity is resolved by
    picking the proper rotation with the lowest nearest-neighbour rmse."""
    vs = _principal_axes(source)
    vt_ = _principal_axes(target)
    cs, ct = source.mean(axis=0), target.mean(axis=0)
    tree = cKDTree(target)
    best = None
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            signs = np.diag([sx, sy, sx * sy])  # keeps det(R) = +1
            rot = vt_.T @ signs @ vs
            if np.linalg.det(rot) < 0:
                rot = vt_.T @ (signs * -1.0) @ vs
            cand = RigidTransform(rot, ct - rot @ cs)
            d, _ = tree.query(cand.apply(source))
            rmse = float(np.sqrt(np.mean(d**2)))
            if best is None or rmse < best[0]:
                best = (rmse, cand)
    return best[1]


def icp_register(
    source: np.ndarray,
    target: np.ndarray,
    init: RigidTransform | None = None,
    max_iter: int = 60,
    tol: float = 1e-10,
) -> tuple[RigidTransform, float]:
    """Point-to-point ICP mapping ``source`` into the ``target`` frame.

    ``init=None`` uses a principal-axes pre-alignment; pass a transform to
    start from a known pose instead.  The per-iteration rmse is asserted
    non-increasing, and iteration stops when it changes by less than
    ``tol`` or after ``max_iter`` rounds.  Returns (transform, rmse).
    """
    src = np.asarray(source, float)
    tgt = np.asarray(target, float)
    _check_nondegenerate(src, "source")
    _check_nondegenerate(tgt, "target")

    transform = _coarse_align(src, tgt) if init is None else init
    tree = cKDTree(tgt)
    rmse_prev = None
    rmse = float("inf")
    for _ in range(max_iter):
        moved = transform.apply(src)
        dist, idx = tree.query(moved)
        update = kabsch(moved, tgt[idx])
        transform = update.compose(transform)
        dist, idx = tree.query(transform.apply(src))
        rmse = float(np.sqrt(np.mean(dist**2)))
        if rmse_prev is not None:
            assert rmse <= rmse_prev + 1e-9 * (1.0 + rmse_prev), "ICP rmse increased"
            if abs(rmse_prev - rmse) < tol:
                break
        rmse_prev = rmse
    return transform, rmse


# ---------------------------------------------------------------------------
# changeover detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChangeoverResult:
    """Detected straight-to-curved transition of a registered trace."""

    index: int              # first sample of the curved portion
    arc_length_mm: float    # straight length from the first sample
    threshold_mm: float     # distance threshold used by the coarse pass
    noise_sigma_mm: float   # per-axis noise estimate from the straight prefix

    def __index__(self) -> int:
        return self.index


def _line_fit(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - c, full_matrices=False)
    d = vt[0]
    span = (points[-1] - points[0]) @ d
    if span < 0:
        d = -d
    return c, d


def _perp_distances(points: np.ndarray, origin: np.ndarray, direction: np.ndarray) -> np.ndarray:
    rel = points - origin
    along = rel @ direction
    return np.linalg.norm(rel - along[:, None] * direction[None, :], axis=1)


def _estimate_noise(points: np.ndarray) -> float:
    """Per-axis noise estimate from the perpendicular scatter of a straight
    run (perpendicular scatter has two degrees of freedom)."""
    c, d = _line_fit(points)
    perp = _perp_distances(points, c, d)
    return float(np.sqrt(np.mean(perp**2) / 2.0))


def _line_sse(points: np.ndarray) -> float:
    c = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - c, full_matrices=False)
    perp = _perp_distances(points, c, vt[0])
    return float(np.sum(perp**2))


def _circle_sse(xy: np.ndarray) -> float:
    try:
        center, r = _kasa_fit(xy)
    except IllConditionedFitError:
        return float("inf")
    res = np.hypot(xy[:, 0] - center[0], xy[:, 1] - center[1]) - r
    return float(np.sum(res**2))


def _refine_changeover(points: np.ndarray, coarse_idx: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Two-stage refinement of the transition located by the coarse pass.

    The coarse pointwise threshold systematically overshoots (the arc
    leaves the prefix line quadratically), so the split index is first
    re-picked by scanning a window for the minimum combined line-plus-
    circle residual, then polished with a tangent-continuous
    straight-plus-arc least-squares fit.  Returns the straight length
    measured from the first sample plus the fitted line origin/direction.
    """
    n = len(points)

    # plane of the J-curve: dominant two directions of the full cloud
    cm = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - cm, full_matrices=False)
    ex, ey = vt[0], vt[1]
    p2 = np.column_stack([(points - cm) @ ex, (points - cm) @ ey])

    # windowed two-segment scan around the coarse bracket
    lo = max(8, coarse_idx - 30)
    hi = min(n - 6, coarse_idx + 8)
    best_j, best_sse = None, float("inf")
    for j in range(lo, hi + 1):
        sse = _line_sse(points[:j]) + _circle_sse(p2[j : n - 2])
        if sse < best_sse:
            best_j, best_sse = j, sse
    j = best_j if best_j is not None else coarse_idx

    c0, d0 = _line_fit(points[:j])
    if (d0 @ ex) < 0:
        ex, ey = -ex, -ey
        p2 = -p2

    q0 = np.array([(c0 - cm) @ ex, (c0 - cm) @ ey])
    psi0 = math.atan2((d0 @ ey), (d0 @ ex))
    dvec0 = np.array([math.cos(psi0), math.sin(psi0)])
    nvec0 = np.array([-math.sin(psi0), math.cos(psi0)])
    along0 = (p2 - q0) @ dvec0
    c_init = float(along0[min(j, n - 1)])
    center0, r_init = _kasa_fit(p2[j : n - 2])
    r_init = min(max(r_init, 5.0), 1000.0)
    turn = 1.0 if float((center0 - q0) @ nvec0) >= 0 else -1.0

    def residuals(v):
        qx, qy, psi, c, r = v
        dvec = np.array([math.cos(psi), math.sin(psi)])
        nvec = np.array([-math.sin(psi), math.cos(psi)]) * turn
        rel = p2 - np.array([qx, qy])
        xi = rel @ dvec
        eta = rel @ nvec
        return np.where(xi <= c, eta, np.hypot(xi - c, eta - r) - r)

    v0 = np.array([q0[0], q0[1], psi0, c_init, r_init])
    span = max(2.0, 10.0 * float(np.median(np.linalg.norm(np.diff(points, axis=0), axis=1))))
    bounds = (
        [q0[0] - 10.0, q0[1] - 10.0, psi0 - 0.3, c_init - span, 5.0],
        [q0[0] + 10.0, q0[1] + 10.0, psi0 + 0.3, c_init + span, 1000.0],
    )
    sol = least_squares(residuals, v0, bounds=bounds, method="trf", max_nfev=400)
    qx, qy, psi, c, _ = sol.x
    dvec = np.array([math.cos(psi), math.sin(psi)])
    origin3 = cm + qx * ex + qy * ey
    dir3 = dvec[0] * ex + dvec[1] * ey
    dir3 /= np.linalg.norm(dir3)
    s0 = float((points[0] - origin3) @ dir3)
    return float(c) - s0, origin3, dir3


def split_straight_curved(
    trace: np.ndarray,
    tau: float | None = None,
    k: int = 5,
    prefix: int = 12,
) -> ChangeoverResult:
    """Locate the straight-to-curved changeover of a registered polyline.

    Coarse pass: the first sample whose perpendicular distance to the
    running straight-prefix line exceeds ``tau`` (default
    ``max(0.3, 2 * noise estimate)``) for ``k`` consecutive samples.  The
    coarse bracket is then refined with a tangent-continuous
    straight-plus-arc least-squares fit.  Raises ChangeoverNotFoundError
    for traces with no curved portion.
    """
    pts = np.asarray(trace, float)
    if len(pts) < prefix:
        raise ValueError(f"trace needs a straight prefix of >= {prefix} samples")

    sigma = _estimate_noise(pts[:prefix])
    if tau is None:
        tau = max(0.3, 2.0 * sigma)

    coarse = None
    for i in range(prefix, len(pts) - k + 1):
        c, d = _line_fit(pts[:i])
        dist = _perp_distances(pts[i : i + k], c, d)
        if np.all(dist > tau):
            coarse = i
            break
    if coarse is None:
        raise ChangeoverNotFoundError(
            f"no deviation beyond {tau:.3f} mm for {k} consecutive samples"
        )

    straight_len, origin, direction = _refine_changeover(pts, coarse)
    along = (pts - origin) @ direction
    s_rel = along - along[0]
    index = int(np.argmin(np.abs(s_rel - straight_len)))
    return ChangeoverResult(
        index=index,
        arc_length_mm=float(straight_len),
        threshold_mm=float(tau),
        noise_sigma_mm=float(sigma),
    )


# ---------------------------------------------------------------------------
# circle fit
# ---------------------------------------------------------------------------


def _project_to_plane(points: np.ndarray) -> np.ndarray:
    c = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - c, full_matrices=False)
    return np.column_stack([(points - c) @ vt[0], (points - c) @ vt[1]])


def _kasa_fit(xy: np.ndarray) -> tuple[np.ndarray, float]:
    a = np.column_stack([2.0 * xy, np.ones(len(xy))])
    b = np.einsum("ij,ij->i", xy, xy)
    try:
        sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - lstsq rarely raises
        raise IllConditionedFitError("algebraic circle fit failed") from exc
    center = sol[:2]
    r2 = sol[2] + center @ center
    if not np.isfinite(r2) or r2 <= 0:
        raise IllConditionedFitError("algebraic circle fit collapsed")
    return center, math.sqrt(r2)


def _arc_span_deg(xy: np.ndarray, center: np.ndarray) -> float:
    ang = np.unwrap(np.arctan2(xy[:, 1] - center[1], xy[:, 0] - center[0]))
    return math.degrees(float(ang.max() - ang.min()))


def fit_radius(curved_points: np.ndarray, min_span_deg: float = 15.0) -> tuple[float, float]:
    """Best-fit circle radius of (noisy) arc samples.

    Points are projected onto their best-fit plane, seeded with an
    algebraic fit, and polished by geometric (radial-residual) least
    squares.  Returns (radius, fit rmse).  Raises IllConditionedFitError
    for < 5 points or an arc span below ``min_span_deg`` degrees.
    """
    pts = np.asarray(curved_points, float)
    if len(pts) < 5:
        raise IllConditionedFitError(f"need >= 5 points, got {len(pts)}")
    xy = _project_to_plane(pts)
    center, r0 = _kasa_fit(xy)
    if _arc_span_deg(xy, center) < min_span_deg:
        raise IllConditionedFitError(
            f"arc span below {min_span_deg} degrees; radius not identifiable"
        )

    def residuals(v):
        return np.hypot(xy[:, 0] - v[0], xy[:, 1] - v[1]) - abs(v[2])

    sol = least_squares(residuals, np.array([center[0], center[1], r0]), method="lm")
    r = float(abs(sol.x[2]))
    rmse = float(np.sqrt(np.mean(residuals(sol.x) ** 2)))
    return r, rmse


def radius_error(ideal: float, actual: float) -> float:
    """Percent error of an achieved radius against the nominal one."""
    if ideal <= 0:
        raise ValueError(f"ideal radius must be > 0, got {ideal}")
    return 100.0 * abs(actual - ideal) / ideal
