"""Vertebral phantom model: cortical containment, entry corridors, BMD field.

The phantom is an extruded 2D axial cross-section (the physical phantom is
a printed shell filled with foam, so a mesh buys nothing here) plus
capsule-shaped pedicle corridors.  The bone-density field is a scalar
voxel grid queried by trilinear interpolation; bundled fields are
synthetic: a uniform osteoporotic background with optional high-density
ellipsoids and zeroed-out blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidModelError, OutOfFieldError

__all__ = [
    "Capsule",
    "VertebraModel",
    "BmdGrid",
    "contains",
    "bmd_at",
    "path_bmd_profile",
    "PathBmdProfile",
]


@dataclass(frozen=True)
class Capsule:
    """Finite cylinder with hemispherical caps, used for entry corridors."""

    entry: np.ndarray
    axis: np.ndarray
    radius: float
    length: float

    def __post_init__(self):
        entry = np.asarray(self.entry, dtype=float)
        axis = np.asarray(self.axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            raise InvalidModelError("corridor axis has zero length")
        object.__setattr__(self, "entry", entry)
        object.__setattr__(self, "axis", axis / norm)
        if self.radius <= 0 or self.length <= 0:
            raise InvalidModelError("corridor radius and length must be positive")

    def distance_to_axis(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point to the corridor axis segment."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = pts - self.entry[None, :]
        s = np.clip(rel @ self.axis, 0.0, self.length)
        closest = self.entry[None, :] + s[:, None] * self.axis[None, :]
        return np.linalg.norm(pts - closest, axis=1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.distance_to_axis(points) <= self.radius

    def point_at(self, s: float) -> np.ndarray:
        return self.entry + s * self.axis

    def to_dict(self) -> dict:
        return {
            "entry": [float(v) for v in self.entry],
            "axis": [float(v) for v in self.axis],
            "radius": float(self.radius),
            "length": float(self.length),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Capsule":
        return cls(d["entry"], d["axis"], float(d["radius"]), float(d["length"]))


def _polygon_signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_properly_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _check_simple(verts: np.ndarray):
    n = len(verts)
    for i in range(n):
        a1, a2 = verts[i], verts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared-vertex neighbours
            b1, b2 = verts[j], verts[(j + 1) % n]
            if _segments_properly_intersect(a1, a2, b1, b2):
                raise InvalidModelError(
                    f"axial section self-intersects (edges {i} and {j})"
                )


@dataclass(frozen=True)
class VertebraModel:
    """Extruded axial cross-section with pedicle entry corridors.

    The axial section lives in the world xy plane (mm, counter-clockwise,
    simple); the body is extruded symmetrically over z in
    [-height/2, +height/2].  ``scale`` records the phantom magnification
    relative to the reference anatomy and is metadata only.
    """

    axial_section: np.ndarray
    height: float
    corridors: tuple[Capsule, ...] = ()
    scale: float = 1.5

    def __post_init__(self):
        verts = np.asarray(self.axial_section, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise InvalidModelError("axial section needs >= 3 (x, y) vertices")
        area = _polygon_signed_area(verts)
        if abs(area) < 1e-9:
            raise InvalidModelError("axial section has (near-)zero area")
        if area < 0:
            verts = verts[::-1].copy()  # normalize to counter-clockwise
        _check_simple(verts)
        verts.flags.writeable = False
        object.__setattr__(self, "axial_section", verts)
        object.__setattr__(self, "corridors", tuple(self.corridors))
        if self.height <= 0:
            raise InvalidModelError("height must be positive")

    # -- polygon queries ---------------------------------------------------

    def _inside_polygon(self, xy: np.ndarray) -> np.ndarray:
        """Crossing-number point-in-polygon test, vectorized over points."""
        v = self.axial_section
        x, y = xy[:, 0], xy[:, 1]
        inside = np.zeros(len(xy), dtype=bool)
        n = len(v)
        for i in range(n):
            x1, y1 = v[i]
            x2, y2 = v[(i + 1) % n]
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < np.where(crosses, xint, np.inf))
        return inside

    def _distance_to_boundary(self, xy: np.ndarray) -> np.ndarray:
        """Unsigned distance from each xy point to the polygon boundary."""
        v = self.axial_section
        a = v
        b = np.roll(v, -1, axis=0)
        ab = b - a  # (m, 2)
        ab2 = np.einsum("ij,ij->i", ab, ab)
        rel = xy[:, None, :] - a[None, :, :]  # (n, m, 2)
        t = np.einsum("nmj,mj->nm", rel, ab) / ab2[None, :]
        t = np.clip(t, 0.0, 1.0)
        closest = a[None, :, :] + t[..., None] * ab[None, :, :]
        d = np.linalg.norm(xy[:, None, :] - closest, axis=2)
        return d.min(axis=1)

    def signed_clearance(self, points: np.ndarray) -> np.ndarray:
        """Signed clearance to the extruded section: positive inside.

        The value is the margin by which a point clears the nearest wall
        (section boundary or top/bottom face); negative outside.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xy = pts[:, :2]
        inside = self._inside_polygon(xy)
        d_wall = self._distance_to_boundary(xy)
        half = self.height / 2.0
        d_cap = half - np.abs(pts[:, 2])
        lateral = np.where(inside, d_wall, -d_wall)
        return np.minimum(lateral, d_cap)

    def corridor_clearance(self, points: np.ndarray) -> np.ndarray:
        """Max over corridors of (radius - distance to axis); -inf if none."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.corridors:
            return np.full(len(pts), -np.inf)
        margins = np.stack(
            [c.radius - c.distance_to_axis(pts) for c in self.corridors], axis=0
        )
        return margins.max(axis=0)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo2 = self.axial_section.min(axis=0)
        hi2 = self.axial_section.max(axis=0)
        half = self.height / 2.0
        return (
            np.array([lo2[0], lo2[1], -half]),
            np.array([hi2[0], hi2[1], half]),
        )

    def centroid(self) -> np.ndarray:
        v = self.axial_section
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = cross.sum() / 2.0
        cx = float(np.sum((x + xn) * cross) / (6.0 * a))
        cy = float(np.sum((y + yn) * cross) / (6.0 * a))
        return np.array([cx, cy, 0.0])

    def to_dict(self) -> dict:
        return {
            "format": "absf-model/1",
            "axial_section": [[float(x), float(y)] for x, y in self.axial_section],
            "height": float(self.height),
            "corridors": [c.to_dict() for c in self.corridors],
            "scale": float(self.scale),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VertebraModel":
        if d.get("format", "absf-model/1") != "absf-model/1":
            raise InvalidModelError(f"unsupported model format {d.get('format')!r}")
        return cls(
            axial_section=np.asarray(d["axial_section"], dtype=float),
            height=float(d["height"]),
            corridors=tuple(Capsule.from_dict(c) for c in d.get("corridors", [])),
            scale=float(d.get("scale", 1.5)),
        )


def contains(model: VertebraModel, p, inflate: float = 0.0) -> bool:
    """True if ``p`` is inside the body eroded by ``inflate`` or a corridor.

    Erosion applies to the extruded section only; corridor capsules are
    tested at their nominal radius.
    """
    if inflate < 0:
        raise ValueError(f"inflate must be >= 0, got {inflate}")
    pt = np.asarray(p, dtype=float).reshape(1, 3)
    if model.signed_clearance(pt)[0] >= inflate:
        return True
    return bool(model.corridor_clearance(pt)[0] >= 0.0)


@dataclass(frozen=True)
class BmdGrid:
    """Scalar density field on a regular grid, trilinearly interpolated.

    ``values`` is indexed ``[ix, iy, iz]``; node i sits at
    ``origin + i * spacing``.  Values are normalized density (0-1 for the
    bundled synthetic fields) and must be finite and non-negative.
    """

    origin: np.ndarray
    spacing: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float)
        spacing = np.asarray(self.spacing, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3 or min(values.shape) < 2:
            raise InvalidModelError("grid needs a 3-d value array, >= 2 nodes/axis")
        if spacing.shape != (3,) or np.any(spacing <= 0):
            raise InvalidModelError("spacing must be three positive numbers")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidModelError("grid values must be finite and >= 0")
        for a in (origin, spacing, values):
            a.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "values", values)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    def hull(self) -> tuple[np.ndarray, np.ndarray]:
        hi = self.origin + (np.array(self.values.shape) - 1) * self.spacing
        return self.origin.copy(), hi

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Trilinear interpolation at each point; OutOfFieldError outside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u = (pts - self.origin[None, :]) / self.spacing[None, :]
        nx, ny, nz = self.values.shape
        hi = np.array([nx - 1, ny - 1, nz - 1], dtype=float)
        eps = 1e-9
        if np.any(u < -eps) or np.any(u > hi[None, :] + eps):
            bad = pts[np.any((u < -eps) | (u > hi[None, :] + eps), axis=1)][0]
            raise OutOfFieldError(f"point {bad.tolist()} outside grid hull")
        u = np.clip(u, 0.0, hi[None, :])
        i0 = np.minimum(u.astype(int), (hi - 1).astype(int)[None, :])
        f = u - i0
        ix, iy, iz = i0[:, 0], i0[:, 1], i0[:, 2]
        fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
        v = self.values
        c000 = v[ix, iy, iz]
        c100 = v[ix + 1, iy, iz]
        c010 = v[ix, iy + 1, iz]
        c001 = v[ix, iy, iz + 1]
        c110 = v[ix + 1, iy + 1, iz]
        c101 = v[ix + 1, iy, iz + 1]
        c011 = v[ix, iy + 1, iz + 1]
        c111 = v[ix + 1, iy + 1, iz + 1]
        return (
            c000 * (1 - fx) * (1 - fy) * (1 - fz)
            + c100 * fx * (1 - fy) * (1 - fz)
            + c010 * (1 - fx) * fy * (1 - fz)
            + c001 * (1 - fx) * (1 - fy) * fz
            + c110 * fx * fy * (1 - fz)
            + c101 * fx * (1 - fy) * fz
            + c011 * (1 - fx) * fy * fz
            + c111 * fx * fy * fz
        )

    def to_dict(self) -> dict:
        return {
            "format": "absf-bmd/1",
            "origin": [float(v) for v in self.origin],
            "spacing": [float(v) for v in self.spacing],
            "dims": list(self.values.shape),
            "values": [float(v) for v in self.values.ravel(order="C")],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BmdGrid":
        if d.get("format", "absf-bmd/1") != "absf-bmd/1":
            raise InvalidModelError(f"unsupported grid format {d.get('format')!r}")
        if "values" in d:
            dims = tuple(d["dims"])
            values = np.asarray(d["values"], dtype=float).reshape(dims, order="C")
        elif "synth" in d:
            values = _rasterize_synth(d["origin"], d["spacing"], d["dims"], d["synth"])
        else:
            raise InvalidModelError("grid file needs 'values' or 'synth'")
        return cls(origin=d["origin"], spacing=d["spacing"], values=values)

    @classmethod
    def synthetic(
        cls,
        origin,
        spacing,
        dims,
        background: float = 0.2,
        ellipsoids=(),
        zero_blocks=(),
    ) -> "BmdGrid":
        """Uniform background plus smooth high-density ellipsoids and
        hard-zeroed axis-aligned blocks (osteoporotic voids)."""
        synth = {
            "background": background,
            "ellipsoids": [dict(e) for e in ellipsoids],
            "zero_blocks": [dict(b) for b in zero_blocks],
        }
        return cls(origin, spacing, _rasterize_synth(origin, spacing, dims, synth))


def _rasterize_synth(origin, spacing, dims, synth) -> np.ndarray:
    origin = np.asarray(origin, dtype=float)
    spacing = np.asarray(spacing, dtype=float)
    nx, ny, nz = dims
    xs = origin[0] + spacing[0] * np.arange(nx)
    ys = origin[1] + spacing[1] * np.arange(ny)
    zs = origin[2] + spacing[2] * np.arange(nz)
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    values = np.full((nx, ny, nz), float(synth.get("background", 0.2)))
    for e in synth.get("ellipsoids", ()):
        c = np.asarray(e["center"], dtype=float)
        sa = np.asarray(e["semiaxes"], dtype=float)
        rho2 = (
            ((gx - c[0]) / sa[0]) ** 2
            + ((gy - c[1]) / sa[1]) ** 2
            + ((gz - c[2]) / sa[2]) ** 2
        )
        bump = np.where(rho2 < 1.0, (1.0 - rho2) ** 2, 0.0)
        values += float(e["peak"]) * bump
    for b in synth.get("zero_blocks", ()):
        lo = np.asarray(b["lo"], dtype=float)
        hi = np.asarray(b["hi"], dtype=float)
        mask = (
            (gx >= lo[0]) & (gx <= hi[0])
            & (gy >= lo[1]) & (gy <= hi[1])
            & (gz >= lo[2]) & (gz <= hi[2])
        )
        values[mask] = 0.0
    return values


def bmd_at(grid: BmdGrid, p) -> float:
    """Interpolated density at a single point (OutOfFieldError outside)."""
    return float(grid.interpolate(np.asarray(p, dtype=float).reshape(1, 3))[0])


@dataclass(frozen=True)
class PathBmdProfile:
    """Density statistics along a sampled path."""

    minimum: float
    mean: float
    samples: np.ndarray = field(repr=False)

    def frac_below(self, threshold: float) -> float:
        return float(np.mean(self.samples < threshold))


def resample_polyline(polyline: np.ndarray, step: float) -> np.ndarray:
    """Resample a polyline at arc-length spacing <= ``step``.

    Original vertices are kept (each segment is subdivided uniformly), so
    corners and total length are preserved exactly.
    """
    pts = np.asarray(polyline, dtype=float)
    if len(pts) < 2:
        return pts.copy()
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        seg = float(np.linalg.norm(b - a))
        if seg == 0.0:
            continue
        n = max(1, int(np.ceil(seg / step)))
        f = np.arange(1, n + 1)[:, None] / n
        out.append(a[None, :] * (1.0 - f) + b[None, :] * f)
    return np.vstack([np.atleast_2d(q) for q in out])


def path_bmd_profile(grid: BmdGrid, polyline: np.ndarray, step: float) -> PathBmdProfile:
    """Min/mean density and threshold fractions along a polyline."""
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    samples = grid.interpolate(resample_polyline(polyline, step))
    return PathBmdProfile(
        minimum=float(samples.min()),
        mean=float(samples.mean()),
        samples=samples,
    )
