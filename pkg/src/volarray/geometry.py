"""Antenna array layouts and geometric aperture quantities.

All positions are expressed in wavelengths (lambda = 1). Layout builders
place elements on a grid spanning [0, L] per axis; volumetric variants
elevate a subset of elements by a fixed offset h:

* linear staggered: elements on a line, every second element raised,
* case 1: every second grid column raised,
* case 2: checkerboard (row/column parity) elevation.

Column and row indices are 1-based counted from the x = 0 / y = 0 edge, so
"even-numbered columns" means the 2nd, 4th, ... grid line along +x.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .errors import InvalidArgumentError, ParseError

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
_COPLANAR_TOL = 1e-9


class Layout(str, enum.Enum):
    LINEAR = "linear"
    LINEAR_STAGGERED = "linear_staggered"
    PLANAR = "planar"
    CASE1 = "case1"
    CASE2 = "case2"


@dataclass(frozen=True)
class ArrayGeometry:
    """Immutable element positions plus layout metadata.

    Attributes
    ----------
    elements : (N, 3) float array
        Element positions in wavelengths; z >= 0.
    layout : Layout
    aperture : (L_x, L_y) in wavelengths.
    spacing : (d_x, d_y) grid steps in wavelengths (0 where not applicable).
    offset_h : elevation of the raised layer in wavelengths.
    """

    elements: np.ndarray
    layout: Layout
    aperture: tuple[float, float]
    spacing: tuple[float, float]
    offset_h: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.elements, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
            raise InvalidArgumentError("elements must be a nonempty (N, 3) array")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("element positions must be finite")
        if np.any(pts[:, 2] < -1e-12):
            raise InvalidArgumentError("element z coordinates must be non-negative")
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        if pts.shape[0] > 1 and d2.min() <= 1e-24:
            raise InvalidArgumentError("element positions must be pairwise distinct")
        lx, ly = self.aperture
        if pts[:, 0].max() - pts[:, 0].min() > lx + 1e-9:
            raise InvalidArgumentError("x extent exceeds aperture L_x")
        if pts[:, 1].max() - pts[:, 1].min() > ly + 1e-9:
            raise InvalidArgumentError("y extent exceeds aperture L_y")
        if self.offset_h == 0.0 and np.any(pts[:, 2] != 0.0):
            raise InvalidArgumentError("offset_h = 0 requires all z = 0")
        pts.setflags(write=False)
        object.__setattr__(self, "elements", pts)

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def pairwise_distances(self) -> np.ndarray:
        diff = self.elements[:, None, :] - self.elements[None, :, :]
        return np.linalg.norm(diff, axis=-1)


@dataclass(frozen=True)
class ApertureStats:
    """Direction-averaged projected area/length and the resulting DOF estimate."""

    a_eff: float
    l_eff: float
    dof_estimate: float


def make_linear_staggered(length: float, n: int, offset: float) -> ArrayGeometry:
    """Uniform line of n elements on [0, length]; even-numbered elements at z = offset."""
    if n < 2:
        raise InvalidArgumentError("need at least 2 elements")
    if length <= 0 or offset < 0:
        raise InvalidArgumentError("length must be > 0 and offset >= 0")
    x = np.linspace(0.0, length, n)
    z = np.zeros(n)
    z[1::2] = offset  # 1-based even indices
    pts = np.column_stack([x, np.zeros(n), z])
    layout = Layout.LINEAR if offset == 0 else Layout.LINEAR_STAGGERED
    return ArrayGeometry(pts, layout, (length, 0.0), (length / (n - 1), 0.0), offset)


def _grid(lx, ly, nx, ny):
    if nx < 2 or ny < 2:
        raise InvalidArgumentError("need at least 2 elements per axis")
    if lx <= 0 or ly <= 0:
        raise InvalidArgumentError("aperture sides must be positive")
    return np.linspace(0.0, lx, nx), np.linspace(0.0, ly, ny)


def make_planar(lx: float, ly: float, nx: int, ny: int) -> ArrayGeometry:
    """Uniform nx-by-ny grid on [0, lx] x [0, ly], all z = 0."""
    xs, ys = _grid(lx, ly, nx, ny)
    pts = np.array([(x, y, 0.0) for y in ys for x in xs])
    return ArrayGeometry(pts, Layout.PLANAR, (lx, ly), (lx / (nx - 1), ly / (ny - 1)), 0.0)


def make_case1(lx: float, ly: float, nx: int, ny: int, offset: float) -> ArrayGeometry:
    """Planar grid with even-numbered columns (along +x) raised to z = offset."""
    if offset < 0:
        raise InvalidArgumentError("offset must be >= 0")
    xs, ys = _grid(lx, ly, nx, ny)
    pts = np.array(
        [(x, y, offset if (i + 1) % 2 == 0 else 0.0) for y in ys for i, x in enumerate(xs)]
    )
    layout = Layout.PLANAR if offset == 0 else Layout.CASE1
    return ArrayGeometry(pts, layout, (lx, ly), (lx / (nx - 1), ly / (ny - 1)), offset)


def make_case2(lx: float, ly: float, nx: int, ny: int, offset: float) -> ArrayGeometry:
    """Planar grid with checkerboard elevation: (row, column) of equal parity raised."""
    if offset < 0:
        raise InvalidArgumentError("offset must be >= 0")
    xs, ys = _grid(lx, ly, nx, ny)
    pts = np.array(
        [
            (x, y, offset if (i + j) % 2 == 0 else 0.0)
            for j, y in enumerate(ys)
            for i, x in enumerate(xs)
        ]
    )
    layout = Layout.PLANAR if offset == 0 else Layout.CASE2
    return ArrayGeometry(pts, layout, (lx, ly), (lx / (nx - 1), ly / (ny - 1)), offset)


def fibonacci_directions(n: int) -> np.ndarray:
    """n quasi-uniform unit vectors on the sphere (Fibonacci lattice)."""
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    phi = i * _GOLDEN_ANGLE
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _point_rank(pts: np.ndarray):
    """Affine rank of the point set with the basis of its span."""
    centered = pts - pts.mean(axis=0)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = _COPLANAR_TOL * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return rank, centered, vt


def _hull_face_projection(pts: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Projected silhouette area of the convex hull along each direction.

    Every hull face contributes |n_f . d| A_f; front and back faces each cover
    the silhouette once, hence the factor 1/2.
    """
    hull = ConvexHull(pts)
    tris = pts[hull.simplices]
    cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    normals = cross / np.linalg.norm(cross, axis=1, keepdims=True)
    return 0.5 * np.abs(directions @ normals.T) @ areas


def projected_area(g: ArrayGeometry, direction) -> float:
    """Projected area (lambda^2) of the hull of element positions along one direction."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    rank, centered, vt = _point_rank(g.elements)
    if rank <= 1:
        return 0.0
    if rank == 2:
        plane = ConvexHull(centered @ vt[:2].T)
        normal = np.cross(vt[0], vt[1])
        return plane.volume * abs(float(normal @ d))
    return float(_hull_face_projection(g.elements, d[None, :])[0])


def effective_aperture(g: ArrayGeometry, quadrature_order: int = 256) -> ApertureStats:
    """Direction-averaged projected aperture and the DOF estimate it implies.

    The spherical (or, for collinear layouts, circular) average is taken over
    a deterministic quadrature of `quadrature_order` directions. Volumetric
    and planar hulls yield an effective area in lambda^2; collinear layouts
    yield an effective length in lambda. The DOF estimate equals the
    effective area (or length) in natural wavelength units.
    """
    if g.n_elements < 2:
        raise InvalidArgumentError("need at least 2 elements")
    if quadrature_order < 16:
        raise InvalidArgumentError("quadrature_order must be >= 16")

    rank, centered, vt = _point_rank(g.elements)
    if rank <= 1:
        # circular average of the projected segment length: mean of L|cos(phi)|
        span = centered @ vt[0]
        length = span.max() - span.min()
        angles = (np.arange(quadrature_order) + 0.5) * (2 * np.pi / quadrature_order)
        l_eff = float(length * np.mean(np.abs(np.cos(angles))))
        return ApertureStats(a_eff=0.0, l_eff=l_eff, dof_estimate=l_eff)

    dirs = fibonacci_directions(quadrature_order)
    if rank == 2:
        plane = ConvexHull(centered @ vt[:2].T)
        normal = np.cross(vt[0], vt[1])
        proj = plane.volume * np.abs(dirs @ normal)
    else:
        proj = _hull_face_projection(g.elements, dirs)
    a_eff = float(proj.mean())
    return ApertureStats(a_eff=a_eff, l_eff=0.0, dof_estimate=a_eff)


# --- line-oriented text serialization ----------------------------------------

_HEADER_PREFIX = "#geometry"


def write_geometry_text(g: ArrayGeometry) -> str:
    """Serialize to one header line plus one `x y z` line per element."""
    head = (
        f"{_HEADER_PREFIX} layout={g.layout.value}"
        f" lx={g.aperture[0]:.17g} ly={g.aperture[1]:.17g}"
        f" dx={g.spacing[0]:.17g} dy={g.spacing[1]:.17g}"
        f" h={g.offset_h:.17g}"
    )
    rows = [f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}" for p in g.elements]
    return "\n".join([head] + rows) + "\n"


def parse_geometry_text(text: str) -> ArrayGeometry:
    """Inverse of :func:`write_geometry_text` (exact float round-trip)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(_HEADER_PREFIX):
        raise ParseError(f"missing '{_HEADER_PREFIX}' header", line=1)
    meta = {}
    for tok in lines[0][len(_HEADER_PREFIX):].split():
        if "=" not in tok:
            raise ParseError(f"bad header token {tok!r}", line=1)
        k, v = tok.split("=", 1)
        meta[k] = v
    try:
        layout = Layout(meta["layout"])
        lx, ly = float(meta["lx"]), float(meta["ly"])
        dx, dy = float(meta["dx"]), float(meta["dy"])
        h = float(meta["h"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad header: {exc}", line=1) from None
    pts = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 3:
            raise ParseError("expected 'x y z'", line=i)
        try:
            pts.append([float(v) for v in parts])
        except ValueError:
            raise ParseError("non-numeric coordinate", line=i) from None
    if not pts:
        raise ParseError("no element lines")
    return ArrayGeometry(np.array(pts), layout, (lx, ly), (dx, dy), h)
