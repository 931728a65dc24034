"""Benchmark geometries: closed curves, regions, membership and normals.

Every closed curve is parameterised by ``t`` in ``[0, 2*pi)`` and traversed
counter-clockwise, so the outward unit normal is the velocity rotated
clockwise.  For an interface curve this is the normal pointing from
``Omega_1`` (inside) into ``Omega_2`` (outside), matching the jump
convention ``[[v]] = v|Omega_2 - v|Omega_1``.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

TWO_PI = 2.0 * np.pi
ON_GAMMA_TOL = 1e-10
NORMAL_QUERY_TOL = 1e-8
MEMBERSHIP_RESOLUTION = 32768
PROJECTION_RESOLUTION = 8192


class Membership(enum.IntEnum):
    OUTSIDE = 0
    INSIDE1 = 1
    INSIDE2 = 2
    ON_GAMMA = 3


class GeometryError(ValueError):
    """Invalid geometry construction or a degenerate curve."""


class InvalidPointError(GeometryError):
    """Non-finite query point."""


class OffInterfaceError(GeometryError):
    """A point expected on the interface is not on it."""


def as_points(p) -> tuple[np.ndarray, bool]:
    """Return ``(points, was_single)`` with points of shape (n, 2)."""
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != 2 or pts.ndim != 2:
        raise GeometryError(f"expected 2D points, got shape {np.shape(p)}")
    if not np.all(np.isfinite(pts)):
        raise InvalidPointError("query point is not finite")
    return pts, single


def winding_number(vertices: np.ndarray, points: np.ndarray, chunk: int = 50_000) -> np.ndarray:
    """Winding number of a closed polyline around each point.

    Crossing rule: an upward edge counts +1 when the point is strictly left
    of it, a downward edge -1 when strictly right, with half-open y-bands.
    Only (edge, point) pairs whose y-band overlaps are formed, by sorting
    the points once per chunk.
    """
    a = np.asarray(vertices, dtype=float)
    b = np.roll(a, -1, axis=0)
    ylo = np.minimum(a[:, 1], b[:, 1])
    yhi = np.maximum(a[:, 1], b[:, 1])
    upward = b[:, 1] > a[:, 1]
    out = np.zeros(len(points), dtype=np.int64)
    for s in range(0, len(points), chunk):
        pts = points[s:s + chunk]
        order = np.argsort(pts[:, 1], kind="stable")
        ys = pts[order, 1]
        start = np.searchsorted(ys, ylo, side="left")
        stop = np.searchsorted(ys, yhi, side="left")
        counts = stop - start
        total = int(counts.sum())
        if total == 0:
            continue
        edge = np.repeat(np.arange(len(a)), counts)
        offset = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        pidx = order[np.repeat(start, counts) + offset]
        px, py = pts[pidx, 0], pts[pidx, 1]
        ax, ay = a[edge, 0], a[edge, 1]
        bx, by = b[edge, 0], b[edge, 1]
        cross = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
        up = upward[edge]
        contrib = np.where(up & (cross > 0), 1, 0) - np.where(~up & (cross < 0), 1, 0)
        out[s:s + chunk] = np.bincount(pidx, weights=contrib, minlength=len(pts)).astype(np.int64)
    return out


def _segments_intersect(p1, p2, q1, q2):
    """Proper-or-touching intersection test for segment batches (broadcasting)."""
    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 <= 0) & (d3 * d4 <= 0)


@dataclass(frozen=True)
class InterfacePolyline:
    """Ordered counter-clockwise vertices of a discretised closed curve."""

    vertices: np.ndarray
    tangents: np.ndarray
    params: np.ndarray

    @property
    def resolution(self) -> int:
        return len(self.vertices)

    @property
    def normals(self) -> np.ndarray:
        return np.stack([self.tangents[:, 1], -self.tangents[:, 0]], axis=-1)

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1)

    def length(self) -> float:
        return float(self.segment_lengths().sum())

    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def self_intersections(self, chunk: int = 256) -> list[tuple[int, int]]:
        """Pairs of non-adjacent segments that touch or cross (brute-force sweep)."""
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        n = len(a)
        hits = []
        for s in range(0, n, chunk):
            i = np.arange(s, min(s + chunk, n))[:, None]
            j = np.arange(n)[None, :]
            mask = _segments_intersect(a[i], b[i], a[j], b[j])
            # adjacent segments share a vertex; skip them and the diagonal
            adjacent = (j == i) | (j == (i + 1) % n) | (j == (i - 1) % n)
            mask &= ~adjacent & (j > i)
            ii, jj = np.nonzero(mask)
            hits.extend(zip((ii + s).tolist(), jj.tolist()))
        return hits

    def is_simple(self) -> bool:
        return not self.self_intersections()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for x, y in self.vertices:
                w.writerow([repr(float(x)), repr(float(y))])


class ClosedCurve:
    """Base class for closed counter-clockwise curves c(t), t in [0, 2*pi)."""

    kind = "curve"

    # -- parametrisation -------------------------------------------------
    def point(self, t) -> np.ndarray:
        raise NotImplementedError

    def velocity(self, t) -> np.ndarray:
        raise NotImplementedError

    def acceleration(self, t) -> np.ndarray:
        raise NotImplementedError

    def normal_at(self, t) -> np.ndarray:
        """Outward unit normal at parameter values ``t``."""
        v = self.velocity(np.asarray(t, dtype=float))
        n = np.stack([v[..., 1], -v[..., 0]], axis=-1)
        norm = np.linalg.norm(n, axis=-1, keepdims=True)
        return n / np.where(norm > 0, norm, 1.0)

    # -- arc length --------------------------------------------------------
    @cached_property
    def _arclength_table(self) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0.0, TWO_PI, 2**18 + 1)
        pts = self.point(t)
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
        return t, s

    @property
    def length(self) -> float:
        return float(self._arclength_table[1][-1])

    def parameter_at_fraction(self, frac) -> np.ndarray:
        """Parameter values at arc-length fractions in [0, 1]."""
        t, s = self._arclength_table
        if s[-1] <= 0:
            raise GeometryError(f"degenerate {self.kind}: zero length")
        return np.interp(np.asarray(frac, dtype=float) * s[-1], s, t)

    def discretize(self, resolution: int = 4096) -> InterfacePolyline:
        """Polyline with vertices equally spaced in arc length, starting at t=0."""
        if resolution < 3:
            raise GeometryError("resolution must be at least 3")
        if self.length <= 0:
            raise GeometryError(f"degenerate {self.kind}: zero length")
        t = self.parameter_at_fraction(np.arange(resolution) / resolution)
        v = self.velocity(t)
        speed = np.linalg.norm(v, axis=1, keepdims=True)
        tangents = v / np.where(speed > 0, speed, 1.0)
        return InterfacePolyline(self.point(t), tangents, t)

    # -- membership and projection ------------------------------------------
    @cached_property
    def _membership_polyline(self) -> InterfacePolyline:
        return self.discretize(MEMBERSHIP_RESOLUTION)

    def contains(self, points) -> np.ndarray:
        """Strict interior test by nonzero winding number."""
        pts, _ = as_points(points)
        return winding_number(self._membership_polyline.vertices, pts) != 0

    @cached_property
    def _projection_index(self):
        # uniform in arc length plus uniform in t: the second set keeps
        # stretches where the curve nearly stalls (|c'(t)| ~ 0) resolved in t
        poly = self.discretize(PROJECTION_RESOLUTION)
        spacing = float(poly.segment_lengths().max())
        t_even = np.linspace(0.0, TWO_PI, PROJECTION_RESOLUTION, endpoint=False)
        return ((cKDTree(poly.vertices), poly.params), (cKDTree(self.point(t_even)), t_even)), spacing

    def project(self, points, newton_steps: int = 8, candidates: int = 24) -> tuple[np.ndarray, np.ndarray]:
        """Closest parameter and distance for each point.

        Newton refinement starts from the few nearest table vertices, since
        near a self-touching point (the rose curve's origin) the nearest
        vertex may belong to another branch.  Points farther than two vertex
        spacings from the table are not refined; their reported distance is
        the table distance, far above any on-curve tolerance.
        """
        pts, _ = as_points(points)
        tables, spacing = self._projection_index
        (tree, params), (tree_t, params_t) = tables
        best_d, idx0 = tree.query(pts)
        best_t = params[idx0]
        near = best_d <= 2.0 * spacing
        if np.any(near):
            k = candidates // 2
            _, ia = tree.query(pts[near], k=k)
            _, ib = tree_t.query(pts[near], k=k)
            tn = np.concatenate([params[ia], params_t[ib]], axis=1).ravel()
            candidates = 2 * k
            pn = np.repeat(pts[near], candidates, axis=0)
            max_step = 4.0 * TWO_PI / PROJECTION_RESOLUTION
            for _ in range(newton_steps):
                d = self.point(tn) - pn
                v = self.velocity(tn)
                acc = self.acceleration(tn)
                g = np.sum(d * v, axis=1)
                gp = np.sum(v * v, axis=1) + np.sum(d * acc, axis=1)
                step = np.where(gp > 0, g / np.where(gp > 0, gp, 1.0), 0.0)
                tn = tn - np.clip(step, -max_step, max_step)
            dn = np.linalg.norm(self.point(tn) - pn, axis=1).reshape(-1, candidates)
            tn = tn.reshape(-1, candidates)
            j = np.argmin(dn, axis=1)
            rows = np.arange(len(j))
            better = dn[rows, j] < best_d[near]
            best_d[near] = np.where(better, dn[rows, j], best_d[near])
            best_t[near] = np.where(better, np.mod(tn[rows, j], TWO_PI), best_t[near])
        return best_t, best_d

    def distance(self, points) -> np.ndarray:
        return self.project(points)[1]

    def unit_normal(self, p) -> np.ndarray:
        """Outward unit normal at a point lying on the curve."""
        pts, single = as_points(p)
        t, dist = self.project(pts)
        if np.any(dist > NORMAL_QUERY_TOL):
            raise OffInterfaceError(f"point is {dist.max():.3e} away from the {self.kind}")
        n = self.normal_at(t)
        return n[0] if single else n

    def bbox(self) -> tuple[float, float, float, float]:
        v = self.discretize(4096).vertices
        pad = 1e-9
        return (float(v[:, 0].min()) - pad, float(v[:, 0].max()) + pad,
                float(v[:, 1].min()) - pad, float(v[:, 1].max()) + pad)


@dataclass(frozen=True)
class Circle(ClosedCurve):
    radius: float
    center: tuple[float, float] = (0.0, 0.0)
    kind = "circle"

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("circle radius must be positive")

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([self.center[0] + self.radius * np.cos(t), self.center[1] + self.radius * np.sin(t)], -1)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        return self.radius * np.stack([-np.sin(t), np.cos(t)], -1)

    def acceleration(self, t):
        t = np.asarray(t, dtype=float)
        return -self.radius * np.stack([np.cos(t), np.sin(t)], -1)

    def normal_at(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.cos(t), np.sin(t)], -1)

    def contains(self, points):
        pts, _ = as_points(points)
        c = np.asarray(self.center)
        return np.sum((pts - c) ** 2, axis=1) < self.radius**2

    def project(self, points, newton_steps: int = 0):
        pts, _ = as_points(points)
        d = pts - np.asarray(self.center)
        t = np.mod(np.arctan2(d[:, 1], d[:, 0]), TWO_PI)
        return t, np.abs(np.hypot(d[:, 0], d[:, 1]) - self.radius)

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cx + r, cy - r, cy + r)

    @property
    def length(self) -> float:
        return TWO_PI * self.radius

    def parameter_at_fraction(self, frac):
        return np.asarray(frac, dtype=float) * TWO_PI


class _RadialCurve(ClosedCurve):
    """Curve c(t) = R(t) (cos t, sin t) with a (possibly signed) radius R."""

    def radius(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return R, R' and R'' at ``t``."""
        raise NotImplementedError

    def point(self, t):
        t = np.asarray(t, dtype=float)
        r, _, _ = self.radius(t)
        return np.stack([r * np.cos(t), r * np.sin(t)], -1)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        r, dr, _ = self.radius(t)
        c, s = np.cos(t), np.sin(t)
        return np.stack([dr * c - r * s, dr * s + r * c], -1)

    def acceleration(self, t):
        t = np.asarray(t, dtype=float)
        r, dr, d2r = self.radius(t)
        c, s = np.cos(t), np.sin(t)
        return np.stack([(d2r - r) * c - 2 * dr * s, (d2r - r) * s + 2 * dr * c], -1)


@dataclass(frozen=True)
class PolarCurve(_RadialCurve):
    """r(t) = constant + sum_k a_k cos(k t) + sum_k b_k sin(k t).

    With ``clip_negative`` the radius is max(r, 0): angular ranges where the
    formula is non-positive collapse to the origin and carry no arc length.
    """

    constant: float
    cos_terms: tuple[tuple[int, float], ...] = ()
    sin_terms: tuple[tuple[int, float], ...] = ()
    clip_negative: bool = False
    kind = "polar curve"

    def radius(self, t):
        t = np.asarray(t, dtype=float)
        r = np.full_like(t, self.constant)
        dr = np.zeros_like(t)
        d2r = np.zeros_like(t)
        for k, a in self.cos_terms:
            r = r + a * np.cos(k * t)
            dr = dr - a * k * np.sin(k * t)
            d2r = d2r - a * k * k * np.cos(k * t)
        for k, b in self.sin_terms:
            r = r + b * np.sin(k * t)
            dr = dr + b * k * np.cos(k * t)
            d2r = d2r - b * k * k * np.sin(k * t)
        if self.clip_negative:
            pos = r > 0
            r, dr, d2r = np.where(pos, r, 0.0), np.where(pos, dr, 0.0), np.where(pos, d2r, 0.0)
        return r, dr, d2r


@dataclass(frozen=True)
class ParametricCurve(_RadialCurve):
    """x = R(t) cos t, y = R(t) sin t with R(t) = (a + b cos(m t)) sin(n t).

    R changes sign, so petals with negative R are drawn on the opposite
    side; membership therefore uses the winding number, never a radial
    comparison.
    """

    a: float
    b: float
    m: int
    n: int
    kind = "parametric curve"

    def radius(self, t):
        t = np.asarray(t, dtype=float)
        p = self.a + self.b * np.cos(self.m * t)
        dp = -self.b * self.m * np.sin(self.m * t)
        d2p = -self.b * self.m**2 * np.cos(self.m * t)
        q = np.sin(self.n * t)
        dq = self.n * np.cos(self.n * t)
        d2q = -self.n**2 * q
        return p * q, dp * q + p * dq, d2p * q + 2 * dp * dq + p * d2q


@dataclass(frozen=True)
class LevelSetStar(_RadialCurve):
    """Zero level set of phi(x, y) = |x| - r0 (1 + sum_k beta_k cos(n_k (theta - theta_k))).

    ``theta`` is the polar angle atan2(y, x).  phi < 0 inside.
    """

    r0: float
    terms: tuple[tuple[int, float, float], ...]  # (n_k, beta_k, theta_k)
    kind = "level-set star"

    def radius(self, t):
        t = np.asarray(t, dtype=float)
        r = np.ones_like(t)
        dr = np.zeros_like(t)
        d2r = np.zeros_like(t)
        for n, beta, th in self.terms:
            r = r + beta * np.cos(n * (t - th))
            dr = dr - beta * n * np.sin(n * (t - th))
            d2r = d2r - beta * n * n * np.cos(n * (t - th))
        return self.r0 * r, self.r0 * dr, self.r0 * d2r

    def level_set(self, points) -> np.ndarray:
        pts, _ = as_points(points)
        rho = np.hypot(pts[:, 0], pts[:, 1])
        r, _, _ = self.radius(np.arctan2(pts[:, 1], pts[:, 0]))
        return rho - r

    def level_set_gradient(self, points) -> np.ndarray:
        pts, _ = as_points(points)
        x, y = pts[:, 0], pts[:, 1]
        rho2 = x * x + y * y
        rho = np.sqrt(rho2)
        _, dr, _ = self.radius(np.arctan2(y, x))
        # d(theta)/dx = -y / rho^2, d(theta)/dy = x / rho^2
        return np.stack([x / rho + dr * y / rho2, y / rho - dr * x / rho2], -1)

    def contains(self, points):
        return self.level_set(points) < 0

    def unit_normal(self, p):
        pts, single = as_points(p)
        _, dist = self.project(pts)
        if np.any(dist > NORMAL_QUERY_TOL):
            raise OffInterfaceError(f"point is {dist.max():.3e} away from the {self.kind}")
        g = self.level_set_gradient(pts)
        n = g / np.linalg.norm(g, axis=1, keepdims=True)
        return n[0] if single else n


@dataclass(frozen=True)
class BoxBoundary(ClosedCurve):
    """Boundary of an axis-aligned box, t proportional to arc length from (xmin, ymin)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    kind = "box boundary"

    @property
    def _sides(self):
        w, h = self.xmax - self.xmin, self.ymax - self.ymin
        return np.array([w, h, w, h])

    @property
    def length(self) -> float:
        return float(self._sides.sum())

    def parameter_at_fraction(self, frac):
        return np.asarray(frac, dtype=float) * TWO_PI

    def _locate(self, t):
        s = np.mod(np.asarray(t, dtype=float), TWO_PI) / TWO_PI * self.length
        ends = np.cumsum(self._sides)
        side = np.minimum(np.searchsorted(ends, s, side="right"), 3)
        local = s - np.concatenate([[0.0], ends[:-1]])[side]
        return side, local

    def point(self, t):
        side, local = self._locate(t)
        x = np.select([side == 0, side == 1, side == 2, side == 3],
                      [self.xmin + local, np.full_like(local, self.xmax), self.xmax - local, np.full_like(local, self.xmin)])
        y = np.select([side == 0, side == 1, side == 2, side == 3],
                      [np.full_like(local, self.ymin), self.ymin + local, np.full_like(local, self.ymax), self.ymax - local])
        return np.stack([x, y], -1)

    def velocity(self, t):
        side, _ = self._locate(t)
        dirs = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        return dirs[side] * self.length / TWO_PI

    def acceleration(self, t):
        return np.zeros(np.shape(t) + (2,))

    def contains(self, points):
        pts, _ = as_points(points)
        return ((pts[:, 0] > self.xmin) & (pts[:, 0] < self.xmax)
                & (pts[:, 1] > self.ymin) & (pts[:, 1] < self.ymax))

    def project(self, points, newton_steps: int = 0):
        pts, _ = as_points(points)
        x = np.clip(pts[:, 0], self.xmin, self.xmax)
        y = np.clip(pts[:, 1], self.ymin, self.ymax)
        gaps = np.stack([x - self.xmin, self.xmax - x, y - self.ymin, self.ymax - y], -1)
        side = np.argmin(gaps, axis=1)
        # snap the clamped point onto the nearest edge
        x = np.where(side == 0, self.xmin, np.where(side == 1, self.xmax, x))
        y = np.where(side == 2, self.ymin, np.where(side == 3, self.ymax, y))
        w, h = self.xmax - self.xmin, self.ymax - self.ymin
        s = np.select([side == 2, side == 1, side == 3, side == 0],
                      [x - self.xmin, w + (y - self.ymin), w + h + (self.xmax - x), 2 * w + h + (self.ymax - y)])
        t = s / self.length * TWO_PI
        return np.mod(t, TWO_PI), np.hypot(pts[:, 0] - x, pts[:, 1] - y)

    def bbox(self):
        return (self.xmin, self.xmax, self.ymin, self.ymax)


@dataclass(frozen=True)
class AxisAlignedBox:
    """Closed axis-aligned rectangle used as an outer computational domain."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    kind = "box"

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise GeometryError("box needs min < max on both axes")

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        pts, _ = as_points(points)
        return ((pts[:, 0] >= self.xmin - tol) & (pts[:, 0] <= self.xmax + tol)
                & (pts[:, 1] >= self.ymin - tol) & (pts[:, 1] <= self.ymax + tol))

    def bbox(self):
        return (self.xmin, self.xmax, self.ymin, self.ymax)

    @property
    def outer_boundary(self) -> ClosedCurve:
        return BoxBoundary(self.xmin, self.xmax, self.ymin, self.ymax)

    @property
    def inner_boundaries(self) -> tuple[ClosedCurve, ...]:
        return ()


@dataclass(frozen=True)
class Annulus:
    """Closed annulus r_in <= |x - c| <= r_out."""

    r_in: float
    r_out: float
    center: tuple[float, float] = (0.0, 0.0)
    kind = "annulus"

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out):
            raise GeometryError("annulus needs 0 < r_in < r_out")

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        pts, _ = as_points(points)
        rho = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return (rho >= self.r_in - tol) & (rho <= self.r_out + tol)

    def bbox(self):
        cx, cy = self.center
        return (cx - self.r_out, cx + self.r_out, cy - self.r_out, cy + self.r_out)

    @property
    def outer_boundary(self) -> ClosedCurve:
        return Circle(self.r_out, self.center)

    @property
    def inner_boundaries(self) -> tuple[ClosedCurve, ...]:
        return (Circle(self.r_in, self.center),)


@dataclass(frozen=True)
class DomainDecomposition:
    """Outer domain ``omega`` cut by the interface ``gamma``.

    ``Omega_1`` is the inside of ``gamma`` minus the holes, ``Omega_2`` the
    rest of ``omega``.  Inner boundaries (holes and annulus inner circles)
    lying inside ``gamma`` belong to ``Omega_1``; the outer boundary of
    ``omega`` belongs to ``Omega_2``.
    """

    omega: AxisAlignedBox | Annulus
    gamma: ClosedCurve
    holes: tuple[ClosedCurve, ...] = ()
    on_gamma_tol: float = ON_GAMMA_TOL

    def __post_init__(self):
        t = np.linspace(0.0, TWO_PI, 1024, endpoint=False)
        g = self.gamma.point(t)
        if not np.all(self.omega.contains(g)):
            raise GeometryError("interface must lie inside the outer domain")
        for inner in self.inner_curves:
            if np.any(self.omega_outer_curve.contains(inner.point(t)) == False):  # noqa: E712
                raise GeometryError("inner boundary leaves the outer domain")

    @property
    def omega_outer_curve(self) -> ClosedCurve:
        return self.omega.outer_boundary

    @property
    def inner_curves(self) -> tuple[ClosedCurve, ...]:
        return tuple(self.omega.inner_boundaries) + tuple(self.holes)

    def _in_omega(self, pts: np.ndarray) -> np.ndarray:
        inside = self.omega.contains(pts)
        for hole in self.holes:
            inside &= ~hole.contains(pts)
        return inside

    def classify(self, points) -> np.ndarray:
        """Vectorised membership codes (see :class:`Membership`)."""
        pts, _ = as_points(points)
        codes = np.full(len(pts), int(Membership.OUTSIDE), dtype=np.int64)
        inside = self._in_omega(pts)
        if not np.any(inside):
            return codes
        sub = pts[inside]
        on = self.gamma.distance(sub) < self.on_gamma_tol
        in1 = self.gamma.contains(sub)
        codes[inside] = np.where(on, int(Membership.ON_GAMMA),
                                 np.where(in1, int(Membership.INSIDE1), int(Membership.INSIDE2)))
        return codes

    def contains(self, p) -> Membership | np.ndarray:
        """Membership of one point (enum) or of many points (code array)."""
        pts, single = as_points(p)
        codes = self.classify(pts)
        return Membership(int(codes[0])) if single else codes

    def side_mask(self, side: int):
        """Predicate selecting strict interior points of Omega_side."""
        want = int(Membership.INSIDE1 if side == 1 else Membership.INSIDE2)

        def predicate(points):
            return self.classify(points) == want

        return predicate

    def side_bbox(self, side: int) -> tuple[float, float, float, float]:
        return self.gamma.bbox() if side == 1 else self.omega.bbox()

    def bbox(self) -> tuple[float, float, float, float]:
        return self.omega.bbox()

    def boundaries(self, side: int) -> tuple[ClosedCurve, ...]:
        """Dirichlet boundary curves of Omega_side (excluding the interface)."""
        t = np.linspace(0.0, TWO_PI, 64, endpoint=False)
        inner1 = tuple(c for c in self.inner_curves if np.all(self.gamma.contains(c.point(t)) | (np.hypot(*c.point(t).T) < 1e-12)))
        if side == 1:
            return inner1
        inner2 = tuple(c for c in self.inner_curves if c not in inner1)
        return (self.omega_outer_curve,) + inner2


def unit_normal(gamma: ClosedCurve, p) -> np.ndarray:
    return gamma.unit_normal(p)


def contains(decomposition: DomainDecomposition, p):
    return decomposition.contains(p)


def discretize(curve: ClosedCurve, resolution: int = 4096) -> InterfacePolyline:
    return curve.discretize(resolution)
