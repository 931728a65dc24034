"""Benchmark interface problems with exact piecewise solutions.

Each subdomain carries a :class:`Piece` with closed-form u, grad u, the
Hessian entries (xx, yy, xy), the coefficient a and grad a.  The source is

    f = -div(a grad u) = -(grad a . grad u + a lap u),

and the jump data on the interface follow [[v]] = v_2 - v_1 with the normal
pointing from Omega_1 into Omega_2.  All formulas are written with plain
numpy ufuncs so they also accept complex arguments; the complex-step
derivative is then an independent check of the hand-written gradients.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import jax.numpy as jnp
import numpy as np

from .autodiff import HESSIAN, LAPLACIAN, Jet
from .geometry import (Annulus, AxisAlignedBox, Circle, DomainDecomposition, LevelSetStar,
                       Membership, ParametricCurve, PolarCurve, TWO_PI, as_points)

LN2 = np.log(2.0)


class DomainError(ValueError):
    """A point was queried on the wrong side of the interface."""


@dataclass(frozen=True)
class Piece:
    """Closed forms on one subdomain, each a function of (x, y)."""

    u: Callable
    grad: Callable      # -> (u_x, u_y)
    hess: Callable      # -> (u_xx, u_yy, u_xy)
    a: Callable
    grad_a: Callable    # -> (a_x, a_y)


def _const(v):
    return lambda x, y: v + 0.0 * x


# -- the four benchmarks ----------------------------------------------------

def _e1_pieces():
    def u2(x, y):
        return 1.0 - 0.5 * np.log(x * x + y * y) / LN2

    def g2(x, y):
        r2 = x * x + y * y
        return -x / (r2 * LN2), -y / (r2 * LN2)

    def h2(x, y):
        r4 = (x * x + y * y) ** 2
        return (-(y * y - x * x) / (r4 * LN2), -(x * x - y * y) / (r4 * LN2), 2 * x * y / (r4 * LN2))

    zero2 = lambda x, y: (0.0 * x, 0.0 * x)  # noqa: E731
    zero3 = lambda x, y: (0.0 * x, 0.0 * x, 0.0 * x)  # noqa: E731
    p1 = Piece(_const(1.0), zero2, zero3, _const(1.0), zero2)
    p2 = Piece(u2, g2, h2, _const(1.0), zero2)
    return p1, p2


def _e4_pieces():
    def u1(x, y):
        s = x + y
        return np.sin(s) + np.cos(s) + 1.0

    def g1(x, y):
        s = x + y
        d = np.cos(s) - np.sin(s)
        return d, d

    def h1(x, y):
        s = x + y
        d = -(np.sin(s) + np.cos(s))
        return d, d, d

    p1 = Piece(u1, g1, h1,
               lambda x, y: (x * x - y * y + 3.0) / 7.0,
               lambda x, y: (2.0 * x / 7.0, -2.0 * y / 7.0))
    p2 = Piece(lambda x, y: x + y + 1.0,
               lambda x, y: (1.0 + 0.0 * x, 1.0 + 0.0 * x),
               lambda x, y: (0.0 * x, 0.0 * x, 0.0 * x),
               lambda x, y: (2.0 + x * y) / 5.0,
               lambda x, y: (y / 5.0, x / 5.0))
    return p1, p2


def _e5_pieces(clip_coefficient_min=None):
    def h1(x, y):
        d = -np.cos(x + y)
        return d, d, d

    def h2(x, y):
        d = -np.sin(x + y)
        return d, d, d

    p1 = Piece(lambda x, y: np.cos(x + y),
               lambda x, y: (-np.sin(x + y), -np.sin(x + y)),
               h1,
               lambda x, y: x * x + y * y,
               lambda x, y: (2.0 * x, 2.0 * y))
    if clip_coefficient_min is None:
        a2 = lambda x, y: x * y  # noqa: E731
        ga2 = lambda x, y: (y, x)  # noqa: E731
    else:
        lo = float(clip_coefficient_min)
        a2 = lambda x, y: np.maximum(x * y, lo)  # noqa: E731
        ga2 = lambda x, y: (np.where(x * y > lo, y, 0.0), np.where(x * y > lo, x, 0.0))  # noqa: E731
    p2 = Piece(lambda x, y: np.sin(x + y),
               lambda x, y: (np.cos(x + y), np.cos(x + y)),
               h2, a2, ga2)
    return p1, p2


def _e6_pieces():
    def u1(x, y):
        return np.sin(2 * x) * np.cos(2 * y)

    def g1(x, y):
        return 2 * np.cos(2 * x) * np.cos(2 * y), -2 * np.sin(2 * x) * np.sin(2 * y)

    def h1(x, y):
        d = -4 * np.sin(2 * x) * np.cos(2 * y)
        return d, d, -4 * np.cos(2 * x) * np.sin(2 * y)

    def a1(x, y):
        # 10 (1 + cos(2 pi (x+y)) sin(2 pi (x-y)) / 5) written as a sum of sines
        return 10.0 + np.sin(4 * np.pi * x) - np.sin(4 * np.pi * y)

    def ga1(x, y):
        return 4 * np.pi * np.cos(4 * np.pi * x), -4 * np.pi * np.cos(4 * np.pi * y)

    def cheb(t):
        t2 = t * t
        return (16 * t2 * t2 * t - 20 * t2 * t + 5 * t,
                80 * t2 * t2 - 60 * t2 + 5,
                320 * t2 * t - 120 * t)

    def u2(x, y):
        T, _, _ = cheb((y - x) / 3.0)
        return T * np.log(x + y + 3.0)

    def g2(x, y):
        T, T1, _ = cheb((y - x) / 3.0)
        L = np.log(x + y + 3.0)
        q = 1.0 / (x + y + 3.0)
        return -T1 * L / 3.0 + T * q, T1 * L / 3.0 + T * q

    def h2(x, y):
        T, T1, T2 = cheb((y - x) / 3.0)
        L = np.log(x + y + 3.0)
        q = 1.0 / (x + y + 3.0)
        return (T2 * L / 9.0 - 2.0 * T1 * q / 3.0 - T * q * q,
                T2 * L / 9.0 + 2.0 * T1 * q / 3.0 - T * q * q,
                -T2 * L / 9.0 - T * q * q)

    zero2 = lambda x, y: (0.0 * x, 0.0 * x)  # noqa: E731
    return Piece(u1, g1, h1, a1, ga1), Piece(u2, g2, h2, _const(1.0), zero2)


def e1_decomposition():
    return DomainDecomposition(AxisAlignedBox(-1.0, 1.0, -1.0, 1.0), Circle(0.5))


def e4_decomposition():
    return DomainDecomposition(AxisAlignedBox(-1.0, 1.0, -1.0, 1.0),
                               ParametricCurve(0.40178, 0.40178, 2, 6))


def e5_decomposition():
    gamma = PolarCurve(0.6, cos_terms=((2, 0.096), (5, 0.24)), sin_terms=((3, 0.216),))
    hole = PolarCurve(0.0, cos_terms=((6, 0.12), (5, 0.09)), sin_terms=((4, 0.14),), clip_negative=True)
    return DomainDecomposition(AxisAlignedBox(-2.0, 2.0, -2.0, 2.0), gamma, holes=(hole,))


def e6_decomposition():
    star = LevelSetStar(0.483, ((3, 0.1, 0.5), (4, -0.1, 1.8), (7, 0.15, 0.0)))
    return DomainDecomposition(Annulus(0.151, 0.911), star)


# -- problem definition ------------------------------------------------------

def _split(pts):
    return pts[:, 0], pts[:, 1]


@dataclass(frozen=True, eq=False)
class ProblemDefinition:
    id: str
    decomposition: DomainDecomposition
    piece1: Piece
    piece2: Piece
    # optional replacement source, f(side, points) -> values; used to inject defects
    source_override: Callable | None = field(default=None, repr=False)

    def piece(self, side: int) -> Piece:
        if side not in (1, 2):
            raise ValueError(f"side must be 1 or 2, got {side!r}")
        return self.piece1 if side == 1 else self.piece2

    def u(self, side, points):
        pts, _ = as_points(points)
        return np.asarray(self.piece(side).u(*_split(pts)), dtype=float)

    def grad_u(self, side, points):
        pts, _ = as_points(points)
        return np.stack(self.piece(side).grad(*_split(pts)), -1).astype(float)

    def hess_u(self, side, points):
        pts, _ = as_points(points)
        return np.stack(self.piece(side).hess(*_split(pts)), -1).astype(float)

    def a(self, side, points):
        pts, _ = as_points(points)
        return np.asarray(self.piece(side).a(*_split(pts)), dtype=float)

    def grad_a(self, side, points):
        pts, _ = as_points(points)
        return np.stack(self.piece(side).grad_a(*_split(pts)), -1).astype(float)

    def f(self, side, points):
        """Source -(grad a . grad u + a lap u) from the closed forms."""
        if self.source_override is not None:
            return np.asarray(self.source_override(side, points), dtype=float)
        pts, _ = as_points(points)
        x, y = _split(pts)
        P = self.piece(side)
        ux, uy = P.grad(x, y)
        uxx, uyy, _ = P.hess(x, y)
        ax, ay = P.grad_a(x, y)
        return -(ax * ux + ay * uy + P.a(x, y) * (uxx + uyy)) + 0.0 * x

    def g(self, side, points):
        """Dirichlet data on the boundary of Omega_side: the trace of u_side."""
        return self.u(side, points)

    def phi(self, points):
        """Value jump u_2 - u_1."""
        return self.u(2, points) - self.u(1, points)

    def psi(self, points, normals):
        """Flux jump a_2 grad u_2 . n - a_1 grad u_1 . n."""
        n = np.asarray(normals, dtype=float).reshape(-1, 2)
        flux2 = self.a(2, points) * np.sum(self.grad_u(2, points) * n, -1)
        flux1 = self.a(1, points) * np.sum(self.grad_u(1, points) * n, -1)
        return flux2 - flux1

    def coefficient(self, points):
        """a routed by membership (interface points get a_1)."""
        pts, _ = as_points(points)
        codes = self.decomposition.classify(pts)
        return np.where(codes == Membership.INSIDE2, self.a(2, pts), self.a(1, pts))

    def exact_at(self, p, side: int):
        pts, single = as_points(p)
        codes = self.decomposition.classify(pts)
        ok = (codes == Membership.ON_GAMMA) | (codes == (Membership.INSIDE1 if side == 1 else Membership.INSIDE2))
        if not np.all(ok):
            raise DomainError(f"point is not in the closure of Omega_{side}")
        out = self.u(side, pts)
        return float(out[0]) if single else out

    def with_source(self, source: Callable) -> "ProblemDefinition":
        return replace(self, source_override=source)

    def bbox(self):
        return self.decomposition.bbox()


def builtin(problem_id: str, clip_coefficient_min=None) -> ProblemDefinition:
    pid = str(problem_id).lower()
    if pid == "e1":
        return ProblemDefinition("e1", e1_decomposition(), *_e1_pieces())
    if pid == "e4":
        return ProblemDefinition("e4", e4_decomposition(), *_e4_pieces())
    if pid == "e5":
        return ProblemDefinition("e5", e5_decomposition(), *_e5_pieces(clip_coefficient_min))
    if pid == "e6":
        return ProblemDefinition("e6", e6_decomposition(), *_e6_pieces())
    raise KeyError(f"unknown problem id {problem_id!r}; expected one of e1, e4, e5, e6")


PROBLEM_IDS = ("e1", "e4", "e5", "e6")


# -- manufactured-solution check ------------------------------------------------

@dataclass
class ManufacturedReport:
    problem: str
    n_check: int
    tol: float
    jump_tol: float
    max_interior_residual: dict
    max_value_jump_mismatch: float
    max_flux_jump_mismatch: float
    max_gradient_mismatch: float

    @property
    def interior_ok(self) -> bool:
        return max(self.max_interior_residual.values()) <= self.tol

    @property
    def jumps_ok(self) -> bool:
        return max(self.max_value_jump_mismatch, self.max_flux_jump_mismatch, self.max_gradient_mismatch) <= self.jump_tol

    @property
    def passed(self) -> bool:
        return self.interior_ok and self.jumps_ok

    def lines(self) -> list[str]:
        r1, r2 = self.max_interior_residual[1], self.max_interior_residual[2]
        return [
            f"{self.problem}: interior residual max {r1:.2e} (side 1) {r2:.2e} (side 2), tol {self.tol:.0e}",
            f"{self.problem}: jump mismatch value {self.max_value_jump_mismatch:.2e} flux {self.max_flux_jump_mismatch:.2e}"
            f" gradient {self.max_gradient_mismatch:.2e}, tol {self.jump_tol:.0e}",
            f"{self.problem}: {'PASS' if self.passed else 'FAIL'}",
        ]


def _fd_divergence(piece: Piece, x, y, h):
    """-div(a grad u) by the conservative five-point stencil."""
    u = piece.u
    a = piece.a
    uc = u(x, y)
    flux_x = a(x + h / 2, y) * (u(x + h, y) - uc) - a(x - h / 2, y) * (uc - u(x - h, y))
    flux_y = a(x, y + h / 2) * (u(x, y + h) - uc) - a(x, y - h / 2) * (uc - u(x, y - h))
    return -(flux_x + flux_y) / (h * h)


def _complex_step_grad(fn, x, y, h=1e-30):
    return np.imag(fn(x + 1j * h, y)) / h, np.imag(fn(x, y + 1j * h)) / h


def _random_interior(decomp, side, n, rng):
    lo_x, hi_x, lo_y, hi_y = decomp.side_bbox(side)
    want = Membership.INSIDE1 if side == 1 else Membership.INSIDE2
    got = []
    total = 0
    while total < n:
        cand = np.column_stack([rng.uniform(lo_x, hi_x, 4 * n), rng.uniform(lo_y, hi_y, 4 * n)])
        keep = cand[decomp.classify(cand) == want]
        got.append(keep)
        total += len(keep)
    return np.concatenate(got)[:n]


def verify_manufactured(defn: ProblemDefinition, n_check: int = 1000, tol: float = 1e-5,
                        jump_tol: float = 1e-8, seed: int = 0, h: float = 1e-4) -> ManufacturedReport:
    """Check f against finite differences and the jump data against direct evaluation.

    Interior: |FD(-div(a grad u)) - f| at ``n_check`` random points per
    subdomain.  Interface: phi and psi against u_2 - u_1 and the flux jump
    built from complex-step gradients at ``n_check`` random curve points; the
    analytic gradients themselves are also compared with the complex step.
    """
    if n_check < 100:
        raise ValueError("n_check must be at least 100")
    rng = np.random.default_rng(seed)
    decomp = defn.decomposition
    residual = {}
    for side in (1, 2):
        pts = _random_interior(decomp, side, n_check, rng)
        x, y = _split(pts)
        fd = _fd_divergence(defn.piece(side), x, y, h)
        residual[side] = float(np.max(np.abs(fd - defn.f(side, pts))))

    t = rng.uniform(0.0, TWO_PI, n_check)
    gamma = decomp.gamma
    pts = gamma.point(t)
    normals = gamma.normal_at(t)
    x, y = _split(pts)
    value_mismatch = np.abs(defn.phi(pts) - (defn.piece(2).u(x, y) - defn.piece(1).u(x, y)))
    flux = []
    grad_mismatch = 0.0
    for side in (1, 2):
        P = defn.piece(side)
        cs = np.stack(_complex_step_grad(P.u, x, y), -1)
        scale = 1.0 + np.abs(cs)
        grad_mismatch = max(grad_mismatch, float(np.max(np.abs(cs - defn.grad_u(side, pts)) / scale)))
        flux.append(np.real(P.a(x, y)) * np.sum(cs * normals, -1))
    flux_mismatch = np.abs(defn.psi(pts, normals) - (flux[1] - flux[0]))
    return ManufacturedReport(defn.id, n_check, tol, jump_tol, residual,
                              float(value_mismatch.max()), float(flux_mismatch.max()), grad_mismatch)


# -- exact solution as a "network" -----------------------------------------------

@dataclass(frozen=True, eq=False)
class OracleNetwork:
    """The exact u_side exposed through the same jet interface as a network."""

    problem: ProblemDefinition
    side: int

    def jet(self, x, order: int = 0, second: str = LAPLACIAN) -> Jet:
        pts = np.asarray(x, dtype=float).T
        value = jnp.asarray(self.problem.u(self.side, pts))
        if order == 0:
            return Jet(value)
        grad = jnp.asarray(self.problem.grad_u(self.side, pts).T)
        if order == 1:
            return Jet(value, grad)
        hess = self.problem.hess_u(self.side, pts).T
        sec = hess[:1] + hess[1:2] if second == LAPLACIAN else hess
        return Jet(value, grad, jnp.asarray(sec))

    def forward(self, params, points):
        return self.problem.u(self.side, points)


def oracle_dual(defn: ProblemDefinition):
    return OracleNetwork(defn, 1), OracleNetwork(defn, 2)


__all__ = ["Piece", "ProblemDefinition", "ManufacturedReport", "OracleNetwork", "DomainError",
           "builtin", "verify_manufactured", "oracle_dual", "PROBLEM_IDS", "HESSIAN"]
