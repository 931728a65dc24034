"""Composite physics-informed loss for the two-network interface problem.

L = L_Omega1 + L_Omega2 + L_Gamma,value + L_Gamma,flux + L_dOmega1 + L_dOmega2

each term being the mean of squared residuals over its point set:

* interior:  -(grad a . grad u_i + a lap u_i) - f_i
* interface: (u_2 - u_1) - phi  and  (a_2 grad u_2 - a_1 grad u_1) . n - psi
* boundary:  u_i - g

Everything problem-dependent (a, grad a, f, g, phi, psi, normals) is
evaluated once per point set in numpy and stored in :class:`LossData`, so the
jitted loss only depends on the network parameters.
"""
from __future__ import annotations

from typing import NamedTuple

import jax
import jax.numpy as jnp
import numpy as np

from .autodiff import LAPLACIAN
from .geometry import Membership, NORMAL_QUERY_TOL, OffInterfaceError, as_points
from .problems import DomainError


class SideData(NamedTuple):
    x: jnp.ndarray        # (2, n)
    a: jnp.ndarray        # (n,)
    grad_a: jnp.ndarray   # (2, n)
    f: jnp.ndarray        # (n,)


class InterfaceData(NamedTuple):
    x: jnp.ndarray
    normal: jnp.ndarray
    a1: jnp.ndarray
    a2: jnp.ndarray
    phi: jnp.ndarray
    psi: jnp.ndarray


class BoundaryData(NamedTuple):
    x: jnp.ndarray
    g: jnp.ndarray


class LossData(NamedTuple):
    side1: SideData
    side2: SideData
    gamma: InterfaceData
    boundary1: BoundaryData
    boundary2: BoundaryData


class LossWeights(NamedTuple):
    omega1: float = 1.0
    omega2: float = 1.0
    gamma_value: float = 1.0
    gamma_flux: float = 1.0
    boundary1: float = 1.0
    boundary2: float = 1.0


class LossBreakdown(NamedTuple):
    l_omega1: jnp.ndarray
    l_omega2: jnp.ndarray
    l_gamma_value: jnp.ndarray
    l_gamma_flux: jnp.ndarray
    l_boundary1: jnp.ndarray
    l_boundary2: jnp.ndarray
    total: jnp.ndarray

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in self._asdict().items()}


COMPONENTS = LossBreakdown._fields[:-1]


def _arr(v, dtype):
    return jnp.asarray(np.asarray(v, dtype=float), dtype=dtype)


def side_data(problem, side: int, points, dtype=jnp.float64) -> SideData:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        z = np.zeros(0)
        return SideData(_arr(np.zeros((2, 0)), dtype), _arr(z, dtype), _arr(np.zeros((2, 0)), dtype), _arr(z, dtype))
    return SideData(_arr(pts.T, dtype), _arr(problem.a(side, pts), dtype),
                    _arr(problem.grad_a(side, pts).T, dtype), _arr(problem.f(side, pts), dtype))


def interface_data(problem, points, normals, dtype=jnp.float64) -> InterfaceData:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    nrm = np.asarray(normals, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        z = np.zeros(0)
        e = np.zeros((2, 0))
        return InterfaceData(_arr(e, dtype), _arr(e, dtype), *(_arr(z, dtype) for _ in range(4)))
    return InterfaceData(_arr(pts.T, dtype), _arr(nrm.T, dtype), _arr(problem.a(1, pts), dtype),
                         _arr(problem.a(2, pts), dtype), _arr(problem.phi(pts), dtype),
                         _arr(problem.psi(pts, nrm), dtype))


def boundary_data(problem, side: int, points, dtype=jnp.float64) -> BoundaryData:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return BoundaryData(_arr(np.zeros((2, 0)), dtype), _arr(np.zeros(0), dtype))
    return BoundaryData(_arr(pts.T, dtype), _arr(problem.g(side, pts), dtype))


def build_loss_data(problem, colloc, dtype=jnp.float64) -> LossData:
    return LossData(
        side_data(problem, 1, colloc.interior1, dtype),
        side_data(problem, 2, colloc.interior2, dtype),
        interface_data(problem, colloc.interface, colloc.interface_normals, dtype),
        boundary_data(problem, 1, colloc.boundary1, dtype),
        boundary_data(problem, 2, colloc.boundary2, dtype),
    )


# -- residuals ---------------------------------------------------------------

def interior_residuals(field, data: SideData):
    jet = field.jet(data.x, order=2, second=LAPLACIAN)
    flux_div = jnp.sum(data.grad_a * jet.grad, axis=0) + data.a * jet.second[0]
    return -flux_div - data.f


def jump_residuals_batch(field1, field2, data: InterfaceData):
    j1 = field1.jet(data.x, order=1)
    j2 = field2.jet(data.x, order=1)
    value = (j2.value - j1.value) - data.phi
    flux = (data.a2 * jnp.sum(j2.grad * data.normal, axis=0)
            - data.a1 * jnp.sum(j1.grad * data.normal, axis=0)) - data.psi
    return value, flux


def boundary_residuals(field, data: BoundaryData):
    return field.jet(data.x, order=0).value - data.g


def _mean_square(r):
    if r.shape[0] == 0:
        return jnp.zeros((), dtype=r.dtype)
    return jnp.mean(r * r)


def loss_from_data(field1, field2, data: LossData, weights: LossWeights = LossWeights()) -> LossBreakdown:
    """Loss breakdown; empty point sets contribute exactly zero."""
    def interior(field, d):
        return _mean_square(interior_residuals(field, d)) if d.x.shape[1] else jnp.zeros((), d.x.dtype)

    def boundary(field, d):
        return _mean_square(boundary_residuals(field, d)) if d.x.shape[1] else jnp.zeros((), d.x.dtype)

    l1 = interior(field1, data.side1)
    l2 = interior(field2, data.side2)
    if data.gamma.x.shape[1]:
        rv, rf = jump_residuals_batch(field1, field2, data.gamma)
        lv, lf = _mean_square(rv), _mean_square(rf)
    else:
        lv = lf = jnp.zeros((), data.gamma.x.dtype)
    b1 = boundary(field1, data.boundary1)
    b2 = boundary(field2, data.boundary2)
    total = (weights.omega1 * l1 + weights.omega2 * l2 + weights.gamma_value * lv
             + weights.gamma_flux * lf + weights.boundary1 * b1 + weights.boundary2 * b2)
    return LossBreakdown(l1, l2, lv, lf, b1, b2, total)


def _fields(dual):
    if hasattr(dual, "field"):
        return dual.field(1), dual.field(2)
    return tuple(dual)


def assemble_loss(dual, problem, colloc, weights: LossWeights = LossWeights(), dtype=None) -> LossBreakdown:
    """Loss breakdown for a dual network (or a pair of fields) on a collocation set."""
    f1, f2 = _fields(dual)
    if dtype is None:
        dtype = jnp.float64
        params = getattr(f1, "params", None)
        if params is not None:
            dtype = jax.tree_util.tree_leaves(params)[0].dtype
    return loss_from_data(f1, f2, build_loss_data(problem, colloc, dtype), weights)


# -- single-point versions ------------------------------------------------------

def interior_residual(dual, problem, p, side: int) -> float:
    pts, _ = as_points(p)
    want = Membership.INSIDE1 if side == 1 else Membership.INSIDE2
    if not np.all(problem.decomposition.classify(pts) == want):
        raise DomainError(f"point is not strictly inside Omega_{side}")
    field = _fields(dual)[side - 1]
    return float(interior_residuals(field, side_data(problem, side, pts))[0])


def jump_residuals(dual, problem, p, n) -> tuple[float, float]:
    pts, _ = as_points(p)
    if np.any(problem.decomposition.gamma.distance(pts) > NORMAL_QUERY_TOL):
        raise OffInterfaceError("jump residuals need a point on the interface")
    f1, f2 = _fields(dual)
    v, fl = jump_residuals_batch(f1, f2, interface_data(problem, pts, np.reshape(n, (-1, 2))))
    return float(v[0]), float(fl[0])


def pde_residual_magnitude(field, data: SideData):
    """|-div(a grad u) - f| at every point, the RAR-D residual."""
    return jnp.abs(interior_residuals(field, data))
