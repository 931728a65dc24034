"""Second-order input jets and the parameter-gradient entry point.

Input derivatives are propagated forward, by hand, through every layer as
truncated Taylor jets in the two input directions.  A jet carries

* ``value``  (k, n)      activations for k units at n points,
* ``grad``   (2, k, n)   d/dx and d/dy,
* ``second`` (s, k, n)   either s=1 (the Laplacian channel) or s=3
                         (xx, yy, xy).

The Laplacian-only jet is what the PDE residual needs and is three times
cheaper than the full Hessian.  Parameter gradients then come from reverse
mode (jax.grad) over the whole jet computation, so paths through u_xx and
u_yy are differentiated exactly.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

import jax
import jax.numpy as jnp
import numpy as np

LAPLACIAN = "laplacian"
HESSIAN = "hessian"


class Jet(NamedTuple):
    value: jnp.ndarray
    grad: jnp.ndarray | None = None
    second: jnp.ndarray | None = None

    @property
    def order(self) -> int:
        return 0 if self.grad is None else (1 if self.second is None else 2)


class EvalBundle(NamedTuple):
    """Per-point u, (u_x, u_y) and (u_xx, u_yy, u_xy)."""

    u: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


class ParameterShapeError(ValueError):
    pass


def seed_jet(x, order: int = 2, second: str = LAPLACIAN) -> Jet:
    """Identity jet for input coordinates ``x`` of shape (2, n)."""
    n = x.shape[1]
    if order == 0:
        return Jet(x)
    eye = jnp.eye(2, dtype=x.dtype)[:, :, None]
    grad = jnp.broadcast_to(eye, (2, 2, n))
    if order == 1:
        return Jet(x, grad)
    s = 1 if second == LAPLACIAN else 3
    return Jet(x, grad, jnp.zeros((s, 2, n), dtype=x.dtype))


def elementwise(jet: Jet, f, f1=None, f2=None) -> Jet:
    """Push a jet through a scalar function with derivatives f1 = g', f2 = g''.

    second-order rule: d_a d_b g(v) = g'' d_a v d_b v + g' d_a d_b v.
    """
    if jet.grad is None:
        return Jet(f)
    grad = f1 * jet.grad
    if jet.second is None:
        return Jet(f, grad)
    gx, gy = jet.grad[0], jet.grad[1]
    if jet.second.shape[0] == 1:
        second = (f2 * (gx * gx + gy * gy) + f1 * jet.second[0])[None]
    else:
        second = jnp.stack([
            f2 * gx * gx + f1 * jet.second[0],
            f2 * gy * gy + f1 * jet.second[1],
            f2 * gx * gy + f1 * jet.second[2],
        ])
    return Jet(f, grad, second)


def affine(jet: Jet, W, b=None) -> Jet:
    """y = W v + b applied to every jet channel (the bias only to the value)."""
    value = W @ jet.value
    if b is not None:
        value = value + b[:, None]
    grad = None if jet.grad is None else jnp.einsum("ok,dkn->don", W, jet.grad)
    second = None if jet.second is None else jnp.einsum("ok,dkn->don", W, jet.second)
    return Jet(value, grad, second)


def squeeze(jet: Jet) -> Jet:
    """Drop the unit axis of a single-output jet: value (n,), grad (2, n)."""
    return Jet(jet.value[0],
               None if jet.grad is None else jet.grad[:, 0],
               None if jet.second is None else jet.second[:, 0])


def evaluate_with_input_derivatives(net, params, p) -> EvalBundle:
    """u, gradient and Hessian entries of a scalar network at point(s) p."""
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if not np.all(np.isfinite(pts)):
        raise ValueError("evaluation point is not finite")
    jet = net.jet(params, jnp.asarray(pts.T), order=2, second=HESSIAN)
    u = np.asarray(jet.value)
    grad = np.asarray(jet.grad).T
    hess = np.asarray(jet.second).T
    if single:
        return EvalBundle(u[0], grad[0], hess[0])
    return EvalBundle(u, grad, hess)


def loss_parameter_gradient(loss: Callable, theta, expected_size: int | None = None):
    """Gradient of a scalar loss over a flat parameter vector (reverse mode)."""
    theta = jnp.asarray(theta)
    if theta.ndim != 1:
        raise ParameterShapeError(f"parameter vector must be 1-D, got shape {theta.shape}")
    if expected_size is not None and theta.shape[0] != expected_size:
        raise ParameterShapeError(f"expected {expected_size} parameters, got {theta.shape[0]}")
    return jax.grad(loss)(theta)
