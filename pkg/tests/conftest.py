import jax.numpy as jnp
import numpy as np
import pytest
from scipy.interpolate import BSpline

from dualkan.losses import LossWeights, build_loss_data, loss_from_data
from dualkan.networks import NetworkField, flatten, parameter_count, unflatten


def flat_loss(net, problem, colloc, weights=LossWeights()):
    """Total loss as a function of the concatenated flat parameters of both networks."""
    data = build_loss_data(problem, colloc, jnp.float64)
    n = parameter_count(net)

    def loss(theta):
        p1, p2 = unflatten(net, theta[:n]), unflatten(net, theta[n:])
        return loss_from_data(NetworkField(net, p1), NetworkField(net, p2), data, weights).total

    return loss


def flat_params(net, params1, params2):
    return jnp.concatenate([flatten(net, params1), flatten(net, params2)])


def central_fd(fun, theta, idx, rel_step=1e-5):
    theta = np.asarray(theta, dtype=float)
    out = []
    for i in idx:
        h = rel_step * max(abs(theta[i]), 1.0)
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        out.append((float(fun(jnp.asarray(tp))) - float(fun(jnp.asarray(tm)))) / (2 * h))
    return np.array(out)


def kan_reference(net, params, pts):
    """Straight-line KAN forward pass built on scipy's B-spline evaluator."""
    pts = np.asarray(pts, dtype=float)
    out = []
    for p in pts:
        x = p
        for k, layer in enumerate(params):
            c, cr, cb = (np.asarray(layer[key], dtype=float) for key in ("c", "c_r", "c_B"))
            y = np.zeros(c.shape[0])
            for o in range(c.shape[0]):
                for i in range(c.shape[1]):
                    knots = net.knots(k, i)
                    # sum of single basis elements, so the padded end cells count too
                    spl = 0.0
                    for j in range(len(c[o, i])):
                        b = BSpline.basis_element(knots[j:j + net.m + 2], extrapolate=False)(x[i])
                        spl += 0.0 if np.isnan(b) else c[o, i, j] * float(b)
                    silu = x[i] / (1.0 + np.exp(-x[i]))
                    y[o] += cr[o, i] * silu + cb[o, i] * spl
            x = y
        out.append(x[0])
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
