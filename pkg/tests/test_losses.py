import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualkan.geometry import OffInterfaceError
from dualkan.losses import (COMPONENTS, LossWeights, assemble_loss, build_loss_data, interior_residual,
                            jump_residuals, loss_from_data)
from dualkan.networks import DualNetwork, Mlp, NetworkField
from dualkan.problems import PROBLEM_IDS, DomainError, builtin, oracle_dual
from dualkan.sampling import CollocationSet, SamplingPlan, build_collocation

PLANS = {"e1": SamplingPlan(200, 500, 300, 0, 800), "e4": SamplingPlan(300, 500, 300, 0, 800),
         "e5": SamplingPlan(300, 500, 300, 300, 800), "e6": SamplingPlan(300, 500, 300, 300, 300)}


class Const:
    """Constant field u = value."""

    def __init__(self, value):
        self.value = value

    def jet(self, x, order=0, second="laplacian"):
        from dualkan.autodiff import Jet
        n = x.shape[1]
        v = jnp.full((n,), self.value, dtype=jnp.float64)
        if order == 0:
            return Jet(v)
        g = jnp.zeros((2, n))
        return Jet(v, g) if order == 1 else Jet(v, g, jnp.zeros((1, n)))


@pytest.mark.parametrize("pid", PROBLEM_IDS)
def test_zero_at_truth(pid):
    prob = builtin(pid)
    colloc = build_collocation(prob.decomposition, PLANS[pid], 0)
    lb = assemble_loss(oracle_dual(prob), prob, colloc)
    assert float(lb.total) < 1e-10
    assert all(float(v) >= 0 for v in lb)


def test_e1_point_residuals():
    prob = builtin("e1")
    zero = (Const(0.0), Const(0.0))
    assert interior_residual(zero, prob, (0.1, 0.2), 1) == 0.0
    assert interior_residual(zero, prob, (0.8, -0.7), 2) == 0.0
    v, f = jump_residuals(zero, prob, (0.5, 0.0), (1.0, 0.0))
    np.testing.assert_allclose((v, f), (-1.0, 2.0 / np.log(2.0)), rtol=1e-14)
    v, f = jump_residuals((Const(1.0), Const(2.0)), prob, (0.0, 0.5), (0.0, 1.0))
    np.testing.assert_allclose((v, f), (0.0, 2.0 / np.log(2.0)), rtol=1e-14, atol=1e-15)
    v, f = jump_residuals(oracle_dual(prob), prob, (0.3, 0.4), (0.6, 0.8))
    assert abs(v) < 1e-8 and abs(f) < 1e-8
    rng = np.random.default_rng(0)
    for _ in range(10):
        p = rng.uniform(-0.3, 0.3, 2)
        assert abs(interior_residual(oracle_dual(prob), prob, p, 1)) < 1e-6


def test_point_residual_errors():
    prob = builtin("e1")
    zero = (Const(0.0), Const(0.0))
    with pytest.raises(DomainError):
        interior_residual(zero, prob, (0.9, 0.9), 1)
    with pytest.raises(OffInterfaceError):
        jump_residuals(zero, prob, (0.4, 0.0), (1.0, 0.0))


def test_e4_zero_network_residual_is_minus_f():
    prob = builtin("e4")
    zero = (Const(0.0), Const(0.0))
    p = 0.5 * prob.decomposition.gamma.point(np.pi / 12)
    assert prob.decomposition.contains(p).name == "INSIDE1"
    np.testing.assert_allclose(interior_residual(zero, prob, p, 1), -prob.f(1, p)[0], rtol=1e-14)


def _small_colloc(pid, seed=0, n=8):
    prob = builtin(pid)
    plan = SamplingPlan(n, n, n, n if pid in ("e5", "e6") else 0, n)
    return prob, build_collocation(prob.decomposition, plan, seed)


def _dual(seed=0):
    net = Mlp((2, 6, 1))
    return DualNetwork.initialise(net, net, seed=seed)


def test_duplicating_points_keeps_means():
    prob, c = _small_colloc("e6")
    doubled = CollocationSet(*(np.concatenate([a, a]) for a in (c.interior1, c.interior2, c.interface,
                                                                  c.interface_normals, c.boundary1, c.boundary2)))
    dual = _dual()
    a, b = assemble_loss(dual, prob, c), assemble_loss(dual, prob, doubled)
    for x, y in zip(a, b):
        np.testing.assert_allclose(float(x), float(y), rtol=1e-13)


def test_single_point_components():
    prob, c = _small_colloc("e6", n=1)
    dual = _dual(1)
    lb = assemble_loss(dual, prob, c)
    r1 = interior_residual(dual, prob, c.interior1[0], 1)
    v, f = jump_residuals(dual, prob, c.interface[0], c.interface_normals[0])
    g2 = dual.evaluate(c.boundary2, 2)[0] - prob.g(2, c.boundary2)[0]
    np.testing.assert_allclose(float(lb.l_omega1), r1**2, rtol=1e-12)
    np.testing.assert_allclose(float(lb.l_gamma_value), v**2, rtol=1e-12)
    np.testing.assert_allclose(float(lb.l_gamma_flux), f**2, rtol=1e-12)
    np.testing.assert_allclose(float(lb.l_boundary2), g2**2, rtol=1e-12)


def test_empty_boundary_contributes_zero():
    prob, c = _small_colloc("e1")
    lb = assemble_loss(_dual(), prob, c)
    assert len(c.boundary1) == 0 and float(lb.l_boundary1) == 0.0
    np.testing.assert_allclose(float(lb.total), sum(float(getattr(lb, k)) for k in COMPONENTS), rtol=1e-15)


def test_weights_scale_components():
    prob, c = _small_colloc("e6")
    dual = _dual(2)
    base = assemble_loss(dual, prob, c)
    w = LossWeights(2.0, 0.5, 3.0, 0.0, 1.5, 1.0)
    weighted = assemble_loss(dual, prob, c, w)
    expect = sum(wi * float(getattr(base, k)) for wi, k in zip(w, COMPONENTS))
    np.testing.assert_allclose(float(weighted.total), expect, rtol=1e-13)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_permutation_invariance(seed):
    prob, c = _small_colloc("e5", seed % 7, n=10)
    rng = np.random.default_rng(seed)
    dual = _dual(seed % 5)
    perm = lambda a: a[rng.permutation(len(a))]  # noqa: E731
    i = rng.permutation(len(c.interface))
    shuffled = CollocationSet(perm(c.interior1), perm(c.interior2), c.interface[i], c.interface_normals[i],
                              perm(c.boundary1), perm(c.boundary2))
    a, b = assemble_loss(dual, prob, c), assemble_loss(dual, prob, shuffled)
    assert abs(float(a.total) - float(b.total)) < 1e-12 * max(1.0, float(a.total))
    assert all(float(v) >= 0 for v in b)


def test_loss_from_data_matches_assemble_loss():
    prob, c = _small_colloc("e4")
    dual = _dual(3)
    data = build_loss_data(prob, c)
    a = loss_from_data(NetworkField(dual.net1, dual.params1), NetworkField(dual.net2, dual.params2), data)
    b = assemble_loss(dual, prob, c)
    assert float(a.total) == float(b.total)
    assert set(a.as_dict()) == set(COMPONENTS) | {"total"}
