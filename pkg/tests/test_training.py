import csv
import json
import os

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from dualkan.networks import DualNetwork, Mlp, load_checkpoint
from dualkan.problems import builtin
from dualkan.sampling import RardConfig, SamplingPlan, build_collocation
from dualkan.training import (AdamConfig, AdamState, NonFiniteLossError, TrainConfig, _adam_update, adam_init,
                              adam_step, train)


def _adam_oracle(theta, grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Plain numpy bias-corrected Adam, one parameter vector."""
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta = theta - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
        out.append(theta.copy())
    return out


def test_adam_matches_numpy_oracle():
    rng = np.random.default_rng(0)
    theta = rng.normal(size=7)
    grads = rng.normal(size=(50, 7))
    expect = _adam_oracle(theta, grads, lr=3e-3)
    p = {"w": jnp.asarray(theta)}
    state = adam_init(p)
    hyper = AdamConfig(learning_rate=3e-3)
    for g, ref in zip(grads, expect):
        p, state = adam_step(p, {"w": jnp.asarray(g)}, state, hyper)
        np.testing.assert_allclose(p["w"], ref, rtol=1e-13, atol=1e-15)
    assert int(state.count) == 50


def test_adam_zero_gradient():
    p = {"w": jnp.arange(4.0)}
    new, state = adam_step(p, {"w": jnp.zeros(4)}, adam_init(p))
    np.testing.assert_array_equal(new["w"], p["w"])
    # nonzero moments decay by beta1 and beta2
    s = AdamState(jnp.asarray(3), {"w": jnp.ones(4)}, {"w": jnp.ones(4)})
    _, s2 = adam_step(p, {"w": jnp.zeros(4)}, s)
    np.testing.assert_allclose(s2.m["w"], 0.9)
    np.testing.assert_allclose(s2.v["w"], 0.999)


def test_adam_constant_gradient_step_is_lr_sign():
    g = jnp.array([2.0, -0.5, 1e-3])
    p = {"w": jnp.zeros(3)}
    state = adam_init(p)
    for _ in range(2000):
        prev = p["w"]
        p, state = adam_step(p, {"w": g}, state)
    # m/c1 -> g and v/c2 -> g^2, so the step is lr * g / (|g| + eps)
    np.testing.assert_allclose(prev - p["w"], 1e-3 * np.asarray(g) / (np.abs(g) + 1e-8), rtol=1e-9)


def test_adam_quadratic_bowl():
    theta = jnp.asarray(np.random.default_rng(1).uniform(-1, 1, 10))

    @jax.jit
    def run(p):
        def body(_, c):
            return _adam_update(c[0], c[0], c[1], AdamConfig())   # grad of |p|^2/2 is p
        return jax.lax.fori_loop(0, 10_000, body, (p, adam_init(p)))[0]

    assert float(jnp.linalg.norm(run(theta))) < 1e-3


def test_adam_errors():
    p = {"w": jnp.zeros(3)}
    with pytest.raises(NonFiniteLossError):
        adam_step(p, {"w": jnp.array([0.0, jnp.nan, 1.0])}, adam_init(p))
    with pytest.raises(ValueError):
        adam_step(p, {"w": jnp.zeros(4)}, adam_init(p))
    with pytest.raises(ValueError):
        adam_step(p, {"v": jnp.zeros(3)}, adam_init(p))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(total_steps=-1)
    with pytest.raises(ValueError):
        TrainConfig(total_steps=150, log_period=100)
    with pytest.raises(ValueError):
        TrainConfig(total_steps=100, rard=RardConfig(warmup_steps=200))
    with pytest.raises(ValueError):
        TrainConfig(dtype="float16")


def _setup(pid="e1", seed=0, n=20):
    problem = builtin(pid)
    plan = SamplingPlan(n, n, n, n if pid in ("e5", "e6") else 0, n)
    colloc = build_collocation(problem.decomposition, plan, seed)
    net = Mlp((2, 8, 8, 1))
    return problem, colloc, DualNetwork.initialise(net, net, problem.decomposition, seed=seed)


def test_zero_steps_returns_initial_state():
    problem, colloc, dual = _setup()
    rep = train(dual, problem, colloc, TrainConfig(total_steps=0), n_test=200)
    assert rep.history == [] and rep.events == [] and rep.steps == 0
    for a, b in zip(jax.tree_util.tree_leaves(rep.dual.params), jax.tree_util.tree_leaves(dual.params)):
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b, dtype=np.float32))
    assert rep.errors is not None and np.isfinite(rep.errors.e_omega1)


def test_history_shape_and_loss_decreases():
    problem, colloc, dual = _setup()
    rep = train(dual, problem, colloc, TrainConfig(total_steps=600, log_period=50), evaluate=False)
    steps, total = rep.loss_curve()
    assert len(rep.history) == 12
    assert np.all(np.diff(steps) > 0) and steps[-1] == 600
    assert total[-1] < total[0]


def test_rard_disabled_keeps_collocation():
    problem, colloc, dual = _setup("e6")
    before = [a.tobytes() for a in (colloc.interior1, colloc.interior2, colloc.interface, colloc.boundary1,
                                    colloc.boundary2)]
    rep = train(dual, problem, colloc, TrainConfig(total_steps=100, log_period=50), evaluate=False)
    for c in (colloc, rep.collocation):
        after = [a.tobytes() for a in (c.interior1, c.interior2, c.interface, c.boundary1, c.boundary2)]
        assert after == before


def test_rard_events_and_untouched_curve_sets():
    problem, colloc, dual = _setup("e6")
    rard = RardConfig(k=2, c=0, warmup_steps=100, resample_period=50, pool_multiplier=2)
    rep = train(dual, problem, colloc, TrainConfig(total_steps=300, log_period=50, rard=rard), evaluate=False)
    assert [e["step"] for e in rep.events] == [150, 150, 200, 200, 250, 250]
    assert [e["subdomain"] for e in rep.events] == [1, 2] * 3
    for name in ("interface", "interface_normals", "boundary1", "boundary2"):
        np.testing.assert_array_equal(getattr(rep.collocation, name), getattr(colloc, name))
    assert rep.collocation.counts == colloc.counts
    assert not np.array_equal(rep.collocation.interior2, colloc.interior2)


def test_determinism_bit_identical():
    rard = RardConfig(k=2, c=1, warmup_steps=100, resample_period=50, pool_multiplier=2)
    cfg = TrainConfig(total_steps=200, log_period=50, rard=rard, seed=4)
    reps = []
    for _ in range(2):
        problem, colloc, dual = _setup("e4", seed=4)
        reps.append(train(dual, problem, colloc, cfg, n_test=500))
    assert reps[0].history == reps[1].history
    assert reps[0].events == reps[1].events
    assert reps[0].errors.to_json() == reps[1].errors.to_json()


def test_output_files(tmp_path):
    problem, colloc, dual = _setup()
    rard = RardConfig(k=2, c=0, warmup_steps=50, resample_period=50, pool_multiplier=1)
    cfg = TrainConfig(total_steps=200, log_period=50, rard=rard, checkpoint_period=100)
    rep = train(dual, problem, colloc, cfg, out_dir=tmp_path, n_test=300)
    with open(tmp_path / "loss_history.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "l_omega1", "l_omega2", "l_gamma_value", "l_gamma_flux", "l_boundary1",
                       "l_boundary2", "total"]
    assert [int(r[0]) for r in rows[1:]] == [50, 100, 150, 200]
    assert float(rows[-1][-1]) == rep.history[-1]["total"]
    with open(tmp_path / "resample_events.jsonl") as fh:
        events = [json.loads(line) for line in fh]
    assert [e["step"] for e in events] == [100, 100, 150, 150]
    assert sorted(os.listdir(tmp_path / "checkpoints")) == ["step_000100.json", "step_000200.json"]
    final, extra = load_checkpoint(tmp_path / "final.json")
    assert extra["step"] == 200 and extra["adam"]["count"] == 200
    np.testing.assert_allclose(final.evaluate(colloc.interior2[:5], 2), rep.dual.evaluate(colloc.interior2[:5], 2),
                               rtol=1e-6)
    assert json.loads((tmp_path / "errors.json").read_text())["n_test"] == 300


def test_non_finite_loss_aborts_with_checkpoint(tmp_path):
    problem, colloc, dual = _setup()
    cfg = TrainConfig(total_steps=200, log_period=10, adam=AdamConfig(learning_rate=1e30))
    with pytest.raises(NonFiniteLossError) as info:
        train(dual, problem, colloc, cfg, out_dir=tmp_path)
    err = info.value
    assert err.step > 0 and "total" in err.components
    assert err.checkpoint is not None and os.path.exists(err.checkpoint)
