"""Adam training loop with RAR-D resampling, loss logging and checkpoints.

The optimisation runs in jitted chunks: each chunk is a ``fori_loop`` of
full-batch Adam steps and ends at the next log step, resampling step or
checkpoint step.  Between chunks the loop is plain Python (logging,
resampling, file output), so the point sets can change without retracing.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from dataclasses import dataclass
from functools import partial
from typing import Any, NamedTuple

import jax
import jax.numpy as jnp
import numpy as np

from .losses import COMPONENTS, LossData, LossWeights, build_loss_data, loss_from_data, pde_residual_magnitude, side_data
from .reporting import evaluate_errors
from .networks import DualNetwork, NetworkField, cast_params, flatten, save_checkpoint
from .sampling import CollocationSet, RardConfig, interior_sampler, rard_resample

log = logging.getLogger(__name__)


class NonFiniteLossError(FloatingPointError):
    def __init__(self, step: int, components: dict, checkpoint: str | None = None):
        self.step = step
        self.components = components
        self.checkpoint = checkpoint
        parts = ", ".join(f"{k}={v:.3e}" for k, v in components.items())
        super().__init__(f"non-finite loss at step {step}: {parts}"
                         + (f" (last good checkpoint {checkpoint})" if checkpoint else ""))


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


class AdamState(NamedTuple):
    count: Any   # number of updates taken so far
    m: Any
    v: Any


def adam_init(params) -> AdamState:
    zeros = jax.tree_util.tree_map(jnp.zeros_like, params)
    return AdamState(jnp.zeros((), jnp.int32), zeros, jax.tree_util.tree_map(jnp.zeros_like, params))


def _adam_update(params, grad, state: AdamState, hyper: AdamConfig):
    count = state.count + 1
    t = count.astype(jax.tree_util.tree_leaves(params)[0].dtype)
    b1, b2 = hyper.beta1, hyper.beta2
    m = jax.tree_util.tree_map(lambda m_, g: b1 * m_ + (1 - b1) * g, state.m, grad)
    v = jax.tree_util.tree_map(lambda v_, g: b2 * v_ + (1 - b2) * g * g, state.v, grad)
    c1 = 1 - b1 ** t
    c2 = 1 - b2 ** t
    new = jax.tree_util.tree_map(
        lambda p, m_, v_: p - hyper.learning_rate * (m_ / c1) / (jnp.sqrt(v_ / c2) + hyper.eps), params, m, v)
    return new, AdamState(count, m, v)


def adam_step(params, grad, state: AdamState, hyper: AdamConfig = AdamConfig()):
    """One bias-corrected Adam update; raises on a non-finite gradient."""
    if jax.tree_util.tree_structure(params) != jax.tree_util.tree_structure(grad):
        raise ValueError("gradient does not match the parameter structure")
    for p, g in zip(jax.tree_util.tree_leaves(params), jax.tree_util.tree_leaves(grad)):
        if jnp.shape(p) != jnp.shape(g):
            raise ValueError(f"gradient shape {jnp.shape(g)} does not match parameter shape {jnp.shape(p)}")
        if not bool(jnp.all(jnp.isfinite(g))):
            raise NonFiniteLossError(int(state.count), {"gradient": float("nan")})
    return _adam_update(params, grad, state, hyper)


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 40000
    log_period: int = 100
    adam: AdamConfig = AdamConfig()
    seed: int = 0
    rard: RardConfig | None = None
    checkpoint_period: int = 5000
    dtype: str = "float32"
    weights: LossWeights = LossWeights()

    def __post_init__(self):
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if self.log_period < 1:
            raise ValueError("log_period must be >= 1")
        if self.total_steps % self.log_period:
            raise ValueError("total_steps must be a multiple of log_period")
        if self.rard is not None and self.rard.warmup_steps > self.total_steps:
            raise ValueError("RAR-D warmup_steps exceeds total_steps")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")


@dataclass
class TrainReport:
    history: list                 # dicts: step + loss components + total
    events: list                  # resampling events
    dual: DualNetwork
    collocation: CollocationSet
    wall_clock: float
    errors: Any = None            # ErrorReport
    steps: int = 0

    def loss_curve(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([h["step"] for h in self.history]), np.array([h["total"] for h in self.history]))

    def write_history_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", *COMPONENTS, "total"])
            for h in self.history:
                w.writerow([h["step"], *[repr(h[c]) for c in COMPONENTS], repr(h["total"])])

    def write_events_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for e in self.events:
                fh.write(json.dumps(e) + "\n")


# -- jitted pieces ------------------------------------------------------------

def _breakdown(net1, net2, weights, params, data):
    return loss_from_data(NetworkField(net1, params[0]), NetworkField(net2, params[1]), data, weights)


def _make_runner(net1, net2, weights, hyper):
    def total(params, data):
        return _breakdown(net1, net2, weights, params, data).total

    grad_fn = jax.grad(total)

    @jax.jit
    def run(params, opt, data, n_steps):
        def body(_, carry):
            p, s = carry
            return _adam_update(p, grad_fn(p, data), s, hyper)

        return jax.lax.fori_loop(0, n_steps, body, (params, opt))

    @jax.jit
    def evaluate(params, data):
        return _breakdown(net1, net2, weights, params, data)

    @partial(jax.jit, static_argnums=1)
    def residual(params, side_index, d):
        net = (net1, net2)[side_index]
        return pde_residual_magnitude(NetworkField(net, params[side_index]), d)

    return run, evaluate, residual


_RUNNERS: dict = {}


def _runner(net1, net2, weights, hyper):
    key = (net1, net2, weights, hyper)
    if key not in _RUNNERS:
        _RUNNERS[key] = _make_runner(net1, net2, weights, hyper)
    return _RUNNERS[key]


def _opt_to_json(opt: AdamState, net1, net2) -> dict:
    return {
        "count": int(opt.count),
        "m": [np.asarray(flatten(n, p), dtype=np.float64).tolist() for n, p in zip((net1, net2), opt.m)],
        "v": [np.asarray(flatten(n, p), dtype=np.float64).tolist() for n, p in zip((net1, net2), opt.v)],
    }


def train(dual: DualNetwork, problem, colloc: CollocationSet, cfg: TrainConfig, out_dir=None,
          evaluate: bool = True, n_test: int = 10000, error_seed: int = 12345) -> TrainReport:
    """Run cfg.total_steps Adam steps (with RAR-D events if enabled)."""
    t0 = time.perf_counter()
    dtype = jnp.float32 if cfg.dtype == "float32" else jnp.float64
    params = (cast_params(dual.params1, dtype), cast_params(dual.params2, dtype))
    net1, net2 = dual.net1, dual.net2
    colloc = colloc.copy()
    data = build_loss_data(problem, colloc, dtype)
    opt = adam_init(params)
    run, evaluate_loss, residual = _runner(net1, net2, cfg.weights, cfg.adam)

    if out_dir is not None:
        os.makedirs(os.path.join(out_dir, "checkpoints"), exist_ok=True)

    event_steps = cfg.rard.event_steps(cfg.total_steps) if cfg.rard is not None else []
    stops = set(range(cfg.log_period, cfg.total_steps + 1, cfg.log_period)) | set(event_steps)
    if out_dir is not None and cfg.checkpoint_period > 0:
        stops |= set(range(cfg.checkpoint_period, cfg.total_steps + 1, cfg.checkpoint_period))
    stops = sorted(stops)
    samplers = {s: interior_sampler(problem.decomposition, s) for s in (1, 2)} if event_steps else {}

    history, events = [], []
    last_ckpt = None
    step = 0
    for stop in stops:
        prev = (params, opt)
        params, opt = run(params, opt, data, stop - step)
        step = stop
        if step % cfg.log_period == 0 or step == cfg.total_steps:
            lb = evaluate_loss(params, data)
            comps = {k: float(v) for k, v in lb._asdict().items()}
            if not all(np.isfinite(list(comps.values()))):
                if out_dir is not None:
                    bad = os.path.join(out_dir, "checkpoints", "last_good.json")
                    save_checkpoint(bad, dual.with_params(prev[0]), {"step": step - cfg.log_period})
                    last_ckpt = bad
                raise NonFiniteLossError(step, comps, last_ckpt)
            if step % cfg.log_period == 0:
                history.append({"step": step, **comps})
        if step in event_steps:
            for side_index, side in enumerate((1, 2)):
                current = colloc.interior1 if side == 1 else colloc.interior2
                rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, step, side]))

                def res_fn(pts, side_index=side_index, side=side):
                    d = side_data(problem, side, pts, dtype)
                    return np.asarray(residual(params, side_index, d), dtype=float)

                new_pts, ev = rard_resample(current, res_fn, cfg.rard, rng, samplers[side], subdomain=side)
                ev["step"] = step
                events.append(ev)
                colloc = colloc.replace_interior(side, new_pts)
            data = LossData(side_data(problem, 1, colloc.interior1, dtype),
                            side_data(problem, 2, colloc.interior2, dtype),
                            data.gamma, data.boundary1, data.boundary2)
        if out_dir is not None and cfg.checkpoint_period > 0 and step % cfg.checkpoint_period == 0:
            path = os.path.join(out_dir, "checkpoints", f"step_{step:06d}.json")
            save_checkpoint(path, dual.with_params(params), {"step": step, "adam": _opt_to_json(opt, net1, net2)})
            last_ckpt = path

    final = dual.with_params(params)
    report = TrainReport(history, events, final, colloc, 0.0, steps=step)
    if evaluate:
        report.errors = evaluate_errors(final, problem, n_test=n_test, seed=error_seed)
    report.wall_clock = time.perf_counter() - t0
    if out_dir is not None:
        report.write_history_csv(os.path.join(out_dir, "loss_history.csv"))
        report.write_events_jsonl(os.path.join(out_dir, "resample_events.jsonl"))
        save_checkpoint(os.path.join(out_dir, "final.json"), final,
                        {"step": step, "adam": _opt_to_json(opt, net1, net2)})
        if report.errors is not None:
            report.errors.save(os.path.join(out_dir, "errors.json"))
    return report
