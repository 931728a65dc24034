"""Acceptance criteria 1-10, each printing one PASS/FAIL line.

Criteria 6-8 share one cache of full preset runs (E1 and E4, four
configurations, three seeds each); on one CPU core this takes about an hour.
"""
import math
import time

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from dualkan import splines
from dualkan.autodiff import HESSIAN, loss_parameter_gradient
from dualkan.cli import COMPARE_ROWS, run_experiment
from dualkan.config import preset
from dualkan.losses import assemble_loss
from dualkan.networks import DualNetwork, Kan, Mlp, parameter_count
from dualkan.problems import PROBLEM_IDS, builtin, oracle_dual, verify_manufactured
from dualkan.reporting import evaluate_errors, export_field_grid
from dualkan.sampling import (RardConfig, SamplingPlan, build_collocation, interior_sampler, rard_density,
                              rard_resample)
from test_losses import PLANS

from conftest import central_fd, flat_loss, flat_params

SEEDS = (0, 1, 2)
TABLE_COLUMNS = ("e_omega1", "e_omega2", "e_gamma", "e_boundary2", "max_abs")
REFERENCE_KANS_A = {"e_omega1": 1.035e-4, "e_omega2": 1.927e-4, "e_gamma": 1.680e-4, "e_boundary2": 6.512e-4}

_RUNS: dict = {}


def preset_run(name, seed):
    """Full preset run, cached for the session; all four configurations of a
    problem share the initial collocation seed."""
    key = (name, seed)
    if key not in _RUNS:
        cfg = preset(name).updated(seed=seed, collocation_seed=seed)
        _RUNS[key] = run_experiment(cfg)
    return _RUNS[key]


def _cols(rep, columns=TABLE_COLUMNS):
    return np.array([getattr(rep.errors, c) for c in columns])


def best_of_seeds(name, columns=TABLE_COLUMNS):
    """Seed with the lowest geometric mean over the table columns."""
    reps = [preset_run(name, s) for s in SEEDS]
    return min(reps, key=lambda r: float(np.mean(np.log(_cols(r, columns)))))


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _fmt(vals):
    return ", ".join(f"{v:.3e}" for v in vals)


# -- 1-5: oracle and unit-level criteria ------------------------------------

def test_criterion_1_manufactured_oracle(capsys):
    t0 = time.perf_counter()
    reps = {pid: verify_manufactured(builtin(pid), n_check=1000, tol=1e-5, jump_tol=1e-8) for pid in PROBLEM_IDS}
    dt = time.perf_counter() - t0
    failed = [pid for pid, r in reps.items() if not r.passed]
    verdict(capsys, 1, not failed and dt < 10, f"verify-problems failures={failed or 'none'}, runtime {dt:.1f}s < 10s")


def test_criterion_2_zero_at_truth(capsys):
    t0 = time.perf_counter()
    totals = {}
    for pid in PROBLEM_IDS:
        prob = builtin(pid)
        colloc = build_collocation(prob.decomposition, PLANS[pid], 0)
        totals[pid] = float(assemble_loss(oracle_dual(prob), prob, colloc).total)
    dt = time.perf_counter() - t0
    ok = max(totals.values()) < 1e-10 and dt < 30
    verdict(capsys, 2, ok, "oracle losses " + ", ".join(f"{k}={v:.1e}" for k, v in totals.items())
            + f" (< 1e-10), runtime {dt:.1f}s < 30s")


def _hessian_fd(net, params, pts, h=1e-4):
    f = lambda q: np.asarray(net.jet(params, jnp.asarray(q.T), order=0).value).reshape(-1)  # noqa: E731
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    f0 = f(pts)
    hxx = (f(pts + ex) - 2 * f0 + f(pts - ex)) / h**2
    hyy = (f(pts + ey) - 2 * f0 + f(pts - ey)) / h**2
    hxy = (f(pts + ex + ey) - f(pts + ex - ey) - f(pts - ex + ey) + f(pts - ex - ey)) / (4 * h * h)
    gx = (f(pts + ex) - f(pts - ex)) / (2 * h)
    gy = (f(pts + ey) - f(pts - ey)) / (2 * h)
    return np.stack([gx, gy]), np.stack([hxx, hyy, hxy])


def test_criterion_3_differentiation(capsys):
    t0 = time.perf_counter()
    problem = builtin("e1")
    colloc = build_collocation(problem.decomposition, SamplingPlan(20, 20, 20, 0, 20), 0)
    grad_err, hess_err = {}, {}
    nets = {"mlp": Mlp((2, 20, 20, 20, 1)),
            "kan": Kan((2, 3, 3, 3, 1), G=10, m=3, input_ranges=((-1, 1), (-1, 1)))}
    for kind, net in nets.items():
        dual = DualNetwork.initialise(net, net, problem.decomposition, seed=7)
        loss = jax.jit(flat_loss(net, problem, colloc))    # all six loss terms
        theta = flat_params(net, dual.params1, dual.params2)
        g = np.asarray(loss_parameter_gradient(loss, theta, 2 * parameter_count(net)))
        idx = np.random.default_rng(7).choice(len(theta), 32, replace=False)
        fd = central_fd(loss, theta, idx)
        scale = np.maximum(np.abs(g[idx]), 1e-6 * np.abs(g).max())
        grad_err[kind] = float(np.max(np.abs(g[idx] - fd) / scale))
        pts = np.random.default_rng(8).uniform(-0.9, 0.9, (16, 2))
        jet = net.jet(dual.params1, jnp.asarray(pts.T), order=2, second=HESSIAN)
        gfd, hfd = _hessian_fd(net, dual.params1, pts)
        hj = np.asarray(jet.second)
        hess_err[kind] = float(np.max(np.abs(hj - hfd) / np.maximum(np.abs(hj), 1.0)))
        assert np.max(np.abs(np.asarray(jet.grad) - gfd)) < 1e-6
    dt = time.perf_counter() - t0
    ok = max(grad_err.values()) < 1e-4 and max(hess_err.values()) < 1e-3 and dt < 60
    verdict(capsys, 3, ok, f"param-grad rel err mlp={grad_err['mlp']:.1e} kan={grad_err['kan']:.1e} (< 1e-4), "
            f"Hessian rel err mlp={hess_err['mlp']:.1e} kan={hess_err['kan']:.1e} (< 1e-3), runtime {dt:.1f}s < 60s")


def _poly_derivative(P, d):
    """Coefficients (power basis, first axis) of the d-th derivative."""
    for _ in range(d):
        k = np.arange(1, P.shape[0]).reshape(-1, *([1] * (P.ndim - 1)))
        P = P[1:] * k
    return P


def test_criterion_4_spline_properties(capsys):
    worst_pu, worst_jump = 0.0, 0.0
    for G in (5, 10, 15):
        for m in (2, 3):
            knots = splines.uniform_knots(-1.0, 1.0, G, m)
            x = np.random.default_rng(G + m).uniform(-1.0, 1.0, 20_000)
            x = np.concatenate([x, knots[m:-m]])       # the grid points themselves
            worst_pu = max(worst_pu, float(np.max(np.abs(splines.spline_basis(knots, m, x).sum(-1) - 1.0))))
            # exact one-sided derivatives of every basis function at every knot
            P = splines.cell_polynomials(np.eye(G + m), m)[..., :-1]      # (m+1, basis, cells)
            for d in range(m):
                Q = _poly_derivative(P, d)
                right_end = Q.sum(0)[:, :-1]       # cell r at u = 1
                left_end = Q[0][:, 1:]             # cell r+1 at u = 0
                worst_jump = max(worst_jump, float(np.max(np.abs(right_end - left_end))))
            # the m-th derivative does jump, so the check above is sharp
            Q = _poly_derivative(P, m)
            assert np.max(np.abs(Q.sum(0)[:, :-1] - Q[0][:, 1:])) > 0.5
    ok = worst_pu < 1e-12 and worst_jump < 1e-12
    verdict(capsys, 4, ok, f"partition of unity max dev {worst_pu:.1e} (< 1e-12), "
            f"C^(m-1) max knot jump {worst_jump:.1e} for (G,m) in {{5,10,15}}x{{2,3}}")


def test_criterion_5_rard_units(capsys):
    checks = {}
    checks["hand (1,2),k=2,c=0 -> (0.2,0.8)"] = np.allclose(rard_density([1.0, 2.0], 2, 0), [0.2, 0.8], atol=1e-15)
    res = np.random.default_rng(0).uniform(0.1, 5.0, 200)
    checks["uniform residuals -> uniform"] = np.allclose(rard_density(np.full(200, 0.7), 2, 0), 1 / 200, rtol=1e-14)
    checks["scale invariance at c=0"] = np.allclose(rard_density(37.0 * res, 2, 0), rard_density(res, 2, 0),
                                                    rtol=1e-12)
    d = builtin("e1").decomposition
    sampler = interior_sampler(d, 2)
    current = sampler(100, 0)
    cfg = RardConfig(2, 0, 0, 1, pool_multiplier=2)
    a, _ = rard_resample(current, lambda p: np.hypot(*p.T), cfg, 5, sampler, subdomain=2)
    b, _ = rard_resample(current, lambda p: np.hypot(*p.T), cfg, 5, sampler, subdomain=2)
    checks["determinism under seed"] = np.array_equal(a, b)
    failed = [k for k, v in checks.items() if not v]
    verdict(capsys, 5, not failed, f"{len(checks) - len(failed)}/{len(checks)} RAR-D checks pass"
            + (f", failed: {failed}" if failed else ""))


# -- 6-8: full preset runs -----------------------------------------------------

@pytest.mark.slow
def test_criterion_6_e1_kans_a_envelope(capsys):
    best = best_of_seeds("e1-kan-rard", tuple(REFERENCE_KANS_A))
    got = _cols(best, tuple(REFERENCE_KANS_A))
    ref = np.array(list(REFERENCE_KANS_A.values()))
    ratio = got / ref
    ok = bool(np.all((ratio <= 10) & (ratio >= 0.1)))
    verdict(capsys, 6, ok, f"E1 KANs-A best-of-3 (seed {_seed_of('e1-kan-rard', best)}) "
            f"[{_fmt(got)}] vs reference [{_fmt(ref)}], ratios [{', '.join(f'{r:.2f}' for r in ratio)}] (within 10x)")


def _seed_of(name, rep):
    return next(s for s in SEEDS if _RUNS.get((name, s)) is rep)


def _ordering(pid):
    best = {label: best_of_seeds(f"{pid}-{suffix}") for label, suffix in COMPARE_ROWS}
    cols = {label: _cols(rep) for label, rep in best.items()}
    kan_vs_pinn = int(np.sum(cols["KANs"] < cols["PINNs"]))
    pinn_a = int(np.sum(cols["PINNs-A"] < cols["PINNs"]))
    kan_a = int(np.sum(cols["KANs-A"] < cols["KANs"]))
    return cols, kan_vs_pinn, pinn_a, kan_a


@pytest.mark.slow
def test_criterion_7_qualitative_orderings(capsys):
    lines, ok = [], True
    for pid in ("e1", "e4"):
        cols, kp, pa, ka = _ordering(pid)
        ok &= kp >= 4 and pa >= 3 and ka >= 3
        lines.append(f"{pid}: KANs<PINNs {kp}/5 (need 4), PINNs-A<PINNs {pa}/5, KANs-A<KANs {ka}/5 (need 3)")
        with capsys.disabled():
            for label, v in cols.items():
                print(f"    {pid} {label:8s} {_fmt(v)}")
    verdict(capsys, 7, ok, "; ".join(lines))


def steps_to_reach(history, target):
    for h in history:
        if h["total"] <= target:
            return h["step"]
    return math.inf


@pytest.mark.slow
def test_criterion_8_kan_convergence(capsys):
    fractions = []
    for s in SEEDS:
        pinn, kan = preset_run("e1-pinn", s), preset_run("e1-kan", s)
        target = pinn.history[-1]["total"]
        fractions.append(steps_to_reach(kan.history, target) / pinn.history[-1]["step"])
    med = float(np.median(fractions))
    verdict(capsys, 8, med <= 0.5, f"KAN steps to reach the PINN final loss / PINN steps, per seed "
            f"[{', '.join(f'{f:.2f}' for f in fractions)}], median {med:.2f} (<= 0.50)")


# -- 9-10 ------------------------------------------------------------------------

def test_criterion_9_parameter_count(capsys):
    kan = parameter_count(Kan((2, 3, 3, 3, 1), G=10, m=3))
    mlp = parameter_count(Mlp((2, 20, 20, 20, 1)))
    verdict(capsys, 9, kan == 405 and mlp == 921 and kan < mlp, f"KAN {kan} < MLP {mlp} (expected 405 < 921)")


@pytest.mark.slow
def test_criterion_10_determinism(capsys):
    first = preset_run("e1-kan-rard", 0)
    again = run_experiment(preset("e1-kan-rard").updated(seed=0, collocation_seed=0))
    same_hist = first.history == again.history
    same_err = first.errors.to_json() == again.errors.to_json()
    same_ev = first.events == again.events
    verdict(capsys, 10, same_hist and same_err and same_ev,
            f"e1-kan-rard seed 0 twice: history identical={same_hist} ({len(first.history)} rows), "
            f"errors identical={same_err}, resample events identical={same_ev} ({len(first.events)})")


# -- empirical checks named alongside the criteria ------------------------------------

@pytest.mark.slow
def test_loss_windows_mostly_non_increasing():
    # the loss at the end of each 500-step window is not above its start
    fracs = []
    for s in SEEDS:
        total = np.array([h["total"] for h in preset_run("e1-kan", s).history])
        starts = total[4::5][:-1]
        ends = total[9::5]
        fracs.append(float(np.mean(ends <= starts)))
    assert np.mean(fracs) >= 0.9, fracs


@pytest.mark.slow
def test_error_estimator_stable_and_grid_consistent(tmp_path):
    best = best_of_seeds("e1-kan-rard", tuple(REFERENCE_KANS_A))
    prob = builtin("e1")
    a = evaluate_errors(best.dual, prob, n_test=10000, seed=1)
    b = evaluate_errors(best.dual, prob, n_test=20000, seed=2)
    for c in REFERENCE_KANS_A:
        assert abs(getattr(a, c) - getattr(b, c)) < 0.2 * getattr(a, c), c
    grid_max = export_field_grid(best.dual, prob, 200, tmp_path / "grid.csv")
    assert 0.5 * best.errors.max_abs <= grid_max <= 2.0 * best.errors.max_abs
