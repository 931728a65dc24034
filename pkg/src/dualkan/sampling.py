"""Collocation points: Latin hypercube, region rejection, curve sampling, RAR-D."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .geometry import ClosedCurve


class SamplingError(RuntimeError):
    """Region too small to be hit by rejection sampling."""


MAX_CANDIDATES = 1_000_000
MIN_ACCEPTANCE = 1e-4


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def latin_hypercube(n: int, box=(0.0, 1.0, 0.0, 1.0), seed=0) -> np.ndarray:
    """n points in the box with exactly one point per axis stratum."""
    if n < 1:
        raise ValueError("latin_hypercube needs n >= 1")
    xmin, xmax, ymin, ymax = box
    unit = qmc.LatinHypercube(d=2, seed=_rng(seed)).random(n)
    return qmc.scale(unit, [xmin, ymin], [xmax, ymax])


def sample_region(predicate: Callable, n: int, box, seed=0) -> np.ndarray:
    """Exactly n points satisfying ``predicate``, from LHS batches over the box.

    Raises SamplingError if the acceptance rate is below 1e-4 once 1e6
    candidates have been drawn.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.zeros((0, 2))
    rng = _rng(seed)
    kept, n_kept, n_drawn = [], 0, 0
    rate = 1.0
    while n_kept < n:
        batch = int(min(max(1.2 * (n - n_kept) / max(rate, 1e-4), 256), 200_000))
        cand = latin_hypercube(batch, box, rng)
        ok = np.asarray(predicate(cand), dtype=bool)
        kept.append(cand[ok])
        n_kept += int(ok.sum())
        n_drawn += batch
        rate = max(n_kept / n_drawn, 1e-6)
        if n_drawn >= MAX_CANDIDATES and n_kept / n_drawn < MIN_ACCEPTANCE:
            raise SamplingError(f"acceptance rate {n_kept / n_drawn:.1e} after {n_drawn} candidates")
    return np.concatenate(kept)[:n]


def sample_curve(curve: ClosedCurve, n: int, seed=0, method: str = "lhs") -> tuple[np.ndarray, np.ndarray]:
    """n points uniformly distributed by arc length on a closed curve, with unit normals.

    ``lhs``: one point per arc-length stratum, independent jitter.
    ``systematic``: one random offset shared by all strata (equal gaps).
    ``uniform``: i.i.d. arc-length positions.
    """
    if n < 1:
        raise ValueError("sample_curve needs n >= 1")
    rng = _rng(seed)
    if method == "lhs":
        frac = (rng.permutation(n) + rng.uniform(size=n)) / n
    elif method == "systematic":
        frac = (np.arange(n) + rng.uniform()) / n
    elif method == "uniform":
        frac = rng.uniform(size=n)
    else:
        raise ValueError(f"unknown curve sampling method {method!r}")
    t = curve.parameter_at_fraction(frac)
    return curve.point(t), curve.normal_at(t)


def sample_curves(curves, n: int, seed=0, method: str = "lhs"):
    """Split n over several curves in proportion to their lengths."""
    if n == 0 or not curves:
        return np.zeros((0, 2)), np.zeros((0, 2))
    rng = _rng(seed)
    lengths = np.array([c.length for c in curves])
    share = n * lengths / lengths.sum()
    counts = np.floor(share).astype(int)
    counts[np.argsort(counts - share)[: n - counts.sum()]] += 1
    pts, nrm = [], []
    for c, k in zip(curves, counts):
        if k > 0:
            p, q = sample_curve(c, int(k), rng, method)
            pts.append(p)
            nrm.append(q)
    return np.concatenate(pts), np.concatenate(nrm)


@dataclass(frozen=True)
class SamplingPlan:
    n1: int
    n2: int
    n_gamma: int
    n_boundary1: int
    n_boundary2: int

    def __post_init__(self):
        for name in ("n1", "n2", "n_gamma", "n_boundary1", "n_boundary2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class CollocationSet:
    interior1: np.ndarray
    interior2: np.ndarray
    interface: np.ndarray
    interface_normals: np.ndarray
    boundary1: np.ndarray
    boundary2: np.ndarray
    seed: int = 0

    @property
    def counts(self) -> dict:
        return {"n1": len(self.interior1), "n2": len(self.interior2), "n_gamma": len(self.interface),
                "n_boundary1": len(self.boundary1), "n_boundary2": len(self.boundary2)}

    def copy(self) -> "CollocationSet":
        return CollocationSet(*(np.array(a) for a in (self.interior1, self.interior2, self.interface,
                                                        self.interface_normals, self.boundary1, self.boundary2)),
                              seed=self.seed)

    def replace_interior(self, side: int, points) -> "CollocationSet":
        new = self.copy()
        if side == 1:
            new.interior1 = np.asarray(points)
        else:
            new.interior2 = np.asarray(points)
        return new


def interior_sampler(decomposition, side: int):
    """Returns sampler(n, seed) for the strict interior of Omega_side."""
    box = decomposition.side_bbox(side)
    predicate = decomposition.side_mask(side)

    def sampler(n, seed):
        return sample_region(predicate, n, box, seed)

    return sampler


def build_collocation(decomposition, plan: SamplingPlan, seed: int = 0, curve_method: str = "lhs") -> CollocationSet:
    """All five point sets, each from its own child stream of ``seed``."""
    s1, s2, sg, sb1, sb2 = np.random.SeedSequence(seed).spawn(5)
    interior1 = interior_sampler(decomposition, 1)(plan.n1, np.random.default_rng(s1))
    interior2 = interior_sampler(decomposition, 2)(plan.n2, np.random.default_rng(s2))
    if plan.n_gamma:
        gamma, normals = sample_curve(decomposition.gamma, plan.n_gamma, np.random.default_rng(sg), curve_method)
    else:
        gamma, normals = np.zeros((0, 2)), np.zeros((0, 2))
    b1, _ = sample_curves(decomposition.boundaries(1), plan.n_boundary1, np.random.default_rng(sb1), curve_method)
    b2, _ = sample_curves(decomposition.boundaries(2), plan.n_boundary2, np.random.default_rng(sb2), curve_method)
    if plan.n_boundary1 and len(b1) == 0:
        raise ValueError("Omega_1 has no boundary other than the interface; set n_boundary1 = 0")
    return CollocationSet(interior1, interior2, gamma, normals, b1, b2, seed)


# -- RAR-D ---------------------------------------------------------------------

@dataclass(frozen=True)
class RardConfig:
    k: float = 2.0
    c: float = 0.0
    warmup_steps: int = 20000
    resample_period: int = 2000
    pool_multiplier: int = 1

    def __post_init__(self):
        if self.k < 0 or self.c < 0:
            raise ValueError("RAR-D needs k >= 0 and c >= 0")
        if self.resample_period < 1:
            raise ValueError("resample_period must be >= 1")
        if self.warmup_steps < 0 or self.pool_multiplier < 0:
            raise ValueError("warmup_steps and pool_multiplier must be non-negative")

    def event_steps(self, total_steps: int) -> list[int]:
        """Steps (number of completed updates) after which the sets are resampled."""
        out = []
        s = self.warmup_steps + self.resample_period
        while s < total_steps:
            out.append(s)
            s += self.resample_period
        return out


def rard_density(residuals, k: float, c: float, return_flag: bool = False):
    """p ~ w^k / mean(w^k) + c, normalised to sum to one.

    The mean is the Monte-Carlo estimate over the supplied points.  When
    every w^k is zero and c = 0 the density is undefined; the uniform
    density is returned and the flag is set.
    """
    w = np.asarray(residuals, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("residuals must be finite and non-negative")
    wk = np.power(w, k)
    mean = wk.mean()
    fallback = False
    if mean > 0:
        p = wk / mean + c
    elif c > 0:
        p = np.full_like(w, c)
    else:
        p = np.ones_like(w)
        fallback = True
    p = p / p.sum()
    return (p, fallback) if return_flag else p


def _draw_without_replacement(rng, p, n):
    nonzero = np.count_nonzero(p)
    if nonzero >= n:
        return rng.choice(len(p), size=n, replace=False, p=p)
    # too few points carry mass: take them all, top up uniformly from the rest
    first = np.flatnonzero(p > 0)
    rest = rng.choice(np.flatnonzero(p == 0), size=n - nonzero, replace=False)
    return np.concatenate([first, rest])


def rard_resample(current, residual_fn: Callable, cfg: RardConfig, seed=0,
                  fresh_sampler: Callable | None = None, subdomain: int | None = None):
    """One RAR-D update of an interior set; returns (new_points, event).

    The candidate pool is the current set plus ``pool_multiplier * len(current)``
    fresh points from ``fresh_sampler(n, rng)``.  |current| points are drawn
    from the pool without replacement according to the RAR-D density.
    """
    rng = _rng(seed)
    current = np.asarray(current, dtype=float)
    n = len(current)
    if n == 0:
        return current.copy(), {"subdomain": subdomain, "pool_size": 0}
    n_fresh = cfg.pool_multiplier * n
    if n_fresh:
        if fresh_sampler is None:
            raise ValueError("pool_multiplier > 0 needs a fresh_sampler")
        pool = np.concatenate([current, fresh_sampler(n_fresh, rng)])
    else:
        pool = current
    res = np.abs(np.asarray(residual_fn(pool), dtype=float))
    p, fallback = rard_density(res, cfg.k, cfg.c, return_flag=True)
    idx = _draw_without_replacement(rng, p, n)
    event = {
        "subdomain": subdomain,
        "pool_size": int(len(pool)),
        "residual_max_before": float(res[:n].max()),
        "residual_mean_before": float(res[:n].mean()),
        "residual_max_after": float(res[idx].max()),
        "residual_mean_after": float(res[idx].mean()),
        "kept_from_current": int(np.sum(idx < n)),
        "uniform_fallback": bool(fallback),
    }
    return pool[idx], event
