"""Error metrics, region-wise error reports, field grids and result tables."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import jax
import jax.numpy as jnp
import numpy as np

from .geometry import Membership
from .sampling import interior_sampler, sample_curve, sample_curves

ERROR_COLUMNS = ("e_omega1", "e_omega2", "e_gamma", "e_boundary1", "e_boundary2", "max_abs")


def relative_l2(u_exact, u_hat, return_flag: bool = False):
    """sqrt(sum |u - u_hat|^2 / sum |u|^2); NaN (flagged) when sum |u|^2 = 0."""
    u = np.asarray(u_exact, dtype=float)
    v = np.asarray(u_hat, dtype=float)
    if u.shape != v.shape or u.size == 0:
        raise ValueError("relative_l2 needs two non-empty arrays of equal shape")
    den = float(np.sum(u * u))
    if den == 0.0:
        return (math.nan, True) if return_flag else math.nan
    val = math.sqrt(float(np.sum((u - v) ** 2)) / den)
    return (val, False) if return_flag else val


def field_values(field_, points) -> np.ndarray:
    """Plain forward values of a network field (or oracle) at (n, 2) points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    params = getattr(field_, "params", None)
    dtype = jax.tree_util.tree_leaves(params)[0].dtype if params is not None else jnp.float64
    return np.asarray(field_.jet(jnp.asarray(pts.T, dtype=dtype), order=0).value, dtype=float)


def _fields(dual):
    if hasattr(dual, "field"):
        return dual.field(1), dual.field(2)
    return tuple(dual)


@dataclass
class ErrorReport:
    e_omega1: float
    e_omega2: float
    e_gamma: float
    e_boundary1: float
    e_boundary2: float
    max_abs: float
    n_test: int
    seed: int
    e_gamma_side1: float = math.nan
    e_gamma_side2: float = math.nan
    flags: list = field(default_factory=list)

    def row(self) -> list[float]:
        return [getattr(self, c) for c in ERROR_COLUMNS]

    def to_json(self) -> str:
        return json.dumps({k: (None if isinstance(v, float) and math.isnan(v) else v)
                           for k, v in asdict(self).items()}, indent=2)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "ErrorReport":
        d = json.loads(text)
        return cls(**{k: (math.nan if v is None else v) for k, v in d.items()})


def evaluate_errors(dual, problem, n_test: int = 10000, seed: int = 0, n_curve: int = 2000) -> ErrorReport:
    """Relative l2 errors on fresh seeded test sets for every region.

    Interior sets have ``n_test`` points per subdomain and curves ``n_curve``
    points.  e_gamma is the worse of the two one-sided interface errors.
    max_abs is taken over every evaluated point.
    """
    f1, f2 = _fields(dual)
    decomp = problem.decomposition
    ss = np.random.SeedSequence([seed, 7919]).spawn(5)
    flags = []
    worst = 0.0

    def err(name, side, field_, pts):
        nonlocal worst
        exact = problem.u(side, pts)
        approx = field_values(field_, pts)
        worst = max(worst, float(np.max(np.abs(exact - approx))))
        val, flagged = relative_l2(exact, approx, return_flag=True)
        if flagged:
            flags.append(f"{name}: zero denominator")
        return val

    p1 = interior_sampler(decomp, 1)(n_test, np.random.default_rng(ss[0]))
    p2 = interior_sampler(decomp, 2)(n_test, np.random.default_rng(ss[1]))
    e1 = err("e_omega1", 1, f1, p1)
    e2 = err("e_omega2", 2, f2, p2)
    pg, _ = sample_curve(decomp.gamma, n_curve, np.random.default_rng(ss[2]), "uniform")
    eg1 = err("e_gamma_side1", 1, f1, pg)
    eg2 = err("e_gamma_side2", 2, f2, pg)
    eb = []
    for side, fld, s in ((1, f1, ss[3]), (2, f2, ss[4])):
        curves = decomp.boundaries(side)
        if curves:
            pb, _ = sample_curves(curves, n_curve, np.random.default_rng(s), "uniform")
            eb.append(err(f"e_boundary{side}", side, fld, pb))
        else:
            eb.append(math.nan)
    e_gamma = max(eg1, eg2) if not (math.isnan(eg1) or math.isnan(eg2)) else math.nan
    return ErrorReport(e1, e2, e_gamma, eb[0], eb[1], worst, n_test, seed, eg1, eg2, flags)


def export_field_grid(dual, problem, resolution: int, path) -> np.ndarray:
    """CSV of x, y, u_hat, u_exact, |error|, side over a uniform grid of the bounding box.

    Grid points outside the domain get side=none and empty values; points on
    the interface are reported with side 1.  Returns the max |error| over
    points inside the domain.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    f1, f2 = _fields(dual)
    xmin, xmax, ymin, ymax = problem.bbox()
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    codes = problem.decomposition.classify(pts)
    side = np.where(codes == Membership.INSIDE2, 2, np.where(codes == Membership.OUTSIDE, 0, 1))
    u_hat = np.full(len(pts), np.nan)
    u_ex = np.full(len(pts), np.nan)
    for s, fld in ((1, f1), (2, f2)):
        mask = side == s
        if np.any(mask):
            u_hat[mask] = field_values(fld, pts[mask])
            u_ex[mask] = problem.u(s, pts[mask])
    err = np.abs(u_hat - u_ex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u_hat", "u_exact", "abs_error", "side"])
        for (x, y), uh, ue, e, s in zip(pts, u_hat, u_ex, err, side):
            if s == 0:
                w.writerow([repr(float(x)), repr(float(y)), "", "", "", "none"])
            else:
                w.writerow([repr(float(x)), repr(float(y)), repr(float(uh)), repr(float(ue)), repr(float(e)), int(s)])
    inside = side > 0
    return float(err[inside].max()) if np.any(inside) else math.nan


def _fmt(v) -> str:
    return "-" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.3e}"


def write_table(rows: list[tuple[str, list]], columns, csv_path=None, txt_path=None, label: str = "config") -> str:
    """Write rows of (label, values) as CSV and as aligned text; returns the text."""
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([label, *columns])
            for name, vals in rows:
                w.writerow([name, *["" if isinstance(v, float) and math.isnan(v) else repr(float(v)) for v in vals]])
    width = max([len(label)] + [len(r[0]) for r in rows]) + 2
    lines = [label.ljust(width) + "".join(c.rjust(13) for c in columns)]
    for name, vals in rows:
        lines.append(name.ljust(width) + "".join(_fmt(v).rjust(13) for v in vals))
    text = "\n".join(lines) + "\n"
    if txt_path is not None:
        with open(txt_path, "w") as fh:
            fh.write(text)
    return text
