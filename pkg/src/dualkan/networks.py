"""MLP and KAN backbones, and the dual network that pairs one per subdomain.

Networks are frozen, hashable descriptions of an architecture; parameters
live separately in pytrees (a list with one dict per layer) so the whole
training step can be jitted with the architecture as a static argument.

Flat parameter order (used by checkpoints and gradient checks), C-order
within each array, layer by layer:

* MLP layer:  W (n_out, n_in), then b (n_out,)
* KAN layer:  c (n_out, n_in, G+m), then c_r (n_out, n_in), then c_B (n_out, n_in)
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

import jax
import jax.numpy as jnp
import numpy as np

from . import splines
from .autodiff import LAPLACIAN, Jet, affine, elementwise, seed_jet, squeeze
from .geometry import Membership, as_points

Params = list


def _sigmoid(x):
    return jax.nn.sigmoid(x)


def silu_derivatives(x, xp=jnp):
    """SiLU x*sigma(x) with its first and second derivatives."""
    s = 1.0 / (1.0 + xp.exp(-x)) if xp is np else _sigmoid(x)
    f = x * s
    f1 = s * (1.0 + x * (1.0 - s))
    f2 = s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s))
    return f, f1, f2


def cast_params(params: Params, dtype) -> Params:
    return jax.tree_util.tree_map(lambda a: jnp.asarray(a, dtype=dtype), params)


# -- MLP ---------------------------------------------------------------------

@dataclass(frozen=True)
class Mlp:
    widths: tuple[int, ...]
    activation: str = "tanh"
    kind = "mlp"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2 or min(self.widths) < 1:
            raise ValueError(f"bad MLP widths {self.widths}")
        if self.activation not in ("tanh", "sin"):
            raise ValueError(f"unknown activation {self.activation!r}")

    def layer_shapes(self):
        for a, b in zip(self.widths[:-1], self.widths[1:]):
            yield {"W": (b, a), "b": (b,)}

    def parameter_count(self) -> int:
        return sum(a * b + b for a, b in zip(self.widths[:-1], self.widths[1:]))

    def init_params(self, seed: int | np.random.Generator = 0) -> Params:
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        params = []
        for a, b in zip(self.widths[:-1], self.widths[1:]):
            lim = np.sqrt(6.0 / (a + b))
            params.append({"W": jnp.asarray(rng.uniform(-lim, lim, (b, a))), "b": jnp.zeros(b)})
        return params

    def _act(self, v):
        if self.activation == "tanh":
            t = jnp.tanh(v)
            d = 1.0 - t * t
            return t, d, -2.0 * t * d
        s, c = jnp.sin(v), jnp.cos(v)
        return s, c, -s

    def jet(self, params: Params, x, order: int = 0, second: str = LAPLACIAN) -> Jet:
        """Jet of the scalar output at points x of shape (2, n)."""
        jet = seed_jet(x, order, second)
        for k, layer in enumerate(params):
            if k > 0:
                jet = elementwise(jet, *self._act(jet.value))
            jet = affine(jet, layer["W"], layer["b"])
        return squeeze(jet)

    def forward(self, params: Params, points) -> np.ndarray:
        pts, single = as_points(points)
        dtype = params[0]["W"].dtype
        out = np.asarray(self.jet(params, jnp.asarray(pts.T, dtype=dtype)).value)
        return out[0] if single else out

    def flat_shapes(self):
        for shp in self.layer_shapes():
            yield [("W", shp["W"]), ("b", shp["b"])]

    def to_dict(self) -> dict:
        return {"kind": "mlp", "widths": list(self.widths), "activation": self.activation}


# -- KAN ---------------------------------------------------------------------

@dataclass(frozen=True)
class KanEdgeFunction:
    """One learnable univariate edge phi(x) = c_r SiLU(x) + c_B sum_i c_i B_i(x).

    Evaluated through the Cox-de Boor recursion; serves as the plain
    reference for the vectorised layer code.
    """

    c_r: float
    c_B: float
    c: np.ndarray
    knots: np.ndarray
    m: int

    def __post_init__(self):
        G = len(self.knots) - 1 - 2 * self.m
        if len(self.c) != G + self.m:
            raise ValueError(f"edge needs G+m = {G + self.m} coefficients, got {len(self.c)}")
        if np.any(np.diff(self.knots) < 0):
            raise ValueError("knots must be non-decreasing")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = x / (1.0 + np.exp(-x))
        return self.c_r * r + self.c_B * (splines.spline_basis(self.knots, self.m, x) @ self.c)

    def derivative(self, x, order: int = 1):
        x = np.asarray(x, dtype=float)
        _, r1, r2 = silu_derivatives(x, xp=np)
        r = r1 if order == 1 else r2
        return self.c_r * r + self.c_B * (splines.spline_basis(self.knots, self.m, x, derivative=order) @ self.c)


@dataclass(frozen=True)
class Kan:
    """KAN with widths [n_0, ..., n_L]; layer k holds n_k * n_{k+1} edges.

    ``input_ranges`` gives the grid interval of each network input (first
    layer); hidden layers all use ``hidden_range``.
    """

    widths: tuple[int, ...]
    G: int = 10
    m: int = 3
    input_ranges: tuple[tuple[float, float], ...] = ((-1.0, 1.0), (-1.0, 1.0))
    hidden_range: tuple[float, float] = (-1.0, 1.0)
    init_scale: float = 0.1
    residual_init: str = "uniform"
    kind = "kan"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "input_ranges", tuple((float(a), float(b)) for a, b in self.input_ranges))
        object.__setattr__(self, "hidden_range", (float(self.hidden_range[0]), float(self.hidden_range[1])))
        if len(self.widths) < 2 or min(self.widths) < 1:
            raise ValueError(f"bad KAN widths {self.widths}")
        if self.G < 1:
            raise ValueError("KAN grid needs G >= 1")
        if self.m < 1:
            raise ValueError("KAN spline degree needs m >= 1")
        if self.residual_init not in ("uniform", "unit"):
            raise ValueError("residual_init must be 'uniform' or 'unit'")
        if len(self.input_ranges) != self.widths[0]:
            raise ValueError("one grid range per network input is required")
        for lo, hi in self.input_ranges + (self.hidden_range,):
            if not hi > lo:
                raise ValueError("grid range needs hi > lo")

    @property
    def n_basis(self) -> int:
        return self.G + self.m

    def layer_ranges(self, k: int) -> tuple[tuple[float, float], ...]:
        if k == 0:
            return self.input_ranges
        return (self.hidden_range,) * self.widths[k]

    def layer_shapes(self):
        for a, b in zip(self.widths[:-1], self.widths[1:]):
            yield {"c": (b, a, self.n_basis), "c_r": (b, a), "c_B": (b, a)}

    def parameter_count(self) -> int:
        return sum(a * b * (self.G + self.m + 2) for a, b in zip(self.widths[:-1], self.widths[1:]))

    def init_params(self, seed: int | np.random.Generator = 0) -> Params:
        """c_B = 1, spline coefficients ~ Normal(0, init_scale / sqrt(n_in)).

        c_r ~ Uniform(-1, 1) / sqrt(n_in) by default.  With ``residual_init =
        "unit"`` every c_r is 1; then all nodes of a layer start as the same
        sum of SiLUs, and the hidden values grow with the width until they
        leave the hidden grid, where the splines vanish.
        """
        rng = np.random.default_rng(seed)
        params = []
        for a, b in zip(self.widths[:-1], self.widths[1:]):
            c = rng.normal(0.0, self.init_scale / np.sqrt(a), (b, a, self.n_basis))
            if self.residual_init == "unit":
                c_r = np.ones((b, a))
            else:
                c_r = rng.uniform(-1.0, 1.0, (b, a)) / np.sqrt(a)
            params.append({"c": jnp.asarray(c), "c_r": jnp.asarray(c_r), "c_B": jnp.ones((b, a))})
        return params

    def _layer(self, layer: dict, jet: Jet, k: int) -> Jet:
        x = jet.value                                       # (i, n)
        dtype = x.dtype
        rng = np.asarray(self.layer_ranges(k))
        lo = jnp.asarray(rng[:, :1], dtype=dtype)
        h = jnp.asarray((rng[:, 1:] - rng[:, :1]) / self.G, dtype=dtype)
        n_cells = self.G + 2 * self.m

        s = (x - lo) / h + self.m
        cell = jnp.floor(s)
        inside = (cell >= 0) & (cell < n_cells)
        cidx = jnp.where(inside, cell, n_cells).astype(jnp.int32)
        u = s - cell

        P = splines.cell_polynomials(layer["c_B"][..., None] * layer["c"], self.m, xp=jnp)   # (m+1, o, i, cells+1)
        # one-hot contraction picks each point's cell; faster than a gather on CPU
        onehot = (cidx[..., None] == jnp.arange(n_cells + 1, dtype=jnp.int32)).astype(dtype)   # (i, n, cells+1)
        coeffs = jnp.einsum("poic,inc->poin", P, onehot)
        sp, sp1, sp2 = splines.horner(list(coeffs), u, jet.order)

        r, r1, r2 = silu_derivatives(x)
        cr = layer["c_r"][..., None]
        phi = cr * r + sp
        phi1 = None if sp1 is None else cr * r1 + sp1 / h
        phi2 = None if sp2 is None else cr * r2 + sp2 / (h * h)

        # each edge sees its own input; broadcast the jet over outputs then sum inputs
        wide = Jet(x[None],
                   None if jet.grad is None else jet.grad[:, None],
                   None if jet.second is None else jet.second[:, None])
        out = elementwise(wide, phi, phi1, phi2)
        return Jet(out.value.sum(-2),
                   None if out.grad is None else out.grad.sum(-2),
                   None if out.second is None else out.second.sum(-2))

    def jet(self, params: Params, x, order: int = 0, second: str = LAPLACIAN) -> Jet:
        """Jet of the scalar output at points x of shape (2, n)."""
        jet = seed_jet(x, order, second)
        for k, layer in enumerate(params):
            jet = self._layer(layer, jet, k)
        return squeeze(jet)

    def forward(self, params: Params, points) -> np.ndarray:
        pts, single = as_points(points)
        dtype = params[0]["c"].dtype
        out = np.asarray(self.jet(params, jnp.asarray(pts.T, dtype=dtype)).value)
        return out[0] if single else out

    def knots(self, k: int, i: int) -> np.ndarray:
        lo, hi = self.layer_ranges(k)[i]
        return splines.uniform_knots(lo, hi, self.G, self.m)

    def edge_function(self, params: Params, k: int, o: int, i: int) -> KanEdgeFunction:
        layer = params[k]
        return KanEdgeFunction(float(layer["c_r"][o, i]), float(layer["c_B"][o, i]),
                               np.asarray(layer["c"][o, i], dtype=float), self.knots(k, i), self.m)

    def flat_shapes(self):
        for shp in self.layer_shapes():
            yield [("c", shp["c"]), ("c_r", shp["c_r"]), ("c_B", shp["c_B"])]

    def to_dict(self) -> dict:
        return {"kind": "kan", "widths": list(self.widths), "G": self.G, "m": self.m,
                "input_ranges": [list(r) for r in self.input_ranges],
                "hidden_range": list(self.hidden_range), "init_scale": self.init_scale,
                "residual_init": self.residual_init}


def network_from_dict(d: dict) -> Mlp | Kan:
    d = dict(d)
    kind = d.pop("kind")
    if kind == "mlp":
        return Mlp(tuple(d["widths"]), d.get("activation", "tanh"))
    if kind == "kan":
        return Kan(tuple(d["widths"]), int(d["G"]), int(d["m"]),
                   tuple(tuple(r) for r in d["input_ranges"]), tuple(d["hidden_range"]),
                   float(d.get("init_scale", 0.1)), d.get("residual_init", "uniform"))
    raise ValueError(f"unknown network kind {kind!r}")


def parameter_count(net) -> int:
    return net.parameter_count()


def flatten(net, params: Params):
    """Concatenate parameters in the documented order (works under jit)."""
    parts = []
    for layer, shapes in zip(params, net.flat_shapes()):
        parts.extend(jnp.ravel(layer[name]) for name, _ in shapes)
    return jnp.concatenate(parts)


def unflatten(net, theta) -> Params:
    theta = jnp.asarray(theta)
    if theta.ndim != 1 or theta.shape[0] != net.parameter_count():
        raise ValueError(f"expected {net.parameter_count()} parameters, got shape {theta.shape}")
    params, pos = [], 0
    for shapes in net.flat_shapes():
        layer = {}
        for name, shp in shapes:
            size = int(np.prod(shp))
            layer[name] = theta[pos:pos + size].reshape(shp)
            pos += size
        params.append(layer)
    return params


# -- dual network ---------------------------------------------------------

class Side(enum.Enum):
    AUTO = "auto"
    SIDE1 = 1
    SIDE2 = 2


class AmbiguousSideError(ValueError):
    """Automatic routing was requested for a point on the interface."""


@dataclass(frozen=True)
class NetworkField:
    """A network bound to its parameters, exposing ``jet(x, order, second)``."""

    net: Any
    params: Any

    def jet(self, x, order: int = 0, second: str = LAPLACIAN) -> Jet:
        return self.net.jet(self.params, x, order, second)


@dataclass(frozen=True, eq=False)
class DualNetwork:
    """u_1 on Omega_1 and u_2 on Omega_2, same backbone kind."""

    net1: Any
    net2: Any
    params1: Any
    params2: Any
    decomposition: Any = field(default=None, repr=False)

    def __post_init__(self):
        if self.net1.kind != self.net2.kind:
            raise ValueError("both subdomain networks must use the same backbone")

    @classmethod
    def initialise(cls, net1, net2, decomposition=None, seed: int = 0, dtype=jnp.float64) -> "DualNetwork":
        rng = np.random.default_rng(seed)
        p1 = cast_params(net1.init_params(rng), dtype)
        p2 = cast_params(net2.init_params(rng), dtype)
        return cls(net1, net2, p1, p2, decomposition)

    @property
    def params(self):
        return (self.params1, self.params2)

    def with_params(self, params) -> "DualNetwork":
        return DualNetwork(self.net1, self.net2, params[0], params[1], self.decomposition)

    def field(self, side: int) -> NetworkField:
        return NetworkField(self.net1, self.params1) if side == 1 else NetworkField(self.net2, self.params2)

    def parameter_count(self) -> int:
        return self.net1.parameter_count() + self.net2.parameter_count()

    def evaluate(self, points, side: int) -> np.ndarray:
        """Forward pass of one branch, no membership check."""
        pts, _ = as_points(points)
        f = self.field(side)
        leaf = jax.tree_util.tree_leaves(f.params)[0]
        return np.asarray(f.jet(jnp.asarray(pts.T, dtype=leaf.dtype)).value, dtype=float)


def dual_eval(dual: DualNetwork, p, side: Side = Side.AUTO):
    """Evaluate u at p, routed by membership (AUTO) or forced to one branch."""
    pts, single = as_points(p)
    if side is Side.SIDE1 or side is Side.SIDE2:
        out = dual.evaluate(pts, side.value)
        return float(out[0]) if single else out
    if dual.decomposition is None:
        raise ValueError("automatic routing needs a domain decomposition")
    codes = dual.decomposition.classify(pts)
    if np.any(codes == Membership.ON_GAMMA):
        raise AmbiguousSideError("point lies on the interface; choose SIDE1 or SIDE2")
    if np.any(codes == Membership.OUTSIDE):
        raise ValueError("point lies outside the computational domain")
    out = np.where(codes == Membership.INSIDE1, dual.evaluate(pts, 1), dual.evaluate(pts, 2))
    return float(out[0]) if single else out


# -- checkpoints -------------------------------------------------------------

def save_checkpoint(path, dual: DualNetwork, extra: dict | None = None) -> None:
    """JSON checkpoint; floats are written with repr so reloads are bit-exact."""
    leaf = jax.tree_util.tree_leaves(dual.params1)[0]
    doc = {
        "format": "dualkan-checkpoint-1",
        "dtype": str(np.dtype(leaf.dtype)),
        "net1": dual.net1.to_dict(),
        "net2": dual.net2.to_dict(),
        "params1": [float(v) for v in np.asarray(flatten(dual.net1, dual.params1), dtype=np.float64)],
        "params2": [float(v) for v in np.asarray(flatten(dual.net2, dual.params2), dtype=np.float64)],
        "extra": extra or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path, decomposition=None) -> tuple[DualNetwork, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    dtype = np.dtype(doc["dtype"])
    net1, net2 = network_from_dict(doc["net1"]), network_from_dict(doc["net2"])
    p1 = unflatten(net1, jnp.asarray(np.asarray(doc["params1"], dtype=np.float64).astype(dtype)))
    p2 = unflatten(net2, jnp.asarray(np.asarray(doc["params2"], dtype=np.float64).astype(dtype)))
    return DualNetwork(net1, net2, p1, p2, decomposition), doc.get("extra", {})
