"""Dual-network physics-informed solvers (MLP and KAN backbones) for 2D
elliptic interface problems, with RAR-D residual-driven resampling."""

import jax

# Gradient checks and manufactured-solution oracles need float64; training
# may still run in float32 by casting parameters and data explicitly.
jax.config.update("jax_enable_x64", True)

__version__ = "0.1.0"
