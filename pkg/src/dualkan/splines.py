"""Uniform B-splines of degree m.

Two evaluation paths are kept on purpose:

* :func:`spline_basis` is the textbook Cox-de Boor recursion in numpy,
  with the derivative recursion on top.  It is slow and only used as a
  reference.
* :func:`cell_polynomials` turns coefficient vectors into per-cell cubic
  (degree m) polynomials in the local coordinate ``u in [0, 1)``.  On a
  uniform grid every basis function is a shifted copy of the cardinal
  B-spline, so one small matrix of cardinal pieces is enough.  Network
  layers evaluate splines this way with Horner's rule.

Knot convention: G intervals on [lo, hi], spacing h = (hi - lo)/G, padded by
m knots on each side, i.e. ``t_j = lo + (j - m) h`` for j = 0..G+2m.  This
gives G+m basis functions B_0..B_{G+m-1}; B_i is supported on
[t_i, t_{i+m+1}).
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as npoly


def uniform_knots(lo: float, hi: float, G: int, m: int) -> np.ndarray:
    if G < 1:
        raise ValueError("grid needs at least one interval (G >= 1)")
    if m < 1:
        raise ValueError("spline degree m must be >= 1")
    if not hi > lo:
        raise ValueError("grid range needs hi > lo")
    h = (hi - lo) / G
    return lo + (np.arange(G + 2 * m + 1) - m) * h


def spline_basis(knots, m: int, x, derivative: int = 0) -> np.ndarray:
    """Cox-de Boor values (or derivatives) of all degree-m basis functions.

    Returns an array of shape ``x.shape + (len(knots) - m - 1,)``.  Points
    outside the knot span get an all-zero row.  Degree-0 pieces are
    half-open, [t_j, t_{j+1}).
    """
    t = np.asarray(knots, dtype=float)
    x = np.asarray(x, dtype=float)
    if m < 1:
        raise ValueError("spline degree m must be >= 1")
    if np.any(np.diff(t) < 0):
        raise ValueError("knots must be non-decreasing")
    if derivative > m:
        return np.zeros(x.shape + (len(t) - m - 1,))
    xe = x[..., None]
    B = ((xe >= t[:-1]) & (xe < t[1:])).astype(float)
    for k in range(1, m + 1):
        left_den = t[k:-1] - t[:-k - 1]
        right_den = t[k + 1:] - t[1:-k]
        if k > m - derivative:
            # derivative recursion: B'_{i,k} = k/(t_{i+k}-t_i) B_{i,k-1} - k/(t_{i+k+1}-t_{i+1}) B_{i+1,k-1}
            left = np.divide(k, left_den, out=np.zeros_like(left_den), where=left_den > 0)
            right = np.divide(k, right_den, out=np.zeros_like(right_den), where=right_den > 0)
            B = left * B[..., :-1] - right * B[..., 1:]
        else:
            left = np.divide(xe - t[:-k - 1], left_den, out=np.zeros(xe.shape[:-1] + left_den.shape), where=left_den > 0)
            right = np.divide(t[k + 1:] - xe, right_den, out=np.zeros(xe.shape[:-1] + right_den.shape), where=right_den > 0)
            B = left * B[..., :-1] + right * B[..., 1:]
    return B


def cardinal_pieces(m: int) -> np.ndarray:
    """Polynomial pieces of the cardinal B-spline of degree m.

    ``Q[r, p]`` is the coefficient of ``u**p`` of the piece on the unit
    interval [r, r+1) of the support [0, m+1), in the local coordinate u.
    Built from the Cox-de Boor recursion on integer knots.
    """
    pieces = [np.array([1.0])]
    for k in range(1, m + 1):
        new = []
        for r in range(k + 1):
            # N_k(s) = s/k N_{k-1}(s) + (k+1-s)/k N_{k-1}(s-1), with s = r + u
            a = npoly.polymul([r / k, 1.0 / k], pieces[r]) if r < k else np.zeros(1)
            b = npoly.polymul([(k + 1 - r) / k, -1.0 / k], pieces[r - 1]) if r >= 1 else np.zeros(1)
            new.append(npoly.polyadd(a, b))
        pieces = new
    Q = np.zeros((m + 1, m + 1))
    for r, p in enumerate(pieces):
        Q[r, :len(p)] = p
    return Q


def cell_polynomials(w, m: int, xp=np):
    """Per-cell polynomial coefficients of splines with coefficients ``w``.

    ``w`` has shape (..., G+m).  Returns P of shape (m+1, ..., G+2m+1) where
    ``P[p, ..., cell]`` multiplies ``u**p`` on knot cell ``cell``; the
    trailing extra cell is all zero and absorbs out-of-range points.
    ``xp`` selects the array module (numpy or jax.numpy).
    """
    Q = cardinal_pieces(m)
    nb = w.shape[-1]
    n_cells = nb + m
    pad = [(0, 0)] * (w.ndim - 1)
    wp = xp.pad(w, pad + [(m, m + 1)])
    # the spline on cell c is sum_r w[c - r] * piece_r(u)
    P = [sum(float(Q[r, p]) * wp[..., m - r:m - r + n_cells + 1] for r in range(m + 1) if Q[r, p] != 0)
         for p in range(m + 1)]
    return xp.stack([p if not isinstance(p, int) else xp.zeros(w.shape[:-1] + (n_cells + 1,), dtype=w.dtype) for p in P])


def horner(coeffs, u, order: int = 2):
    """Value and u-derivatives (up to ``order``, others None) of sum_p coeffs[p] u**p."""
    deg = len(coeffs) - 1
    v = coeffs[deg]
    d1 = 0.0 * u if order >= 1 else None
    d2 = 0.0 * u if order >= 2 else None
    for p in range(deg - 1, -1, -1):
        if order >= 2:
            d2 = d2 * u + 2.0 * d1
        if order >= 1:
            d1 = d1 * u + v
        v = v * u + coeffs[p]
    return v, d1, d2
