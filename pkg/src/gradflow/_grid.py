"""Shared finite-volume helpers for cell-centered fields on uniform 1D grids.

Conventions used throughout the package:

* a grid of ``n`` cells on ``[a, b]`` has spacing ``h = (b - a) / n`` and
  cell centers ``a + (i + 1/2) h``;
* scalar fields (densities, rates, potentials) live at cell centers;
* gradients and fluxes live at the ``n - 1`` interior interfaces;
* boundary interfaces always carry zero flux (no-flux domain).
"""

from __future__ import annotations

import numpy as np


def interface_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Gradient (v[i+1] - v[i]) / h at the n-1 interior interfaces."""
    return np.diff(values) / h


def arithmetic_interface_mean(values: np.ndarray) -> np.ndarray:
    """Arithmetic mean of adjacent cells at interior interfaces."""
    return 0.5 * (values[1:] + values[:-1])


def logarithmic_interface_mean(values: np.ndarray) -> np.ndarray:
    """Logarithmic mean (b - a) / (log b - log a) at interior interfaces.

    Continuously extended with the limits M(a, a) = a and M(0, b) = 0, so it
    is safe on nonnegative fields.  This mean satisfies
    ``M(a, b) * (log b - log a) = b - a`` exactly, which is what makes the
    entropy flux reduce to a plain difference of the field.
    """
    a = values[:-1]
    b = values[1:]
    out = 0.5 * (a + b)
    # Far-apart positive pairs: use the log formula; nearly equal or
    # vanishing pairs keep the (correct-limit) arithmetic value.
    with np.errstate(divide="ignore", invalid="ignore"):
        dlog = np.log(b) - np.log(a)
        formula = (b - a) / dlog
    apart = np.abs(b - a) > 1e-10 * (a + b)
    pos = (a > 0.0) & (b > 0.0)
    use = apart & pos
    out[use] = formula[use]
    out[(a == 0.0) | (b == 0.0)] = 0.0
    return out


def divergence_of_flux(flux: np.ndarray, h: float) -> np.ndarray:
    """Cellwise divergence of an interior-interface flux, no-flux ends.

    Returns (G[i] - G[i-1]) / h with G[-1] = G[n-1] = 0 implied, so the
    cell sum of the result telescopes to zero.
    """
    padded = np.concatenate(([0.0], flux, [0.0]))
    return np.diff(padded) / h


def laplacian_neumann(values: np.ndarray, h: float) -> np.ndarray:
    """Second difference with no-flux (homogeneous Neumann) ends."""
    return divergence_of_flux(interface_gradient(values, h), h)


def weighted_poisson_neumann(
    weights: np.ndarray, rhs: np.ndarray, h: float
) -> np.ndarray:
    """Solve -(w xi')' = rhs with no-flux ends and zero-mean gauge.

    ``weights`` are the n-1 interior interface coefficients (all > 0), and
    ``rhs`` must have zero cell sum (Neumann compatibility).  In 1D the
    problem integrates exactly: the interface flux G = -w xi' is the running
    cell sum of ``-h * rhs``, and xi follows by a second cumulative sum.
    The returned potential has zero mean, which fixes the constant left free
    by the pure-Neumann problem.
    """
    if np.any(weights <= 0.0):
        raise ValueError("interface weights must be strictly positive")
    # G[j] = w xi' at interface j; G[j] - G[j-1] = -h rhs[j]
    flux = -h * np.cumsum(rhs)[:-1]
    dxi = h * flux / weights  # xi[j+1] - xi[j]
    xi = np.concatenate(([0.0], np.cumsum(dxi)))
    return xi - xi.mean()
