"""Discrete and gridded measures, entropies, and distances between them.

Two carriers are used everywhere in this package: :class:`DiscreteMeasure`
(weighted atoms in R^d, e.g. empirical measures and finite-alphabet laws)
and :class:`GridDensity1D` (a nonnegative density on a uniform 1D grid).
Both are immutable after construction; every operation here is a pure
function, so concurrent read access is safe.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiscreteMeasure",
    "GridDensity1D",
    "PhysicalConstants",
    "relative_entropy",
    "ent_grid",
    "total_variation",
    "push_forward",
    "empirical_from_samples",
    "second_moment",
    "write_discrete_csv",
    "read_discrete_csv",
    "write_grid_csv",
    "read_grid_csv",
]

MASS_MATCH_TOL = 1e-12


def _frozen_array(values, dtype=float, ndmin=1) -> np.ndarray:
    arr = np.array(values, dtype=dtype, ndmin=ndmin)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DiscreteMeasure:
    """Nonnegative measure with finitely many atoms in R^d.

    ``atoms`` has shape (n, d); ``weights`` has shape (n,) with all entries
    >= 0 and a finite sum.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        if atoms.ndim != 2:
            raise ValueError("atoms must be an (n, d) array")
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError(
                f"{atoms.shape[0]} atoms but {weights.shape[0]} weights"
            )
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        if not np.isfinite(weights).all() or not np.isfinite(atoms).all():
            raise ValueError("atoms and weights must be finite")
        atoms = atoms.copy()
        atoms.flags.writeable = False
        weights = weights.copy()
        weights.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def mass(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class GridDensity1D:
    """Nonnegative density on a uniform grid of ``cells`` cells over [a, b].

    ``values[i]`` is the density (mass per length) on cell i; the cell mass
    is ``h * values[i]`` with ``h = (b - a) / cells``.
    """

    a: float
    b: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size < 2:
            raise ValueError("need at least 2 cells")
        if not self.b > self.a:
            raise ValueError("domain must satisfy b > a")
        if np.any(values < 0.0) or not np.isfinite(values).all():
            raise ValueError("density values must be finite and nonnegative")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def cells(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.cells

    @property
    def centers(self) -> np.ndarray:
        return self.a + (np.arange(self.cells) + 0.5) * self.h

    @property
    def edges(self) -> np.ndarray:
        return self.a + np.arange(self.cells + 1) * self.h

    def mass(self) -> float:
        return float(self.h * self.values.sum())

    def with_values(self, values) -> "GridDensity1D":
        """Same grid, new values."""
        return GridDensity1D(self.a, self.b, values)

    def normalized(self) -> "GridDensity1D":
        """Rescale to unit mass."""
        m = self.mass()
        if m <= 0.0:
            raise ValueError("cannot normalize a zero-mass density")
        return self.with_values(self.values / m)


# Physical constants; defaults follow the CODATA-style values
# k = 1.3806488e-23 J/K and N_A = 6.0221413e23 1/mol, with R = k N_A.
_K_DEFAULT = 1.3806488e-23
_NA_DEFAULT = 6.0221413e23


@dataclass(frozen=True)
class PhysicalConstants:
    """Bundle of the constants entering free energies and dissipations.

    R [J/(K mol)], k [J/K], N_A [1/mol], T [K], eta (friction, per particle
    or macroscopic analogue), g [m/s^2], c0 (reference concentration).
    All strictly positive and R must equal k * N_A to 1e-6 relative.
    """

    R: float = _K_DEFAULT * _NA_DEFAULT
    k: float = _K_DEFAULT
    N_A: float = _NA_DEFAULT
    T: float = 298.15
    eta: float = 1.0
    g: float = 9.8
    c0: float = 1.0

    def __post_init__(self):
        for name in ("R", "k", "N_A", "T", "eta", "g", "c0"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"constant {name} must be strictly positive")
        if abs(self.R - self.k * self.N_A) > 1e-6 * self.R:
            raise ValueError("R must equal k * N_A to 1e-6 relative tolerance")

    @property
    def RT(self) -> float:
        return self.R * self.T

    @classmethod
    def with_rt(cls, rt: float, **kwargs) -> "PhysicalConstants":
        """Constants with a prescribed product R*T (temperature adjusted)."""
        R = kwargs.pop("R", _K_DEFAULT * _NA_DEFAULT)
        return cls(R=R, T=rt / R, **kwargs)


def _check_shared_support(mu: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    if len(mu) != len(nu):
        raise ValueError("measures must share one atom indexing")
    if mu.atoms.shape == nu.atoms.shape and not np.array_equal(mu.atoms, nu.atoms):
        raise ValueError("measures must be supported on the same atom list")


def _relative_entropy_weights(mu_w: np.ndarray, nu_w: np.ndarray, scale: float) -> float:
    if np.any(mu_w[nu_w == 0.0] > 0.0):
        return math.inf
    pos = mu_w > 0.0
    f = mu_w[pos] / nu_w[pos]
    return scale * float(np.sum(nu_w[pos] * f * np.log(f)))


def relative_entropy(mu, nu) -> float:
    """Relative entropy H(mu | nu) = sum f log f dnu with f = dmu/dnu.

    Both arguments must be the same carrier type: two DiscreteMeasure over
    one support list (paired by index) or two GridDensity1D on the same
    grid (absolute continuity checked cellwise).  Returns +inf when mu puts
    mass where nu has none; 0 log 0 counts as 0.
    """
    if isinstance(mu, DiscreteMeasure) and isinstance(nu, DiscreteMeasure):
        _check_shared_support(mu, nu)
        return _relative_entropy_weights(mu.weights, nu.weights, 1.0)
    if isinstance(mu, GridDensity1D) and isinstance(nu, GridDensity1D):
        if mu.cells != nu.cells or (mu.a, mu.b) != (nu.a, nu.b):
            raise ValueError("grid densities must live on the same grid")
        return _relative_entropy_weights(mu.values, nu.values, mu.h)
    raise TypeError("relative_entropy expects two measures of the same kind")


def ent_grid(rho: GridDensity1D) -> float:
    """Entropy h * sum rho_i log rho_i (midpoint quadrature of int rho log rho)."""
    v = rho.values
    pos = v > 0.0
    return float(rho.h * np.sum(v[pos] * np.log(v[pos])))


def total_variation(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Total variation (1/2) sum |mu_i - nu_i| between equal-mass measures.

    The 1/2-L1 normalization is the one for which the Pinsker-type bound
    2 TV^2 <= H holds.
    """
    _check_shared_support(mu, nu)
    if abs(mu.mass() - nu.mass()) > MASS_MATCH_TOL:
        raise ValueError("total variation requires equal masses (1e-12)")
    return 0.5 * float(np.abs(mu.weights - nu.weights).sum())


def push_forward(mu: DiscreteMeasure, mapping) -> DiscreteMeasure:
    """Push-forward of mu under a point map; colliding images merge weights.

    Merging uses exact coordinate equality only (round beforehand if fuzzy
    merging is wanted); first occurrence fixes the output ordering.
    """
    images = [np.atleast_1d(np.asarray(mapping(x), dtype=float)) for x in mu.atoms]
    order: dict[tuple, int] = {}
    new_atoms: list[np.ndarray] = []
    new_weights: list[float] = []
    for img, w in zip(images, mu.weights):
        key = tuple(img.tolist())
        if key in order:
            new_weights[order[key]] += w
        else:
            order[key] = len(new_atoms)
            new_atoms.append(img)
            new_weights.append(float(w))
    return DiscreteMeasure(np.array(new_atoms), np.array(new_weights))


def empirical_from_samples(points) -> DiscreteMeasure:
    """Empirical measure (1/n) sum of deltas; coincident points merge."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("empirical measure of an empty sample is undefined")
    if pts.shape[0] == 1 and pts.shape[1] > 1 and np.asarray(points).ndim == 1:
        # A flat list of scalars is n one-dimensional samples.
        pts = pts.T
    n = pts.shape[0]
    raw = DiscreteMeasure(pts, np.full(n, 1.0 / n))
    return push_forward(raw, lambda x: x)


def second_moment(m) -> float:
    """Second moment: sum w_i |x_i|^2 or h * sum rho_i x_i^2."""
    if isinstance(m, DiscreteMeasure):
        return float(np.sum(m.weights * np.sum(m.atoms**2, axis=1)))
    if isinstance(m, GridDensity1D):
        return float(m.h * np.sum(m.values * m.centers**2))
    raise TypeError("second_moment expects a DiscreteMeasure or GridDensity1D")


# -- CSV serialization --------------------------------------------------------

_COORD_NAMES = ("x", "y", "z")


def write_discrete_csv(mu: DiscreteMeasure, path) -> None:
    """Write atoms and weights as columns x[,y,z],weight with a header row."""
    if mu.dim > 3:
        raise ValueError("CSV serialization supports at most 3 coordinates")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(_COORD_NAMES[: mu.dim]) + ["weight"])
        for atom, w in zip(mu.atoms, mu.weights):
            writer.writerow([f"{c:.17g}" for c in atom] + [f"{w:.17g}"])


def read_discrete_csv(path) -> DiscreteMeasure:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "weight" or tuple(header[:-1]) != _COORD_NAMES[: len(header) - 1]:
            raise ValueError(f"unexpected header {header!r} for a discrete measure")
        rows = [[float(c) for c in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    return DiscreteMeasure(data[:, :-1], data[:, -1])


def write_grid_csv(rho: GridDensity1D, path) -> None:
    """Write columns cell_center,value with a header row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_center", "value"])
        for c, v in zip(rho.centers, rho.values):
            writer.writerow([f"{c:.17g}", f"{v:.17g}"])


def read_grid_csv(path) -> GridDensity1D:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["cell_center", "value"]:
            raise ValueError(f"unexpected header {header!r} for a grid density")
        rows = [[float(c) for c in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    centers, values = data[:, 0], data[:, 1]
    if centers.size < 2:
        raise ValueError("need at least 2 cells")
    h = centers[1] - centers[0]
    if not np.allclose(np.diff(centers), h, rtol=1e-9, atol=1e-12):
        raise ValueError("cell centers must be uniformly spaced")
    return GridDensity1D(centers[0] - h / 2, centers[-1] + h / 2, values)
