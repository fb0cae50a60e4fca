"""Concrete dissipative models: spring-dashpot relaxation, solute
diffusion (Fokker-Planck), multi-component diffusion under a volume
constraint, and the Allen-Cahn / Cahn-Hilliard phase-field flows.

All grid solvers are explicit in time with hard CFL guards, use
conservative interface fluxes (no-flux ends), and record per-step energy
and mass so that dissipation and conservation can be asserted rather than
assumed.  Drift terms carry logarithmic-mean interface densities: the
discrete Boltzmann profile exp(-V/RT) is then an exact fixed point of the
scheme, not just an approximate one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._grid import (
    arithmetic_interface_mean,
    divergence_of_flux,
    interface_gradient,
    laplacian_neumann,
    logarithmic_interface_mean,
    weighted_poisson_neumann,
)
from .measures import GridDensity1D, PhysicalConstants

__all__ = [
    "PhaseFieldState",
    "MultiSpeciesState",
    "SpringDashpotResult",
    "GridTrajectory",
    "CflError",
    "PositivityError",
    "ConstraintError",
    "spring_dashpot_solve",
    "derive_velocity",
    "fokker_planck_solve",
    "multicomponent_global_step",
    "multicomponent_local_step",
    "multicomponent_evolve",
    "allen_cahn_solve",
    "cahn_hilliard_solve",
    "free_energy_multispecies",
    "phase_field_energy",
    "write_model_csv",
]

POSITIVITY_FLOOR = 1e-14
CONSTRAINT_HARD_LIMIT = 1e-6


class CflError(ValueError):
    """Requested time step violates the explicit stability guard."""


class PositivityError(RuntimeError):
    """A concentration left the positive cone; the step size is too large."""


class ConstraintError(RuntimeError):
    """The volume constraint drifted beyond the consistency limit."""


@dataclass(frozen=True)
class PhaseFieldState:
    """Order parameter u on a uniform grid with the double well
    W(s) = well/4 (1-s^2)^2 (wells at +-1, depth 0)."""

    a: float
    b: float
    u: np.ndarray
    well: float = 1.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(-1)
        if u.size < 4:
            raise ValueError("need at least 4 cells")
        if not np.isfinite(u).all():
            raise ValueError("field values must be finite")
        if not self.well > 0.0:
            raise ValueError("well depth coefficient must be positive")
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    @property
    def cells(self) -> int:
        return self.u.size

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.cells

    @property
    def centers(self) -> np.ndarray:
        return self.a + (np.arange(self.cells) + 0.5) * self.h

    @property
    def values(self) -> np.ndarray:
        return self.u

    def with_values(self, values) -> "PhaseFieldState":
        return PhaseFieldState(self.a, self.b, values, self.well)

    def mean(self) -> float:
        return float(self.u.mean())


def phase_field_energy(state: PhaseFieldState) -> float:
    """Dirichlet + double-well energy (1/2) int |grad u|^2 + int W(u)."""
    grad = interface_gradient(state.u, state.h)
    well = 0.25 * state.well * (1.0 - state.u**2) ** 2
    return 0.5 * float(state.h * np.sum(grad * grad)) + float(state.h * np.sum(well))


@dataclass(frozen=True)
class MultiSpeciesState:
    """m species on one grid, subject to sum_i alpha_i c_i = 1 cellwise.

    ``concentrations`` has shape (m, cells) in mol/m^3, ``molar_volumes``
    alpha_i > 0 in m^3/mol, ``frictions`` eta_i > 0.
    """

    a: float
    b: float
    concentrations: np.ndarray
    molar_volumes: np.ndarray
    frictions: np.ndarray
    constraint_tol: float = 1e-8

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.concentrations, dtype=float))
        alpha = np.asarray(self.molar_volumes, dtype=float).reshape(-1)
        eta = np.asarray(self.frictions, dtype=float).reshape(-1)
        if c.shape[0] != alpha.size or c.shape[0] != eta.size:
            raise ValueError("one molar volume and one friction per species")
        if np.any(c < 0.0):
            raise ValueError("concentrations must be nonnegative")
        if np.any(alpha <= 0.0) or np.any(eta <= 0.0):
            raise ValueError("molar volumes and frictions must be positive")
        fill = alpha @ c
        if np.abs(fill - 1.0).max() > self.constraint_tol:
            raise ValueError(
                f"volume constraint violated by {np.abs(fill - 1.0).max():.2e}"
            )
        for name, arr in (
            ("concentrations", c),
            ("molar_volumes", alpha),
            ("frictions", eta),
        ):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def species(self) -> int:
        return self.concentrations.shape[0]

    @property
    def cells(self) -> int:
        return self.concentrations.shape[1]

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.cells

    def with_concentrations(self, c) -> "MultiSpeciesState":
        return MultiSpeciesState(
            self.a, self.b, c, self.molar_volumes, self.frictions, self.constraint_tol
        )

    def masses(self) -> np.ndarray:
        return self.h * self.concentrations.sum(axis=1)

    def constraint_violation(self) -> float:
        return float(np.abs(self.molar_volumes @ self.concentrations - 1.0).max())


@dataclass(frozen=True)
class SpringDashpotResult:
    """Closed-form and explicit-Euler trajectories of the spring-dashpot flow."""

    times: np.ndarray
    exact: np.ndarray
    euler: np.ndarray


def spring_dashpot_solve(k: float, eta: float, x0: float, T: float, dt: float) -> SpringDashpotResult:
    """Relaxation x' = -(k/eta) x: closed form x0 exp(-kt/eta) sampled at dt.

    The explicit-Euler integration of the same local minimization problem
    is returned alongside for cross-checking.
    """
    if min(k, eta, dt, T) <= 0.0:
        raise ValueError("k, eta, T, dt must all be positive")
    steps = int(round(T / dt))
    times = np.arange(steps + 1) * dt
    exact = x0 * np.exp(-k * times / eta)
    euler = x0 * (1.0 - dt * k / eta) ** np.arange(steps + 1)
    return SpringDashpotResult(times, exact, euler)


def _drift_diffusion_flux(
    c: np.ndarray, V: np.ndarray, rt: float, eta: float, h: float
) -> np.ndarray:
    """Interface flux of c' = div((rt/eta) grad c + (c/eta) grad V).

    Fick part uses the plain difference; the drift part weights grad V with
    the logarithmic interface mean of c, which makes exp(-V/rt) exactly
    stationary.
    """
    fick = rt * interface_gradient(c, h)
    drift = logarithmic_interface_mean(c) * interface_gradient(V, h)
    return (fick + drift) / eta


def derive_velocity(
    c: GridDensity1D, constants: PhysicalConstants, V
) -> np.ndarray:
    """Velocity w at interior interfaces with c w = -(RT/eta) grad c - (c/eta) grad V.

    This is the stationarity condition of the dissipation-plus-energy-rate
    minimization for the free energy RT int c log(c/c0) + int c V; w.n = 0
    holds at the ends by the no-flux convention.
    """
    if np.min(c.values) <= 0.0:
        raise PositivityError("velocity field needs a strictly positive concentration")
    if V is None:
        V_arr = np.zeros(c.cells)
    else:
        V_arr = V(c.centers) if callable(V) else np.asarray(V, dtype=float)
    flux = _drift_diffusion_flux(c.values, V_arr, constants.RT, constants.eta, c.h)
    return -flux / arithmetic_interface_mean(c.values)


@dataclass(frozen=True)
class GridTrajectory:
    """Per-step diagnostics plus thinned state snapshots of a grid solver."""

    snapshot_times: np.ndarray
    snapshots: list
    energies: np.ndarray
    masses: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.snapshots[-1]

    def max_energy_increase(self) -> float:
        return float(np.max(np.diff(self.energies), initial=-np.inf))

    def max_mass_drift(self) -> float:
        return float(np.abs(self.masses - self.masses[0]).max())


def fokker_planck_solve(
    c0: GridDensity1D,
    constants: PhysicalConstants,
    V,
    T_end: float,
    dt: float,
    *,
    store_every: Optional[int] = None,
) -> GridTrajectory:
    """Explicit conservative solve of c' = div((RT/eta) grad c + (c/eta) grad V).

    Requires the diffusive CFL bound dt <= h^2 eta / (2 RT); mass is
    conserved per step by the flux form and the free energy
    RT int c log(c/c0) + int c V is tracked per step.  ``store_every``
    thins the stored snapshots (all steps still contribute diagnostics).
    """
    rt, eta = constants.RT, constants.eta
    h = c0.h
    if dt <= 0.0 or T_end <= 0.0:
        raise ValueError("T_end and dt must be positive")
    if dt > h * h * eta / (2.0 * rt):
        raise CflError(
            f"dt = {dt:.3e} violates the diffusive CFL bound {h * h * eta / (2 * rt):.3e}"
        )
    steps = int(round(T_end / dt))
    if store_every is None:
        store_every = max(1, steps // 200)
    if V is None:
        V_arr = np.zeros(c0.cells)
    else:
        V_arr = V(c0.centers) if callable(V) else np.asarray(V, dtype=float)

    def energy(values: np.ndarray) -> float:
        pos = values > 0.0
        ent = float(np.sum(values[pos] * np.log(values[pos] / constants.c0)))
        return h * (rt * ent + float(np.sum(values * V_arr)))

    c = c0.values.copy()
    energies = np.empty(steps + 1)
    masses = np.empty(steps + 1)
    energies[0] = energy(c)
    masses[0] = h * c.sum()
    snapshot_times = [0.0]
    snapshots = [c0]
    for k in range(1, steps + 1):
        c = c + dt * divergence_of_flux(_drift_diffusion_flux(c, V_arr, rt, eta, h), h)
        if np.min(c) < -1e-12:
            raise PositivityError(
                f"concentration turned negative at step {k}; reduce dt"
            )
        # fp noise just below zero in vacuum cells is clamped; genuine
        # negativity raised above
        np.clip(c, 0.0, None, out=c)
        energies[k] = energy(c)
        masses[k] = h * c.sum()
        if k % store_every == 0 or k == steps:
            snapshot_times.append(k * dt)
            snapshots.append(c0.with_values(c))
    return GridTrajectory(
        np.asarray(snapshot_times), snapshots, energies, masses
    )


# -- multi-component diffusion with volume constraint --------------------------


def _species_interface_data(state: MultiSpeciesState, constants: PhysicalConstants):
    c = state.concentrations
    h = state.h
    alpha = state.molar_volumes
    eta = state.frictions
    rt = constants.RT
    grad_c = np.diff(c, axis=1) / h
    c_iface = 0.5 * (c[:, 1:] + c[:, :-1])
    return c, h, alpha, eta, rt, grad_c, c_iface


def _advance_multispecies(
    state: MultiSpeciesState, fluxes: np.ndarray, dt: float
) -> MultiSpeciesState:
    c_new = np.empty_like(state.concentrations)
    for i in range(state.species):
        c_new[i] = state.concentrations[i] - dt * divergence_of_flux(fluxes[i], state.h)
    if np.min(c_new) < POSITIVITY_FLOOR:
        raise PositivityError(
            "a concentration fell below the positivity floor; reduce dt"
        )
    fill = state.molar_volumes @ c_new
    drift = float(np.abs(fill - 1.0).max())
    if drift > CONSTRAINT_HARD_LIMIT:
        raise ConstraintError(f"volume constraint drift {drift:.2e} exceeds 1e-6")
    # exact renormalization; the asserted pre-projection drift makes this a
    # hygiene step rather than dynamics
    c_new /= fill[None, :]
    return state.with_concentrations(c_new)


def multicomponent_global_step(
    state: MultiSpeciesState, constants: PhysicalConstants, dt: float
) -> MultiSpeciesState:
    """One step of the global-balance system.

    The pressure solves div(sum alpha_i^2 c_i / eta_i grad p)
    = RT sum (alpha_i / eta_i) lap c_i with Neumann data, and the species
    move with fluxes j_i = (1/eta_i)(-RT grad c_i + alpha_i c_i grad p).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    c, h, alpha, eta, rt, grad_c, c_iface = _species_interface_data(state, constants)
    weights = np.einsum("i,ij->j", alpha**2 / eta, c_iface)
    if np.min(weights) <= 0.0:
        raise PositivityError("pressure problem is singular: all species vanish")
    rhs = rt * sum(
        (alpha[i] / eta[i]) * laplacian_neumann(c[i], h) for i in range(state.species)
    )
    # the Poisson helper solves -(w p')' = rhs, the pressure equation has
    # div(w grad p) = +rhs
    p = weighted_poisson_neumann(weights, -rhs, h)
    grad_p = np.diff(p) / h
    fluxes = np.array(
        [
            (-rt * grad_c[i] + alpha[i] * c_iface[i] * grad_p) / eta[i]
            for i in range(state.species)
        ]
    )
    return _advance_multispecies(state, fluxes, dt)


def multicomponent_local_step(
    state: MultiSpeciesState, constants: PhysicalConstants, dt: float
) -> MultiSpeciesState:
    """One step of the local-balance system with a pointwise multiplier.

    lambda is weighted so that sum_i alpha_i j_i = 0 holds cellwise in the
    discrete fluxes: lambda = RT sum (alpha_i/eta_i) grad c_i divided by
    sum alpha_i^2 c_i / eta_i, with j_i = (1/eta_i)(-RT grad c_i
    + alpha_i c_i lambda).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if np.min(state.concentrations) < POSITIVITY_FLOOR:
        raise PositivityError("local balance needs strictly positive species")
    c, h, alpha, eta, rt, grad_c, c_iface = _species_interface_data(state, constants)
    denom = np.einsum("i,ij->j", alpha**2 / eta, c_iface)
    numer = rt * np.einsum("i,ij->j", alpha / eta, grad_c)
    lam = numer / denom
    fluxes = np.array(
        [
            (-rt * grad_c[i] + alpha[i] * c_iface[i] * lam) / eta[i]
            for i in range(state.species)
        ]
    )
    return _advance_multispecies(state, fluxes, dt)


def multicomponent_fluxes(
    state: MultiSpeciesState, constants: PhysicalConstants, mode: str = "local"
) -> np.ndarray:
    """Interface fluxes j_i of one balance mode, for diagnostics."""
    c, h, alpha, eta, rt, grad_c, c_iface = _species_interface_data(state, constants)
    denom = np.einsum("i,ij->j", alpha**2 / eta, c_iface)
    if mode == "local":
        numer = rt * np.einsum("i,ij->j", alpha / eta, grad_c)
        mult = numer / denom
    elif mode == "global":
        rhs = rt * sum(
            (alpha[i] / eta[i]) * laplacian_neumann(c[i], h)
            for i in range(state.species)
        )
        mult = np.diff(weighted_poisson_neumann(denom, -rhs, h)) / h
    else:
        raise ValueError("mode must be 'local' or 'global'")
    return np.array(
        [
            (-rt * grad_c[i] + alpha[i] * c_iface[i] * mult) / eta[i]
            for i in range(state.species)
        ]
    )


def multicomponent_evolve(
    state: MultiSpeciesState,
    constants: PhysicalConstants,
    dt: float,
    steps: int,
    mode: str = "global",
    *,
    store_every: Optional[int] = None,
) -> GridTrajectory:
    """Iterate one balance mode, recording free energy, masses, constraint."""
    step_fn = {
        "global": multicomponent_global_step,
        "local": multicomponent_local_step,
    }[mode]
    if store_every is None:
        store_every = max(1, steps // 100)
    energies = np.empty(steps + 1)
    violations = np.empty(steps + 1)
    masses = np.empty(steps + 1)
    cur = state
    energies[0] = free_energy_multispecies(cur, constants)
    violations[0] = cur.constraint_violation()
    masses[0] = float(cur.masses().sum())
    snapshot_times = [0.0]
    snapshots = [cur]
    for k in range(1, steps + 1):
        cur = step_fn(cur, constants, dt)
        energies[k] = free_energy_multispecies(cur, constants)
        violations[k] = cur.constraint_violation()
        masses[k] = float(cur.masses().sum())
        if k % store_every == 0 or k == steps:
            snapshot_times.append(k * dt)
            snapshots.append(cur)
    return GridTrajectory(
        np.asarray(snapshot_times),
        snapshots,
        energies,
        masses,
        extra={"constraint_max_violation": violations},
    )


def free_energy_multispecies(
    state: MultiSpeciesState,
    constants: PhysicalConstants,
    energy: Optional[Callable[[np.ndarray], float]] = None,
) -> float:
    """E(c_1..c_m) + RT sum_i int c_i log(c_i / c0); additive constant 0."""
    rt, c0 = constants.RT, constants.c0
    c = state.concentrations
    h = state.h
    entropic = 0.0
    for i in range(state.species):
        v = c[i]
        pos = v > 0.0
        entropic += float(np.sum(v[pos] * np.log(v[pos] / c0)))
    total = rt * h * entropic
    if energy is not None:
        total += float(energy(c))
    return total


# -- phase fields ---------------------------------------------------------------


def _phase_field_march(
    state: PhaseFieldState,
    mobility: float,
    T_end: float,
    dt: float,
    rate_fn,
    cfl_bound: float,
    store_every: Optional[int],
) -> GridTrajectory:
    if dt <= 0.0 or T_end <= 0.0 or mobility <= 0.0:
        raise ValueError("mobility, T_end, dt must be positive")
    if dt > cfl_bound:
        raise CflError(f"dt = {dt:.3e} violates the stability bound {cfl_bound:.3e}")
    steps = int(round(T_end / dt))
    if store_every is None:
        store_every = max(1, steps // 100)
    u = state.u.copy()
    h = state.h
    energies = np.empty(steps + 1)
    means = np.empty(steps + 1)
    energies[0] = phase_field_energy(state)
    means[0] = u.mean()
    snapshot_times = [0.0]
    snapshots = [state]
    for k in range(1, steps + 1):
        u = u + dt * rate_fn(u)
        if not np.isfinite(u).all():
            raise PositivityError(f"phase field blew up at step {k}; reduce dt")
        cur = state.with_values(u)
        energies[k] = phase_field_energy(cur)
        means[k] = u.mean()
        if k % store_every == 0 or k == steps:
            snapshot_times.append(k * dt)
            snapshots.append(cur)
    return GridTrajectory(
        np.asarray(snapshot_times),
        snapshots,
        energies,
        masses=means,
        extra={"mean": means},
    )


def allen_cahn_solve(
    state: PhaseFieldState,
    mobility: float,
    T_end: float,
    dt: float,
    *,
    store_every: Optional[int] = None,
) -> GridTrajectory:
    """L^2 gradient flow u' = m (lap u - W'(u)) with no-flux ends."""
    h, well = state.h, state.well

    def rate(u: np.ndarray) -> np.ndarray:
        return mobility * (laplacian_neumann(u, h) - well * (u**3 - u))

    return _phase_field_march(
        state, mobility, T_end, dt, rate, h * h / (2.0 * mobility), store_every
    )


def cahn_hilliard_solve(
    state: PhaseFieldState,
    mobility: float,
    T_end: float,
    dt: float,
    *,
    store_every: Optional[int] = None,
) -> GridTrajectory:
    """H^-1 gradient flow u' = -m lap(lap u - W'(u)), conservative form.

    The update is the divergence of an interface flux, so the cell mean is
    conserved to machine precision per step; the explicit fourth-order
    stencil needs dt <= h^4 / (8 m).
    """
    h, well = state.h, state.well

    def rate(u: np.ndarray) -> np.ndarray:
        chemical = laplacian_neumann(u, h) - well * (u**3 - u)
        return divergence_of_flux(-mobility * interface_gradient(chemical, h), h)

    return _phase_field_march(
        state, mobility, T_end, dt, rate, h**4 / (8.0 * mobility), store_every
    )


def write_model_csv(trajectory: GridTrajectory, out_path, *, dt: float) -> None:
    """Stream per-step diagnostics: step,time,energy,mass[,constraint_max_violation]."""
    constraint = trajectory.extra.get("constraint_max_violation")
    with open(out_path, "w", newline="") as fh:
        header = "step,time,energy,mass"
        if constraint is not None:
            header += ",constraint_max_violation"
        fh.write(header + "\n")
        for k in range(trajectory.energies.size):
            row = (
                f"{k},{k * dt:.17g},{trajectory.energies[k]:.17g},"
                f"{trajectory.masses[k]:.17g}"
            )
            if constraint is not None:
                row += f",{constraint[k]:.17g}"
            fh.write(row + "\n")
