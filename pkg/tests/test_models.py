import math

import numpy as np
import pytest

from gradflow.measures import GridDensity1D, PhysicalConstants
from gradflow.models import (
    CflError,
    ConstraintError,
    MultiSpeciesState,
    PhaseFieldState,
    PositivityError,
    allen_cahn_solve,
    cahn_hilliard_solve,
    derive_velocity,
    fokker_planck_solve,
    free_energy_multispecies,
    multicomponent_evolve,
    multicomponent_fluxes,
    multicomponent_global_step,
    multicomponent_local_step,
    phase_field_energy,
    spring_dashpot_solve,
)
from gradflow._grid import arithmetic_interface_mean, interface_gradient

RT1 = PhysicalConstants.with_rt(1.0)


def heat_kernel(x, t, diffusivity=1.0):
    return np.exp(-(x**2) / (4 * diffusivity * t)) / math.sqrt(4 * math.pi * diffusivity * t)


class TestSpringDashpot:
    def test_zero_start_stays_zero(self):
        res = spring_dashpot_solve(2.0, 1.0, 0.0, 1.0, 1e-2)
        assert np.all(res.exact == 0.0)

    def test_closed_form_value(self):
        res = spring_dashpot_solve(2.0, 1.0, 1.0, 1.0, 1e-3)
        assert res.exact[-1] == pytest.approx(math.exp(-2.0), rel=1e-12)

    def test_energy_strictly_decreasing(self):
        k = 1.7
        res = spring_dashpot_solve(k, 0.9, 1.0, 2.0, 1e-2)
        energy = 0.5 * k * res.exact**2
        assert np.all(np.diff(energy) < 0.0)

    def test_euler_tracks_closed_form(self):
        res = spring_dashpot_solve(2.0, 1.0, 1.0, 1.0, 1e-4)
        assert np.abs(res.euler - res.exact).max() <= 2e-4


class TestDeriveVelocity:
    def test_boltzmann_flux_cancels(self):
        grid = GridDensity1D(0.0, 5.0, np.ones(200))
        V = lambda x: x
        c = grid.with_values(np.exp(-V(grid.centers)))
        w = derive_velocity(c, RT1, V)
        assert np.abs(w).max() <= 1e-8

    def test_pure_fick_flux_without_potential(self):
        grid = GridDensity1D(-4.0, 4.0, np.ones(160))
        c = grid.with_values(np.exp(-grid.centers**2 / 2) + 0.01)
        w = derive_velocity(c, RT1, lambda x: np.zeros_like(x))
        cw = arithmetic_interface_mean(c.values) * w
        fick = -RT1.RT / RT1.eta * interface_gradient(c.values, c.h)
        assert np.abs(cw - fick).max() <= 1e-12

    def test_uniform_concentration_is_still(self):
        c = GridDensity1D(0.0, 1.0, np.full(50, 2.0))
        w = derive_velocity(c, RT1, lambda x: np.zeros_like(x))
        assert np.abs(w).max() == 0.0


class TestFokkerPlanck:
    def test_heat_kernel_propagation(self):
        cells = 400
        grid = GridDensity1D(-6.0, 6.0, np.ones(cells))
        t0, T = 0.25, 0.25
        c0 = grid.with_values(heat_kernel(grid.centers, t0))
        dt = 0.8 * grid.h**2 / 2.0
        traj = fokker_planck_solve(c0, RT1, lambda x: np.zeros_like(x), T, dt)
        exact = heat_kernel(grid.centers, t0 + T)
        l1 = grid.h * np.abs(traj.final.values - exact).sum()
        assert l1 <= 5 * (grid.h**2 + dt)

    def test_gravity_column_reaches_boltzmann(self):
        grid = GridDensity1D(0.0, 5.0, np.ones(200))
        V = lambda x: x
        c0 = grid.with_values(np.full(grid.cells, 0.2))
        dt = 0.9 * grid.h**2 / 2.0
        traj = fokker_planck_solve(c0, RT1, V, 50.0, dt, store_every=10**9)
        target = np.exp(-grid.centers)
        target *= c0.mass() / (grid.h * target.sum())
        l1 = grid.h * np.abs(traj.final.values - target).sum()
        assert l1 <= 1e-3

    def test_boltzmann_initial_state_is_stationary(self):
        grid = GridDensity1D(0.0, 5.0, np.ones(150))
        c0 = grid.with_values(np.exp(-grid.centers)).normalized()
        dt = 0.9 * grid.h**2 / 2.0
        traj = fokker_planck_solve(c0, RT1, lambda x: x, 1.0, dt)
        assert np.abs(traj.final.values - c0.values).max() <= 1e-9

    def test_mass_conserved_and_energy_monotone(self):
        grid = GridDensity1D(-4.0, 4.0, np.ones(128))
        c0 = grid.with_values(np.exp(-grid.centers**2) + 0.05)
        dt = 0.5 * grid.h**2 / 2.0
        traj = fokker_planck_solve(c0, RT1, lambda x: 0.3 * x**2, 0.5, dt)
        assert traj.max_mass_drift() <= 1e-12
        assert traj.max_energy_increase() <= 1e-12

    def test_cfl_guard(self):
        grid = GridDensity1D(0.0, 1.0, np.ones(64))
        c0 = grid.with_values(np.ones(64))
        with pytest.raises(CflError):
            fokker_planck_solve(c0, RT1, lambda x: np.zeros_like(x), 0.1, grid.h**2)


def make_two_species(profile, alpha=2.0, eta=(1.0, 1.0), domain=(0.0, 1.0), cells=100):
    grid = GridDensity1D(domain[0], domain[1], np.ones(cells))
    c1 = profile(grid.centers)
    c2 = 1.0 / alpha - c1
    return MultiSpeciesState(
        domain[0],
        domain[1],
        np.stack([c1, c2]),
        np.array([alpha, alpha]),
        np.asarray(eta, dtype=float),
    )


class TestMulticomponent:
    def test_uniform_mixture_is_stationary(self):
        state = make_two_species(lambda x: np.full_like(x, 0.2))
        for step in (multicomponent_global_step, multicomponent_local_step):
            out = step(state, RT1, 1e-5)
            assert np.abs(out.concentrations - state.concentrations).max() <= 1e-14

    def test_single_species_pinned_by_constraint(self):
        grid = GridDensity1D(0.0, 1.0, np.ones(50))
        state = MultiSpeciesState(
            0.0, 1.0, np.full((1, 50), 0.5), np.array([2.0]), np.array([1.0])
        )
        out = multicomponent_global_step(state, RT1, 1e-5)
        assert np.abs(out.concentrations - state.concentrations).max() <= 1e-14

    def test_symmetric_pair_matches_single_species_diffusion(self):
        profile = lambda x: 0.25 + 0.08 * np.sin(2 * math.pi * x)
        state = make_two_species(profile, cells=100)
        dt = 2e-5
        steps = 500
        traj = multicomponent_evolve(state, RT1, dt, steps, mode="global")
        grid = GridDensity1D(0.0, 1.0, np.ones(100))
        single = fokker_planck_solve(
            grid.with_values(profile(grid.centers)),
            RT1,
            lambda x: np.zeros_like(x),
            dt * steps,
            dt,
        )
        diff = np.abs(traj.final.concentrations[0] - single.final.values).max()
        assert diff <= 1e-6

    def test_local_balance_exact_flux_cancellation(self):
        profile = lambda x: 0.25 + 0.1 * np.sin(2 * math.pi * x)
        state = make_two_species(profile)
        fluxes = multicomponent_fluxes(state, RT1, mode="local")
        total = state.molar_volumes @ fluxes.reshape(state.species, -1)
        assert np.abs(total).max() <= 1e-10
        # equal molar volumes make the two species' fluxes antisymmetric
        assert np.abs(fluxes[0] + fluxes[1]).max() <= 1e-10

    def test_global_balance_weak_divergence(self):
        rng = np.random.default_rng(3)
        profile = lambda x: 0.25 + 0.07 * np.cos(3 * math.pi * x)
        state = make_two_species(profile, eta=(1.0, 2.5))
        fluxes = multicomponent_fluxes(state, RT1, mode="global")
        from gradflow._grid import divergence_of_flux

        weighted_div = sum(
            state.molar_volumes[i] * divergence_of_flux(fluxes[i], state.h)
            for i in range(state.species)
        )
        for _ in range(5):
            test_vec = rng.normal(size=state.cells)
            assert abs(state.h * np.dot(test_vec, weighted_div)) <= 1e-10

    def test_constraint_and_masses_over_thousand_steps(self):
        profile = lambda x: 0.25 + 0.08 * np.sin(2 * math.pi * x)
        for mode in ("global", "local"):
            state = make_two_species(profile, eta=(1.0, 3.0), cells=64)
            traj = multicomponent_evolve(state, RT1, 1e-5, 1000, mode=mode)
            assert traj.extra["constraint_max_violation"].max() <= 1e-8
            assert traj.max_energy_increase() <= 1e-12
            start = traj.snapshots[0].masses()
            end = traj.final.masses()
            assert np.abs(end - start).max() <= 1e-10

    def test_vacuum_species_rejected_by_local_balance(self):
        grid_cells = 32
        c1 = np.full(grid_cells, 0.5)
        c1[3] = 0.0
        c2 = (1.0 - 2.0 * c1) / 2.0
        state = MultiSpeciesState(
            0.0, 1.0, np.stack([c1, c2]), np.array([2.0, 2.0]), np.array([1.0, 1.0])
        )
        with pytest.raises(PositivityError):
            multicomponent_local_step(state, RT1, 1e-6)


class TestPhaseField:
    def test_allen_cahn_wells_are_stationary(self):
        state = PhaseFieldState(0.0, 8.0, np.ones(32))
        traj = allen_cahn_solve(state, 1.0, 0.5, 0.01)
        assert np.abs(traj.final.u - 1.0).max() == 0.0

    def test_allen_cahn_leaves_unstable_well(self):
        rng = np.random.default_rng(11)
        u0 = 1e-3 * rng.normal(size=64)
        state = PhaseFieldState(0.0, 64.0, u0)
        traj = allen_cahn_solve(state, 1.0, 20.0, 0.05)
        assert np.abs(traj.final.u).max() > 0.5
        assert traj.max_energy_increase() <= 1e-12

    def test_allen_cahn_energy_decreases_from_random_state(self):
        rng = np.random.default_rng(7)
        state = PhaseFieldState(0.0, 32.0, 0.5 * rng.normal(size=64))
        traj = allen_cahn_solve(state, 1.0, 5.0, 0.02)
        assert traj.max_energy_increase() <= 1e-12
        assert traj.energies[-1] < traj.energies[0]

    def test_cahn_hilliard_well_is_stationary(self):
        state = PhaseFieldState(0.0, 32.0, -np.ones(32))
        traj = cahn_hilliard_solve(state, 1.0, 5.0, 0.05)
        assert np.abs(traj.final.u + 1.0).max() == 0.0

    def test_cahn_hilliard_conserves_mean_and_coarsens(self):
        # the biharmonic guard is dt <= h^4/8; the double-well reaction
        # tightens the practical bound, so run with a safety margin
        rng = np.random.default_rng(5)
        u0 = 0.05 * rng.normal(size=64)
        state = PhaseFieldState(0.0, 64.0, u0)
        traj = cahn_hilliard_solve(state, 1.0, 400.0, 0.04, store_every=2000)
        assert abs(traj.final.mean() - state.mean()) <= 1e-12
        assert traj.max_energy_increase() <= 1e-12
        # spinodal instability grows the perturbation toward the wells
        assert np.abs(traj.final.u).max() > 0.5

    def test_cfl_guards(self):
        state = PhaseFieldState(0.0, 1.0, np.zeros(64))
        with pytest.raises(CflError):
            allen_cahn_solve(state, 1.0, 1.0, state.h)
        with pytest.raises(CflError):
            cahn_hilliard_solve(state, 1.0, 1.0, state.h**2)


class TestFreeEnergyMultispecies:
    def test_reference_concentration_gives_zero(self):
        state = MultiSpeciesState(
            0.0, 2.0, np.full((2, 40), 1.0), np.array([0.5, 0.5]), np.ones(2)
        )
        constants = PhysicalConstants.with_rt(1.0, c0=1.0)
        assert free_energy_multispecies(state, constants) == 0.0

    def test_double_reference_uniform(self):
        # single species at 2 c0 on |Omega| = 2: RT * 2 c0 * |Omega| * log 2
        constants = PhysicalConstants.with_rt(3.0, c0=0.7)
        c_val = 2 * constants.c0
        state = MultiSpeciesState(
            0.0,
            2.0,
            np.full((1, 50), c_val),
            np.array([1.0 / c_val]),
            np.ones(1),
        )
        expected = 3.0 * c_val * 2.0 * math.log(2.0)
        assert free_energy_multispecies(state, constants) == pytest.approx(
            expected, rel=1e-12
        )

    def test_c0_shift_is_linear_in_total_moles(self):
        rng = np.random.default_rng(2)
        c1 = 0.2 + 0.1 * rng.random(30)
        c2 = 0.5 - c1
        state = MultiSpeciesState(
            0.0, 1.5, np.stack([c1, c2]), np.array([2.0, 2.0]), np.ones(2)
        )
        f_a = free_energy_multispecies(state, PhysicalConstants.with_rt(1.0, c0=1.0))
        f_b = free_energy_multispecies(state, PhysicalConstants.with_rt(1.0, c0=2.0))
        total_moles = float(state.masses().sum())
        assert f_b - f_a == pytest.approx(-total_moles * math.log(2.0), rel=1e-12)


class TestStateValidation:
    def test_volume_constraint_enforced(self):
        with pytest.raises(ValueError):
            MultiSpeciesState(
                0.0, 1.0, np.full((1, 10), 0.4), np.array([2.0]), np.array([1.0])
            )

    def test_energy_helper_matches_functional(self):
        from gradflow.gradient_flow import EnergyFunctional

        rng = np.random.default_rng(9)
        state = PhaseFieldState(0.0, 4.0, rng.normal(size=40), well=1.3)
        functional = EnergyFunctional.dirichlet_double_well(well=1.3)
        assert phase_field_energy(state) == pytest.approx(
            functional.value(state), rel=1e-14
        )
