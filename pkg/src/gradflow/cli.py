"""Experiment runner: ``gradflow run --config cfg.json [--out DIR] [--seed N]``.

One experiment per invocation.  Configs are strict JSON: unknown keys are
rejected with their key path, required keys must be present, and types are
checked before anything executes.  Each run writes ``result.csv`` (all
floats with 17 significant digits; byte-identical across reruns with the
same config and seed) and ``summary.json`` (config hash, library and
dependency versions, each built-in invariant with its outcome, wall time).

Exit status: 0 success, 2 config error, 3 runtime model error,
4 invariant failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .measures import GridDensity1D, PhysicalConstants, relative_entropy, total_variation
from . import measures, transport
from .gradient_flow import EnergyFunctional, jko_step_detailed
from .models import (
    MultiSpeciesState,
    PhaseFieldState,
    allen_cahn_solve,
    cahn_hilliard_solve,
    fokker_planck_solve,
    multicomponent_evolve,
)
from .particles import (
    FiniteLdpProblem,
    HalfSpace,
    ParticleEnsemble,
    coin_rate,
    coin_tail_exact,
    empirical_density,
    euler_maruyama,
    reversibility_check,
    sanov_exact,
    varadhan_tilt,
    GENERATOR_VERSION,
)

__all__ = ["ExperimentConfig", "ConfigError", "run", "validate", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_INVARIANT = 4


class ConfigError(ValueError):
    """Strict-parse failure; ``diagnostics`` lists keyed problems."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass(frozen=True)
class Field:
    type: object
    default: Any = None
    required: bool = False


def _num(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_type(value, expected, path: str, errors: list[str]) -> Any:
    if expected is float:
        if not _num(value):
            errors.append(f"{path}: expected a number, got {type(value).__name__}")
            return None
        return float(value)
    if expected is int:
        if not isinstance(value, int) or isinstance(value, bool):
            errors.append(f"{path}: expected an integer, got {type(value).__name__}")
            return None
        return value
    if expected is str:
        if not isinstance(value, str):
            errors.append(f"{path}: expected a string, got {type(value).__name__}")
            return None
        return value
    if expected is bool:
        if not isinstance(value, bool):
            errors.append(f"{path}: expected a boolean, got {type(value).__name__}")
            return None
        return value
    if expected == "number_list":
        if not isinstance(value, list) or not all(_num(v) for v in value):
            errors.append(f"{path}: expected a list of numbers")
            return None
        return [float(v) for v in value]
    raise AssertionError(f"unknown schema type {expected!r}")


# parameter schemas, one per experiment
SCHEMAS: dict[str, dict[str, Field]] = {
    "entropy": {
        "pairs": Field(int, 1000),
        "alphabet": Field(int, 6),
    },
    "transport": {
        "n_atoms": Field(int, 6),
        "instances": Field(int, 50),
        "dim": Field(int, 1),
    },
    "jko": {
        "cells": Field(int, 400),
        "domain": Field("number_list", [-6.0, 6.0]),
        "time_step": Field(float, 1e-3),
        "steps": Field(int, 100),
        "sigma0_sq": Field(float, 1.0),
    },
    "fokker_planck": {
        "cells": Field(int, 200),
        "domain": Field("number_list", [0.0, 5.0]),
        "potential": Field(str, "linear"),
        "slope": Field(float, 1.0),
        "t_end": Field(float, 50.0),
        "dt_fraction": Field(float, 0.9),
        "check_boltzmann": Field(bool, True),
        "initial_csv": Field(str, ""),
    },
    "multicomponent": {
        "cells": Field(int, 64),
        "alpha": Field("number_list", [2.0, 2.0]),
        "eta": Field("number_list", [1.0, 1.0]),
        "dt": Field(float, 1e-5),
        "steps": Field(int, 1000),
        "mode": Field(str, "both"),
        "amplitude": Field(float, 0.08),
    },
    "phasefield": {
        "model": Field(str, "cahn_hilliard"),
        "cells": Field(int, 64),
        "length": Field(float, 64.0),
        "mobility": Field(float, 1.0),
        "dt": Field(float, 0.04),
        "steps": Field(int, 10000),
        "amplitude": Field(float, 0.05),
    },
    "particles": {
        "n": Field(int, 1000),
        "dt": Field(float, 2e-3),
        "t_end": Field(float, 1.0),
        "potential": Field(str, "quadratic"),
        "stiffness": Field(float, 1.0),
        "kT": Field(float, 1.0),
        "mobility": Field(float, 1.0),
        "cells": Field(int, 100),
        "domain": Field("number_list", [-6.0, 6.0]),
        "compare_pde": Field(bool, True),
    },
    "ldp": {
        "mode": Field(str, "coin"),
        "a": Field(float, 0.6),
        "n_values": Field("number_list", [100, 500, 2000]),
        "mu": Field("number_list", [0.5, 0.5]),
        "tilt": Field("number_list", []),
        "constraint_coeffs": Field("number_list", []),
        "constraint_bound": Field(float, 0.6),
    },
    "reversibility": {
        "cells": Field(int, 80),
        "steps": Field(int, 60),
        "kT": Field(float, 1.3),
        "mobility": Field("number_list", [1.0, 2.0]),
        "coupling_strength": Field(float, 1.0),
    },
}

CONSTANT_KEYS = ("R", "k", "N_A", "T", "eta", "g", "c0", "rt")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run."""

    experiment: str
    parameters: dict
    constants: PhysicalConstants
    output_dir: Path
    seed: int
    raw: dict = dc_field(default_factory=dict, repr=False)

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _parse_constants(block, errors: list[str]) -> Optional[PhysicalConstants]:
    if not isinstance(block, dict):
        errors.append("constants: expected an object")
        return None
    values = {}
    for key, val in block.items():
        if key not in CONSTANT_KEYS:
            errors.append(f"constants.{key}: unknown key")
            continue
        parsed = _check_type(val, float, f"constants.{key}", errors)
        if parsed is not None:
            values[key] = parsed
    if errors:
        return None
    try:
        rt = values.pop("rt", None)
        if rt is not None:
            return PhysicalConstants.with_rt(rt, **values)
        return PhysicalConstants(**values)
    except ValueError as exc:
        errors.append(f"constants: {exc}")
        return None


def parse_config(obj, *, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Strict-parse a raw JSON object into an ExperimentConfig.

    ``overrides`` may replace ``output_dir`` and ``seed`` (the --out and
    --seed flags).  Raises :class:`ConfigError` listing every problem with
    its key path.
    """
    errors: list[str] = []
    if not isinstance(obj, dict):
        raise ConfigError(["top level: expected a JSON object"])
    allowed_top = {"experiment", "parameters", "constants", "output_dir", "seed"}
    for key in obj:
        if key not in allowed_top:
            errors.append(f"{key}: unknown key")
    if "experiment" not in obj:
        errors.append("experiment: required key missing")
        raise ConfigError(errors)
    experiment = _check_type(obj["experiment"], str, "experiment", errors)
    if experiment is None:
        raise ConfigError(errors)
    if experiment not in SCHEMAS:
        errors.append(
            f"experiment: unknown experiment {experiment!r}; "
            f"choose one of {sorted(SCHEMAS)}"
        )
        raise ConfigError(errors)

    schema = SCHEMAS[experiment]
    params_in = obj.get("parameters", {})
    params: dict[str, Any] = {}
    if not isinstance(params_in, dict):
        errors.append("parameters: expected an object")
    else:
        for key in params_in:
            if key not in schema:
                errors.append(f"parameters.{key}: unknown key")
        for key, field in schema.items():
            if key in params_in:
                parsed = _check_type(params_in[key], field.type, f"parameters.{key}", errors)
                if parsed is not None:
                    params[key] = parsed
            elif field.required:
                errors.append(f"parameters.{key}: required key missing")
            else:
                params[key] = field.default

    constants = PhysicalConstants.with_rt(1.0)
    if "constants" in obj:
        parsed_constants = _parse_constants(obj["constants"], errors)
        if parsed_constants is not None:
            constants = parsed_constants

    output_dir = Path(obj.get("output_dir", "."))
    if "output_dir" in obj:
        out = _check_type(obj["output_dir"], str, "output_dir", errors)
        if out is not None:
            output_dir = Path(out)
    seed = 0
    if "seed" in obj:
        parsed_seed = _check_type(obj["seed"], int, "seed", errors)
        if parsed_seed is not None:
            if not 0 <= parsed_seed < 2**64:
                errors.append("seed: must fit in an unsigned 64-bit integer")
            else:
                seed = parsed_seed

    overrides = overrides or {}
    if "output_dir" in overrides:
        output_dir = Path(overrides["output_dir"])
    if "seed" in overrides:
        seed = int(overrides["seed"])

    if errors:
        raise ConfigError(errors)
    raw = dict(obj)
    raw["output_dir"] = str(output_dir)
    raw["seed"] = seed
    return ExperimentConfig(experiment, params, constants, output_dir, seed, raw)


def load_config(path, *, overrides: Optional[dict] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config file: {exc}"])
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"])
    return parse_config(obj, overrides=overrides)


# -- result writing --------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_result_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


@dataclass
class Invariant:
    passed: bool
    value: Optional[float] = None
    detail: str = ""


class ExperimentOutput:
    def __init__(self):
        self.header: list[str] = []
        self.rows: list[tuple] = []
        self.invariants: dict[str, Invariant] = {}
        self.metrics: dict[str, Any] = {}
        # extra artifact files: name -> writer(path)
        self.artifacts: dict[str, Callable] = {}

    def check(self, name: str, passed: bool, value=None, detail: str = "") -> None:
        self.invariants[name] = Invariant(
            bool(passed), None if value is None else float(value), detail
        )

    @property
    def all_passed(self) -> bool:
        return all(inv.passed for inv in self.invariants.values())


# -- experiment bodies -------------------------------------------------------------


def _exp_entropy(cfg: ExperimentConfig) -> ExperimentOutput:
    out = ExperimentOutput()
    rng = np.random.default_rng(cfg.seed)
    pairs = cfg.parameters["pairs"]
    alphabet = cfg.parameters["alphabet"]
    atoms = np.arange(alphabet)[:, None].astype(float)
    out.header = ["pair", "entropy", "tv", "ckp_slack"]
    violations = {"nonneg": 0, "ckp": 0, "push": 0, "dpi": 0}
    for i in range(pairs):
        mu_w = rng.random(alphabet) + 1e-3
        mu_w /= mu_w.sum()
        nu_w = rng.random(alphabet) + 1e-3
        nu_w /= nu_w.sum()
        mu = measures.DiscreteMeasure(atoms, mu_w)
        nu = measures.DiscreteMeasure(atoms, nu_w)
        h = relative_entropy(mu, nu)
        tv = total_variation(mu, nu)
        slack = h - 2.0 * tv * tv
        if h < 0.0:
            violations["nonneg"] += 1
        if slack < -1e-15:
            violations["ckp"] += 1
        shift = float(rng.normal())
        injective = lambda x: 2.0 * x + shift
        if relative_entropy(
            measures.push_forward(mu, injective), measures.push_forward(nu, injective)
        ) != h:
            violations["push"] += 1
        merge = rng.integers(0, max(2, alphabet - 2), size=alphabet)
        coarse = lambda x: np.array([float(merge[int(x[0])])])
        if (
            relative_entropy(
                measures.push_forward(mu, coarse), measures.push_forward(nu, coarse)
            )
            > h + 1e-12
        ):
            violations["dpi"] += 1
        out.rows.append((i, h, tv, slack))
    out.check("entropy_nonnegative", violations["nonneg"] == 0, violations["nonneg"])
    out.check("ckp_inequality", violations["ckp"] == 0, violations["ckp"])
    out.check("pushforward_invariance_exact", violations["push"] == 0, violations["push"])
    out.check("data_processing_inequality", violations["dpi"] == 0, violations["dpi"])
    out.metrics["pairs"] = pairs
    return out


def _exp_transport(cfg: ExperimentConfig) -> ExperimentOutput:
    out = ExperimentOutput()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.parameters["n_atoms"]
    if n > transport.BRUTEFORCE_MAX_N:
        raise ValueError("transport experiment needs n_atoms <= 9 for the oracle")
    dim = cfg.parameters["dim"]
    out.header = ["instance", "n", "cost", "cost_bruteforce", "delta"]
    plans = []
    max_delta = 0.0
    for i in range(cfg.parameters["instances"]):
        x = rng.normal(size=(n, dim))
        y = rng.normal(size=(n, dim))
        fast = transport.w2_atomic(x, y)
        brute = transport.w2_atomic_bruteforce(x, y)
        delta = abs(fast.cost - brute.cost)
        max_delta = max(max_delta, delta)
        plans.append(fast)
        out.rows.append((i, n, fast.cost, brute.cost, delta))
    out.check("hungarian_equals_bruteforce", max_delta <= 1e-12, max_delta)
    out.metrics["records"] = [transport.transport_plan_record(p) for p in plans]
    out.artifacts["transport.json"] = lambda path: transport.write_transport_json(
        plans, path
    )
    return out


def _exp_jko(cfg: ExperimentConfig) -> ExperimentOutput:
    out = ExperimentOutput()
    p = cfg.parameters
    lo, hi = p["domain"]
    grid = GridDensity1D(lo, hi, np.ones(p["cells"]))
    var0 = p["sigma0_sq"]
    rho = grid.with_values(
        np.exp(-grid.centers**2 / (2 * var0)) / math.sqrt(2 * math.pi * var0)
    ).normalized()
    energy = EnergyFunctional.entropy()
    out.header = ["step", "time", "energy", "variance", "w2_sq", "iters", "grad_norm"]

    def var_of(r):
        mean = r.h * np.sum(r.values * r.centers)
        return float(r.h * np.sum(r.values * (r.centers - mean) ** 2))

    out.rows.append((0, 0.0, energy.value(rho), var_of(rho), 0.0, 0, 0.0))
    worst_ascent = -math.inf
    infos = []
    for k in range(1, p["steps"] + 1):
        rho, info = jko_step_detailed(rho, p["time_step"], energy)
        infos.append(info)
        worst_ascent = max(worst_ascent, info.energy - info.energy_start)
        out.rows.append(
            (
                k,
                k * p["time_step"],
                energy.value(rho),
                var_of(rho),
                info.w2_sq,
                info.iters,
                info.grad_norm,
            )
        )
    from .gradient_flow import write_jko_diagnostics_json

    out.artifacts["jko_diagnostics.json"] = lambda path: write_jko_diagnostics_json(
        infos, path
    )
    variance_final = var_of(rho)
    target = var0 + 2 * p["steps"] * p["time_step"]
    out.check(
        "variance_final_within_2pct",
        abs(variance_final - target) <= 0.02 * target,
        variance_final,
        f"target {target}",
    )
    # each minimizing-movement step certifies descent of its own objective
    out.check("energy_nonincreasing", worst_ascent <= 1e-10, worst_ascent)
    out.metrics["variance_final"] = variance_final
    return out


def _exp_fokker_planck(cfg: ExperimentConfig) -> ExperimentOutput:
    out = ExperimentOutput()
    p = cfg.parameters
    lo, hi = p["domain"]
    grid = GridDensity1D(lo, hi, np.ones(p["cells"]))
    kind = p["potential"]
    if kind == "linear":
        V = lambda x: p["slope"] * x
    elif kind == "quadratic":
        V = lambda x: 0.5 * p["slope"] * x**2
    elif kind == "none":
        V = None
    else:
        raise ValueError(f"unknown potential kind {kind!r}")
    if p["initial_csv"]:
        c0 = measures.read_grid_csv(p["initial_csv"])
        grid = GridDensity1D(c0.a, c0.b, np.ones(c0.cells))
    else:
        c0 = grid.with_values(np.full(grid.cells, 1.0 / (hi - lo)))
    cfl = grid.h**2 * cfg.constants.eta / (2 * cfg.constants.RT)
    dt = p["dt_fraction"] * cfl
    traj = fokker_planck_solve(c0, cfg.constants, V, p["t_end"], dt)
    out.header = ["snapshot", "time", "energy", "mass"]
    for i, t in enumerate(traj.snapshot_times):
        k = int(round(t / dt))
        out.rows.append((i, t, traj.energies[k], traj.masses[k]))
    out.check("mass_conserved", traj.max_mass_drift() <= 1e-10, traj.max_mass_drift())
    out.check(
        "energy_nonincreasing",
        traj.max_energy_increase() <= 1e-12,
        traj.max_energy_increase(),
    )
    if p["check_boltzmann"] and kind == "linear":
        target = np.exp(-p["slope"] * grid.centers / cfg.constants.RT)
        target *= c0.mass() / (grid.h * target.sum())
        l1 = float(grid.h * np.abs(traj.final.values - target).sum())
        out.check("boltzmann_l1", l1 <= 1e-3, l1)
    out.metrics["dt"] = dt
    return out


def _exp_multicomponent(cfg: ExperimentConfig) -> ExperimentOutput:
    out = ExperimentOutput()
    p = cfg.parameters
    alpha = np.asarray(p["alpha"])
    eta = np.asarray(p["eta"])
    if alpha.size != 2 or eta.size != 2:
        raise ValueError("the multicomponent experiment runs two species")
    cells = p["cells"]
    grid = GridDensity1D(0.0, 1.0, np.ones(cells))
    base = 0.5 / alpha[0]
    c1 = base + p["amplitude"] * np.sin(2 * math.pi * grid.centers)
    c2 = (1.0 - alpha[0] * c1) / alpha[1]
    state = MultiSpeciesState(0.0, 1.0, np.stack([c1, c2]), alpha, eta)
    modes = ["global", "local"] if p["mode"] == "both" else [p["mode"]]
    out.header = ["mode", "step", "time", "energy", "mass", "constraint_max_violation"]
    finals = {}
    for mode in modes:
        traj = multicomponent_evolve(state, cfg.constants, p["dt"], p["steps"], mode=mode)
        finals[mode] = traj
        constraint = traj.extra["constraint_max_violation"]
        for i, t in enumerate(traj.snapshot_times):
            k = int(round(t / p["dt"]))
            out.rows.append((mode, k, t, traj.energies[k], traj.masses[k], constraint[k]))
        out.check(
            f"{mode}_volume_constraint",
            constraint.max() <= 1e-8,
            float(constraint.max()),
        )
        out.check(
            f"{mode}_energy_nonincreasing",
            traj.max_energy_increase() <= 1e-12,
            traj.max_energy_increase(),
        )
    if len(modes) == 2:
        gap = float(
            np.abs(
                finals["global"].final.concentrations
                - finals["local"].final.concentrations
            ).max()
        )
        out.check("balance_modes_agree", gap <= 1e-10, gap)
    symmetric = alpha[0] == alpha[1] and eta[0] == eta[1]
    if symmetric:
        single = fokker_planck_solve(
            grid.with_values(c1),
            cfg.constants,
            None,
            p["dt"] * p["steps"],
            p["dt"],
        )
        mode = modes[0]
        gap = float(
            np.abs(finals[mode].final.concentrations[0] - single.final.values).max()
        )
        out.check("matches_single_species", gap <= 1e-6, gap)
    return out


def _exp_phasefield(cfg: ExperimentConfig) -> ExperimentOutput:
    out = ExperimentOutput()
    p = cfg.parameters
    rng = np.random.default_rng(cfg.seed)
    u0 = p["amplitude"] * rng.normal(size=p["cells"])
    state = PhaseFieldState(0.0, p["length"], u0)
    T_end = p["steps"] * p["dt"]
    if p["model"] == "allen_cahn":
        traj = allen_cahn_solve(state, p["mobility"], T_end, p["dt"])
    elif p["model"] == "cahn_hilliard":
        traj = cahn_hilliard_solve(state, p["mobility"], T_end, p["dt"])
    else:
        raise ValueError(f"unknown phase-field model {p['model']!r}")
    out.header = ["step", "time", "energy", "mean"]
    means = traj.extra["mean"]
    for i, t in enumerate(traj.snapshot_times):
        k = int(round(t / p["dt"]))
        out.rows.append((k, t, traj.energies[k], means[k]))
    out.check(
        "energy_nonincreasing",
        traj.max_energy_increase() <= 1e-12,
        traj.max_energy_increase(),
    )
    if p["model"] == "cahn_hilliard":
        drift = float(np.abs(means - means[0]).max())
        out.check("mean_conserved", drift <= 1e-12, drift)
    return out


def _exp_particles(cfg: ExperimentConfig) -> ExperimentOutput:
    out = ExperimentOutput()
    p = cfg.parameters
    kind = p["potential"]
    stiffness = p["stiffness"]
    if kind == "quadratic":
        Vb = lambda x: 0.5 * stiffness * x**2
        grad_Vb = lambda x: stiffness * x
    elif kind == "none":
        Vb, grad_Vb = None, None
    else:
        raise ValueError(f"unknown potential kind {kind!r}")
    lo, hi = p["domain"]
    grid = GridDensity1D(lo, hi, np.ones(p["cells"]))
    start = grid.with_values(
        np.exp(-grid.centers**2 / 0.5) + 1e-6
    ).normalized()
    from .gradient_flow import _quantile_nodes

    positions = _quantile_nodes(start, p["n"])[:, None]
    sigma = math.sqrt(p["kT"] * p["mobility"])
    ens = ParticleEnsemble(
        positions=positions,
        seed=cfg.seed,
        grad_background=grad_Vb,
        A=p["mobility"],
        sigma=sigma,
    )
    _, traj = euler_maruyama(ens, p["dt"], p["t_end"], store_every=10**9)
    final = traj[-1][:, 0]
    out.header = ["particle_id", "x"]
    out.rows = [(i, x) for i, x in enumerate(final)]
    from .particles import write_ensemble_metadata

    out.artifacts["metadata.json"] = lambda path: write_ensemble_metadata(
        ens, p["dt"], p["t_end"], path
    )
    out.check("all_finite", bool(np.isfinite(final).all()))
    hist = empirical_density(final, (lo, hi), p["cells"])
    out.check("histogram_mass_one", abs(hist.mass() - 1.0) <= 1e-12, hist.mass() - 1.0)
    if p["compare_pde"] and kind == "quadratic":
        cfl = grid.h**2 * cfg.constants.eta / (2 * cfg.constants.RT)
        pde = fokker_planck_solve(start, cfg.constants, Vb, p["t_end"], 0.9 * cfl)
        w2 = transport.w2_grid_1d(hist, pde.final)
        out.check("w2_to_pde_small", w2 <= 10.0 / math.sqrt(p["n"]), w2)
    out.metrics["generator_version"] = GENERATOR_VERSION
    out.metrics["A"] = p["mobility"]
    out.metrics["sigma"] = sigma
    return out


def _exp_ldp(cfg: ExperimentConfig) -> ExperimentOutput:
    out = ExperimentOutput()
    p = cfg.parameters
    mode = p["mode"]
    if mode == "coin":
        a = p["a"]
        rate = coin_rate(a)
        out.header = ["n", "tail_rate", "limit_rate", "error"]
        errors = []
        for n in [int(v) for v in p["n_values"]]:
            tail = coin_tail_exact(n, a)
            err = abs(tail - rate)
            errors.append(err)
            out.rows.append((n, tail, rate, err))
        out.check("error_decreasing", all(x > y for x, y in zip(errors, errors[1:])))
        out.check("final_error_small", errors[-1] <= 0.01, errors[-1])
        bound_ok = all(
            coin_tail_exact(int(n), a) >= rate - math.log(int(n) + 1) / int(n)
            for n in p["n_values"]
        )
        out.check("type_counting_lower_bound", bound_ok)
    elif mode == "sanov":
        mu = np.asarray(p["mu"], dtype=float)
        coeffs = (
            np.asarray(p["constraint_coeffs"], dtype=float)
            if p["constraint_coeffs"]
            else np.eye(mu.size)[0]
        )
        constraint = HalfSpace(coeffs, p["constraint_bound"])
        out.header = ["n", "exact_rate", "entropy_infimum", "gap"]
        gaps = []
        for n in [int(v) for v in p["n_values"]]:
            res = sanov_exact(FiniteLdpProblem(mu=mu, n=n), constraint)
            gap = abs(res.exact_rate - res.entropy_infimum)
            gaps.append(gap)
            out.rows.append((n, res.exact_rate, res.entropy_infimum, gap))
        out.check("gap_decreasing", all(x > y for x, y in zip(gaps, gaps[1:])))
        out.check("final_gap_small", gaps[-1] <= 0.05, gaps[-1])
    elif mode == "varadhan":
        mu = np.asarray(p["mu"], dtype=float)
        tilt = np.asarray(p["tilt"], dtype=float) if p["tilt"] else np.zeros(mu.size)
        n = int(p["n_values"][-1])
        table = varadhan_tilt(FiniteLdpProblem(mu=mu, n=n, tilt=tilt))
        out.header = [f"type_{i}" for i in range(mu.size)] + ["exact_rate", "limit_rate"]
        for row, ex, lim in zip(table.types, table.exact_rate, table.limit_rate):
            out.rows.append(tuple(int(v) for v in row) + (ex, lim))
        out.check("limit_rate_nonnegative", float(table.limit_rate.min()) >= -1e-12)
        target = mu * np.exp(-tilt)
        target /= target.sum()
        gap = float(np.abs(table.argmin_exact() - target).max())
        out.check("argmin_matches_tilted_boltzmann", gap <= 0.05, gap)
    else:
        raise ValueError(f"unknown ldp mode {mode!r}")
    return out


def _exp_reversibility(cfg: ExperimentConfig) -> ExperimentOutput:
    out = ExperimentOutput()
    p = cfg.parameters
    cells, steps = p["cells"], p["steps"]
    grid = GridDensity1D(-3.0, 3.0, np.ones(cells))
    x = grid.centers

    def bump(c, w):
        return np.exp(-((x - c) ** 2) / (2 * w**2)) + 0.05

    start = np.stack([bump(-0.8, 0.5), bump(0.6, 0.7)])
    end = np.stack([bump(0.7, 0.8), bump(-0.5, 0.6)])
    ts = np.linspace(0.0, 1.0, steps + 1)
    path1 = np.array([(1 - t) * start + t * end for t in ts])

    def detour(t):
        t0, t1 = min(1.0, 2 * t), max(0.0, 2 * t - 1)
        snap = start.copy()
        snap[0] = (1 - t0) * start[0] + t0 * end[0]
        snap[1] = (1 - t1) * start[1] + t1 * end[1]
        return snap

    path2 = np.array([detour(t) for t in ts])
    coupling = lambda r: p["coupling_strength"] * np.exp(-(r**2))
    mobility = np.asarray(p["mobility"], dtype=float)

    prop_sigma = np.sqrt(p["kT"] * mobility)
    c1p, c2p = reversibility_check(
        cfg.constants, mobility, prop_sigma, path1, path2,
        domain=(-3.0, 3.0), coupling=coupling,
    )
    ratio_breaker = np.array([1.0, math.sqrt(2.0)]) * prop_sigma
    c1n, c2n = reversibility_check(
        cfg.constants, mobility, ratio_breaker, path1, path2,
        domain=(-3.0, 3.0), coupling=coupling,
    )
    out.header = ["case", "crossterm_path1", "crossterm_path2", "gap"]
    out.rows = [
        ("proportional", c1p, c2p, abs(c1p - c2p)),
        ("nonproportional", c1n, c2n, abs(c1n - c2n)),
    ]
    out.check("proportional_agreement", abs(c1p - c2p) <= 1e-6, abs(c1p - c2p))
    out.check("nonproportional_gap", abs(c1n - c2n) > 1e-3, abs(c1n - c2n))
    return out


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentOutput]] = {
    "entropy": _exp_entropy,
    "transport": _exp_transport,
    "jko": _exp_jko,
    "fokker_planck": _exp_fokker_planck,
    "multicomponent": _exp_multicomponent,
    "phasefield": _exp_phasefield,
    "particles": _exp_particles,
    "ldp": _exp_ldp,
    "reversibility": _exp_reversibility,
}


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; write result.csv and summary.json.

    Returns 0 on success, 3 on a runtime model error, 4 if any built-in
    invariant failed.
    """
    config.output_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    status = EXIT_OK
    error_detail = None
    output = None
    try:
        output = EXPERIMENTS[config.experiment](config)
    except Exception as exc:  # model-level failure; recorded, nonzero exit
        status = EXIT_RUNTIME
        error_detail = f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - started

    summary: dict[str, Any] = {
        "experiment": config.experiment,
        "config_hash": config.config_hash(),
        "library_version": __version__,
        "seed": config.seed,
        "wall_time_s": wall,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
        },
        "invariants": {},
    }
    if output is not None:
        write_result_csv(config.output_dir / "result.csv", output.header, output.rows)
        for name, writer in output.artifacts.items():
            writer(config.output_dir / name)
        summary["invariants"] = {
            name: {"passed": inv.passed, "value": inv.value, "detail": inv.detail}
            for name, inv in output.invariants.items()
        }
        summary.update({k: v for k, v in output.metrics.items()})
        if not output.all_passed:
            status = EXIT_INVARIANT
    else:
        summary["error"] = error_detail
    summary["status"] = status
    with open(config.output_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return status


def validate(path) -> tuple[int, list[str]]:
    """Strict-parse report without execution: (status, diagnostics)."""
    try:
        load_config(path)
    except ConfigError as exc:
        return EXIT_CONFIG, exc.diagnostics
    return EXIT_OK, ["ok"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gradflow", description="run or validate gradflow experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute one experiment")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", default=None, help="override output_dir")
    run_p.add_argument("--seed", type=int, default=None, help="override seed")
    val_p = sub.add_parser("validate", help="strict-parse a config without running")
    val_p.add_argument("--config", required=True)
    args = parser.parse_args(argv)

    if args.command == "validate":
        status, diagnostics = validate(args.config)
        for line in diagnostics:
            print(line)
        return status

    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            print("seed: must fit in an unsigned 64-bit integer", file=sys.stderr)
            return EXIT_CONFIG
        overrides["seed"] = args.seed
    try:
        config = load_config(args.config, overrides=overrides)
    except ConfigError as exc:
        for line in exc.diagnostics:
            print(line, file=sys.stderr)
        return EXIT_CONFIG
    status = run(config)
    if status == EXIT_OK:
        print(f"{config.experiment}: ok ({config.output_dir / 'summary.json'})")
    else:
        print(
            f"{config.experiment}: exit status {status}"
            f" (see {config.output_dir / 'summary.json'})",
            file=sys.stderr,
        )
    return status


if __name__ == "__main__":
    sys.exit(main())
