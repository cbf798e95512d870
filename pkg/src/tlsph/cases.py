"""Benchmark case registry: presets, parameter resolution, assembly.

Four cases ship with the package:

cable     elastic wave in a fixed-free rod, linear elastic, analytic oracle
bending   column clamped at the ground, uniform transverse start velocity
twisting  column with a sinusoidal rotational start velocity about its axis
stl       arbitrary watertight STL geometry with band loading at its ends
"""

import numpy as np

from .errors import ConfigurationError
from .geometry import (
    fill_mesh_with_lattice,
    generate_lattice_box,
    initial_velocity_field,
    parse_stl_file,
)
from .materials import LINEAR_ELASTIC, NEO_HOOKEAN, Material
from .solver import Simulation, SimulationConfig
from .system import Constraints, ParticleSystem

_PRESETS = {
    "cable": dict(
        case="cable", dp=0.05, t_end=0.002, cfl=0.6, alpha=0.5,
        gravity=[0.0, 0.0, 0.0], output_interval=None, omega0=None,
        v0=5.0, stl=None, threads=None,
        rho0=8000.0, E=200.0e9, nu=0.0, law=LINEAR_ELASTIC,
    ),
    "bending": dict(
        case="bending", dp=0.125, t_end=1.0, cfl=0.6, alpha=0.5,
        gravity=[0.0, 0.0, 0.0], output_interval=None, omega0=None,
        v0=10.0, stl=None, threads=None,
        rho0=1100.0, E=1.7e7, nu=0.45, law=NEO_HOOKEAN,
    ),
    "twisting": dict(
        case="twisting", dp=0.125, t_end=0.3, cfl=0.6, alpha=0.5,
        gravity=[0.0, 0.0, 0.0], output_interval=None, omega0=105.0,
        v0=None, stl=None, threads=None,
        # nu = None resolves to 0.4995, or 0.49995 once omega0 reaches 300
        rho0=1100.0, E=1.7e7, nu=None, law=NEO_HOOKEAN,
    ),
    "stl": dict(
        case="stl", dp=0.03, t_end=0.02, cfl=0.6, alpha=0.5,
        gravity=[0.0, 0.0, 0.0], output_interval=None, omega0=None,
        v0=5.0, stl=None, threads=None,
        rho0=1100.0, E=1.7e7, nu=0.45, law=NEO_HOOKEAN,
    ),
}

CASE_DESCRIPTIONS = {
    "cable": "elastic wave in a 10 x 0.2 x 0.2 m rod, left end fixed",
    "bending": "1 x 1 x 6 m column clamped at the ground, uniform start velocity",
    "twisting": "1 x 6 x 1 m column, sinusoidal rotational start velocity",
    "stl": "watertight STL geometry, +-v0 band loading at the axial ends",
}


def case_ids():
    return list(_PRESETS)


def default_parameters(case):
    """Flat parameter dict for a case; every key is overridable."""
    if case not in _PRESETS:
        raise ConfigurationError(
            f"unknown case {case!r}; available: {', '.join(_PRESETS)}"
        )
    return dict(_PRESETS[case])


_PARAM_KEYS = set(_PRESETS["cable"]) | {"h"}


def make_config(params):
    """Build a SimulationConfig from a flat parameter dict."""
    unknown = set(params) - _PARAM_KEYS
    if unknown:
        raise ConfigurationError(f"unknown configuration key(s): {sorted(unknown)}")
    params = dict(params)
    case = params.get("case")
    if case not in _PRESETS:
        raise ConfigurationError(f"unknown case {case!r}; available: {', '.join(_PRESETS)}")
    merged = dict(_PRESETS[case])
    merged.update({k: v for k, v in params.items() if k != "h"})

    nu = merged["nu"]
    if nu is None and case == "twisting":
        nu = 0.49995 if (merged["omega0"] or 0.0) >= 300.0 else 0.4995
    if nu is None:
        raise ConfigurationError("Poisson's ratio nu is unset")

    alpha = merged["alpha"]
    if alpha is None or alpha < 0.0:
        raise ConfigurationError(f"damping scale alpha must be >= 0, got {alpha}")
    try:
        material = Material.from_E_nu(
            merged["rho0"], merged["E"], nu, law=merged["law"], alpha=float(alpha)
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None

    if merged["omega0"] is not None and merged["omega0"] <= 0.0:
        raise ConfigurationError(f"omega0 must be positive, got {merged['omega0']}")
    if case == "stl" and not merged["stl"]:
        raise ConfigurationError("the stl case needs an --stl mesh path")

    config = SimulationConfig(
        case=case,
        dp=merged["dp"],
        material=material,
        t_end=merged["t_end"],
        cfl=merged["cfl"],
        gravity=tuple(merged["gravity"]),
        output_interval=merged["output_interval"],
        omega0=merged["omega0"],
        stl_path=merged["stl"],
        v0=merged["v0"],
        threads=merged["threads"],
    )
    if "h" in params and params["h"] is not None:
        if abs(params["h"] - config.h) > 1e-12 * config.h:
            raise ConfigurationError(
                f"configured h = {params['h']} contradicts 1.15 dp = {config.h}"
            )
    return config


def config_to_params(config):
    """Flat, JSON-ready view of a resolved configuration."""
    mat = config.material
    return {
        "case": config.case,
        "dp": config.dp,
        "h": config.h,
        "t_end": config.t_end,
        "cfl": config.cfl,
        "alpha": mat.effective_alpha,
        "gravity": list(config.gravity),
        "output_interval": config.output_interval,
        "omega0": config.omega0,
        "v0": config.v0,
        "stl": config.stl_path,
        "threads": config.threads,
        "rho0": mat.rho0,
        "E": mat.E,
        "nu": mat.nu,
        "law": mat.law,
    }


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _band_velocity(direction):
    direction = np.asarray(direction, dtype=np.float64)

    def fn(t, r0):
        return np.tile(direction, (r0.shape[0], 1))

    return fn


def build_simulation(config):
    """Generate the configured body, tag its regions and bind the probes."""
    case = config.case
    mat = config.material
    h = config.h
    if case == "cable":
        pos, _, _ = generate_lattice_box((10.0, 0.2, 0.2), config.dp)
        system = ParticleSystem(pos, mat.rho0, config.dp)
        system.v[:] = initial_velocity_field("cable", pos, v0=config.v0, length=10.0)
        clamp = pos[:, 0] <= 2.0 * h
        constraints = Constraints(system, clamp_mask=clamp)
        probes = {"tip": (10.0, 0.1, 0.1)}
    elif case == "bending":
        pos, _, _ = generate_lattice_box((1.0, 1.0, 6.0), config.dp)
        system = ParticleSystem(pos, mat.rho0, config.dp)
        system.v[:] = initial_velocity_field("bending", pos, v0=config.v0)
        clamp = pos[:, 2] <= 2.0 * h
        constraints = Constraints(system, clamp_mask=clamp)
        probes = {"point_s": (1.0, 1.0, 6.0)}
    elif case == "twisting":
        pos, _, _ = generate_lattice_box((1.0, 6.0, 1.0), config.dp,
                                         origin=(-0.5, 0.0, -0.5))
        system = ParticleSystem(pos, mat.rho0, config.dp)
        system.v[:] = initial_velocity_field(
            "twisting", pos, omega0=config.omega0, length=6.0
        )
        clamp = pos[:, 1] <= 2.0 * h
        constraints = Constraints(system, clamp_mask=clamp)
        probes = {"free_end": (0.0, 6.0, 0.0)}
    elif case == "stl":
        try:
            mesh = parse_stl_file(config.stl_path)
        except OSError as exc:
            raise ConfigurationError(f"cannot read STL mesh: {exc}") from None
        pos = fill_mesh_with_lattice(mesh, config.dp)
        if pos.shape[0] == 0:
            raise ConfigurationError(
                f"lattice fill of {config.stl_path} produced no particles; "
                f"is dp = {config.dp} too coarse?"
            )
        system = ParticleSystem(pos, mat.rho0, config.dp)
        lo, hi = pos.min(axis=0), pos.max(axis=0)
        axis = int(np.argmax(hi - lo))
        speed = 5.0 if config.v0 is None else config.v0
        direction = np.zeros(3)
        direction[axis] = speed
        top = pos[:, axis] >= hi[axis] - 2.0 * h
        bottom = pos[:, axis] <= lo[axis] + 2.0 * h
        constraints = Constraints(
            system,
            prescribed=[(top, _band_velocity(direction)),
                        (bottom, _band_velocity(-direction))],
        )
        probes = {"center": tuple(0.5 * (lo + hi))}
    else:
        raise ConfigurationError(f"unknown case {case!r}")
    return Simulation(config, system, constraints=constraints, probe_points=probes)
