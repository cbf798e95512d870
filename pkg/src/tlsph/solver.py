"""Discrete total-Lagrangian operators and the explicit time loop.

The spatial operators act on fixed reference-configuration neighbor lists:
a per-particle correction matrix restores first-order consistency of the
kernel-gradient sums, the deformation gradient is integrated from its rate,
and the momentum equation uses an inter-particle averaged first
Piola-Kirchhoff stress so pairwise forces cancel exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import (
    ConfigurationError,
    CorrectionMatrixError,
    ElementInversionError,
    InstabilityError,
)
from .materials import Material
from .neighbors import build_reference_neighborhoods
from .system import ParticleSystem


def compute_correction_matrices(system, neighborhood, ops=None, cond_limit=1e8):
    """Invert the kernel-gradient moment matrix for every particle.

    B0_i = (-sum_j V0_j r0_ij (x) grad0_ij)^-1, computed once before time
    stepping.  Particles whose moment matrix is singular or has a condition
    number above ``cond_limit`` (collinear or missing neighbors) abort with
    their ids.
    """
    ops = ops if ops is not None else backend.get_ops()
    M = ops.moment_matrices(
        neighborhood.offsets, neighborhood.neighbors, neighborhood.owners,
        neighborhood.r0_ij, neighborhood.grad0, system.V0,
    )
    svals = np.linalg.svd(M, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(svals[:, -1] > 0.0, svals[:, 0] / svals[:, -1], np.inf)
    bad = np.flatnonzero(~(cond <= cond_limit))
    if bad.size:
        counts = neighborhood.neighbor_counts()
        detail = "; ".join(
            f"particle {i}: {counts[i]} neighbors, condition {cond[i]:.3e}"
            for i in bad[:5]
        )
        more = "" if bad.size <= 5 else f" (+{bad.size - 5} more)"
        raise CorrectionMatrixError(
            f"degenerate gradient-correction moment matrix for {bad.size} "
            f"particle(s): {detail}{more}"
        )
    B0 = np.linalg.inv(M)
    system.B0 = B0
    return B0


def deformation_gradient_rate(system, neighborhood, ops=None):
    """dF_i/dt = (-sum_j V0_j (v_i - v_j) (x) grad0_ij) B0_i.

    Exact for affine velocity fields at particles with full interior support.
    """
    ops = ops if ops is not None else backend.get_ops()
    return ops.deformation_rates(
        neighborhood.offsets, neighborhood.neighbors, neighborhood.owners,
        neighborhood.grad0, system.V0, system.v, system.B0,
    )


def momentum_rhs(system, neighborhood, stresses, gravity=(0.0, 0.0, 0.0), ops=None):
    """Acceleration from the first Piola-Kirchhoff stress field.

    a_i = (2 / m_i) sum_j V0_i V0_j Ptilde_ij grad0_ij + g with the
    inter-particle average Ptilde_ij = (P_i B0_i + P_j B0_j) / 2.  The
    average is symmetric in (i, j) and the gradient antisymmetric, so an
    unconstrained body conserves linear momentum to roundoff.
    """
    ops = ops if ops is not None else backend.get_ops()
    pb = np.asarray(stresses, dtype=np.float64) @ system.B0
    return ops.accelerations(
        neighborhood.offsets, neighborhood.neighbors, neighborhood.owners,
        neighborhood.grad0, system.V0, pb, system.m,
        np.asarray(gravity, dtype=np.float64),
    )


def stable_timestep(system, material, h, cfl):
    """CFL-limited step: cfl * min(h / (cp + |v|max), sqrt(h / |a|max)).

    The acoustic bound uses the dilatational wave speed
    cp = sqrt((lam + 2 mu) / rho0) rather than the bulk sound speed: cp is
    the fastest signal in the solid, and for small Poisson ratios a step
    sized by the bulk speed is Courant-unstable (a zero-Poisson bar blows
    up with it).
    """
    if not np.isfinite(system.v).all():
        raise InstabilityError("non-finite velocities encountered")
    if not np.isfinite(system.a).all():
        raise InstabilityError("non-finite accelerations encountered")
    vmax = math.sqrt(float(np.max(np.einsum("ik,ik->i", system.v, system.v))))
    amax = math.sqrt(float(np.max(np.einsum("ik,ik->i", system.a, system.a))))
    dt = h / (material.c_dilatational + vmax)
    if amax > 0.0:
        dt = min(dt, math.sqrt(h / amax))
    return cfl * dt


def step_position_verlet(system, dt, forces_callback, rates_callback=None,
                         constraints=None, t=0.0):
    """One two-stage explicit step: half drift, velocity kick, half drift.

    The deformation gradient advances by half-steps of its rate evaluated
    with the velocity field current at each stage, which keeps F consistent
    with the positions to second order.  Clamped particles stay pinned to
    their reference state; prescribed particles keep their imposed velocity
    and advect with it.
    """
    half = 0.5 * dt
    if rates_callback is not None:
        system.dFdt = rates_callback(system)
        system.F += half * system.dFdt
    system.r += half * system.v
    if constraints is not None:
        constraints.enforce_positions(system)
    system.a = forces_callback(system)
    system.v += dt * system.a
    if constraints is not None:
        constraints.enforce_velocities(system, t + dt)
    if rates_callback is not None:
        system.dFdt = rates_callback(system)
        system.F += half * system.dFdt
    system.r += half * system.v
    if constraints is not None:
        constraints.enforce_positions(system)


@dataclass
class SimulationConfig:
    """Fully resolved run parameters; the smoothing length is always 1.15 dp."""

    case: str
    dp: float
    material: Material
    t_end: float
    cfl: float = 0.6
    gravity: tuple = (0.0, 0.0, 0.0)
    output_interval: float = None
    omega0: float = None
    stl_path: str = None
    v0: float = None
    threads: int = None

    H_FACTOR = 1.15

    def __post_init__(self):
        if self.dp <= 0.0:
            raise ConfigurationError(f"particle spacing must be positive, got dp = {self.dp}")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigurationError(f"CFL number must lie in (0, 1], got {self.cfl}")
        if self.t_end < 0.0:
            raise ConfigurationError(f"end time must be non-negative, got {self.t_end}")
        if self.output_interval is not None and self.output_interval <= 0.0:
            raise ConfigurationError("output interval must be positive")

    @property
    def h(self):
        return self.H_FACTOR * self.dp

    def resolved_output_interval(self):
        if self.output_interval is not None:
            return self.output_interval
        return self.t_end / 100.0 if self.t_end > 0.0 else 1.0


class _ProbeRecorder:
    def __init__(self, name, point, system):
        d = system.r0 - np.asarray(point, dtype=np.float64)
        self.index = int(np.argmin(np.einsum("ik,ik->i", d, d)))
        self.name = name
        self.point = np.asarray(point, dtype=np.float64)
        self.times = []
        self.velocities = []
        self.displacements = []

    def record(self, t, system):
        self.times.append(t)
        self.velocities.append(system.v[self.index].copy())
        self.displacements.append(system.u[self.index].copy())


@dataclass
class SimulationResult:
    system: ParticleSystem
    probes: dict
    conservation: dict
    snapshots: list
    n_steps: int
    t_final: float


class Simulation:
    """A prepared run: particle system, neighborhoods, constraints, probes."""

    def __init__(self, config, system, constraints=None, probe_points=None):
        self.config = config
        self.system = system
        self.constraints = constraints
        self.ops = backend.get_ops()
        self.neighborhood = None
        self._probes = [
            _ProbeRecorder(name, point, system)
            for name, point in (probe_points or {}).items()
        ]
        self._pi = config.material.pi_coeff(config.h)
        self._gravity = np.asarray(config.gravity, dtype=np.float64)
        self._prepared = False

    def prepare(self):
        if self._prepared:
            return self
        backend.set_threads(self.config.threads)
        self.neighborhood = build_reference_neighborhoods(self.system.r0, self.config.h)
        compute_correction_matrices(self.system, self.neighborhood, ops=self.ops)
        if self.constraints is not None:
            self.constraints.apply(self.system, 0.0)
        self._prepared = True
        return self

    # -- per-step callbacks -------------------------------------------------

    def _rates(self, system):
        return deformation_gradient_rate(system, self.neighborhood, ops=self.ops)

    def _forces(self, system):
        mat = self.config.material
        nb = self.neighborhood
        pb, J = self.ops.stress_times_b(
            system.F, system.dFdt, system.B0, mat.lam, mat.mu, self._pi, mat.law_code
        )
        jmin = int(np.argmin(J))
        if J[jmin] <= 0.0:
            raise ElementInversionError(jmin, float(J[jmin]))
        return self.ops.accelerations(
            nb.offsets, nb.neighbors, nb.owners, nb.grad0,
            system.V0, pb, system.m, self._gravity,
        )

    def step(self, dt, t=0.0):
        step_position_verlet(
            self.system, dt, self._forces, rates_callback=self._rates,
            constraints=self.constraints, t=t,
        )

    # -- the run loop -------------------------------------------------------

    def run(self, out_dir=None, keep_snapshots=None):
        from . import diagnostics_io as dio

        self.prepare()
        cfg = self.config
        if keep_snapshots is None:
            keep_snapshots = out_dir is None
        writer = dio.RunWriter(out_dir) if out_dir is not None else None

        interval = cfg.resolved_output_interval()
        output_times = []
        if cfg.t_end > 0.0:
            k = 1
            while k * interval < cfg.t_end * (1.0 - 1e-12):
                output_times.append(k * interval)
                k += 1
            output_times.append(cfg.t_end)

        conservation = {key: [] for key in
                        ("time", "mass", "px", "py", "pz", "kinetic", "strain")}
        snapshots = []
        snap_index = 0

        def emit(t):
            nonlocal snap_index
            for probe in self._probes:
                probe.record(t, self.system)
            report = dio.conservation_report(self.system, cfg.material)
            conservation["time"].append(t)
            conservation["mass"].append(report["mass"])
            conservation["px"].append(report["momentum"][0])
            conservation["py"].append(report["momentum"][1])
            conservation["pz"].append(report["momentum"][2])
            conservation["kinetic"].append(report["kinetic_energy"])
            conservation["strain"].append(report["strain_energy"])
            snap = dio.snapshot_from_system(self.system, cfg.material, cfg.h, t)
            if writer is not None:
                writer.write_snapshot(snap, snap_index)
            if keep_snapshots:
                snapshots.append(snap)
            snap_index += 1

        t = 0.0
        n_steps = 0
        emit(t)
        for t_target in output_times:
            while t < t_target:
                try:
                    dt = stable_timestep(self.system, cfg.material, cfg.h, cfg.cfl)
                    remaining = t_target - t
                    if dt >= remaining * (1.0 - 1e-12):
                        dt = remaining
                        t_new = t_target
                    else:
                        t_new = t + dt
                        if t_new == t:  # dt underflowed against t: runaway state
                            raise InstabilityError(
                                f"stable time step collapsed to {dt:.3e} s"
                            )
                    self.step(dt, t)
                except ElementInversionError as exc:
                    raise ElementInversionError(
                        exc.particle, exc.det_f, time=t, step=n_steps
                    ) from None
                except InstabilityError as exc:
                    raise InstabilityError(str(exc), time=t, step=n_steps) from None
                t = t_new
                n_steps += 1
            emit(t)

        probes = {}
        for probe in self._probes:
            probes[f"{probe.name}_velocity"] = dio.ProbeSeries(
                probe_id=f"{probe.name}_velocity",
                particle_index=probe.index,
                times=np.asarray(probe.times),
                values=np.asarray(probe.velocities),
                labels=("vx", "vy", "vz"),
            )
            probes[f"{probe.name}_displacement"] = dio.ProbeSeries(
                probe_id=f"{probe.name}_displacement",
                particle_index=probe.index,
                times=np.asarray(probe.times),
                values=np.asarray(probe.displacements),
                labels=("ux", "uy", "uz"),
            )
        conservation = {key: np.asarray(vals) for key, vals in conservation.items()}
        if writer is not None:
            for series in probes.values():
                writer.write_series(series)
            writer.write_conservation(conservation)

        return SimulationResult(
            system=self.system,
            probes=probes,
            conservation=conservation,
            snapshots=snapshots,
            n_steps=n_steps,
            t_final=t,
        )


def run_simulation(config, out_dir=None, keep_snapshots=None):
    """Assemble the configured case and integrate it to t_end.

    Deterministic for a fixed configuration: neighbor reductions use a fixed
    order, so rerunning a config reproduces probe series bitwise.
    """
    from .cases import build_simulation

    sim = build_simulation(config)
    return sim.run(out_dir=out_dir, keep_snapshots=keep_snapshots)
