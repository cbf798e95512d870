"""Derived stress measures, probes, conservation sums and CSV/VTK output.

All reductions run in a fixed order so repeated runs produce bitwise
identical reports; the CSV writer keeps 17 significant digits so values
round-trip exactly.
"""

import os
from dataclasses import dataclass

import numpy as np

from .errors import ElementInversionError
from .materials import second_pk, strain_energy_density

_EYE = np.eye(3)


def cauchy_stress(F, S):
    """Push-forward sigma = J^-1 F S F^T of a second Piola-Kirchhoff stress."""
    F = np.asarray(F, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    J = np.linalg.det(F)
    flat = np.atleast_1d(J)
    if np.any(flat <= 0.0):
        bad = int(np.argmin(flat))
        raise ElementInversionError(bad, float(flat[bad]))
    Ft = np.swapaxes(F, -1, -2)
    return (F @ S @ Ft) / np.asarray(J)[..., None, None]


def von_mises(sigma):
    """sqrt(3/2 dev(sigma) : dev(sigma)); zero iff sigma is hydrostatic."""
    sigma = np.asarray(sigma, dtype=np.float64)
    tr = np.trace(sigma, axis1=-2, axis2=-1)
    dev = sigma - (tr / 3.0)[..., None, None] * _EYE
    sq = np.einsum("...ij,...ij->...", dev, dev)
    return np.sqrt(np.maximum(1.5 * sq, 0.0))


def oscillation_metric(series):
    """Total variation sum(|x[k+1] - x[k]|); offset-invariant."""
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ValueError("oscillation_metric expects a 1D series")
    if series.shape[0] < 2:
        raise ValueError("need at least two samples")
    return float(np.sum(np.abs(np.diff(series))))


def conservation_report(system, material):
    """Total mass, linear momentum, kinetic and stored elastic energy."""
    ke = 0.5 * float(np.sum(system.m * np.einsum("ik,ik->i", system.v, system.v)))
    momentum = np.sum(system.m[:, None] * system.v, axis=0)
    strain = float(np.sum(system.V0 * strain_energy_density(system.F, material)))
    return {
        "mass": system.total_mass(),
        "momentum": momentum,
        "kinetic_energy": ke,
        "strain_energy": strain,
    }


@dataclass(frozen=True)
class ProbeSeries:
    """Time-stamped samples of one quantity at one (Lagrangian) particle."""

    probe_id: str
    particle_index: int
    times: np.ndarray
    values: np.ndarray
    labels: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if v.shape[0] != t.shape[0]:
            raise ValueError("times and values disagree in length")
        if t.shape[0] > 1 and not np.all(np.diff(t) > 0.0):
            raise ValueError("sample times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def component(self, label):
        return self.values[:, self.labels.index(label)]


@dataclass(frozen=True)
class Snapshot:
    """Per-particle state at one output time."""

    time: float
    positions: np.ndarray
    velocities: np.ndarray
    displacements: np.ndarray
    von_mises: np.ndarray
    det_f: np.ndarray

    def __post_init__(self):
        n = self.positions.shape[0]
        for name in ("velocities", "displacements", "von_mises", "det_f"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"snapshot field {name} length mismatch")

    @property
    def n(self):
        return self.positions.shape[0]


def snapshot_from_system(system, material, h, t):
    """Build a Snapshot, deriving von Mises stress from the total stress."""
    S = second_pk(system.F, system.dFdt, material, h)
    sigma = cauchy_stress(system.F, S)
    return Snapshot(
        time=float(t),
        positions=system.r.copy(),
        velocities=system.v.copy(),
        displacements=system.u.copy(),
        von_mises=np.atleast_1d(von_mises(sigma)),
        det_f=np.atleast_1d(np.linalg.det(system.F)),
    )


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def write_csv_series(series, path):
    """CSV with header time,<labels>; full float round-trip precision."""
    with open(path, "w") as fh:
        fh.write("time," + ",".join(series.labels) + "\n")
        for t, row in zip(series.times, series.values):
            fh.write(_fmt(t) + "," + ",".join(_fmt(x) for x in row) + "\n")


def read_csv_series(path, probe_id=None, particle_index=-1):
    """Inverse of write_csv_series."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array([[float(x) for x in row] for row in rows])
    if data.size == 0:
        data = data.reshape(0, len(header))
    return ProbeSeries(
        probe_id=probe_id or os.path.splitext(os.path.basename(path))[0],
        particle_index=particle_index,
        times=data[:, 0],
        values=data[:, 1:],
        labels=tuple(header[1:]),
    )


def write_vtk_snapshot(snapshot, path):
    """Legacy ASCII POLYDATA with velocity, displacement, von Mises, det F."""
    n = snapshot.n
    lines = [
        "# vtk DataFile Version 3.0",
        f"particle snapshot t={snapshot.time:.9e}",
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {n} double",
    ]
    for p in snapshot.positions:
        lines.append(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    lines.append(f"VERTICES {n} {2 * n}")
    for k in range(n):
        lines.append(f"1 {k}")
    lines.append(f"POINT_DATA {n}")
    lines.append("VECTORS velocity double")
    for v in snapshot.velocities:
        lines.append(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    lines.append("VECTORS displacement double")
    for u in snapshot.displacements:
        lines.append(f"{_fmt(u[0])} {_fmt(u[1])} {_fmt(u[2])}")
    lines.append("SCALARS von_mises double 1")
    lines.append("LOOKUP_TABLE default")
    for x in snapshot.von_mises:
        lines.append(_fmt(x))
    lines.append("SCALARS det_F double 1")
    lines.append("LOOKUP_TABLE default")
    for x in snapshot.det_f:
        lines.append(_fmt(x))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_conservation_csv(conservation, path):
    keys = ("time", "mass", "px", "py", "pz", "kinetic", "strain")
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for k in range(len(conservation["time"])):
            fh.write(",".join(_fmt(conservation[key][k]) for key in keys) + "\n")


class RunWriter:
    """Owns one output directory: probes, snapshots, conservation."""

    def __init__(self, out_dir):
        self.out_dir = str(out_dir)
        os.makedirs(self.out_dir, exist_ok=True)

    def _path(self, name):
        return os.path.join(self.out_dir, name)

    def write_snapshot(self, snapshot, index):
        write_vtk_snapshot(snapshot, self._path(f"snapshot_{index}.vtk"))

    def write_series(self, series):
        write_csv_series(series, self._path(f"{series.probe_id}.csv"))

    def write_conservation(self, conservation):
        write_conservation_csv(conservation, self._path("conservation.csv"))
