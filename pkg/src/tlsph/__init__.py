"""Total-Lagrangian SPH solid dynamics with a Kelvin-Voigt artificial damper.

Neighbor lists and kernel gradients live in the reference configuration and
never change; a per-particle correction matrix restores first-order
consistency of the discrete gradients.  Stabilization adds pi * dE/dt to the
second Piola-Kirchhoff stress with pi = alpha rho0 c h (alpha = 0.5 by
default; alpha = 0 recovers the undamped scheme exactly).
"""

from .errors import (
    ConfigurationError,
    CorrectionMatrixError,
    DuplicateParticlesError,
    ElementInversionError,
    InstabilityError,
    NumericalError,
    StlParseError,
    TlsphError,
    WatertightnessError,
)
from .kernels import SmoothingKernel, wendland_gradient, wendland_value
from .materials import (
    LINEAR_ELASTIC,
    NEO_HOOKEAN,
    Material,
    damping_coefficient,
    first_pk,
    green_lagrange,
    kv_damping_S,
    lame_from_E_nu,
    linear_elastic_S,
    neo_hookean_S,
)
from .neighbors import ReferenceNeighborhood, build_reference_neighborhoods
from .system import Constraints, ParticleSystem, apply_constraints
from .solver import (
    Simulation,
    SimulationConfig,
    SimulationResult,
    compute_correction_matrices,
    deformation_gradient_rate,
    momentum_rhs,
    run_simulation,
    stable_timestep,
    step_position_verlet,
)
from .geometry import (
    BodyRegion,
    TriangleMesh,
    fill_mesh_with_lattice,
    generate_lattice_box,
    initial_velocity_field,
    parse_stl,
    parse_stl_file,
)
from .diagnostics_io import (
    ProbeSeries,
    Snapshot,
    cauchy_stress,
    conservation_report,
    oscillation_metric,
    von_mises,
    write_csv_series,
    write_vtk_snapshot,
)
from .oracles import (
    CableWave,
    affine_motion_oracle,
    cable_tip_history,
    energy_gradient_oracle,
)

__version__ = "0.1.0"
