"""Structured quad mesh deformation around moving interfaces.

Three fictitious-media models move a fluid mesh with a prescribed
fluid-structure interface motion: a lineal+torsional spring analogy,
a linear-elastic continuum, and a Yeoh hyperelastic solid.  Layered
stiffening, quality metrics, adjoint sensitivity blocks, benchmark
problem generators, and a CLI harness round out the toolkit.
"""

from .errors import (
    ConfigError,
    ConnectivityError,
    ConstraintError,
    DegenerateElementError,
    GeometryError,
    InadmissibleStateError,
    InvalidReferenceError,
    MeshMorphError,
    MotionError,
    NewtonDivergenceError,
    SolverError,
    StepFailureError,
    UnconvergedStateError,
)
from .mesh import QuadMesh, quad_signed_areas, tri_signed_areas
from .quality import (
    QualityReport,
    corner_angles_deg,
    element_area_ratio,
    element_skewness,
    quality_report,
    skewness_from_angles,
)
from .layers import LayerAssignment, apply_stiffening, identify_layers, stiffening_multipliers
from .problems import (
    PrescribedMotion,
    ProblemSpec,
    TriangleProbe,
    build_beam_in_channel,
    build_foil_in_channel,
    build_triangle_compression_probe,
    cantilever_profile_motion,
    interface_centroid,
    prescribe_motion,
)
from .spring import (
    SpringConfig,
    Triangulation,
    deform_spring,
    deform_spring_triangles,
    lineal_stiffness,
    select_diagonals,
    torsional_corner_stiffness,
    torsional_stiffness,
    triangulate,
)
from .elastic import (
    LinearElasticConfig,
    deform_linear_elastic,
    element_stiffness_q4,
    plane_strain_matrix,
)
from .yeoh import (
    EquilibriumState,
    KinematicState,
    YeohConfig,
    deform_hyperelastic,
    internal_forces_and_tangent,
    material_tangent,
    pk2_stress,
    solve_equilibrium,
    yeoh_energy,
)
from .sensitivity import (
    SensitivityBlocks,
    VerificationReport,
    build_interface_mapping,
    compute_blocks,
    dD_du,
    dD_dw,
    dD_dx,
    residual_D,
    tangent_at_equilibrium,
    verify_fd,
)
from .vtk_io import read_vtk, write_metrics_csv, write_motion_csv, write_vtk

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
