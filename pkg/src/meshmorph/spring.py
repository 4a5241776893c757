"""Spring-analogy mesh deformation with lineal and torsional springs.

Every quad contributes a local spring system built from a triangulation
of itself: lineal springs along its four edges and the active
diagonal(s), plus torsional springs at the corners of each triangle.
Summing per-quad contributions means an edge shared by two quads is
backed by two springs, which keeps selective stiffening a purely local
scaling of one quad's contribution.

The interface motion is applied in equal increments; the stiffness is
rebuilt from the current geometry before each step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .assembly import assemble, merge_constraints, solve_spd
from .errors import ConfigError, DegenerateElementError, SolverError, StepFailureError
from .layers import stiffening_multipliers
from .mesh import QuadMesh
from .problems import PrescribedMotion
from .quality import corner_angles_deg, skewness_from_angles

STRATEGIES = ("diag13", "diag24", "both", "selective")

# local corner indices (counter-clockwise from bottom-left)
_TRIS_13 = np.array([(0, 1, 2), (0, 2, 3)], dtype=np.intp)
_TRIS_24 = np.array([(0, 1, 3), (1, 2, 3)], dtype=np.intp)
_EDGES_QUAD = np.array([(0, 1), (1, 2), (2, 3), (3, 0)], dtype=np.intp)
_EDGE_13 = np.array([(0, 2)], dtype=np.intp)
_EDGE_24 = np.array([(1, 3)], dtype=np.intp)


@dataclass(frozen=True)
class SpringConfig:
    """Settings for the spring-analogy model.

    ``geometric_scale`` solves the uniformly scaled problem (coordinates
    and motion multiplied by it) and maps the result back, which shifts
    the lineal/torsional balance without touching ``torsional_scale``.

    The overlaid-diagonals strategy is the default: it is the only one
    whose quality improves monotonically with ``n_steps`` on every
    benchmark problem, at roughly double the assembly cost.
    """

    strategy: str = "both"
    n_steps: int = 30
    trial_fraction: float = 0.2
    torsional_scale: float = 1.0
    geometric_scale: float = 1.0
    layer_factors: tuple = ()

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown spring strategy {self.strategy!r}")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be at least 1")
        if not 0.0 < self.trial_fraction <= 1.0:
            raise ConfigError("trial_fraction must lie in (0, 1]")
        if self.torsional_scale < 0.0:
            raise ConfigError("torsional_scale must be non-negative")
        if self.geometric_scale <= 0.0:
            raise ConfigError("geometric_scale must be positive")


@dataclass(frozen=True)
class Triangulation:
    """Springs of a mesh: triangles for torsion, edges for lineal springs.

    ``tri_parent`` and ``edge_parent`` map each entry to the element it
    came from, so per-element stiffening factors can be broadcast.
    """

    tris: np.ndarray
    tri_parent: np.ndarray
    edges: np.ndarray
    edge_parent: np.ndarray


def triangulate(mesh: QuadMesh, strategy: str, per_quad_choice=None) -> Triangulation:
    """Split each quad along the requested diagonal(s).

    ``per_quad_choice`` holds 13 or 24 per quad and is required for the
    selective strategy.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown spring strategy {strategy!r}")
    quads = mesh.quads
    if strategy == "selective":
        if per_quad_choice is None:
            raise ConfigError("selective triangulation needs a per-quad diagonal choice")
        choice = np.asarray(per_quad_choice, dtype=np.intp).ravel()
        if choice.shape != (mesh.n_quads,) or not np.all(np.isin(choice, (13, 24))):
            raise ConfigError("per-quad choice must list 13 or 24 for every quad")
        tris = np.where(
            (choice == 13)[:, None, None], quads[:, _TRIS_13], quads[:, _TRIS_24]
        ).reshape(-1, 3)
        diag = np.where((choice == 13)[:, None, None], quads[:, _EDGE_13], quads[:, _EDGE_24])
        edges = np.concatenate([quads[:, _EDGES_QUAD], diag], axis=1).reshape(-1, 2)
        tri_parent = np.repeat(np.arange(mesh.n_quads), 2)
        edge_parent = np.repeat(np.arange(mesh.n_quads), 5)
    elif strategy == "both":
        tris = np.concatenate([quads[:, _TRIS_13], quads[:, _TRIS_24]], axis=1).reshape(-1, 3)
        edges = np.concatenate(
            [quads[:, _EDGES_QUAD], quads[:, _EDGE_13], quads[:, _EDGES_QUAD], quads[:, _EDGE_24]],
            axis=1,
        ).reshape(-1, 2)
        tri_parent = np.repeat(np.arange(mesh.n_quads), 4)
        edge_parent = np.repeat(np.arange(mesh.n_quads), 10)
    else:
        local_tris = _TRIS_13 if strategy == "diag13" else _TRIS_24
        local_diag = _EDGE_13 if strategy == "diag13" else _EDGE_24
        tris = quads[:, local_tris].reshape(-1, 3)
        edges = np.concatenate([quads[:, _EDGES_QUAD], quads[:, local_diag]], axis=1).reshape(-1, 2)
        tri_parent = np.repeat(np.arange(mesh.n_quads), 2)
        edge_parent = np.repeat(np.arange(mesh.n_quads), 5)
    return Triangulation(tris=tris, tri_parent=tri_parent, edges=edges, edge_parent=edge_parent)


def triangulation_from_tris(tris) -> Triangulation:
    """Springs for a raw triangle mesh: three edges and one torsional set per triangle."""
    tris = np.asarray(tris, dtype=np.intp)
    corners = np.array([(0, 1), (1, 2), (2, 0)], dtype=np.intp)
    edges = tris[:, corners].reshape(-1, 2)
    return Triangulation(
        tris=tris,
        tri_parent=np.arange(tris.shape[0]),
        edges=edges,
        edge_parent=np.repeat(np.arange(tris.shape[0]), 3),
    )


def lineal_stiffness_batch(coords, edges):
    """(E, 4, 4) lineal spring matrices, stiffness 1/length."""
    edges = np.asarray(edges, dtype=np.intp)
    d = coords[edges[:, 1]] - coords[edges[:, 0]]
    length_sq = np.einsum("ei,ei->e", d, d)
    if np.any(length_sq == 0.0):
        raise DegenerateElementError("zero-length spring edge")
    length = np.sqrt(length_sq)
    t = d / length[:, None]
    outer = t[:, :, None] * t[:, None, :] / length[:, None, None]
    k = np.empty((edges.shape[0], 4, 4))
    k[:, :2, :2] = outer
    k[:, 2:, 2:] = outer
    k[:, :2, 2:] = -outer
    k[:, 2:, :2] = -outer
    return k


def lineal_stiffness(p0, p1):
    """4x4 lineal spring matrix for one edge."""
    coords = np.array([p0, p1], dtype=np.float64)
    return lineal_stiffness_batch(coords, np.array([[0, 1]]))[0]


def torsional_stiffness_batch(coords, tris, scale=1.0):
    """(T, 6, 6) torsional spring matrices.

    Each corner carries stiffness C = l_a^2 l_b^2 / (4 A^2) from its two
    adjacent edge lengths and the triangle area; the projection matrix
    maps nodal displacements to corner angle changes and annihilates
    rigid motions.
    """
    tris = np.asarray(tris, dtype=np.intp)
    pi = coords[tris[:, 0]]
    pj = coords[tris[:, 1]]
    pk = coords[tris[:, 2]]
    dij = pj - pi
    djk = pk - pj
    dik = pk - pi
    l2_ij = np.einsum("ei,ei->e", dij, dij)
    l2_jk = np.einsum("ei,ei->e", djk, djk)
    l2_ik = np.einsum("ei,ei->e", dik, dik)
    twice_area = dij[:, 0] * dik[:, 1] - dij[:, 1] * dik[:, 0]
    if np.any(twice_area == 0.0) or np.any(l2_ij * l2_jk * l2_ik == 0.0):
        raise DegenerateElementError("zero-area triangle in torsional spring")

    a_ij = dij[:, 0] / l2_ij
    b_ij = dij[:, 1] / l2_ij
    a_jk = djk[:, 0] / l2_jk
    b_jk = djk[:, 1] / l2_jk
    a_ik = dik[:, 0] / l2_ik
    b_ik = dik[:, 1] / l2_ik
    a_ji, b_ji = -a_ij, -b_ij
    a_kj, b_kj = -a_jk, -b_jk
    a_ki, b_ki = -a_ik, -b_ik

    n = tris.shape[0]
    proj = np.empty((n, 3, 6))
    proj[:, 0, 0] = b_ik - b_ij
    proj[:, 0, 1] = a_ij - a_ik
    proj[:, 0, 2] = b_ij
    proj[:, 0, 3] = -a_ij
    proj[:, 0, 4] = -b_ik
    proj[:, 0, 5] = a_ik
    proj[:, 1, 0] = -b_ji
    proj[:, 1, 1] = a_ji
    proj[:, 1, 2] = b_ji - b_jk
    proj[:, 1, 3] = a_jk - a_ji
    proj[:, 1, 4] = b_jk
    proj[:, 1, 5] = -a_jk
    proj[:, 2, 0] = b_ki
    proj[:, 2, 1] = -a_ki
    proj[:, 2, 2] = -b_kj
    proj[:, 2, 3] = a_kj
    proj[:, 2, 4] = b_kj - b_ki
    proj[:, 2, 5] = a_ki - a_kj

    four_area_sq = twice_area**2
    stiff = np.stack(
        [l2_ij * l2_ik, l2_ij * l2_jk, l2_ik * l2_jk], axis=1
    ) / four_area_sq[:, None]
    return np.einsum("tam,ta,tan->tmn", proj, stiff * scale, proj)


def torsional_stiffness(tri_coords, scale=1.0):
    """6x6 torsional spring matrix for one triangle."""
    coords = np.asarray(tri_coords, dtype=np.float64)
    return torsional_stiffness_batch(coords, np.array([[0, 1, 2]]), scale)[0]


def torsional_corner_stiffness(tri_coords):
    """Corner spring constants (C_i, C_j, C_k) of one triangle.

    C at a vertex is the product of the squared lengths of its two
    incident edges over four times the squared area.
    """
    coords = np.asarray(tri_coords, dtype=np.float64)
    dij = coords[1] - coords[0]
    djk = coords[2] - coords[1]
    dik = coords[2] - coords[0]
    l2_ij = float(dij @ dij)
    l2_jk = float(djk @ djk)
    l2_ik = float(dik @ dik)
    twice_area = dij[0] * dik[1] - dij[1] * dik[0]
    if twice_area == 0.0 or l2_ij * l2_jk * l2_ik == 0.0:
        raise DegenerateElementError("zero-area triangle in torsional spring")
    four_area_sq = twice_area**2
    return np.array([l2_ij * l2_ik, l2_ij * l2_jk, l2_ik * l2_jk]) / four_area_sq


def _edge_dofs(edges):
    dofs = np.empty((edges.shape[0], 4), dtype=np.intp)
    dofs[:, 0::2] = 2 * edges
    dofs[:, 1::2] = 2 * edges + 1
    return dofs


def _tri_dofs(tris):
    dofs = np.empty((tris.shape[0], 6), dtype=np.intp)
    dofs[:, 0::2] = 2 * tris
    dofs[:, 1::2] = 2 * tris + 1
    return dofs


def _march(coords, triang, edge_mult, tri_mult, prescribed_dofs, total_values,
           n_steps, torsional_scale):
    """Incremental solves; returns the final coordinates."""
    n_dofs = 2 * coords.shape[0]
    edge_dofs = _edge_dofs(triang.edges)
    tri_dofs = _tri_dofs(triang.tris)
    step_values = total_values / n_steps
    for step in range(n_steps):
        try:
            lineal = lineal_stiffness_batch(coords, triang.edges) * edge_mult[:, None, None]
            torsional = (
                torsional_stiffness_batch(coords, triang.tris, torsional_scale)
                * tri_mult[:, None, None]
            )
            mat, rhs = assemble(
                [(lineal, edge_dofs), (torsional, tri_dofs)],
                n_dofs,
                constraints=(prescribed_dofs, step_values),
            )
            x = solve_spd(mat, rhs, context=f"spring step {step}")
        except (SolverError, DegenerateElementError) as exc:
            raise StepFailureError(f"spring step failed: {exc}", step=step) from exc
        coords = coords + x.reshape(-1, 2)
    return coords


def _spring_constraints(mesh: QuadMesh, motion: PrescribedMotion):
    move_dofs, move_vals = motion.dof_values()
    fixed = mesh.fixed_nodes()
    fixed = np.setdiff1d(fixed, motion.node_indices)
    fixed_dofs = np.concatenate([2 * fixed, 2 * fixed + 1])
    dofs = np.concatenate([move_dofs, fixed_dofs])
    vals = np.concatenate([move_vals, np.zeros(fixed_dofs.size)])
    return merge_constraints(dofs, vals)


def select_diagonals(mesh: QuadMesh, motion: PrescribedMotion,
                     config: SpringConfig) -> np.ndarray:
    """Pick the better diagonal per quad from two cheap trial solves.

    Both fixed splits deform a fraction of the motion in a single step;
    each quad keeps the diagonal that leaves it less skewed.  Ties go to
    the 1-3 diagonal.
    """
    trial = replace(config, n_steps=1, strategy="diag13")
    scores = []
    for strategy in ("diag13", "diag24"):
        deformed = deform_spring(mesh, motion.scaled(config.trial_fraction),
                                 replace(trial, strategy=strategy))
        angles = corner_angles_deg(deformed.corner_coords())
        scores.append(skewness_from_angles(angles))
    return np.where(scores[0] >= scores[1], 13, 24).astype(np.intp)


def deform_spring(mesh: QuadMesh, motion: PrescribedMotion,
                  config: SpringConfig = SpringConfig(),
                  per_quad_choice=None) -> QuadMesh:
    """Deform a quad mesh by the spring analogy.

    With the selective strategy the per-quad diagonal choice is computed
    by ``select_diagonals`` unless supplied.
    """
    mesh.validate_reference()
    strategy = config.strategy
    if strategy == "selective" and per_quad_choice is None:
        per_quad_choice = select_diagonals(mesh, motion, config)
    triang = triangulate(mesh, strategy, per_quad_choice)
    multipliers = stiffening_multipliers(mesh, mesh.interface, config.layer_factors)
    edge_mult = multipliers[triang.edge_parent]
    tri_mult = multipliers[triang.tri_parent]
    dofs, vals = _spring_constraints(mesh, motion)

    gsc = config.geometric_scale
    coords = _march(
        mesh.nodes * gsc,
        triang,
        edge_mult,
        tri_mult,
        dofs,
        vals * gsc,
        config.n_steps,
        config.torsional_scale,
    )
    return mesh.with_coords(coords / gsc)


def deform_spring_triangles(nodes, tris, fixed_nodes, prescribed_nodes,
                            prescribed_disps, config: SpringConfig = SpringConfig()) -> np.ndarray:
    """Spring-analogy deformation of a raw triangle mesh.

    Used by the triangle compression probe; returns the deformed
    coordinates.  Strategy and layer settings in ``config`` are ignored;
    every triangle contributes its edges and torsional springs once.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    triang = triangulation_from_tris(tris)
    prescribed_nodes = np.asarray(prescribed_nodes, dtype=np.intp).ravel()
    prescribed_disps = np.asarray(prescribed_disps, dtype=np.float64).reshape(-1, 2)
    fixed = np.setdiff1d(np.asarray(fixed_nodes, dtype=np.intp).ravel(), prescribed_nodes)
    dofs = np.concatenate([
        2 * prescribed_nodes, 2 * prescribed_nodes + 1, 2 * fixed, 2 * fixed + 1,
    ])
    vals = np.concatenate([
        prescribed_disps[:, 0], prescribed_disps[:, 1], np.zeros(2 * fixed.size),
    ])
    dofs, vals = merge_constraints(dofs, vals)

    gsc = config.geometric_scale
    ones = np.ones(triang.tri_parent.size)
    coords = _march(
        nodes * gsc,
        triang,
        np.ones(triang.edge_parent.size),
        ones,
        dofs,
        vals * gsc,
        config.n_steps,
        config.torsional_scale,
    )
    return coords / gsc
