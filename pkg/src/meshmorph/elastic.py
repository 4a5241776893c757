"""Linear-elastic mesh deformation with 4-node quad elements.

The mesh is treated as a fictitious plane-strain elastic continuum:
interface nodes carry the prescribed displacements, the remaining
boundary is clamped, and one linear solve (optionally a few re-solves
on updated geometry) moves the interior.  The modulus only scales the
system, so the solution is invariant under it; Poisson's ratio is the
parameter that matters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import assemble, merge_constraints, solve_spd
from .errors import ConfigError, InadmissibleStateError, SolverError, StepFailureError
from .layers import stiffening_multipliers
from .mesh import QuadMesh
from .problems import PrescribedMotion

_CORNER_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_CORNER_ETA = np.array([-1.0, -1.0, 1.0, 1.0])
_GAUSS = (-1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0))


@dataclass(frozen=True)
class LinearElasticConfig:
    """Settings for the fictitious linear-elastic model."""

    elastic_modulus: float = 1.0
    poisson_ratio: float = 0.3
    n_iterations: int = 1
    layer_factors: tuple = ()

    def __post_init__(self):
        if self.elastic_modulus <= 0.0:
            raise ConfigError("elastic_modulus must be positive")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ConfigError("poisson_ratio must lie in [0, 0.5)")
        if self.n_iterations < 1:
            raise ConfigError("n_iterations must be at least 1")


def plane_strain_matrix(elastic_modulus, poisson_ratio):
    """3x3 plane-strain constitutive matrix (Voigt, engineering shear)."""
    e, nu = elastic_modulus, poisson_ratio
    c = e / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return c * np.array([
        [1.0 - nu, nu, 0.0],
        [nu, 1.0 - nu, 0.0],
        [0.0, 0.0, (1.0 - 2.0 * nu) / 2.0],
    ])


def shape_gradients(xi, eta):
    """(4, 2) gradients of the bilinear shape functions at (xi, eta)."""
    d_xi = 0.25 * _CORNER_XI * (1.0 + eta * _CORNER_ETA)
    d_eta = 0.25 * _CORNER_ETA * (1.0 + xi * _CORNER_XI)
    return np.column_stack([d_xi, d_eta])


def gauss_points():
    """The 2x2 Gauss rule on the bi-unit square; weights are all 1."""
    return [(xi, eta) for eta in _GAUSS for xi in _GAUSS]


def element_stiffness_q4_batch(corners, constitutive):
    """(m, 8, 8) stiffness blocks for (m, 4, 2) corner coordinates."""
    corners = np.asarray(corners, dtype=np.float64)
    m = corners.shape[0]
    stiff = np.zeros((m, 8, 8))
    for xi, eta in gauss_points():
        grads = shape_gradients(xi, eta)
        jac = np.einsum("mia,ib->mab", corners, grads)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(det <= 0.0):
            bad = int(np.flatnonzero(det <= 0.0)[0])
            raise InadmissibleStateError(
                f"non-positive Jacobian at a Gauss point of element {bad}"
            )
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1]
        inv[:, 1, 1] = jac[:, 0, 0]
        inv[:, 0, 1] = -jac[:, 0, 1]
        inv[:, 1, 0] = -jac[:, 1, 0]
        inv /= det[:, None, None]
        dndx = np.einsum("ib,mba->mia", grads, inv)
        b_mat = np.zeros((m, 3, 8))
        b_mat[:, 0, 0::2] = dndx[:, :, 0]
        b_mat[:, 1, 1::2] = dndx[:, :, 1]
        b_mat[:, 2, 0::2] = dndx[:, :, 1]
        b_mat[:, 2, 1::2] = dndx[:, :, 0]
        stiff += np.einsum(
            "mji,jk,mkl->mil", b_mat, constitutive, b_mat
        ) * det[:, None, None]
    return stiff


def element_stiffness_q4(corner_coords, config: LinearElasticConfig, factor=1.0):
    """8x8 stiffness of one quad, scaled by its stiffening factor."""
    constitutive = plane_strain_matrix(config.elastic_modulus, config.poisson_ratio)
    return element_stiffness_q4_batch(
        np.asarray(corner_coords, dtype=np.float64)[None], constitutive
    )[0] * factor


def _element_dofs(quads):
    dofs = np.empty((quads.shape[0], 8), dtype=np.intp)
    dofs[:, 0::2] = 2 * quads
    dofs[:, 1::2] = 2 * quads + 1
    return dofs


def deform_linear_elastic(mesh: QuadMesh, motion: PrescribedMotion,
                          config: LinearElasticConfig = LinearElasticConfig()) -> QuadMesh:
    """Deform the mesh as a fictitious linear-elastic continuum.

    The default is a single solve; ``n_iterations > 1`` re-solves equal
    motion increments on the updated geometry.
    """
    mesh.validate_reference()
    constitutive = plane_strain_matrix(config.elastic_modulus, config.poisson_ratio)
    multipliers = stiffening_multipliers(mesh, mesh.interface, config.layer_factors)
    dof_map = _element_dofs(mesh.quads)

    move_dofs, move_vals = motion.dof_values()
    fixed = np.setdiff1d(mesh.fixed_nodes(), motion.node_indices)
    fixed_dofs = np.concatenate([2 * fixed, 2 * fixed + 1])
    dofs, vals = merge_constraints(
        np.concatenate([move_dofs, fixed_dofs]),
        np.concatenate([move_vals, np.zeros(fixed_dofs.size)]),
    )

    coords = mesh.nodes
    step_vals = vals / config.n_iterations
    for step in range(config.n_iterations):
        try:
            blocks = element_stiffness_q4_batch(coords[mesh.quads], constitutive)
            blocks *= multipliers[:, None, None]
            mat, rhs = assemble(
                [(blocks, dof_map)], mesh.n_dofs, constraints=(dofs, step_vals)
            )
            x = solve_spd(mat, rhs, context=f"elastic step {step}")
        except (SolverError, InadmissibleStateError) as exc:
            raise StepFailureError(f"elastic step failed: {exc}", step=step) from exc
        coords = coords + x.reshape(-1, 2)
    return mesh.with_coords(coords)
