"""Mesh-deformation block of the coupled adjoint chain.

At a converged hyperelastic equilibrium the mesh residual is treated as
an implicit constraint: prescribed rows read u - x, free rows read the
negated internal forces.  Its derivative blocks are assembled from the
tangent with a rows-only boundary treatment (prescribed rows replaced
by identity rows, free rows untouched), so

    dD/dx = -K_treated            dD/du = -K_treated @ N

with N the 0/1 selector that maps structural displacements onto the
shared interface DOFs.  The residual has no fluid-state dependence; a
zero block is exposed so a downstream assembler can still wire it.

All finite-difference verification here is central-difference over an
h-schedule, reporting the best h per block, with a re-solve behind each
u-perturbation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import GeometryError, UnconvergedStateError
from .mesh import QuadMesh
from .yeoh import EquilibriumState, internal_forces_and_tangent, solve_equilibrium

DX_THRESHOLD = 1e-6
DU_THRESHOLD = 1e-5
DEFAULT_H_SCHEDULE = (1e-4, 1e-5, 1e-6, 1e-7)


@dataclass(frozen=True)
class SensitivityBlocks:
    """Derivative blocks of the mesh residual at one equilibrium."""

    tangent: sp.csr_matrix
    interface_mapping: sp.csr_matrix
    dD_dx: sp.csr_matrix
    dD_du: sp.csr_matrix


@dataclass(frozen=True)
class BlockCheck:
    block: str
    best_h: float
    relative_error: float
    threshold: float
    passed: bool
    errors_by_h: tuple


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def check(self, block):
        for c in self.checks:
            if c.block == block:
                return c
        raise KeyError(block)


def _require_converged(state: EquilibriumState):
    if not state.converged:
        raise UnconvergedStateError("sensitivity blocks need a converged equilibrium")


def build_interface_mapping(mesh: QuadMesh, interface_nodes=None) -> sp.csr_matrix:
    """0/1 selector N with x = N u semantics over the mesh DOF vector.

    Rows of interface DOFs carry a single unit diagonal entry; all other
    rows are zero.  The interface must be conformal (shared node ids),
    which the mesh container already guarantees.
    """
    interface_nodes = mesh.interface if interface_nodes is None else np.asarray(
        interface_nodes, dtype=np.intp
    )
    if interface_nodes.size == 0:
        raise GeometryError("interface node set is empty")
    dofs = np.concatenate([2 * interface_nodes, 2 * interface_nodes + 1])
    return _selector(dofs, mesh.n_dofs)


def _selector(dofs, n):
    data = np.ones(dofs.size)
    return sp.csr_matrix((data, (dofs, dofs)), shape=(n, n))


def tangent_at_equilibrium(state: EquilibriumState) -> sp.csr_matrix:
    """Assembled tangent with prescribed rows replaced by identity rows.

    Columns of free rows are kept untouched, including those pointing at
    prescribed DOFs; the free-free block stays symmetric.
    """
    _require_converged(state)
    _, tangent = internal_forces_and_tangent(
        state.mesh, state.displacements, state.config, state.a20_scale
    )
    n = tangent.shape[0]
    keep = np.ones(n)
    keep[state.prescribed_dofs] = 0.0
    pin = np.zeros(n)
    pin[state.prescribed_dofs] = 1.0
    return (sp.diags(keep) @ tangent + sp.diags(pin)).tocsr()


def residual_D(state: EquilibriumState) -> np.ndarray:
    """Free-DOF residual recomputed at the stored equilibrium."""
    _require_converged(state)
    forces, _ = internal_forces_and_tangent(
        state.mesh, state.displacements, state.config, state.a20_scale,
        need_tangent=False,
    )
    return -forces[state.free_dofs]


def residual_full(state: EquilibriumState, displacements=None) -> np.ndarray:
    """Treated residual over all DOFs at an arbitrary displacement field.

    Prescribed rows read the constraint gap u - x; free rows read the
    negated internal forces.  This is the function the derivative blocks
    differentiate.
    """
    _require_converged(state)
    x = state.displacements if displacements is None else np.asarray(
        displacements, dtype=np.float64
    )
    forces, _ = internal_forces_and_tangent(
        state.mesh, x, state.config, state.a20_scale, need_tangent=False
    )
    out = -forces
    out[state.prescribed_dofs] = state.prescribed_values - x[state.prescribed_dofs]
    return out


def dD_dx(state: EquilibriumState) -> sp.csr_matrix:
    """Derivative of the treated residual w.r.t. mesh displacements: -K."""
    return -tangent_at_equilibrium(state)


def dD_du(state: EquilibriumState, interface_mapping=None) -> sp.csr_matrix:
    """Derivative w.r.t. structural displacements: -K @ N."""
    if interface_mapping is None:
        interface_mapping = _selector(state.interface_dofs, state.mesh.n_dofs)
    return (dD_dx(state) @ interface_mapping).tocsr()


def dD_dw(state: EquilibriumState, n_fluid_dofs: int = 0) -> sp.csr_matrix:
    """Zero block: the mesh residual does not depend on the fluid state."""
    return sp.csr_matrix((state.mesh.n_dofs, n_fluid_dofs))


def compute_blocks(state: EquilibriumState) -> SensitivityBlocks:
    """All derivative blocks of one equilibrium in a single bundle."""
    tangent = tangent_at_equilibrium(state)
    mapping = _selector(state.interface_dofs, state.mesh.n_dofs)
    ddx = (-tangent).tocsr()
    return SensitivityBlocks(
        tangent=tangent,
        interface_mapping=mapping,
        dD_dx=ddx,
        dD_du=(ddx @ mapping).tocsr(),
    )


def _column_error(reference, candidate):
    denom = np.linalg.norm(reference)
    if denom == 0.0:
        return float(np.linalg.norm(candidate))
    return float(np.linalg.norm(candidate - reference) / denom)


def _check_dx(state, blocks, h_schedule, max_columns):
    cols = state.free_dofs[:max_columns]
    x0 = state.displacements
    errors = []
    for h in h_schedule:
        worst = 0.0
        for j in cols:
            xp = x0.copy()
            xp[j] += h
            xm = x0.copy()
            xm[j] -= h
            fd = (residual_full(state, xp) - residual_full(state, xm)) / (2.0 * h)
            ref = np.asarray(blocks.dD_dx[:, j].todense()).ravel()
            worst = max(worst, _column_error(ref, fd))
        errors.append((h, worst))
    return errors


def _check_du(state, blocks, h_schedule, max_columns):
    free = state.free_dofs
    tangent_ff = blocks.tangent[free][:, free]
    cols = state.interface_dofs[:max_columns]
    resolve_config = replace(state.config, n_increments=1)
    errors = []
    for h in h_schedule:
        worst = 0.0
        for j in cols:
            slot = np.flatnonzero(state.prescribed_dofs == j)
            if slot.size != 1:
                raise GeometryError("interface DOF missing from prescribed set")
            shift = np.zeros(state.prescribed_values.size)
            shift[slot[0]] = h
            states = []
            for sign in (1.0, -1.0):
                states.append(solve_equilibrium(
                    state.mesh,
                    state.prescribed_dofs,
                    state.prescribed_values + sign * shift,
                    resolve_config,
                    state.a20_scale,
                    x0=state.displacements,
                ))
            fd_free = (states[0].displacements[free] - states[1].displacements[free]) / (2.0 * h)
            predicted = tangent_ff @ fd_free
            ref = np.asarray(blocks.dD_du[:, j].todense()).ravel()[free]
            worst = max(worst, _column_error(ref, predicted))
        errors.append((h, worst))
    return errors


def verify_fd(state: EquilibriumState, blocks: SensitivityBlocks | None = None,
              h_schedule=DEFAULT_H_SCHEDULE, max_columns=24) -> VerificationReport:
    """Central-difference verification of both derivative blocks.

    Per block the report keeps the error at every h and the best h;
    a block passes when its best error is under the block threshold.
    Pass corrupted ``blocks`` to use this as a negative control.
    """
    _require_converged(state)
    if blocks is None:
        blocks = compute_blocks(state)
    checks = []
    for name, runner, threshold in (
        ("dD_dx", _check_dx, DX_THRESHOLD),
        ("dD_du", _check_du, DU_THRESHOLD),
    ):
        errors = runner(state, blocks, tuple(h_schedule), max_columns)
        best_h, best_err = min(errors, key=lambda pair: pair[1])
        checks.append(BlockCheck(
            block=name,
            best_h=best_h,
            relative_error=best_err,
            threshold=threshold,
            passed=best_err < threshold,
            errors_by_h=tuple(errors),
        ))
    return VerificationReport(checks=tuple(checks))


def write_verification_csv(report: VerificationReport, path):
    """One row per (block, h): block, h, relative_error, pass."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block", "h", "relative_error", "pass"])
        for check in report.checks:
            for h, err in check.errors_by_h:
                writer.writerow([
                    check.block, f"{h:.1e}", f"{err:.12e}",
                    str(bool(err < check.threshold)).lower(),
                ])
