"""Sparse symmetric assembly and constrained solves.

All three deformation models reduce to symmetric sparse systems with
prescribed-displacement constraints.  Constraints are eliminated by
zeroing the affected rows and columns, placing a unit diagonal, and
carrying the prescribed values to the right-hand side, which keeps the
reduced operator symmetric positive definite on admissible meshes.

Assembly is order-independent: triplets are accumulated in a canonical
sort order, so permuting the element contributions yields bit-identical
matrices.
"""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConstraintError, SolverError

DEFAULT_SOLVE_TOL = 1e-10


def assemble_csr(rows, cols, vals, n_dofs):
    """Build an (n, n) CSR matrix from triplets with canonical summation.

    Duplicate (row, col) entries are summed after a lexicographic sort of
    (row, col, value), making the result independent of triplet order.
    """
    rows = np.asarray(rows, dtype=np.intp).ravel()
    cols = np.asarray(cols, dtype=np.intp).ravel()
    vals = np.asarray(vals, dtype=np.float64).ravel()
    if rows.size and (rows.min() < 0 or rows.max() >= n_dofs):
        raise ConstraintError("triplet row index out of range")
    if cols.size and (cols.min() < 0 or cols.max() >= n_dofs):
        raise ConstraintError("triplet column index out of range")
    order = np.lexsort((vals, cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        new_group = np.empty(rows.size, dtype=bool)
        new_group[0] = True
        new_group[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new_group)
        summed = np.add.reduceat(vals, starts)
        rows, cols, vals = rows[starts], cols[starts], summed
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n_dofs, n_dofs))
    return mat


def scatter_triplets(blocks, dof_maps):
    """Flatten stacked element blocks into COO triplets.

    Parameters
    ----------
    blocks : (m, k, k) array
        Dense element matrices.
    dof_maps : (m, k) int array
        Global DOF indices per element.
    """
    blocks = np.asarray(blocks, dtype=np.float64)
    dof_maps = np.asarray(dof_maps, dtype=np.intp)
    m, k = dof_maps.shape
    rows = np.repeat(dof_maps, k, axis=1).ravel()
    cols = np.tile(dof_maps, (1, k)).ravel()
    return rows, cols, blocks.reshape(m, k * k).ravel()


def assemble(block_groups, n_dofs, constraints=None, rhs=None):
    """Assemble element blocks into a constrained sparse system.

    Parameters
    ----------
    block_groups : iterable of (blocks, dof_maps) pairs
        Each pair is an (m, k, k) stack of element matrices and the
        matching (m, k) global DOF maps; groups may have different k.
    n_dofs : int
        Global system size.
    constraints : (dofs, values) pair, optional
        Prescribed-DOF indices and values to eliminate.
    rhs : (n,) array, optional
        Load vector before constraint elimination (default zero).

    Returns
    -------
    (K, b) : constrained CSR matrix and right-hand side.
    """
    parts = [scatter_triplets(b, d) for b, d in block_groups if len(d)]
    if parts:
        rows = np.concatenate([p[0] for p in parts])
        cols = np.concatenate([p[1] for p in parts])
        vals = np.concatenate([p[2] for p in parts])
    else:
        rows = cols = vals = np.empty(0)
    mat = assemble_csr(rows, cols, vals, n_dofs)
    b = np.zeros(n_dofs) if rhs is None else np.array(rhs, dtype=np.float64)
    if constraints is not None:
        dofs, values = constraints
        mat, b = apply_constraints(mat, b, dofs, values)
    return mat, b


def merge_constraints(dofs, values):
    """Deduplicate constraint lists, rejecting conflicting duplicates."""
    dofs = np.asarray(dofs, dtype=np.intp).ravel()
    values = np.asarray(values, dtype=np.float64).ravel()
    if dofs.shape != values.shape:
        raise ConstraintError("constraint dofs and values differ in length")
    uniq, first = np.unique(dofs, return_index=True)
    if uniq.size != dofs.size:
        ref = np.full(dofs.max() + 1, np.nan)
        ref[uniq] = values[first]
        if not np.all(ref[dofs] == values):
            raise ConstraintError("duplicate constraint with conflicting values")
    return uniq, values[first]


def apply_constraints(mat, b, dofs, values):
    """Eliminate prescribed DOFs symmetrically.

    Rows and columns of the constrained DOFs are zeroed, the diagonal is
    set to one, known values move to the right-hand side, and the
    constrained RHS entries carry the prescribed values themselves.
    """
    n = mat.shape[0]
    dofs, values = merge_constraints(dofs, values)
    if dofs.size and (dofs.min() < 0 or dofs.max() >= n):
        raise ConstraintError("constrained DOF index out of range")
    full = np.zeros(n)
    full[dofs] = values
    b = b - mat @ full
    keep = np.ones(n)
    keep[dofs] = 0.0
    pin = np.zeros(n)
    pin[dofs] = 1.0
    selector = sp.diags(keep)
    mat = selector @ mat @ selector + sp.diags(pin)
    b[dofs] = values
    return mat.tocsr(), b


def solve_spd(mat, b, tol=DEFAULT_SOLVE_TOL, context=""):
    """Direct sparse solve with a residual-bound contract.

    The method is an implementation detail; the contract is
    ``||A x - b|| <= tol * ||b||`` (absolute when b is zero).
    """
    label = f" in {context}" if context else ""
    try:
        x = spla.spsolve(mat.tocsr(), b)
    except RuntimeError as exc:  # SuperLU reports singular factors this way
        raise SolverError(f"sparse factorization failed{label}: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError(f"singular or indefinite system{label}: non-finite solution")
    bnorm = np.linalg.norm(b)
    resid = np.linalg.norm(mat @ x - b)
    limit = tol * bnorm if bnorm > 0.0 else tol
    if resid > limit:
        raise SolverError(
            f"solve residual {resid:.3e} exceeds bound {limit:.3e}{label}"
        )
    return x


def dump_matrix_market(mat, path):
    """Write the matrix in Matrix Market coordinate format (debug aid)."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(mat))
