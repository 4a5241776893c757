"""Sparse assembly against dense brute force, plus the solve contract."""

import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from meshmorph.assembly import (
    apply_constraints,
    assemble,
    assemble_csr,
    dump_matrix_market,
    merge_constraints,
    scatter_triplets,
    solve_spd,
)
from meshmorph.errors import ConstraintError, SolverError


def _random_blocks(rng, m, k, n_dofs):
    """Symmetric random element blocks with non-repeating DOF maps."""
    half = rng.standard_normal((m, k, k))
    blocks = half + half.transpose(0, 2, 1)
    maps = np.array([rng.choice(n_dofs, size=k, replace=False) for _ in range(m)])
    return blocks, maps


def _dense_assemble(groups, n_dofs):
    out = np.zeros((n_dofs, n_dofs))
    for blocks, maps in groups:
        for block, dofs in zip(blocks, maps):
            for a, ga in enumerate(dofs):
                for b, gb in enumerate(dofs):
                    out[ga, gb] += block[a, b]
    return out


def test_assemble_matches_dense_bruteforce():
    rng = np.random.default_rng(42)
    n_dofs = 30
    groups = [_random_blocks(rng, 12, 4, n_dofs), _random_blocks(rng, 7, 6, n_dofs)]
    mat, b = assemble(groups, n_dofs)
    assert_allclose(mat.toarray(), _dense_assemble(groups, n_dofs), atol=1e-14)
    assert np.array_equal(b, np.zeros(n_dofs))


def test_assembly_is_order_independent():
    rng = np.random.default_rng(3)
    n_dofs = 24
    blocks, maps = _random_blocks(rng, 20, 4, n_dofs)
    forward, _ = assemble([(blocks, maps)], n_dofs)
    perm = rng.permutation(20)
    shuffled, _ = assemble([(blocks[perm], maps[perm])], n_dofs)
    # bit-identical, not merely close
    assert np.array_equal(forward.toarray(), shuffled.toarray())


def test_scatter_triplets_hand_check():
    block = np.arange(4.0).reshape(1, 2, 2)
    rows, cols, vals = scatter_triplets(block, np.array([[5, 2]]))
    assert rows.tolist() == [5, 5, 2, 2]
    assert cols.tolist() == [5, 2, 5, 2]
    assert vals.tolist() == [0.0, 1.0, 2.0, 3.0]


def test_assemble_csr_sums_duplicates():
    mat = assemble_csr([0, 0, 1], [1, 1, 0], [2.0, 3.0, 4.0], 2)
    assert_allclose(mat.toarray(), [[0.0, 5.0], [4.0, 0.0]])


def test_assemble_csr_range_checks():
    with pytest.raises(ConstraintError):
        assemble_csr([2], [0], [1.0], 2)
    with pytest.raises(ConstraintError):
        assemble_csr([0], [-1], [1.0], 2)


def test_merge_constraints():
    dofs, vals = merge_constraints([3, 1, 3], [0.5, 0.2, 0.5])
    assert dofs.tolist() == [1, 3]
    assert vals.tolist() == [0.2, 0.5]
    with pytest.raises(ConstraintError):
        merge_constraints([3, 3], [0.5, 0.6])
    with pytest.raises(ConstraintError):
        merge_constraints([1, 2], [0.5])


def test_apply_constraints_hand_oracle():
    mat = sp.csr_matrix(np.array([
        [4.0, 1.0, 0.0],
        [1.0, 3.0, 1.0],
        [0.0, 1.0, 2.0],
    ]))
    b = np.array([1.0, 1.0, 1.0])
    out, rhs = apply_constraints(mat, b, np.array([0]), np.array([2.0]))
    assert_allclose(out.toarray(), [
        [1.0, 0.0, 0.0],
        [0.0, 3.0, 1.0],
        [0.0, 1.0, 2.0],
    ])
    # rhs: free rows lose K[:,0]*2, constrained row carries the value
    assert_allclose(rhs, [2.0, 1.0 - 2.0, 1.0])
    x = solve_spd(out, rhs)
    assert x[0] == pytest.approx(2.0)
    # eliminated solution solves the free rows of the original system
    assert_allclose((mat @ x)[1:], b[1:], atol=1e-12)


def test_apply_constraints_out_of_range():
    mat = sp.identity(3, format="csr")
    with pytest.raises(ConstraintError):
        apply_constraints(mat, np.zeros(3), np.array([5]), np.array([0.0]))


def test_manufactured_solution_roundtrip():
    rng = np.random.default_rng(11)
    n = 40
    half = rng.standard_normal((n, n)) * 0.1
    dense = half @ half.T + np.eye(n) * 2.0
    mat = sp.csr_matrix(dense)
    x_true = rng.standard_normal(n)
    x = solve_spd(mat, mat @ x_true)
    assert_allclose(x, x_true, atol=1e-9)


def test_solve_residual_contract():
    mat = sp.identity(4, format="csr") * 3.0
    b = np.array([1.0, 2.0, 3.0, 4.0])
    x = solve_spd(mat, b)
    assert np.linalg.norm(mat @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_solve_rejects_singular_system():
    mat = sp.csr_matrix(np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(SolverError), np.errstate(all="ignore"):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            solve_spd(mat, np.ones(3))


def test_matrix_market_dump(tmp_path):
    mat = assemble_csr([0, 1], [1, 0], [2.5, 2.5], 2)
    path = tmp_path / "k.mtx"
    dump_matrix_market(mat, path)
    import scipy.io

    back = scipy.io.mmread(path)
    assert_allclose(back.toarray(), mat.toarray())
