"""Layer growth around the interface, checked against a set-based oracle."""

import numpy as np
import pytest

from meshmorph import apply_stiffening, identify_layers, stiffening_multipliers
from meshmorph.errors import ConstraintError, GeometryError


def brute_force_layers(mesh, interface_nodes, n_layers):
    """Reference implementation with plain python sets."""
    layer = np.zeros(mesh.n_quads, dtype=int)
    frontier = set(int(n) for n in interface_nodes)
    assigned = set()
    for k in range(1, n_layers + 1):
        members = {
            e
            for e in range(mesh.n_quads)
            if e not in assigned and frontier & set(int(n) for n in mesh.quads[e])
        }
        if not members:
            break
        for e in members:
            layer[e] = k
        assigned |= members
        frontier = {int(n) for e in members for n in mesh.quads[e]}
    return layer


def test_rings_on_3x3_grid(grid_factory):
    mesh = grid_factory(3, 3, interface_side="left")
    assignment = identify_layers(mesh, mesh.interface, 2)
    # column 0 touches the left edge, column 1 is the second ring
    expected = np.array([1, 2, 0, 1, 2, 0, 1, 2, 0])
    assert np.array_equal(assignment.layer_of_element, expected)
    assert np.array_equal(assignment.members(1), [0, 3, 6])
    assert np.array_equal(assignment.members(2), [1, 4, 7])


@pytest.mark.parametrize("n_layers", [1, 2, 3, 5])
def test_matches_bruteforce_on_grids(grid_factory, n_layers):
    mesh = grid_factory(5, 4, interface_side="top")
    assignment = identify_layers(mesh, mesh.interface, n_layers)
    expected = brute_force_layers(mesh, mesh.interface, n_layers)
    assert np.array_equal(assignment.layer_of_element, expected)


def test_matches_bruteforce_on_foil_mesh(coarse_foil):
    assignment = identify_layers(coarse_foil, coarse_foil.interface, 3)
    expected = brute_force_layers(coarse_foil, coarse_foil.interface, 3)
    assert np.array_equal(assignment.layer_of_element, expected)


def test_layers_partition_their_elements(grid_factory):
    mesh = grid_factory(6, 6, interface_side="bottom")
    assignment = identify_layers(mesh, mesh.interface, 3)
    counts = sum(assignment.members(k).size for k in range(1, 4))
    covered = np.flatnonzero(assignment.layer_of_element > 0)
    assert counts == covered.size


def test_growth_independent_of_element_order(grid_factory):
    mesh = grid_factory(4, 4, interface_side="right")
    perm = np.random.default_rng(5).permutation(mesh.n_quads)
    shuffled = type(mesh)(
        mesh.nodes, mesh.quads[perm], mesh.boundary_sets, mesh.interface
    )
    a = identify_layers(mesh, mesh.interface, 2).layer_of_element
    b = identify_layers(shuffled, shuffled.interface, 2).layer_of_element
    assert np.array_equal(a[perm], b)


def test_identify_layers_validation(grid_factory):
    mesh = grid_factory(2, 2)
    with pytest.raises(ConstraintError):
        identify_layers(mesh, mesh.interface, -1)
    with pytest.raises(GeometryError):
        identify_layers(mesh, np.array([], dtype=int), 1)
    with pytest.raises(GeometryError):
        identify_layers(mesh, np.array([999]), 1)


def test_apply_stiffening_table(grid_factory):
    mesh = grid_factory(3, 3, interface_side="left")
    assignment = identify_layers(mesh, mesh.interface, 2)
    mult = apply_stiffening(assignment, [10.0, 2.5])
    assert np.array_equal(mult, np.array([10.0, 2.5, 1.0] * 3))


def test_apply_stiffening_validation(grid_factory):
    mesh = grid_factory(3, 3, interface_side="left")
    assignment = identify_layers(mesh, mesh.interface, 2)
    with pytest.raises(ConstraintError):
        apply_stiffening(assignment, [10.0])  # layer 2 has no factor
    with pytest.raises(ConstraintError):
        apply_stiffening(assignment, [10.0, -1.0])


def test_stiffening_multipliers_wrapper(grid_factory):
    mesh = grid_factory(3, 3, interface_side="left")
    assert np.array_equal(stiffening_multipliers(mesh, mesh.interface, ()), np.ones(9))
    mult = stiffening_multipliers(mesh, mesh.interface, (4.0,))
    assert set(np.unique(mult)) == {1.0, 4.0}
