"""Element layers around the moving interface, for selective stiffening.

Layer 1 holds every element sharing at least one node with the
interface; layer k holds every not-yet-assigned element sharing a node
with layer k-1.  Elements beyond the last requested layer stay in layer
0 and receive no stiffening.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError, GeometryError
from .mesh import QuadMesh


@dataclass(frozen=True)
class LayerAssignment:
    """Per-element layer indices; 0 means outside all layers."""

    layer_of_element: np.ndarray
    n_layers: int

    def members(self, layer):
        return np.flatnonzero(self.layer_of_element == layer)


def identify_layers(mesh: QuadMesh, interface_nodes, n_layers: int) -> LayerAssignment:
    """Grow element layers outward from the interface by node sharing.

    Growth is breadth-first over node adjacency, so the result does not
    depend on element numbering.
    """
    if n_layers < 0:
        raise ConstraintError("n_layers must be non-negative")
    interface_nodes = np.asarray(interface_nodes, dtype=np.intp).ravel()
    if interface_nodes.size == 0:
        raise GeometryError("interface node set is empty")
    if interface_nodes.min() < 0 or interface_nodes.max() >= mesh.n_nodes:
        raise GeometryError("interface node index out of range")

    layer = np.zeros(mesh.n_quads, dtype=np.intp)
    assigned = np.zeros(mesh.n_quads, dtype=bool)
    frontier = np.zeros(mesh.n_nodes, dtype=bool)
    frontier[interface_nodes] = True
    for k in range(1, n_layers + 1):
        touches = frontier[mesh.quads].any(axis=1)
        members = touches & ~assigned
        if not members.any():
            break
        layer[members] = k
        assigned |= members
        frontier[:] = False
        frontier[mesh.quads[members]] = True
    return LayerAssignment(layer_of_element=layer, n_layers=n_layers)


def apply_stiffening(assignment: LayerAssignment, factors) -> np.ndarray:
    """Map a layer assignment to per-element stiffness multipliers.

    ``factors[k-1]`` multiplies layer k; layer 0 keeps multiplier 1.
    """
    factors = np.asarray(factors, dtype=np.float64).ravel()
    if np.any(factors <= 0.0):
        raise ConstraintError("stiffening factors must be positive")
    top = int(assignment.layer_of_element.max(initial=0))
    if factors.size < top:
        raise ConstraintError(
            f"got {factors.size} stiffening factors but layers up to {top} are used"
        )
    table = np.concatenate(([1.0], factors))
    return table[assignment.layer_of_element]


def stiffening_multipliers(mesh: QuadMesh, interface_nodes, factors) -> np.ndarray:
    """Convenience wrapper: one multiplier per element for the given factors."""
    factors = np.asarray(factors, dtype=np.float64).ravel()
    if factors.size == 0:
        return np.ones(mesh.n_quads)
    assignment = identify_layers(mesh, interface_nodes, factors.size)
    return apply_stiffening(assignment, factors)
