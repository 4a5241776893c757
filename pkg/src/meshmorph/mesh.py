"""Structured quadrilateral mesh container and element geometry queries.

The mesh is the shared substrate of every deformation model in this
package: nodes live in a flat (n, 2) coordinate array, quads reference
them counterclockwise starting from the bottom-left corner, and the
fluid-structure interface is an ordered subset of the boundary nodes.
Instances are immutable after construction; deformation produces a new
mesh via :meth:`QuadMesh.with_coords`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConnectivityError, InvalidReferenceError


def _frozen_array(a, dtype):
    arr = np.ascontiguousarray(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuadMesh:
    """Structured quad mesh with tagged boundaries and interface.

    Parameters
    ----------
    nodes : (n, 2) float array
        Node coordinates in meters.
    quads : (m, 4) int array
        Node indices per element, counterclockwise from bottom-left.
    boundary_sets : dict[str, array]
        Named sets of boundary node indices (e.g. ``"outer"``).
    interface : int array
        Ordered node indices on the fluid-structure interface.
    """

    nodes: np.ndarray
    quads: np.ndarray
    boundary_sets: dict = field(default_factory=dict)
    interface: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen_array(self.nodes, np.float64))
        object.__setattr__(self, "quads", _frozen_array(self.quads, np.intp))
        object.__setattr__(
            self,
            "boundary_sets",
            {k: _frozen_array(v, np.intp) for k, v in self.boundary_sets.items()},
        )
        object.__setattr__(self, "interface", _frozen_array(self.interface, np.intp))
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise ConnectivityError("nodes must be an (n, 2) array")
        if self.quads.ndim != 2 or self.quads.shape[1] != 4:
            raise ConnectivityError("quads must be an (m, 4) array")
        if self.quads.size and (
            self.quads.min() < 0 or self.quads.max() >= len(self.nodes)
        ):
            raise ConnectivityError("quad references a node index out of range")
        # Four distinct node indices per quad.
        q = np.sort(self.quads, axis=1)
        if self.quads.size and np.any(q[:, :-1] == q[:, 1:]):
            raise ConnectivityError("quad references a repeated node index")

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_quads(self):
        return len(self.quads)

    @property
    def n_dofs(self):
        return 2 * len(self.nodes)

    def corner_coords(self, coords=None):
        """Per-element corner coordinates, shape (m, 4, 2)."""
        if coords is None:
            coords = self.nodes
        return coords[self.quads]

    def boundary_nodes(self):
        """Union of all named boundary sets (unsorted semantics, sorted array)."""
        if not self.boundary_sets:
            return np.empty(0, dtype=np.intp)
        return np.unique(np.concatenate(list(self.boundary_sets.values())))

    def fixed_nodes(self):
        """Boundary nodes held at zero displacement: all named boundary
        sets minus the interface (interface wins where a node is both)."""
        return np.setdiff1d(self.boundary_nodes(), self.interface)

    def with_coords(self, new_nodes):
        """New mesh sharing connectivity and tags, with replaced coordinates."""
        new_nodes = np.asarray(new_nodes, dtype=np.float64)
        if new_nodes.shape != self.nodes.shape:
            raise ConnectivityError(
                f"coordinate array shape {new_nodes.shape} does not match "
                f"mesh with {self.n_nodes} nodes"
            )
        return QuadMesh(new_nodes, self.quads, self.boundary_sets, self.interface)

    def displaced(self, displacements):
        """New mesh with ``displacements`` (flat 2n or (n, 2)) added to nodes."""
        d = np.asarray(displacements, dtype=np.float64).reshape(self.n_nodes, 2)
        return self.with_coords(self.nodes + d)

    def same_connectivity(self, other):
        return self.nodes.shape == other.nodes.shape and np.array_equal(
            self.quads, other.quads
        )

    def validate_reference(self):
        """Check reference admissibility: positive areas and corner angles.

        Raises
        ------
        InvalidReferenceError
            If any element has non-positive signed area or a corner angle
            outside (0, 180) degrees (corner skewness would be <= 0).
        """
        corners = self.corner_coords()
        areas = quad_signed_areas(corners)
        bad = np.flatnonzero(areas <= 0.0)
        if bad.size:
            raise InvalidReferenceError(
                f"{bad.size} element(s) with non-positive reference area, "
                f"first at index {bad[0]}"
            )
        # angle in (0, 180) degrees <=> positive cross of the corner's
        # outgoing and incoming edge vectors
        prev = np.roll(corners, 1, axis=-2)
        nxt = np.roll(corners, -1, axis=-2)
        u = prev - corners
        v = nxt - corners
        cross = v[..., 0] * u[..., 1] - v[..., 1] * u[..., 0]
        bad = np.flatnonzero(np.any(cross <= 0.0, axis=-1))
        if bad.size:
            raise InvalidReferenceError(
                f"{bad.size} element(s) with non-convex reference corners, "
                f"first at index {bad[0]}"
            )


def quad_signed_areas(corners):
    """Signed shoelace area of quads given corners of shape (..., 4, 2).

    Positive for counterclockwise ordering.
    """
    x = corners[..., 0]
    y = corners[..., 1]
    xn = np.roll(x, -1, axis=-1)
    yn = np.roll(y, -1, axis=-1)
    return 0.5 * np.sum(x * yn - xn * y, axis=-1)


def tri_signed_areas(coords, tris):
    """Signed areas of triangles given a (n, 2) coordinate array."""
    p = coords[tris]
    v1 = p[:, 1] - p[:, 0]
    v2 = p[:, 2] - p[:, 0]
    return 0.5 * (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
