"""Benchmark problem generators: channel flows past a beam or a foil.

Both problems mesh a rectangular channel with a uniform structured quad
grid and remove the quads covered by the structure.  The interface set
lists the fluid nodes on the structure surface in a deterministic walk
order; the outer boundary set holds the remaining channel-boundary
nodes.  Where a node lies on both (the beam's base corners sit on the
channel floor), the interface wins and the node moves with the
structure.

All dimensions live in ``ProblemSpec``.  Structure edges must land on
grid lines; misaligned dimensions raise ``GeometryError`` instead of
silently snapping.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GeometryError, MotionError
from .mesh import QuadMesh

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class ProblemSpec:
    """Geometry and default-motion parameters for the channel benchmarks.

    Lengths are in the same unit throughout; ``element_size`` sets the
    uniform grid spacing.
    """

    channel_length: float = 3.0
    channel_height: float = 1.0
    element_size: float = 0.05

    # beam: stands on the channel floor, centered at beam_x, with a
    # fluid-filled notch of hole_width x hole_height in its base
    beam_x: float = 1.0
    beam_height: float = 0.8
    beam_thickness: float = 0.2
    hole_width: float = 0.1
    hole_height: float = 0.2

    # foil: rectangular obstacle suspended in the channel interior
    foil_x: float = 1.5
    foil_y: float = 0.5
    foil_length: float = 1.0
    foil_thickness: float = 0.2

    def __post_init__(self):
        positive = {
            "channel_length": self.channel_length,
            "channel_height": self.channel_height,
            "element_size": self.element_size,
            "beam_height": self.beam_height,
            "beam_thickness": self.beam_thickness,
            "hole_width": self.hole_width,
            "hole_height": self.hole_height,
            "foil_length": self.foil_length,
            "foil_thickness": self.foil_thickness,
        }
        for name, value in positive.items():
            if not value > 0.0:
                raise GeometryError(f"{name} must be positive, got {value}")
        if self.channel_length / self.element_size < 2 or self.channel_height / self.element_size < 2:
            raise GeometryError("channel must span at least two elements per direction")


@dataclass(frozen=True)
class PrescribedMotion:
    """Total displacement of the interface nodes, in mesh interface order."""

    node_indices: np.ndarray
    displacements: np.ndarray
    mode: str = "custom"

    def __post_init__(self):
        idx = np.asarray(self.node_indices, dtype=np.intp).ravel()
        disp = np.asarray(self.displacements, dtype=np.float64)
        if disp.shape != (idx.size, 2):
            raise MotionError("displacements must be (n_interface, 2)")
        if not np.all(np.isfinite(disp)):
            raise MotionError("displacement field contains non-finite values")
        if np.unique(idx).size != idx.size:
            raise MotionError("duplicate node in prescribed motion")
        object.__setattr__(self, "node_indices", idx)
        object.__setattr__(self, "displacements", disp)

    def scaled(self, factor: float) -> "PrescribedMotion":
        return replace(self, displacements=self.displacements * factor)

    def dof_values(self):
        """Flattened (dofs, values) pair in node-major x,y ordering."""
        dofs = np.empty(2 * self.node_indices.size, dtype=np.intp)
        dofs[0::2] = 2 * self.node_indices
        dofs[1::2] = 2 * self.node_indices + 1
        return dofs, self.displacements.ravel()


def _grid_index(value, spacing, scale, what):
    idx = value / spacing
    snapped = round(idx)
    if abs(idx - snapped) > _ALIGN_TOL * max(1.0, scale / spacing):
        raise GeometryError(
            f"{what} = {value} does not align with the grid spacing {spacing}"
        )
    return int(snapped)


def _channel_grid(spec: ProblemSpec):
    nx = _grid_index(spec.channel_length, spec.element_size, spec.channel_length, "channel_length")
    ny = _grid_index(spec.channel_height, spec.element_size, spec.channel_length, "channel_height")
    xs = np.linspace(0.0, spec.channel_length, nx + 1)
    ys = np.linspace(0.0, spec.channel_height, ny + 1)
    xg, yg = np.meshgrid(xs, ys)
    nodes = np.column_stack([xg.ravel(), yg.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    i_idx, j_idx = np.meshgrid(np.arange(nx), np.arange(ny))
    i_idx = i_idx.ravel()
    j_idx = j_idx.ravel()
    quads = np.column_stack([
        nid(i_idx, j_idx),
        nid(i_idx + 1, j_idx),
        nid(i_idx + 1, j_idx + 1),
        nid(i_idx, j_idx + 1),
    ])
    return nodes, quads, nx, ny, nid


def _extract_fluid(nodes, quads, solid_mask, outer_old, interface_old):
    """Drop solid quads, renumber surviving nodes, remap the index sets."""
    fluid_quads = quads[~solid_mask]
    used = np.unique(fluid_quads)
    new_id = np.full(nodes.shape[0], -1, dtype=np.intp)
    new_id[used] = np.arange(used.size)
    interface_new = new_id[interface_old]
    if np.any(interface_new < 0):
        raise GeometryError("interface references a node absent from the fluid mesh")
    outer_old = np.asarray(outer_old, dtype=np.intp)
    outer_kept = outer_old[new_id[outer_old] >= 0]
    return QuadMesh(
        nodes=nodes[used],
        quads=new_id[fluid_quads],
        boundary_sets={"outer": np.sort(new_id[outer_kept])},
        interface=interface_new,
    )


def _wall_walk(nid, corners):
    """Node ids along a polyline of grid corners, endpoints inclusive once."""
    path = []
    for (i0, j0), (i1, j1) in zip(corners[:-1], corners[1:]):
        di = np.sign(i1 - i0)
        dj = np.sign(j1 - j0)
        steps = max(abs(i1 - i0), abs(j1 - j0))
        for s in range(steps):
            path.append(nid(i0 + di * s, j0 + dj * s))
    path.append(nid(*corners[-1]))
    return path


def build_beam_in_channel(spec: ProblemSpec = ProblemSpec()) -> QuadMesh:
    """Channel with a wall-mounted beam whose base has a fluid-filled notch.

    The interface walk runs up the beam's left wall, across the top,
    down the right wall, then around the notch from its bottom-left
    corner.
    """
    nodes, quads, nx, ny, nid = _channel_grid(spec)
    h = spec.element_size
    ix0 = _grid_index(spec.beam_x - spec.beam_thickness / 2, h, spec.channel_length, "beam left wall")
    ix1 = _grid_index(spec.beam_x + spec.beam_thickness / 2, h, spec.channel_length, "beam right wall")
    iyb = _grid_index(spec.beam_height, h, spec.channel_length, "beam_height")
    hx0 = _grid_index(spec.beam_x - spec.hole_width / 2, h, spec.channel_length, "hole left wall")
    hx1 = _grid_index(spec.beam_x + spec.hole_width / 2, h, spec.channel_length, "hole right wall")
    hy1 = _grid_index(spec.hole_height, h, spec.channel_length, "hole_height")
    if not (0 < ix0 < ix1 < nx):
        raise GeometryError("beam does not fit strictly inside the channel length")
    if not iyb < ny:
        raise GeometryError("beam must end below the channel top")
    if not (ix0 < hx0 < hx1 < ix1 and hy1 < iyb):
        raise GeometryError("base hole must sit strictly inside the beam")

    i_idx = quads[:, 0] % (nx + 1)
    j_idx = quads[:, 0] // (nx + 1)
    in_beam = (i_idx >= ix0) & (i_idx < ix1) & (j_idx < iyb)
    in_hole = (i_idx >= hx0) & (i_idx < hx1) & (j_idx < hy1)
    solid = in_beam & ~in_hole

    outer = _boundary_ids(nid, nx, ny)
    wall = _wall_walk(nid, [(ix0, 0), (ix0, iyb), (ix1, iyb), (ix1, 0)])
    notch = _wall_walk(nid, [(hx0, 0), (hx0, hy1), (hx1, hy1), (hx1, 0)])
    interface = np.array(wall + notch, dtype=np.intp)
    outer = np.setdiff1d(outer, interface)
    return _extract_fluid(nodes, quads, solid, outer, interface)


def build_foil_in_channel(spec: ProblemSpec = ProblemSpec()) -> QuadMesh:
    """Channel with a rectangular foil suspended in its interior.

    The interface walk is the counter-clockwise hole loop starting at
    the foil's bottom-left corner.
    """
    nodes, quads, nx, ny, nid = _channel_grid(spec)
    h = spec.element_size
    ix0 = _grid_index(spec.foil_x - spec.foil_length / 2, h, spec.channel_length, "foil left edge")
    ix1 = _grid_index(spec.foil_x + spec.foil_length / 2, h, spec.channel_length, "foil right edge")
    iy0 = _grid_index(spec.foil_y - spec.foil_thickness / 2, h, spec.channel_length, "foil bottom edge")
    iy1 = _grid_index(spec.foil_y + spec.foil_thickness / 2, h, spec.channel_length, "foil top edge")
    if not (0 < ix0 < ix1 < nx and 0 < iy0 < iy1 < ny):
        raise GeometryError("foil does not fit strictly inside the channel")

    i_idx = quads[:, 0] % (nx + 1)
    j_idx = quads[:, 0] // (nx + 1)
    solid = (i_idx >= ix0) & (i_idx < ix1) & (j_idx >= iy0) & (j_idx < iy1)

    outer = _boundary_ids(nid, nx, ny)
    loop = _wall_walk(
        nid,
        [(ix0, iy0), (ix1, iy0), (ix1, iy1), (ix0, iy1), (ix0, iy0)],
    )[:-1]
    interface = np.array(loop, dtype=np.intp)
    return _extract_fluid(nodes, quads, solid, outer, interface)


def _boundary_ids(nid, nx, ny):
    ids = []
    for i in range(nx + 1):
        ids.append(nid(i, 0))
        ids.append(nid(i, ny))
    for j in range(1, ny):
        ids.append(nid(0, j))
        ids.append(nid(nx, j))
    return np.unique(np.array(ids, dtype=np.intp))


def interface_centroid(mesh: QuadMesh) -> np.ndarray:
    """Bounding-box midpoint of the interface nodes (exact for rectangles)."""
    pts = mesh.nodes[mesh.interface]
    return 0.5 * (pts.min(axis=0) + pts.max(axis=0))


def prescribe_motion(mesh: QuadMesh, mode: str, **params) -> PrescribedMotion:
    """Build the interface displacement field for a named motion mode.

    Modes
    -----
    translation : vector=(dx, dy)
    rotation : angle_deg (clockwise positive), center=None (interface
        bounding-box midpoint)
    bending : amplitude; downward parabolic dip of the horizontal
        midline, zero at the interface's x-extremes, with cross-sections
        rotating to stay normal to the bent axis
    from_file : path to a CSV of node_id, dx, dy covering the interface
        exactly
    """
    idx = mesh.interface
    pts = mesh.nodes[idx]
    if mode == "translation":
        vector = np.asarray(params.get("vector", (0.0, -0.1)), dtype=np.float64)
        if vector.shape != (2,):
            raise MotionError("translation vector must have two components")
        disp = np.broadcast_to(vector, (idx.size, 2)).copy()
    elif mode == "rotation":
        angle_deg = float(params.get("angle_deg", 25.0))
        center = params.get("center")
        center = interface_centroid(mesh) if center is None else np.asarray(center, dtype=np.float64)
        # clockwise-positive rotation
        theta = np.radians(angle_deg)
        c, s = np.cos(theta), np.sin(theta)
        rel = pts - center
        disp = np.column_stack([
            c * rel[:, 0] + s * rel[:, 1],
            -s * rel[:, 0] + c * rel[:, 1],
        ]) - rel
    elif mode == "bending":
        amplitude = float(params.get("amplitude", 0.2))
        x0 = pts[:, 0].min()
        x1 = pts[:, 0].max()
        if x1 <= x0:
            raise MotionError("bending needs an interface with horizontal extent")
        span = x1 - x0
        s_par = (pts[:, 0] - x0) / span
        yc = interface_centroid(mesh)[1]
        w = -4.0 * amplitude * s_par * (1.0 - s_par)
        slope = -4.0 * amplitude * (1.0 - 2.0 * s_par) / span
        phi = np.arctan(slope)
        off = pts[:, 1] - yc
        disp = np.column_stack([
            -off * np.sin(phi),
            w + off * (np.cos(phi) - 1.0),
        ])
    elif mode == "from_file":
        path = params.get("path")
        if path is None:
            raise MotionError("from_file motion needs a path")
        disp = _read_motion_table(path, idx)
    else:
        raise MotionError(f"unknown motion mode {mode!r}")
    return PrescribedMotion(node_indices=idx, displacements=disp, mode=mode)


def _read_motion_table(path, interface):
    table = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip().lower() in ("node_id", "node"):
                continue
            if len(row) != 3:
                raise MotionError(f"malformed motion row {row!r}")
            table[int(row[0])] = (float(row[1]), float(row[2]))
    missing = [int(n) for n in interface if int(n) not in table]
    if missing:
        raise MotionError(f"motion file misses interface nodes {missing[:5]}")
    extra = set(table) - {int(n) for n in interface}
    if extra:
        raise MotionError(f"motion file lists non-interface nodes {sorted(extra)[:5]}")
    return np.array([table[int(n)] for n in interface], dtype=np.float64)


def cantilever_profile_motion(mesh: QuadMesh, tip_deflection: float = 0.2) -> PrescribedMotion:
    """Horizontal cantilever-bending profile over the interface height.

    Stand-in for a structural solver's beam deflection: the vertical
    midline follows the classic tip-loaded shape
    dx = d * (3 z^2 - z^3) / 2 with z the height fraction, and
    cross-sections rotate to stay normal to the bent axis.
    """
    idx = mesh.interface
    pts = mesh.nodes[idx]
    y0 = pts[:, 1].min()
    y1 = pts[:, 1].max()
    if y1 <= y0:
        raise MotionError("cantilever profile needs an interface with vertical extent")
    height = y1 - y0
    z = (pts[:, 1] - y0) / height
    xc = interface_centroid(mesh)[0]
    w = tip_deflection * (3.0 * z**2 - z**3) / 2.0
    slope = tip_deflection * (6.0 * z - 3.0 * z**2) / (2.0 * height)
    psi = np.arctan(slope)
    off = pts[:, 0] - xc
    disp = np.column_stack([
        w + off * (np.cos(psi) - 1.0),
        -off * np.sin(psi),
    ])
    return PrescribedMotion(node_indices=idx, displacements=disp, mode="from_file")


@dataclass(frozen=True)
class TriangleProbe:
    """Equilateral triangle split into nine congruent triangles.

    The two bottom corners are fixed; the apex is pushed straight down.
    Used to study when torsional springs prevent element inversion.
    """

    nodes: np.ndarray
    tris: np.ndarray
    fixed_nodes: np.ndarray
    apex_node: int
    apex_displacement: np.ndarray
    scale: float = 1.0


def build_triangle_compression_probe(scale: float = 1.0, side: float = 1.0,
                                     compression: float | None = None) -> TriangleProbe:
    """Nine-triangle probe at the given geometric scale.

    ``compression`` is the downward apex travel before scaling; the
    default drives the apex deep enough that the unscaled probe inverts
    without torsional springs.
    """
    if scale <= 0.0 or side <= 0.0:
        raise GeometryError("scale and side must be positive")
    height = side * np.sqrt(3.0) / 2.0
    if compression is None:
        compression = 0.8 * height
    rows = []
    for r in range(4):
        y = height * r / 3.0
        x_start = side * r / 6.0
        for i in range(4 - r):
            rows.append((x_start + side * i / 3.0, y))
    nodes = np.array(rows, dtype=np.float64) * scale
    tris = np.array([
        (0, 1, 4), (1, 2, 5), (2, 3, 6),
        (1, 5, 4), (2, 6, 5),
        (4, 5, 7), (5, 6, 8),
        (5, 8, 7),
        (7, 8, 9),
    ], dtype=np.intp)
    return TriangleProbe(
        nodes=nodes,
        tris=tris,
        fixed_nodes=np.array([0, 3], dtype=np.intp),
        apex_node=9,
        apex_displacement=np.array([0.0, -compression * scale]),
        scale=scale,
    )
