"""Legacy-VTK and CSV export of meshes, per-element metrics, and motions.

Writers use repr-precision floats so a write/read round trip preserves
coordinates bit-for-bit; files target stock VTK viewers (unstructured
grid, VTK_QUAD cells, one CELL_DATA array per metric).
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ConnectivityError, GeometryError
from .mesh import QuadMesh

_VTK_QUAD = 9


def _fmt(value):
    return f"{float(value):.17g}"


def write_vtk(path, mesh: QuadMesh, cell_data: dict | None = None, title="meshmorph output"):
    """Write the mesh as a legacy-VTK ASCII unstructured grid.

    ``cell_data`` maps field names to per-element arrays; sizes must
    match the element count.
    """
    cell_data = cell_data or {}
    for name, values in cell_data.items():
        if len(values) != mesh.n_quads:
            raise ConnectivityError(
                f"cell field {name!r} has {len(values)} values for {mesh.n_quads} elements"
            )
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    for x, y in mesh.nodes:
        lines.append(f"{_fmt(x)} {_fmt(y)} 0")
    lines.append(f"CELLS {mesh.n_quads} {5 * mesh.n_quads}")
    for quad in mesh.quads:
        lines.append("4 " + " ".join(str(int(i)) for i in quad))
    lines.append(f"CELL_TYPES {mesh.n_quads}")
    lines.extend([str(_VTK_QUAD)] * mesh.n_quads)
    if cell_data:
        lines.append(f"CELL_DATA {mesh.n_quads}")
        for name, values in cell_data.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in values)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path):
    """Read a legacy-VTK quad mesh written by :func:`write_vtk`.

    Returns ``(mesh, cell_data)``; boundary tags are not stored in VTK,
    so the mesh comes back without them.
    """
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0

    def expect(keyword):
        nonlocal pos
        while pos < len(tokens):
            if tokens[pos].upper() == keyword:
                pos += 1
                return
            pos += 1
        raise GeometryError(f"VTK file {path} lacks a {keyword} section")

    expect("POINTS")
    n_points = int(tokens[pos])
    pos += 2  # count + dtype
    coords = np.array(tokens[pos:pos + 3 * n_points], dtype=np.float64).reshape(-1, 3)
    pos += 3 * n_points
    expect("CELLS")
    n_cells = int(tokens[pos])
    total = int(tokens[pos + 1])
    pos += 2
    raw = np.array(tokens[pos:pos + total], dtype=np.intp)
    pos += total
    if total != 5 * n_cells:
        raise GeometryError("only VTK_QUAD cells are supported")
    cells = raw.reshape(n_cells, 5)
    if not np.all(cells[:, 0] == 4):
        raise GeometryError("only VTK_QUAD cells are supported")
    expect("CELL_TYPES")
    pos += n_cells
    cell_data = {}
    while pos < len(tokens):
        if tokens[pos].upper() == "SCALARS":
            name = tokens[pos + 1]
            pos += 4  # SCALARS name dtype ncomp
            if tokens[pos].upper() == "LOOKUP_TABLE":
                pos += 2
            cell_data[name] = np.array(tokens[pos:pos + n_cells], dtype=np.float64)
            pos += n_cells
        else:
            pos += 1
    mesh = QuadMesh(nodes=coords[:, :2], quads=cells[:, 1:])
    return mesh, cell_data


def write_metrics_csv(path, element_ids, skewness, area_ratio, layer_index):
    """Per-element metric table: element_id, skewness, area_ratio, layer_index."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["element_id", "skewness", "area_ratio", "layer_index"])
        for eid, skew, ratio, layer in zip(element_ids, skewness, area_ratio, layer_index):
            writer.writerow([int(eid), _fmt(skew), _fmt(ratio), int(layer)])


def write_motion_csv(path, motion):
    """Interface displacement table: node_id, dx, dy."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "dx", "dy"])
        for node, (dx, dy) in zip(motion.node_indices, motion.displacements):
            writer.writerow([int(node), _fmt(dx), _fmt(dy)])
