"""Shared fixtures: small structured patches and coarse benchmark meshes."""

import numpy as np
import pytest

from meshmorph import ProblemSpec, QuadMesh, build_foil_in_channel

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_grid(nx, ny, width=1.0, height=1.0, interface_side="right"):
    """Structured patch of nx-by-ny quads with tagged boundary.

    The interface is one full side of the rectangle ("right", "left",
    "top", "bottom") or absent (None).
    """
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    quads = [
        [nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)]
        for j in range(ny)
        for i in range(nx)
    ]
    boundary = [
        nid(i, j)
        for j in range(ny + 1)
        for i in range(nx + 1)
        if i in (0, nx) or j in (0, ny)
    ]
    sides = {
        "right": [nid(nx, j) for j in range(ny + 1)],
        "left": [nid(0, j) for j in range(ny + 1)],
        "top": [nid(i, ny) for i in range(nx + 1)],
        "bottom": [nid(i, 0) for i in range(nx + 1)],
    }
    interface = sides[interface_side] if interface_side else []
    return QuadMesh(
        nodes,
        np.array(quads),
        boundary_sets={"outer": np.array(boundary)},
        interface=np.array(interface, dtype=int),
    )


@pytest.fixture
def grid_factory():
    return make_grid


@pytest.fixture
def patch3x3():
    """3x3-element patch, interface on the right edge."""
    return make_grid(3, 3)


@pytest.fixture(scope="session")
def coarse_foil():
    """Foil-in-channel at 0.1 m elements; fast enough for model-level tests."""
    return build_foil_in_channel(ProblemSpec(element_size=0.1))
