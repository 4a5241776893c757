"""Mesh quality metrics for quad elements: skewness and area change.

Skewness scores each quad by its worst corner angle on a scale where 1.0
is a perfect right-angled corner and values drop linearly as the angle
departs from 90 degrees; corners are measured as signed angles, so a
locally inverted (reflex) corner exceeds 180 degrees and the score goes
negative.  Area change is the plain ratio of current to reference signed
element area.  Both metrics are evaluated per element and aggregated in
a :class:`QualityReport`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConnectivityError, DegenerateElementError, InvalidReferenceError
from .mesh import quad_signed_areas


def corner_angles_deg(corners):
    """Signed interior corner angles of quads, in degrees.

    Parameters
    ----------
    corners : (..., 4, 2) array
        Quad corner coordinates in counterclockwise reference order.

    Returns
    -------
    (..., 4) array of angles in (0, 360].  For an admissible CCW quad all
    four angles are the usual interior angles; a locally inverted corner
    comes out reflex (> 180).

    Raises
    ------
    DegenerateElementError
        If any two corners of a quad coincide exactly.
    """
    corners = np.asarray(corners, dtype=np.float64)
    prev = np.roll(corners, 1, axis=-2)
    nxt = np.roll(corners, -1, axis=-2)
    u = prev - corners  # towards previous corner
    v = nxt - corners  # towards next corner
    if _has_coincident_corners(corners):
        raise DegenerateElementError("quad has coincident corners")
    cross = v[..., 0] * u[..., 1] - v[..., 1] * u[..., 0]
    dot = v[..., 0] * u[..., 0] + v[..., 1] * u[..., 1]
    ang = np.degrees(np.arctan2(cross, dot))
    # Interior angle measured sweeping CCW from the outgoing to the incoming
    # edge; negative atan2 branch corresponds to a reflex corner.
    ang = np.where(ang > 0.0, ang, ang + 360.0)
    return ang


def _has_coincident_corners(corners):
    for i in range(4):
        for j in range(i + 1, 4):
            d = corners[..., i, :] - corners[..., j, :]
            if np.any((d[..., 0] == 0.0) & (d[..., 1] == 0.0)):
                return True
    return False


def skewness_from_angles(angles_deg):
    """Per-element skewness: minimum over corners of 1 - |theta - 90| / 90."""
    return np.min(1.0 - np.abs(angles_deg - 90.0) / 90.0, axis=-1)


def element_skewness(corner_coords):
    """Skewness score of a single quad given its 4 corners (CCW).

    Returns 1.0 for a rectangle, decreasing towards 0 as corners skew,
    and negative once a corner is reflex (locally inverted element).
    """
    corner_coords = np.asarray(corner_coords, dtype=np.float64)
    if corner_coords.shape != (4, 2):
        raise ConnectivityError("expected 4 corner points of shape (4, 2)")
    return float(skewness_from_angles(corner_angles_deg(corner_coords)))


def element_area_ratio(current_corners, reference_corners):
    """Current over reference signed area of a quad, A_c / A_0.

    Raises
    ------
    InvalidReferenceError
        If the reference area is not strictly positive.
    """
    a0 = float(quad_signed_areas(np.asarray(reference_corners, dtype=np.float64)))
    if a0 <= 0.0:
        raise InvalidReferenceError(f"reference element area {a0} is not positive")
    ac = float(quad_signed_areas(np.asarray(current_corners, dtype=np.float64)))
    return ac / a0


@dataclass(frozen=True)
class QualityReport:
    """Aggregated per-element quality metrics over a set of elements."""

    element_ids: np.ndarray
    per_element_skewness: np.ndarray
    per_element_area_ratio: np.ndarray
    min_skewness: float
    min_area_ratio: float
    max_area_ratio: float
    inverted_elements: np.ndarray = field(default_factory=lambda: np.empty(0, int))

    @property
    def n_inverted(self):
        return len(self.inverted_elements)

    @property
    def admissible(self):
        return self.n_inverted == 0


def quality_report(mesh_deformed, mesh_reference, region=None):
    """Evaluate both quality metrics element by element and aggregate.

    Parameters
    ----------
    mesh_deformed, mesh_reference : QuadMesh
        Current and reference configurations; must share connectivity.
    region : array of element indices, optional
        Restrict the report to these elements (default: all).

    Returns
    -------
    QualityReport
        Skewness and area ratio per element plus mesh-wide aggregates and
        the list of inverted elements (skewness <= 0 or signed area <= 0).
    """
    if not mesh_deformed.same_connectivity(mesh_reference):
        raise ConnectivityError("deformed and reference meshes differ in connectivity")
    if region is None:
        ids = np.arange(mesh_deformed.n_quads, dtype=np.intp)
    else:
        ids = np.asarray(region, dtype=np.intp)
        if ids.size == 0:
            raise ConnectivityError("quality region is empty")
        if ids.min() < 0 or ids.max() >= mesh_deformed.n_quads:
            raise ConnectivityError("quality region references invalid elements")

    cur = mesh_deformed.corner_coords()[ids]
    ref = mesh_reference.corner_coords()[ids]

    ref_areas = quad_signed_areas(ref)
    if np.any(ref_areas <= 0.0):
        raise InvalidReferenceError("reference mesh has non-positive element areas")
    cur_areas = quad_signed_areas(cur)
    ratios = cur_areas / ref_areas

    skew = skewness_from_angles(corner_angles_deg(cur))
    inverted = ids[(skew <= 0.0) | (cur_areas <= 0.0)]

    return QualityReport(
        element_ids=ids,
        per_element_skewness=skew,
        per_element_area_ratio=ratios,
        min_skewness=float(skew.min()),
        min_area_ratio=float(ratios.min()),
        max_area_ratio=float(ratios.max()),
        inverted_elements=inverted,
    )
