"""Camera visibility with occlusion over rectangular vehicle footprints.

Coordinates are meters in a plane, SUMO conventions throughout: a
vehicle's position is the center of its front bumper and its heading
is degrees clockwise from north (0 = +y, 90 = +x).  The footprint is a
rectangle extending backward from the position along the heading.

A number plate is visible when either plate point (midpoint of the
front or rear footprint edge) is within camera range, inside the field
of view, and the sight segment from the observer's camera (its front
bumper center) hits neither any other vehicle's rectangle nor the
target's own rectangle shrunk by 1 cm.  The shrink keeps the plate
point itself, which lies exactly on the footprint boundary, from
occluding its own plate while the body still blocks sight lines that
pass through it.

Segment/rectangle intersection is Liang-Barsky slab clipping in the
rectangle's local frame; touching counts as blocked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

PLATE_SHRINK_M = 0.01


@dataclass(frozen=True)
class Footprint:
    """Oriented rectangle: center, unit forward axis, half extents."""

    cx: float
    cy: float
    ux: float  # forward unit vector
    uy: float
    half_len: float
    half_wid: float


def heading_vector(heading_deg: float) -> tuple[float, float]:
    """Unit vector for a SUMO heading (0 = north, clockwise)."""
    rad = math.radians(heading_deg)
    return (math.sin(rad), math.cos(rad))


def footprint(x_m: float, y_m: float, heading_deg: float, length_m: float, width_m: float) -> Footprint:
    ux, uy = heading_vector(heading_deg)
    half_len = length_m / 2.0
    return Footprint(
        cx=x_m - ux * half_len,
        cy=y_m - uy * half_len,
        ux=ux,
        uy=uy,
        half_len=half_len,
        half_wid=width_m / 2.0,
    )


def plate_points(x_m: float, y_m: float, heading_deg: float, length_m: float) -> list[tuple[float, float]]:
    """Front and rear plate positions (edge midpoints of the footprint)."""
    ux, uy = heading_vector(heading_deg)
    return [(x_m, y_m), (x_m - ux * length_m, y_m - uy * length_m)]


def segment_hits_rect(
    p0: tuple[float, float],
    p1: tuple[float, float],
    rect: Footprint,
    shrink: float = 0.0,
) -> bool:
    """True when the closed segment p0-p1 meets the (shrunk) rectangle."""
    hu = rect.half_len - shrink
    hv = rect.half_wid - shrink
    if hu <= 0.0 or hv <= 0.0:
        return False
    ux, uy = rect.ux, rect.uy
    # Local frame: x along the forward axis, y along the left normal.
    dx0 = p0[0] - rect.cx
    dy0 = p0[1] - rect.cy
    ax = dx0 * ux + dy0 * uy
    ay = -dx0 * uy + dy0 * ux
    dx1 = p1[0] - rect.cx
    dy1 = p1[1] - rect.cy
    bx = dx1 * ux + dy1 * uy
    by = -dx1 * uy + dy1 * ux
    t0, t1 = 0.0, 1.0
    for a, b, h in ((ax, bx, hu), (ay, by, hv)):
        d = b - a
        if d == 0.0:
            if a < -h or a > h:
                return False
            continue
        ta = (-h - a) / d
        tb = (h - a) / d
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


def in_field_of_view(
    cam: tuple[float, float],
    forward: tuple[float, float],
    point: tuple[float, float],
    fov_deg: float,
) -> bool:
    # sqrt rather than hypot so an independent recomputation with any
    # IEEE-754 library reproduces the decision bit for bit.
    dx = point[0] - cam[0]
    dy = point[1] - cam[1]
    dist = math.sqrt(dx * dx + dy * dy)
    if dist == 0.0:
        return True
    cos_angle = (dx * forward[0] + dy * forward[1]) / dist
    return cos_angle >= math.cos(math.radians(fov_deg / 2.0))
