"""Collision detection and isolation.

Two channels mirror the two arm configurations: geometric skin-pad contact
(pressure pads tiled over the link capsules) and joint-torque residuals
(external torque synthesized from a known contact force, then isolated to
the most distal loaded joint).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .dynamics import RobotState, point_jacobian
from .geometry import normalized, segment_aabb_closest, segment_sphere_distance
from .model import RobotModel, SensingMode, SkinPad

log = logging.getLogger(__name__)

DEFAULT_RESIDUAL_EPSILON = 0.1  # N*m


class ContactClass(str, Enum):
    TRANSIENT = "transient"
    QUASI_STATIC = "quasi_static"


@dataclass(frozen=True)
class SphereObstacle:
    obstacle_id: str
    center: np.ndarray
    radius: float
    contact_class: ContactClass


@dataclass(frozen=True)
class BoxObstacle:
    """Axis-aligned box obstacle (the clamp device)."""

    obstacle_id: str
    lo: np.ndarray
    hi: np.ndarray
    contact_class: ContactClass


Obstacle = Union[SphereObstacle, BoxObstacle]


@dataclass(frozen=True)
class ContactEvent:
    """A detected and isolated collision."""

    time: float
    link: int
    pad: Optional[int]  # present iff the model senses through skin pads
    point_world: np.ndarray
    contact_class: ContactClass
    obstacle: str
    normal: np.ndarray  # world, pointing from the obstacle into the robot
    depth: float = 0.0


@dataclass(frozen=True)
class _PatchContact:
    point: np.ndarray
    normal: np.ndarray
    depth: float


def _pad_sector_reference(axis_dir: np.ndarray) -> np.ndarray:
    """Deterministic reference perpendicular for measuring pad sector angles."""
    ref = np.array([1.0, 0.0, 0.0])
    if abs(float(axis_dir @ ref)) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    ref = ref - (ref @ axis_dir) * axis_dir
    return normalized(ref)


def _patch_obstacle_contact(
    a: np.ndarray,
    b: np.ndarray,
    radius: float,
    obstacle: Obstacle,
    sector: Optional[tuple[float, float]] = None,
) -> Optional[_PatchContact]:
    """Deepest-penetration contact between a (sub-)capsule and an obstacle."""
    if isinstance(obstacle, SphereObstacle):
        dist, t = segment_sphere_distance(a, b, obstacle.center, obstacle.radius)
        gap = dist - radius
        if gap >= 0.0:
            return None
        p_axis = a + t * (b - a)
        to_obstacle = obstacle.center - p_axis
        n = float(np.linalg.norm(to_obstacle))
        if n < 1e-12:
            return None
        d = to_obstacle / n
        point = p_axis + d * radius
        normal = -d
    else:
        dist, t, p_box = segment_aabb_closest(a, b, obstacle.lo, obstacle.hi)
        gap = dist - radius
        if gap >= 0.0:
            return None
        p_axis = a + t * (b - a)
        if dist > 1e-12:
            d = (p_box - p_axis) / dist
        else:
            # Axis entered the box: push out along the least-penetrated face.
            center = 0.5 * (obstacle.lo + obstacle.hi)
            half = 0.5 * (obstacle.hi - obstacle.lo)
            over = half - np.abs(p_axis - center)
            axis_idx = int(np.argmin(over))
            d = np.zeros(3)
            d[axis_idx] = math.copysign(1.0, p_axis[axis_idx] - center[axis_idx]) * -1.0
        point = p_axis + d * radius
        normal = -d

    if sector is not None and sector[1] - sector[0] < 2.0 * math.pi - 1e-12:
        axis_len = float(np.linalg.norm(b - a))
        if axis_len > 1e-12:
            e = (b - a) / axis_len
            radial = d - (d @ e) * e
            rn = float(np.linalg.norm(radial))
            if rn > 1e-9:
                ref = _pad_sector_reference(e)
                ang = math.atan2(
                    float(np.cross(e, ref) @ (radial / rn)), float(ref @ (radial / rn))
                )
                ang = ang % (2.0 * math.pi)
                lo, hi = sector
                if not (lo <= ang <= hi or lo <= ang + 2.0 * math.pi <= hi):
                    return None
    return _PatchContact(point, normal, -gap)


def _pad_world_patch(
    model: RobotModel, state: RobotState, pad: SkinPad
) -> tuple[np.ndarray, np.ndarray, float]:
    cap = model.links[pad.link].capsules[pad.capsule]
    frame = state.frames[pad.link]
    a = frame.apply(cap.a + pad.t0 * (cap.b - cap.a))
    b = frame.apply(cap.a + pad.t1 * (cap.b - cap.a))
    return a, b, cap.radius


def detect_skin(
    model: RobotModel, state: RobotState, obstacles: Sequence[Obstacle]
) -> list[ContactEvent]:
    """One event per pad whose surface patch currently intersects an obstacle.

    Events are ordered by pad id, then by obstacle order, and carry the
    deepest-penetration point. Timestamps are left at 0; callers stamp them.
    """
    if model.sensing_mode is not SensingMode.SKIN_PADS:
        raise ValueError("detect_skin requires a skin_pads model")
    events: list[ContactEvent] = []
    for pad in sorted(model.pads, key=lambda p: p.pad_id):
        a, b, radius = _pad_world_patch(model, state, pad)
        for obstacle in obstacles:
            hit = _patch_obstacle_contact(a, b, radius, obstacle, pad.sector)
            if hit is not None:
                events.append(
                    ContactEvent(
                        time=0.0,
                        link=pad.link,
                        pad=pad.pad_id,
                        point_world=hit.point,
                        contact_class=obstacle.contact_class,
                        obstacle=obstacle.obstacle_id,
                        normal=hit.normal,
                        depth=hit.depth,
                    )
                )
    return events


def detect_links(
    model: RobotModel, state: RobotState, obstacles: Sequence[Obstacle]
) -> list[ContactEvent]:
    """Ground-truth capsule contacts per link (no pad attribution).

    Used as the geometric stage of the joint-torque channel and by the
    simulator's contact physics. One event per (link, obstacle) pair with
    the deepest penetration over that link's capsules, ordered by link.
    """
    events: list[ContactEvent] = []
    for link_idx, link in enumerate(model.links):
        frame = state.frames[link_idx]
        for obstacle in obstacles:
            best: Optional[_PatchContact] = None
            for cap in link.capsules:
                a = frame.apply(cap.a)
                b = frame.apply(cap.b)
                hit = _patch_obstacle_contact(a, b, cap.radius, obstacle)
                if hit is not None and (best is None or hit.depth > best.depth):
                    best = hit
            if best is not None:
                events.append(
                    ContactEvent(
                        time=0.0,
                        link=link_idx,
                        pad=None,
                        point_world=best.point,
                        contact_class=obstacle.contact_class,
                        obstacle=obstacle.obstacle_id,
                        normal=best.normal,
                        depth=best.depth,
                    )
                )
    return events


def synth_residual(
    model: RobotModel,
    state: RobotState,
    f_ext: np.ndarray,
    link: int,
    point: np.ndarray,
) -> np.ndarray:
    """External joint torques J^T f for a force applied at a link point.

    Entries for joints distal to ``link`` are exactly zero by the Jacobian's
    column structure.
    """
    J = point_jacobian(model, state.q, link, point)
    return J.T @ np.asarray(f_ext, dtype=float)


def isolate_from_residual(
    model: RobotModel,
    residual: np.ndarray,
    epsilon: float = DEFAULT_RESIDUAL_EPSILON,
) -> Optional[int]:
    """Most distal joint with |residual| above threshold, mapped to its link.

    Returns None when no entry exceeds ``epsilon``.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    residual = np.asarray(residual, dtype=float)
    if residual.shape != (model.dof,):
        raise ValueError(f"residual must have length {model.dof}")
    movable = model.movable_joints
    for col in range(model.dof - 1, -1, -1):
        if abs(residual[col]) > epsilon:
            return movable[col]
    return None
