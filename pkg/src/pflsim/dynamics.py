"""Kinematics and dynamics kernel for serial arms.

Everything here is a pure function of (model, configuration): world link
frames, point Jacobians, the joint-space inertia matrix (composite rigid
body algorithm), the linear operational-space inverse inertia at a point,
and the directional effective mass derived from it, together with the
conservative half-total-mass fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import Transform, axis_angle_rot, is_unit, skew
from .model import JointKind, RobotModel

# Below this directional inverse-inertia the arm cannot be accelerated along
# the direction and the effective mass is reported as +inf (units 1/kg).
EFFECTIVE_MASS_SINGULARITY = 1e-9


@dataclass(frozen=True)
class RobotState:
    """Joint positions/velocities plus the world frame of every link."""

    q: np.ndarray
    qdot: np.ndarray
    frames: tuple[Transform, ...]

    @staticmethod
    def create(model: RobotModel, q, qdot=None) -> "RobotState":
        q = np.asarray(q, dtype=float)
        if qdot is None:
            qdot = np.zeros(model.dof)
        qdot = np.asarray(qdot, dtype=float)
        if q.shape != (model.dof,) or qdot.shape != (model.dof,):
            raise ValueError(
                f"state vectors must have length {model.dof}, got {q.shape} / {qdot.shape}"
            )
        return RobotState(q, qdot, tuple(forward_kinematics(model, q)))


def _joint_motion(kind: JointKind, axis: np.ndarray, qi: float) -> Transform:
    if kind is JointKind.REVOLUTE:
        return Transform(axis_angle_rot(axis, qi), np.zeros(3))
    if kind is JointKind.PRISMATIC:
        return Transform(np.eye(3), axis * qi)
    return Transform.identity()


def forward_kinematics(model: RobotModel, q) -> list[Transform]:
    """World transform of every link frame for joint positions ``q``.

    ``q`` has one entry per movable joint, ordered base to tip. Fixed joints
    contribute their origin transform only.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (model.dof,):
        raise ValueError(f"expected {model.dof} joint positions, got {q.shape}")
    frames: list[Transform] = []
    current = Transform.identity()
    qi = iter(q)
    for joint in model.joints:
        current = current.compose(joint.origin)
        if joint.kind is not JointKind.FIXED:
            current = current.compose(_joint_motion(joint.kind, joint.axis, next(qi)))
        frames.append(current)
    return frames


def _world_joint_data(
    model: RobotModel, q: np.ndarray
) -> tuple[list[Transform], list[np.ndarray], list[np.ndarray]]:
    """Frames plus, per movable joint, its world axis and world origin point."""
    frames: list[Transform] = []
    axes: list[np.ndarray] = []
    origins: list[np.ndarray] = []
    current = Transform.identity()
    qi = iter(q)
    for joint in model.joints:
        current = current.compose(joint.origin)
        if joint.kind is not JointKind.FIXED:
            axes.append(current.rotation @ joint.axis)
            origins.append(current.translation.copy())
            current = current.compose(_joint_motion(joint.kind, joint.axis, next(qi)))
        frames.append(current)
    return frames, axes, origins


def _movable_columns_up_to(model: RobotModel, link: int) -> list[tuple[int, int]]:
    """(column, joint index) pairs for movable joints at or before ``link``."""
    cols = []
    for col, jidx in enumerate(model.movable_joints):
        if jidx <= link:
            cols.append((col, jidx))
    return cols


def point_jacobian(
    model: RobotModel,
    q,
    link: int,
    point: np.ndarray,
    _data: Optional[tuple] = None,
) -> np.ndarray:
    """Linear-velocity Jacobian (3 x dof) of a point given in ``link``'s frame.

    Columns of joints distal to ``link`` are exactly zero, so
    ``J @ qdot`` is the world velocity of the point.
    """
    if not 0 <= link < model.n_links:
        raise ValueError(f"link index {link} out of range")
    q = np.asarray(q, dtype=float)
    if _data is None:
        frames, axes, origins = _world_joint_data(model, q)
    else:
        frames, axes, origins = _data
    p_world = frames[link].apply(np.asarray(point, dtype=float))
    J = np.zeros((3, model.dof))
    for col, jidx in enumerate(model.movable_joints):
        if jidx > link:
            break
        joint = model.joints[jidx]
        if joint.kind is JointKind.REVOLUTE:
            J[:, col] = np.cross(axes[col], p_world - origins[col])
        else:  # prismatic
            J[:, col] = axes[col]
    return J


def inertia_matrix(model: RobotModel, q) -> np.ndarray:
    """Joint-space inertia matrix via the composite rigid body algorithm.

    Working in world Plucker coordinates at the origin: each link contributes
    a 6x6 spatial inertia, composites accumulate tip-to-base, and
    ``M[j, k] = S_j . (I_composite(k) @ S_k)`` with S the joint motion axes.
    The result is symmetric positive definite for models whose links all
    carry mass and rotational inertia.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (model.dof,):
        raise ValueError(f"expected {model.dof} joint positions, got {q.shape}")
    frames, axes, origins = _world_joint_data(model, q)

    n_links = model.n_links
    spatial = []
    for i, link in enumerate(model.links):
        R = frames[i].rotation
        c = frames[i].apply(link.com)
        I_c = R @ link.inertia @ R.T
        C = skew(c)
        m = link.mass
        block = np.zeros((6, 6))
        block[:3, :3] = I_c + m * (C @ C.T)
        block[:3, 3:] = m * C
        block[3:, :3] = m * C.T
        block[3:, 3:] = m * np.eye(3)
        spatial.append(block)

    composite = [np.zeros((6, 6))] * n_links
    acc = np.zeros((6, 6))
    for i in range(n_links - 1, -1, -1):
        acc = acc + spatial[i]
        composite[i] = acc

    movable = model.movable_joints
    n = model.dof
    S = np.zeros((6, n))
    for col, jidx in enumerate(movable):
        joint = model.joints[jidx]
        if joint.kind is JointKind.REVOLUTE:
            S[:3, col] = axes[col]
            S[3:, col] = np.cross(origins[col], axes[col])
        else:
            S[3:, col] = axes[col]

    M = np.zeros((n, n))
    for k in range(n):
        F = composite[movable[k]] @ S[:, k]
        for j in range(k + 1):
            M[j, k] = S[:, j] @ F
            M[k, j] = M[j, k]
    return M


def cartesian_ke_matrix_inv(
    model: RobotModel, q, link: int, point: np.ndarray
) -> np.ndarray:
    """Linear block of the inverse operational-space inertia at a point.

    Returns the symmetric positive-semidefinite 3x3 matrix
    ``J M(q)^-1 J^T`` mapping a force applied at the point to the linear
    acceleration it produces there.
    """
    q = np.asarray(q, dtype=float)
    data = _world_joint_data(model, q)
    J = point_jacobian(model, q, link, point, _data=data)
    M = inertia_matrix(model, q)
    try:
        X = np.linalg.solve(M, J.T)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            "internal error: singular joint-space inertia matrix"
        ) from exc
    lam_inv = J @ X
    return 0.5 * (lam_inv + lam_inv.T)


def effective_mass(
    model: RobotModel, q, link: int, point: np.ndarray, u: np.ndarray
) -> float:
    """Mass perceived at ``point`` of ``link`` when pushed along unit vector ``u``.

    Returns +inf when the arm cannot be accelerated along ``u`` at that
    point (directional inverse inertia below the singularity guard).
    """
    u = np.asarray(u, dtype=float)
    if not is_unit(u):
        raise ValueError("direction u must have unit norm (tolerance 1e-9)")
    lam_inv = cartesian_ke_matrix_inv(model, q, link, point)
    denom = float(u @ lam_inv @ u)
    if denom < EFFECTIVE_MASS_SINGULARITY:
        return math.inf
    return 1.0 / denom


def half_mass(model: RobotModel, link: int) -> float:
    """Half of the summed link masses from the base up to ``link`` inclusive."""
    if not 0 <= link < model.n_links:
        raise ValueError(f"link index {link} out of range")
    return 0.5 * sum(l.mass for l in model.links[: link + 1])


def link_point_velocity(
    model: RobotModel, state: RobotState, link: int, point: np.ndarray
) -> np.ndarray:
    """World velocity of a link-frame point under the state's joint rates."""
    J = point_jacobian(model, state.q, link, point)
    return J @ state.qdot
