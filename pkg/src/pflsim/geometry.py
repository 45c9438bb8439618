"""Low-level spatial math: rotations, rigid transforms, capsule distance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-9


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def quat_to_rot(q) -> np.ndarray:
    """Rotation matrix from a [w, x, y, z] quaternion (normalized internally)."""
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("zero quaternion")
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rot_to_quat(R: np.ndarray) -> tuple[float, float, float, float]:
    """Quaternion [w, x, y, z] with w >= 0 from a rotation matrix."""
    t = R[0, 0] + R[1, 1] + R[2, 2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] >= R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    return (w, x, y, z)


def axis_angle_rot(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    c = math.cos(angle)
    s = math.sin(angle)
    ax, ay, az = axis
    C = 1.0 - c
    return np.array([
        [c + ax * ax * C, ax * ay * C - az * s, ax * az * C + ay * s],
        [ay * ax * C + az * s, c + ay * ay * C, ay * az * C - ax * s],
        [az * ax * C - ay * s, az * ay * C + ax * s, c + az * az * C],
    ])


@dataclass(frozen=True)
class Transform:
    """Rigid transform: p_parent = rotation @ p_local + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    @staticmethod
    def identity() -> "Transform":
        return Transform(np.eye(3), np.zeros(3))

    def compose(self, other: "Transform") -> "Transform":
        return Transform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ point + self.translation

    def rotate(self, vec: np.ndarray) -> np.ndarray:
        return self.rotation @ vec

    def inverse(self) -> "Transform":
        rt = self.rotation.T
        return Transform(rt, -(rt @ self.translation))

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


def normalized(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / n


def is_unit(v, tol: float = UNIT_TOL) -> bool:
    return abs(float(np.dot(v, v)) - 1.0) <= 2.0 * tol


def closest_param_on_segment(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> float:
    """Parameter t in [0, 1] of the point on segment a + t(b - a) closest to p."""
    d = b - a
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return 0.0
    t = float(np.dot(p - a, d)) / dd
    return min(1.0, max(0.0, t))


def segment_sphere_distance(
    a: np.ndarray, b: np.ndarray, center: np.ndarray, radius: float
) -> tuple[float, float]:
    """(distance from segment to sphere surface, segment parameter of closest point).

    Negative distance means the segment axis enters the sphere.
    """
    t = closest_param_on_segment(a, b, center)
    p = a + t * (b - a)
    return float(np.linalg.norm(center - p)) - radius, t


def segment_aabb_closest(
    a: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> tuple[float, float, np.ndarray]:
    """Exact closest approach between a segment and an axis-aligned box.

    Returns (distance, segment parameter t, closest point on the box). The
    squared distance is piecewise quadratic in t with breakpoints where a
    coordinate of the segment crosses a box face plane, so the global minimum
    is found by checking each piece analytically. Distance is 0 when the
    segment intersects the box.
    """
    d = b - a
    breaks = {0.0, 1.0}
    for c in range(3):
        if d[c] != 0.0:
            for bound in (lo[c], hi[c]):
                t = (bound - a[c]) / d[c]
                if 0.0 < t < 1.0:
                    breaks.add(float(t))
    ts = sorted(breaks)

    best = (math.inf, 0.0)
    for i in range(len(ts) - 1):
        t0, t1 = ts[i], ts[i + 1]
        tm = 0.5 * (t0 + t1)
        # On this piece each coordinate is either inside the slab (no
        # contribution) or clamped to a fixed face, so dist^2 = A t^2 + B t + C.
        A = B = C = 0.0
        for c in range(3):
            x = a[c] + tm * d[c]
            if x < lo[c]:
                bound = lo[c]
            elif x > hi[c]:
                bound = hi[c]
            else:
                continue
            # term (a_c + t d_c - bound)^2
            off = a[c] - bound
            A += d[c] * d[c]
            B += 2.0 * off * d[c]
            C += off * off
        candidates = [t0, t1]
        if A > 0.0:
            tv = -B / (2.0 * A)
            if t0 < tv < t1:
                candidates.append(tv)
        for t in candidates:
            dist2 = A * t * t + B * t + C
            if dist2 < best[0]:
                best = (dist2, t)

    dist = math.sqrt(max(0.0, best[0]))
    t = best[1]
    p_seg = a + t * d
    p_box = np.minimum(np.maximum(p_seg, lo), hi)
    return dist, t, p_box
