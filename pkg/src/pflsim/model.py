"""Robot description and scenario configuration: types, validation, JSON I/O.

Robot and scenario files are UTF-8 JSON with ``"format_version": 1``.
Transforms are stored as ``{"translation": [x, y, z], "rotation": [w, x, y, z]}``
with a unit quaternion. See README for the full schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .geometry import Transform, is_unit, quat_to_rot, rot_to_quat

FORMAT_VERSION = 1

# ISO-style defaults applied to scenarios that do not override them:
# hand-back spring constant, average human arm mass, standard gravity.
DEFAULT_SPRING_CONSTANT = 75000.0
DEFAULT_HUMAN_MASS = 5.6
DEFAULT_GRAVITY = 9.81


class ParseError(Exception):
    """Raised when a document cannot be parsed at all."""


class ValidationError(Exception):
    """Raised when a parsed document violates an invariant.

    ``field_path`` names the offending field, e.g. ``joints[2].axis``.
    """

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


class JointKind(str, Enum):
    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"
    FIXED = "fixed"


class SensingMode(str, Enum):
    SKIN_PADS = "skin_pads"
    JOINT_TORQUE = "joint_torque"


@dataclass(frozen=True)
class JointSpec:
    name: str
    kind: JointKind
    axis: np.ndarray  # unit vector in the parent link frame
    origin: Transform  # parent link frame -> joint frame
    position_limits: tuple[float, float]
    velocity_limit: float


@dataclass(frozen=True)
class Capsule:
    """Segment from a to b (link frame) swept by a sphere of given radius."""

    a: np.ndarray
    b: np.ndarray
    radius: float


@dataclass(frozen=True)
class LinkSpec:
    name: str
    mass: float
    com: np.ndarray  # link frame
    inertia: np.ndarray  # 3x3, about com, link frame
    capsules: tuple[Capsule, ...]


@dataclass(frozen=True)
class SkinPad:
    """Pressure-sensitive patch: a sub-segment of a link capsule.

    ``t0``/``t1`` bound the covered interval of the capsule axis; ``sector``
    is the covered angular range (radians) around the axis, measured from a
    fixed reference perpendicular. The default sector covers the full
    circumference.
    """

    pad_id: int
    link: int
    capsule: int = 0
    t0: float = 0.0
    t1: float = 1.0
    sector: tuple[float, float] = (0.0, 2.0 * math.pi)


@dataclass(frozen=True)
class RobotModel:
    """Serial-chain arm: joint i connects link i-1 (or the base) to link i."""

    name: str
    joints: tuple[JointSpec, ...]
    links: tuple[LinkSpec, ...]
    pads: tuple[SkinPad, ...]
    sensing_mode: SensingMode

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def movable_joints(self) -> tuple[int, ...]:
        """Indices of joints that carry a degree of freedom (not fixed)."""
        return tuple(
            i for i, j in enumerate(self.joints) if j.kind is not JointKind.FIXED
        )

    @property
    def dof(self) -> int:
        return len(self.movable_joints)

    @property
    def total_mass(self) -> float:
        return sum(l.mass for l in self.links)

    def pads_on_link(self, link: int) -> tuple[SkinPad, ...]:
        return tuple(p for p in self.pads if p.link == link)


@dataclass(frozen=True)
class Bucket:
    """Suspended obstacle: a bob of given mass hanging on a string."""

    name: str
    anchor: np.ndarray  # world, string attachment point
    string_length: float
    mass: float
    bob_radius: float


@dataclass(frozen=True)
class Clamp:
    """Fixed spring-loaded measuring device, modeled as an axis-aligned box."""

    position: np.ndarray  # world, box center
    stiffness: float  # N/m
    contact_normal: np.ndarray  # unit, pointing out of the device into the robot
    half_extents: np.ndarray = field(
        default_factory=lambda: np.array([0.075, 0.075, 0.06])
    )

    @property
    def lo(self) -> np.ndarray:
        return self.position - self.half_extents

    @property
    def hi(self) -> np.ndarray:
        return self.position + self.half_extents


@dataclass(frozen=True)
class Segment:
    """One straight Cartesian move of the task script."""

    direction: np.ndarray  # unit, world
    distance: float
    speed_cap: Optional[float] = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    buckets: tuple[Bucket, ...]
    clamp: Clamp
    task_script: tuple[Segment, ...]
    spring_constant: float = DEFAULT_SPRING_CONSTANT
    human_mass: float = DEFAULT_HUMAN_MASS
    gravity: float = DEFAULT_GRAVITY
    start_q: Optional[np.ndarray] = None  # authored start configuration


# ---------------------------------------------------------------------------
# Parsing helpers


def _require(doc: dict, key: str, path: str) -> Any:
    if key not in doc:
        raise ValidationError(f"{path}.{key}" if path else key, "missing required field")
    return doc[key]


def _vec3(value, path: str) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(path, "not a numeric vector") from None
    if v.shape != (3,):
        raise ValidationError(path, "must have exactly 3 components")
    return v


def _unit3(value, path: str) -> np.ndarray:
    v = _vec3(value, path)
    if not is_unit(v):
        raise ValidationError(path, "must have unit norm (tolerance 1e-9)")
    return v


def _positive(value, path: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValidationError(path, "not a number") from None
    if not x > 0.0 or not math.isfinite(x):
        raise ValidationError(path, "must be positive and finite")
    return x


def _transform(doc, path: str) -> Transform:
    if not isinstance(doc, dict):
        raise ValidationError(path, "must be an object with translation and rotation")
    t = _vec3(_require(doc, "translation", path), f"{path}.translation")
    q = _require(doc, "rotation", path)
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValidationError(f"{path}.rotation", "quaternion must be [w, x, y, z]")
    if abs(float(np.dot(q, q)) - 1.0) > 1e-6:
        raise ValidationError(f"{path}.rotation", "quaternion must be unit norm")
    return Transform(quat_to_rot(q), t)


def _check_format_version(doc: dict) -> None:
    version = _require(doc, "format_version", "")
    if version != FORMAT_VERSION:
        raise ValidationError("format_version", f"unsupported version {version!r}")


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        raise
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: document root must be an object")
    return doc


# ---------------------------------------------------------------------------
# Robot loading


def _parse_joint(doc: dict, path: str) -> JointSpec:
    name = str(_require(doc, "name", path))
    kind_raw = _require(doc, "kind", path)
    try:
        kind = JointKind(kind_raw)
    except ValueError:
        raise ValidationError(f"{path}.kind", f"unknown joint kind {kind_raw!r}") from None
    axis = _unit3(_require(doc, "axis", path), f"{path}.axis")
    origin = _transform(_require(doc, "origin", path), f"{path}.origin")
    limits = _require(doc, "position_limits", path)
    if not (isinstance(limits, Sequence) and len(limits) == 2):
        raise ValidationError(f"{path}.position_limits", "must be [min, max]")
    lo, hi = float(limits[0]), float(limits[1])
    if lo > hi:
        raise ValidationError(f"{path}.position_limits", "min must not exceed max")
    vel = _positive(_require(doc, "velocity_limit", path), f"{path}.velocity_limit")
    return JointSpec(name, kind, axis, origin, (lo, hi), vel)


def _parse_link(doc: dict, path: str) -> LinkSpec:
    name = str(_require(doc, "name", path))
    mass = float(_require(doc, "mass", path))
    if mass < 0.0 or not math.isfinite(mass):
        raise ValidationError(f"{path}.mass", "must be non-negative and finite")
    com = _vec3(_require(doc, "com", path), f"{path}.com")
    inertia = np.asarray(_require(doc, "inertia", path), dtype=float)
    if inertia.shape != (3, 3):
        raise ValidationError(f"{path}.inertia", "must be a 3x3 matrix")
    if np.max(np.abs(inertia - inertia.T)) > 1e-9:
        raise ValidationError(f"{path}.inertia", "must be symmetric")
    eigvals = np.linalg.eigvalsh(0.5 * (inertia + inertia.T))
    if eigvals[0] < -1e-9:
        raise ValidationError(f"{path}.inertia", "must be positive semidefinite")
    capsules = []
    for i, cdoc in enumerate(_require(doc, "capsules", path)):
        cpath = f"{path}.capsules[{i}]"
        a = _vec3(_require(cdoc, "a", cpath), f"{cpath}.a")
        b = _vec3(_require(cdoc, "b", cpath), f"{cpath}.b")
        radius = _positive(_require(cdoc, "radius", cpath), f"{cpath}.radius")
        capsules.append(Capsule(a, b, radius))
    return LinkSpec(name, mass, com, inertia, tuple(capsules))


def _parse_pad(doc: dict, path: str, links: Sequence[LinkSpec]) -> SkinPad:
    pad_id = int(_require(doc, "id", path))
    link = int(_require(doc, "link", path))
    if not 0 <= link < len(links):
        raise ValidationError(f"{path}.link", f"link index {link} out of range")
    capsule = int(doc.get("capsule", 0))
    if not 0 <= capsule < len(links[link].capsules):
        raise ValidationError(f"{path}.capsule", f"capsule index {capsule} out of range")
    t0 = float(_require(doc, "t0", path))
    t1 = float(_require(doc, "t1", path))
    if not (0.0 <= t0 < t1 <= 1.0):
        raise ValidationError(f"{path}.t0", "patch interval must satisfy 0 <= t0 < t1 <= 1")
    sector = doc.get("sector", (0.0, 2.0 * math.pi))
    s0, s1 = float(sector[0]), float(sector[1])
    if not (0.0 <= s0 < s1 <= s0 + 2.0 * math.pi + 1e-12):
        raise ValidationError(f"{path}.sector", "sector must satisfy 0 <= start < end <= start + 2*pi")
    return SkinPad(pad_id, link, capsule, t0, t1, (s0, s1))


def load_robot(path) -> RobotModel:
    """Load and validate a robot description file.

    Raises ``ParseError`` for malformed documents and ``ValidationError``
    (naming the offending field) for invariant violations.
    """
    doc = _read_json(path)
    return robot_from_dict(doc)


def robot_from_dict(doc: dict) -> RobotModel:
    _check_format_version(doc)
    name = str(doc.get("name", "robot"))
    mode_raw = _require(doc, "sensing_mode", "")
    try:
        mode = SensingMode(mode_raw)
    except ValueError:
        raise ValidationError("sensing_mode", f"unknown mode {mode_raw!r}") from None

    joints = tuple(
        _parse_joint(j, f"joints[{i}]") for i, j in enumerate(_require(doc, "joints", ""))
    )
    links = tuple(
        _parse_link(l, f"links[{i}]") for i, l in enumerate(_require(doc, "links", ""))
    )
    if len(joints) == 0:
        raise ValidationError("joints", "chain must have at least one joint")
    if len(joints) != len(links):
        raise ValidationError("links", f"{len(links)} links for {len(joints)} joints; counts must match")

    pads = tuple(
        _parse_pad(p, f"pads[{i}]", links) for i, p in enumerate(doc.get("pads", []))
    )
    ids = [p.pad_id for p in pads]
    if len(set(ids)) != len(ids):
        raise ValidationError("pads", "pad ids must be unique")
    if mode is SensingMode.SKIN_PADS and not pads:
        raise ValidationError("pads", "skin_pads sensing requires at least one pad")
    if mode is SensingMode.JOINT_TORQUE and pads:
        raise ValidationError("pads", "joint_torque sensing must not declare pads")

    model = RobotModel(name, joints, links, pads, mode)
    if model.dof == 0:
        raise ValidationError("joints", "chain has no movable joint")
    return model


def robot_to_dict(model: RobotModel) -> dict:
    """Serialize a model back to the document form (round-trips with load)."""
    return {
        "format_version": FORMAT_VERSION,
        "name": model.name,
        "sensing_mode": model.sensing_mode.value,
        "joints": [
            {
                "name": j.name,
                "kind": j.kind.value,
                "axis": list(j.axis),
                "origin": {
                    "translation": list(j.origin.translation),
                    "rotation": list(rot_to_quat(j.origin.rotation)),
                },
                "position_limits": list(j.position_limits),
                "velocity_limit": j.velocity_limit,
            }
            for j in model.joints
        ],
        "links": [
            {
                "name": l.name,
                "mass": l.mass,
                "com": list(l.com),
                "inertia": [list(row) for row in l.inertia],
                "capsules": [
                    {"a": list(c.a), "b": list(c.b), "radius": c.radius}
                    for c in l.capsules
                ],
            }
            for l in model.links
        ],
        "pads": [
            {
                "id": p.pad_id,
                "link": p.link,
                "capsule": p.capsule,
                "t0": p.t0,
                "t1": p.t1,
                "sector": list(p.sector),
            }
            for p in model.pads
        ],
    }


# ---------------------------------------------------------------------------
# Scenario loading


def load_scenario(path) -> ScenarioConfig:
    """Load and validate a scenario file, applying standard defaults."""
    doc = _read_json(path)
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    _check_format_version(doc)
    name = str(doc.get("name", "scenario"))

    buckets = []
    for i, bdoc in enumerate(doc.get("buckets", [])):
        path = f"buckets[{i}]"
        buckets.append(
            Bucket(
                name=str(bdoc.get("name", f"bucket{i + 1}")),
                anchor=_vec3(_require(bdoc, "anchor", path), f"{path}.anchor"),
                string_length=_positive(
                    _require(bdoc, "string_length", path), f"{path}.string_length"
                ),
                mass=_positive(_require(bdoc, "mass", path), f"{path}.mass"),
                bob_radius=_positive(
                    _require(bdoc, "bob_radius", path), f"{path}.bob_radius"
                ),
            )
        )

    cdoc = _require(doc, "clamp", "")
    clamp_kwargs = dict(
        position=_vec3(_require(cdoc, "position", "clamp"), "clamp.position"),
        stiffness=_positive(_require(cdoc, "stiffness", "clamp"), "clamp.stiffness"),
        contact_normal=_unit3(
            _require(cdoc, "contact_normal", "clamp"), "clamp.contact_normal"
        ),
    )
    if "half_extents" in cdoc:
        he = _vec3(cdoc["half_extents"], "clamp.half_extents")
        if np.any(he <= 0.0):
            raise ValidationError("clamp.half_extents", "must be positive")
        clamp_kwargs["half_extents"] = he
    clamp = Clamp(**clamp_kwargs)

    segments = []
    for i, sdoc in enumerate(_require(doc, "task_script", "")):
        path = f"task_script[{i}]"
        cap = sdoc.get("speed_cap")
        segments.append(
            Segment(
                direction=_unit3(_require(sdoc, "direction", path), f"{path}.direction"),
                distance=_positive(_require(sdoc, "distance", path), f"{path}.distance"),
                speed_cap=None if cap is None else _positive(cap, f"{path}.speed_cap"),
            )
        )
    if not segments:
        raise ValidationError("task_script", "must contain at least one segment")

    start_q = None
    if "start_q" in doc:
        start_q = np.asarray(doc["start_q"], dtype=float)
        if start_q.ndim != 1:
            raise ValidationError("start_q", "must be a flat list of joint positions")

    return ScenarioConfig(
        name=name,
        buckets=tuple(buckets),
        clamp=clamp,
        task_script=tuple(segments),
        spring_constant=_positive(
            doc.get("spring_constant", DEFAULT_SPRING_CONSTANT), "spring_constant"
        ),
        human_mass=_positive(doc.get("human_mass", DEFAULT_HUMAN_MASS), "human_mass"),
        gravity=_positive(doc.get("gravity", DEFAULT_GRAVITY), "gravity"),
        start_q=start_q,
    )


def scenario_to_dict(sc: ScenarioConfig) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "name": sc.name,
        "spring_constant": sc.spring_constant,
        "human_mass": sc.human_mass,
        "gravity": sc.gravity,
        "buckets": [
            {
                "name": b.name,
                "anchor": list(b.anchor),
                "string_length": b.string_length,
                "mass": b.mass,
                "bob_radius": b.bob_radius,
            }
            for b in sc.buckets
        ],
        "clamp": {
            "position": list(sc.clamp.position),
            "stiffness": sc.clamp.stiffness,
            "contact_normal": list(sc.clamp.contact_normal),
            "half_extents": list(sc.clamp.half_extents),
        },
        "task_script": [
            {"direction": list(s.direction), "distance": s.distance, "speed_cap": s.speed_cap}
            for s in sc.task_script
        ],
    }
    if sc.start_q is not None:
        doc["start_q"] = list(sc.start_q)
    return doc


def bundled_path(name: str) -> Path:
    """Filesystem path of a bundled data file, e.g. ``ur10e_like.json``."""
    return Path(str(resources.files("pflsim").joinpath("data", name)))
