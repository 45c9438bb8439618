"""Collision-handling strategies and the STOP/CONTINUE decision.

Three strategies: FACTORY stops on every detected contact; FIXED_MASS and
ADAPTIVE_MASS estimate the impact force from the contact-point speed and a
robot mass term (half the cumulative link mass, or the configuration's
directional effective mass) and stop only when the estimate reaches the
contact-class force limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import dynamics
from .dynamics import RobotState
from .model import RobotModel, ScenarioConfig
from .sensing import ContactClass, ContactEvent

# Below this contact-point speed the motion direction is ill-defined and the
# adaptive strategy falls back to the conservative half-mass term.
SPEED_DIRECTION_FLOOR = 1e-6


class PolicyKind(str, Enum):
    FACTORY = "factory"
    FIXED_MASS = "fixed_mass"
    ADAPTIVE_MASS = "adaptive_mass"


class Reaction(str, Enum):
    STOP = "stop"
    CONTINUE = "continue"


class MassModel(str, Enum):
    NONE = "none"
    HALF_MASS = "half_mass"
    EFFECTIVE_MASS = "effective_mass"


@dataclass(frozen=True)
class PolicyParams:
    """Force-model constants with the standard collaborative-operation defaults."""

    spring_constant: float = 75000.0  # N/m, impacted body region
    human_mass: float = 5.6  # kg, impacted body part
    f_limit_transient: float = 280.0  # N
    f_limit_quasistatic: float = 140.0  # N
    m_r_ceiling: float = 100.0  # kg, cap for near-singular effective mass

    def __post_init__(self):
        for name in (
            "spring_constant",
            "human_mass",
            "f_limit_transient",
            "f_limit_quasistatic",
            "m_r_ceiling",
        ):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")

    @staticmethod
    def from_scenario(scenario: ScenarioConfig, **overrides) -> "PolicyParams":
        kwargs = dict(
            spring_constant=scenario.spring_constant, human_mass=scenario.human_mass
        )
        kwargs.update(overrides)
        return PolicyParams(**kwargs)

    def f_limit(self, contact_class: ContactClass) -> float:
        if contact_class is ContactClass.TRANSIENT:
            return self.f_limit_transient
        return self.f_limit_quasistatic


@dataclass(frozen=True)
class PolicyDecision:
    reaction: Reaction
    estimated_force: float  # NaN for FACTORY, which does not estimate
    m_r_used: float
    mass_model: MassModel


def estimate_force(v: float, m_r: float, params: PolicyParams) -> float:
    """Impact-force estimate F = v sqrt(k) / sqrt(1/m_R + 1/m_H).

    ``m_r`` may be +inf; it is clamped to ``params.m_r_ceiling`` first.
    Strictly increasing in both ``v`` and ``m_r``.
    """
    if v < 0.0:
        raise ValueError("speed must be non-negative")
    if not m_r > 0.0:
        raise ValueError("robot mass must be positive")
    m_r = min(m_r, params.m_r_ceiling)
    return (
        v
        * math.sqrt(params.spring_constant)
        / math.sqrt(1.0 / m_r + 1.0 / params.human_mass)
    )


def decide(
    contact_class: ContactClass, estimated_force: float, params: PolicyParams
) -> Reaction:
    """STOP iff the estimate reaches the class force limit (inclusive)."""
    if estimated_force < 0.0:
        raise ValueError("force must be non-negative")
    if estimated_force >= params.f_limit(contact_class):
        return Reaction.STOP
    return Reaction.CONTINUE


def max_safe_velocity(
    m_r: float, contact_class: ContactClass, params: PolicyParams
) -> float:
    """Largest contact-point speed whose force estimate stays at the limit."""
    if not m_r > 0.0:
        raise ValueError("robot mass must be positive")
    m_r = min(m_r, params.m_r_ceiling)
    return (
        params.f_limit(contact_class)
        / math.sqrt(params.spring_constant)
        * math.sqrt(1.0 / m_r + 1.0 / params.human_mass)
    )


def evaluate_contact(
    policy: PolicyKind,
    model: RobotModel,
    state: RobotState,
    contact: ContactEvent,
    params: PolicyParams,
) -> PolicyDecision:
    """Full per-contact pipeline: mass term, force estimate, reaction."""
    if policy is PolicyKind.FACTORY:
        return PolicyDecision(Reaction.STOP, math.nan, math.nan, MassModel.NONE)

    point_local = state.frames[contact.link].inverse().apply(contact.point_world)
    v_vec = dynamics.link_point_velocity(model, state, contact.link, point_local)
    speed = float(np.linalg.norm(v_vec))

    if policy is PolicyKind.FIXED_MASS:
        m_r = dynamics.half_mass(model, contact.link)
        mass_model = MassModel.HALF_MASS
    else:
        if speed < SPEED_DIRECTION_FLOOR:
            m_r = dynamics.half_mass(model, contact.link)
            mass_model = MassModel.HALF_MASS
        else:
            u = v_vec / speed
            m_r = dynamics.effective_mass(model, state.q, contact.link, point_local, u)
            mass_model = MassModel.EFFECTIVE_MASS
    m_r = min(m_r, params.m_r_ceiling)

    force = estimate_force(speed, m_r, params)
    return PolicyDecision(decide(contact.contact_class, force, params), force, m_r, mass_model)
