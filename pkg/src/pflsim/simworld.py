"""Deterministic fixed-step simulation of the pick-and-place collision task.

The arm is velocity-controlled (damped least-squares on the tip Jacobian)
and follows the scenario's Cartesian script. Buckets are planar pendulums
coupled to the arm by single plastic impulses per contact episode; the
clamp is a linear spring compressed by geometric penetration. Sensing runs
at a fixed detection period, reactions follow the configured policy, and a
stop/hold/resume state machine reproduces the task protocol. Identical
inputs (model, scenario, policy, seed) give bit-identical runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import dynamics, policy as policy_mod, sensing
from .dynamics import RobotState
from .geometry import segment_aabb_closest
from .model import RobotModel, ScenarioConfig, SensingMode
from .policy import MassModel, PolicyDecision, PolicyKind, PolicyParams, Reaction
from .sensing import BoxObstacle, ContactClass, ContactEvent, SphereObstacle


@dataclass(frozen=True)
class JitterConfig:
    """Per-repetition stochasticity (zero both sigmas for a noise-free run)."""

    sigma_pose: float = 0.002  # m, segment-start Cartesian pose noise
    sigma_latency: float = 0.005  # s, reaction latency noise


@dataclass(frozen=True)
class SimConfig:
    cartesian_speed: float
    dt: float = 0.001
    stop_hold: float = 1.0
    rng_seed: int = 0
    jitter: JitterConfig = field(default_factory=JitterConfig)
    detection_period: float = 0.033
    control_period: float = 0.010
    dls_damping: float = 0.01
    residual_epsilon: float = 0.1
    timeout: float = 120.0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.stop_hold > 0.0:
            raise ValueError("stop_hold must be positive")
        if not self.cartesian_speed > 0.0:
            raise ValueError("cartesian_speed must be positive")


class EventKind(str, Enum):
    CONTACT = "contact"
    STOP = "stop"
    RESUME = "resume"
    SEGMENT_START = "segment_start"
    SEGMENT_END = "segment_end"
    TASK_END = "task_end"


@dataclass(frozen=True)
class SimEvent:
    time: float
    kind: EventKind
    payload: dict


class ControllerMode(str, Enum):
    TRACKING = "tracking"
    STOPPED = "stopped"
    HOLDING = "holding"


@dataclass
class ControllerState:
    mode: ControllerMode = ControllerMode.TRACKING
    hold_until: float = 0.0
    current_segment: int = 0
    segment_progress: float = 0.0


@dataclass
class BucketState:
    """Pendulum state; the swing plane contains the anchor and the impact
    direction and is represented by its (horizontal) unit normal."""

    theta: float = 0.0
    theta_dot: float = 0.0
    plane_normal: Optional[np.ndarray] = None


@dataclass
class ClampState:
    compression: float = 0.0
    stiffness: float = 0.0

    @property
    def measured_force(self) -> float:
        return self.stiffness * self.compression


@dataclass
class ContactRecord:
    """One detected contact with its decision and, for the clamp, the
    measured spring-force peak over the contact episode."""

    time: float
    obstacle: str
    contact_class: ContactClass
    link: int
    pad: Optional[int]
    speed: float
    m_r_used: float
    mass_model: MassModel
    estimated_force: float
    reaction: Reaction
    measured_force: float = math.nan


@dataclass
class ExperimentRecord:
    policy: PolicyKind
    speed: float
    seed: int
    task_time: float
    stop_count: int
    success: bool
    contacts: list[ContactRecord]
    events: list[SimEvent]
    clamp_peak_force: float
    impulses: list[dict]


UP = np.array([0.0, 0.0, 1.0])


def _pendulum_step(theta: float, theta_dot: float, dt: float, g_over_l: float):
    """One velocity-Verlet step of theta'' = -(g/L) sin(theta)."""
    half = theta_dot - 0.5 * dt * g_over_l * math.sin(theta)
    theta_new = theta + dt * half
    theta_dot_new = half - 0.5 * dt * g_over_l * math.sin(theta_new)
    return theta_new, theta_dot_new


def step_bucket(
    b: BucketState,
    dt: float,
    *,
    string_length: float,
    mass: float,
    gravity: float,
    impulse: float = 0.0,
) -> BucketState:
    """Advance a bucket pendulum by ``dt``.

    ``impulse`` (N s, tangential at the bob) is applied before the free
    phase and changes the angular rate by impulse / (mass * length).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    theta_dot = b.theta_dot + impulse / (mass * string_length)
    theta, theta_dot = _pendulum_step(b.theta, theta_dot, dt, gravity / string_length)
    return BucketState(theta, theta_dot, b.plane_normal)


def bucket_bob_position(bucket, state: BucketState) -> np.ndarray:
    """World position of the bob for the current swing state."""
    if state.plane_normal is None or abs(state.theta) < 1e-15:
        swing = np.zeros(3)
    else:
        s = np.cross(state.plane_normal, UP)
        swing = math.sin(state.theta) * s
    offset = swing - math.cos(state.theta) * UP
    return bucket.anchor + bucket.string_length * offset


def cartesian_to_joint_velocity(
    model: RobotModel,
    state: RobotState,
    v_des: np.ndarray,
    damping: float = 0.01,
) -> np.ndarray:
    """Damped least-squares joint rates tracking a desired tip velocity.

    Always returns (the damping regularizes singularities); joint velocity
    limits are enforced by uniform scaling so the motion direction is kept.
    """
    tip_link = model.n_links - 1
    cap = model.links[tip_link].capsules[-1]
    J = dynamics.point_jacobian(model, state.q, tip_link, cap.b)
    A = J @ J.T + (damping * damping) * np.eye(3)
    qdot = J.T @ np.linalg.solve(A, np.asarray(v_des, dtype=float))
    scale = 1.0
    for col, jidx in enumerate(model.movable_joints):
        limit = model.joints[jidx].velocity_limit
        mag = abs(float(qdot[col]))
        if mag > limit:
            scale = min(scale, limit / mag)
    return qdot * scale


class World:
    """Owns all mutable state of one repetition; single-threaded."""

    def __init__(
        self,
        model: RobotModel,
        scenario: ScenarioConfig,
        policy: PolicyKind,
        config: SimConfig,
        params: Optional[PolicyParams] = None,
    ):
        self.model = model
        self.scenario = scenario
        self.policy = policy
        self.config = config
        self.params = params or PolicyParams.from_scenario(scenario)
        self.rng = np.random.default_rng(config.rng_seed)

        if scenario.start_q is not None:
            if scenario.start_q.shape != (model.dof,):
                raise ValueError(
                    f"scenario start_q has length {scenario.start_q.shape[0]}, "
                    f"model has {model.dof} movable joints"
                )
            self.q = scenario.start_q.copy()
        else:
            self.q = np.zeros(model.dof)
        self.qdot = np.zeros(model.dof)

        self.step_index = 0
        self.t = 0.0
        self.controller = ControllerState()
        self.events: list[SimEvent] = []
        self.contacts: list[ContactRecord] = []
        self.impulses: list[dict] = []
        self.stop_count = 0
        self.completed = False
        self.success = False
        self.task_time = math.nan

        self.buckets = [BucketState() for _ in scenario.buckets]
        self._bucket_touching = [False] * len(scenario.buckets)
        self._bucket_near = [False] * len(scenario.buckets)
        self.clamp = ClampState(stiffness=scenario.clamp.stiffness)
        self.clamp_peak = 0.0
        self._clamp_near = False
        self._clamp_record: Optional[ContactRecord] = None

        self._active_pairs: set[tuple] = set()
        self._pending: list[tuple[float, int, ContactEvent, PolicyDecision, ContactRecord]] = []
        self._pending_seq = 0
        self._blocking: set[str] = set()
        self._last_stop_class: Optional[ContactClass] = None

        self._speed_cmd = 0.0
        self._frames = None
        self._geom_dirty = True

        self._control_steps = max(1, round(config.control_period / config.dt))
        self._detect_steps = max(1, round(config.detection_period / config.dt))

        # Flattened collision capsules for vectorized world-space tests.
        caps_a, caps_b, caps_r, caps_link = [], [], [], []
        for li, link in enumerate(model.links):
            for cap in link.capsules:
                caps_a.append(cap.a)
                caps_b.append(cap.b)
                caps_r.append(cap.radius)
                caps_link.append(li)
        self._caps_a_local = np.array(caps_a)
        self._caps_b_local = np.array(caps_b)
        self._caps_r = np.array(caps_r)
        self._caps_link = caps_link
        self._caps_world: Optional[tuple[np.ndarray, np.ndarray]] = None

        self._begin_segment(0)

    # -- geometry -----------------------------------------------------------

    def _refresh_geometry(self) -> None:
        if not self._geom_dirty and self._frames is not None:
            return
        self._frames = dynamics.forward_kinematics(self.model, self.q)
        A = np.empty_like(self._caps_a_local)
        B = np.empty_like(self._caps_b_local)
        for i, li in enumerate(self._caps_link):
            f = self._frames[li]
            A[i] = f.apply(self._caps_a_local[i])
            B[i] = f.apply(self._caps_b_local[i])
        self._caps_world = (A, B)
        self._geom_dirty = False

    def _state(self) -> RobotState:
        self._refresh_geometry()
        return RobotState(self.q.copy(), self.qdot.copy(), tuple(self._frames))

    def _tip_position(self) -> np.ndarray:
        self._refresh_geometry()
        cap = self.model.links[-1].capsules[-1]
        return self._frames[-1].apply(cap.b)

    def _capsule_gaps_to_sphere(self, center: np.ndarray, radius: float) -> np.ndarray:
        """Vectorized gap from every collision capsule to a sphere surface."""
        A, B = self._caps_world
        D = B - A
        dd = np.einsum("ij,ij->i", D, D)
        t = np.einsum("ij,ij->i", center - A, D) / np.where(dd > 0.0, dd, 1.0)
        t = np.clip(t, 0.0, 1.0)
        P = A + t[:, None] * D
        dist = np.linalg.norm(center - P, axis=1)
        return dist - radius - self._caps_r

    def _deepest_capsule_contact(self, obstacle) -> Optional[sensing.ContactEvent]:
        events = sensing.detect_links(self.model, self._state(), [obstacle])
        if not events:
            return None
        return max(events, key=lambda e: e.depth)

    def _obstacles(self) -> list:
        obs = []
        for bucket, bstate in zip(self.scenario.buckets, self.buckets):
            obs.append(
                SphereObstacle(
                    bucket.name,
                    bucket_bob_position(bucket, bstate),
                    bucket.bob_radius,
                    ContactClass.TRANSIENT,
                )
            )
        clamp = self.scenario.clamp
        obs.append(
            BoxObstacle("clamp", clamp.lo, clamp.hi, ContactClass.QUASI_STATIC)
        )
        return obs

    # -- events -------------------------------------------------------------

    def _emit(self, kind: EventKind, payload: dict) -> None:
        self.events.append(SimEvent(self.t, kind, payload))

    # -- controller ---------------------------------------------------------

    def _begin_segment(self, index: int) -> None:
        self.controller.current_segment = index
        self.controller.segment_progress = 0.0
        seg = self.scenario.task_script[index]
        self._emit(
            EventKind.SEGMENT_START,
            {"index": index, "direction": list(seg.direction), "distance": seg.distance},
        )
        sigma = self.config.jitter.sigma_pose
        if sigma > 0.0:
            offset = self.rng.normal(0.0, sigma, 3)
            dq = cartesian_to_joint_velocity(
                self.model, self._state(), offset, self.config.dls_damping
            )
            self.q = self.q + dq
            self._geom_dirty = True
        self._update_command()

    def _update_command(self) -> None:
        if self.controller.mode is not ControllerMode.TRACKING:
            return
        seg = self.scenario.task_script[self.controller.current_segment]
        speed = self.config.cartesian_speed
        if seg.speed_cap is not None:
            speed = min(speed, seg.speed_cap)
        self._speed_cmd = speed
        self.qdot = cartesian_to_joint_velocity(
            self.model, self._state(), seg.direction * speed, self.config.dls_damping
        )

    def _finish_segment(self, aborted: bool = False) -> None:
        idx = self.controller.current_segment
        self._emit(EventKind.SEGMENT_END, {"index": idx, "aborted": aborted})
        if idx + 1 >= len(self.scenario.task_script):
            self._end_task("ok")
        else:
            self._begin_segment(idx + 1)

    def _end_task(self, status: str) -> None:
        self.completed = True
        self.success = status == "ok"
        self.task_time = self.t
        self.qdot = np.zeros_like(self.qdot)
        self._emit(
            EventKind.TASK_END,
            {"status": status, "task_time": self.t, "stop_count": self.stop_count},
        )

    # -- reactions ----------------------------------------------------------

    def _schedule_reaction(
        self, event: ContactEvent, decision: PolicyDecision, record: ContactRecord
    ) -> None:
        latency = 0.0
        sigma = self.config.jitter.sigma_latency
        if sigma > 0.0:
            latency = abs(float(self.rng.normal(0.0, sigma)))
        self._pending.append((self.t + latency, self._pending_seq, event, decision, record))
        self._pending_seq += 1

    def _apply_reactions(self) -> None:
        if not self._pending:
            return
        due = [p for p in self._pending if p[0] <= self.t]
        if not due:
            return
        self._pending = [p for p in self._pending if p[0] > self.t]
        for _, _, event, decision, record in sorted(due, key=lambda p: (p[0], p[1])):
            if decision.reaction is not Reaction.STOP:
                continue
            self.stop_count += 1
            self._blocking.add(event.obstacle)
            self._last_stop_class = event.contact_class
            if self.controller.mode is ControllerMode.TRACKING:
                self.qdot = np.zeros_like(self.qdot)
                self._speed_cmd = 0.0
                self.controller.mode = ControllerMode.STOPPED
                self.controller.hold_until = self.t + self.config.stop_hold
            else:
                # Already stopped or holding: re-arm the hold window.
                self.controller.hold_until = max(
                    self.controller.hold_until, self.t + self.config.stop_hold
                )
            self._emit(
                EventKind.STOP,
                {
                    "obstacle": event.obstacle,
                    "contact_class": event.contact_class.value,
                    "estimated_force": decision.estimated_force,
                },
            )
            self._update_clamp(force_exact=True)

    def _try_resume(self) -> None:
        if self.controller.mode is not ControllerMode.HOLDING:
            return
        if self.t < self.controller.hold_until:
            return
        if self._last_stop_class is ContactClass.QUASI_STATIC:
            self._blocking.clear()
            self.controller.mode = ControllerMode.TRACKING
            self._emit(EventKind.RESUME, {"after": "quasi_static"})
            self._finish_segment(aborted=True)
            return
        # Transient: wait until the blocking obstacles have cleared.
        still_blocked = any(
            obstacle in self._blocking for _, obstacle in self._active_pairs
        )
        if still_blocked:
            return
        self._blocking.clear()
        self.controller.mode = ControllerMode.TRACKING
        self._emit(EventKind.RESUME, {"after": "transient"})
        self._update_command()

    # -- physics ------------------------------------------------------------

    def _bucket_impulse(self, bucket_idx: int) -> None:
        """Plastic velocity exchange at the start of a contact episode."""
        bucket = self.scenario.buckets[bucket_idx]
        bstate = self.buckets[bucket_idx]
        obstacle = SphereObstacle(
            bucket.name,
            bucket_bob_position(bucket, bstate),
            bucket.bob_radius,
            ContactClass.TRANSIENT,
        )
        contact = self._deepest_capsule_contact(obstacle)
        if contact is None:
            return
        state = self._state()
        point_local = state.frames[contact.link].inverse().apply(contact.point_world)
        v_robot = dynamics.link_point_velocity(self.model, state, contact.link, point_local)

        if bstate.plane_normal is None:
            v_h = v_robot - (v_robot @ UP) * UP
            nv = float(np.linalg.norm(v_h))
            if nv < 1e-9:
                radial = contact.point_world - bucket.anchor
                v_h = radial - (radial @ UP) * UP
                nv = float(np.linalg.norm(v_h))
                if nv < 1e-9:
                    v_h, nv = np.array([1.0, 0.0, 0.0]), 1.0
            normal = np.cross(UP, v_h / nv)
            n = float(np.linalg.norm(normal))
            bstate.plane_normal = normal / n if n > 1e-12 else np.array([0.0, 1.0, 0.0])

        s = np.cross(bstate.plane_normal, UP)
        L = bucket.string_length
        v_rt = float(v_robot @ s)
        v_bt = L * bstate.theta_dot

        speed = float(np.linalg.norm(v_robot - v_bt * s))
        if speed > 1e-9:
            u = (v_robot - v_bt * s) / speed
            m_u = dynamics.effective_mass(
                self.model, state.q, contact.link, point_local, u
            )
        else:
            m_u = dynamics.half_mass(self.model, contact.link)

        m_b = bucket.mass
        if math.isinf(m_u):
            v_common = v_rt
        else:
            v_common = (m_u * v_rt + m_b * v_bt) / (m_u + m_b)
        impulse = m_b * (v_common - v_bt)
        energy_gain = 0.5 * m_b * (v_common * v_common - v_bt * v_bt)
        bstate.theta_dot = v_common / L
        self.impulses.append(
            {
                "time": self.t,
                "bucket": bucket.name,
                "link": contact.link,
                "impulse": impulse,
                "m_u": m_u,
                "robot_speed": float(np.linalg.norm(v_robot)),
                "energy_gain": energy_gain,
            }
        )

    def _update_buckets(self) -> None:
        dt = self.config.dt
        g = self.scenario.gravity
        control_tick = self.step_index % self._control_steps == 0
        for i, bucket in enumerate(self.scenario.buckets):
            bstate = self.buckets[i]
            bstate.theta, bstate.theta_dot = _pendulum_step(
                bstate.theta, bstate.theta_dot, dt, g / bucket.string_length
            )
            check = control_tick or (self._bucket_near[i] and not self._bucket_touching[i])
            if not check:
                continue
            self._refresh_geometry()
            center = bucket_bob_position(bucket, bstate)
            gaps = self._capsule_gaps_to_sphere(center, bucket.bob_radius)
            min_gap = float(np.min(gaps))
            margin = 0.02 + (self._speed_cmd + abs(bstate.theta_dot) * bucket.string_length) * self.config.control_period
            self._bucket_near[i] = min_gap < margin
            if min_gap < 0.0:
                if not self._bucket_touching[i]:
                    self._bucket_touching[i] = True
                    self._bucket_impulse(i)
            else:
                self._bucket_touching[i] = False

    def _update_clamp(self, force_exact: bool = False) -> None:
        control_tick = self.step_index % self._control_steps == 0
        if not (control_tick or self._clamp_near or force_exact):
            return
        self._refresh_geometry()
        clamp = self.scenario.clamp
        A, B = self._caps_world
        depth = 0.0
        min_gap = math.inf
        for i in range(A.shape[0]):
            dist, _, _ = segment_aabb_closest(A[i], B[i], clamp.lo, clamp.hi)
            gap = dist - self._caps_r[i]
            min_gap = min(min_gap, gap)
            if gap < 0.0:
                depth = max(depth, -gap)
        self._clamp_near = min_gap < 0.02 + self._speed_cmd * self.config.control_period
        self.clamp.compression = depth
        force = self.clamp.measured_force
        if force > self.clamp_peak:
            self.clamp_peak = force
        if self._clamp_record is not None:
            if depth > 0.0:
                self._clamp_record.measured_force = max(
                    self._clamp_record.measured_force, force
                )
            else:
                self._clamp_record = None

    # -- sensing ------------------------------------------------------------

    def _detect(self) -> None:
        self._refresh_geometry()
        state = self._state()
        obstacles = self._obstacles()
        if self.model.sensing_mode is SensingMode.SKIN_PADS:
            raw = sensing.detect_skin(self.model, state, obstacles)
            keyed = [(("pad", e.pad, e.obstacle), e) for e in raw]
        else:
            raw = sensing.detect_links(self.model, state, obstacles)
            keyed = []
            for e in raw:
                e_iso = self._isolate_torque_contact(state, e)
                if e_iso is not None:
                    keyed.append((("link", e.link, e.obstacle), e_iso))

        current = set(k for k, _ in keyed)
        for key, event in keyed:
            if key in self._active_pairs:
                continue
            self._active_pairs.add(key)
            self._on_contact(event, state)
        self._active_pairs = {k for k in self._active_pairs if k in current}

    def _isolate_torque_contact(
        self, state: RobotState, event: ContactEvent
    ) -> Optional[ContactEvent]:
        """Synthesize the torque residual for a geometric contact and isolate it."""
        if event.contact_class is ContactClass.QUASI_STATIC:
            magnitude = max(1.0, self.scenario.clamp.stiffness * event.depth)
        else:
            bucket = next(
                b for b in self.scenario.buckets if b.name == event.obstacle
            )
            point_local = state.frames[event.link].inverse().apply(event.point_world)
            v = dynamics.link_point_velocity(self.model, state, event.link, point_local)
            magnitude = max(
                1.0, bucket.mass * float(np.linalg.norm(v)) / self.config.detection_period
            )
        f_ext = event.normal * magnitude
        point_local = state.frames[event.link].inverse().apply(event.point_world)
        residual = sensing.synth_residual(
            self.model, state, f_ext, event.link, point_local
        )
        isolated = sensing.isolate_from_residual(
            self.model, residual, self.config.residual_epsilon
        )
        if isolated is None:
            return None
        if isolated == event.link:
            return event
        return ContactEvent(
            time=event.time,
            link=isolated,
            pad=None,
            point_world=event.point_world,
            contact_class=event.contact_class,
            obstacle=event.obstacle,
            normal=event.normal,
            depth=event.depth,
        )

    def _on_contact(self, event: ContactEvent, state: RobotState) -> None:
        event = ContactEvent(
            time=self.t,
            link=event.link,
            pad=event.pad,
            point_world=event.point_world,
            contact_class=event.contact_class,
            obstacle=event.obstacle,
            normal=event.normal,
            depth=event.depth,
        )
        decision = policy_mod.evaluate_contact(
            self.policy, self.model, state, event, self.params
        )
        point_local = state.frames[event.link].inverse().apply(event.point_world)
        speed = float(
            np.linalg.norm(
                dynamics.link_point_velocity(self.model, state, event.link, point_local)
            )
        )
        record = ContactRecord(
            time=self.t,
            obstacle=event.obstacle,
            contact_class=event.contact_class,
            link=event.link,
            pad=event.pad,
            speed=speed,
            m_r_used=decision.m_r_used,
            mass_model=decision.mass_model,
            estimated_force=decision.estimated_force,
            reaction=decision.reaction,
        )
        if event.contact_class is ContactClass.QUASI_STATIC:
            record.measured_force = self.clamp.measured_force
            self._clamp_record = record
        self.contacts.append(record)
        self._emit(
            EventKind.CONTACT,
            {
                "obstacle": event.obstacle,
                "contact_class": event.contact_class.value,
                "link": event.link,
                "pad": event.pad,
                "point": [float(x) for x in event.point_world],
                "normal": [float(x) for x in event.normal],
                "depth": event.depth,
                "speed": speed,
                "reaction": decision.reaction.value,
                "estimated_force": decision.estimated_force,
                "m_r_used": decision.m_r_used,
                "mass_model": decision.mass_model.value,
            },
        )
        self._schedule_reaction(event, decision, record)

    # -- stepping -----------------------------------------------------------

    def step(self) -> None:
        """Advance one fixed time step."""
        if self.completed:
            return
        self.step_index += 1
        self.t = self.step_index * self.config.dt

        self._apply_reactions()

        mode = self.controller.mode
        if mode is ControllerMode.STOPPED:
            self.controller.mode = ControllerMode.HOLDING
        elif mode is ControllerMode.HOLDING:
            self._try_resume()
        if self.completed:
            return

        if self.controller.mode is ControllerMode.TRACKING:
            if self.step_index % self._control_steps == 0:
                self._update_command()
            self.q = self.q + self.qdot * self.config.dt
            self._geom_dirty = True
            seg = self.scenario.task_script[self.controller.current_segment]
            self.controller.segment_progress += self._speed_cmd * self.config.dt
            if self.controller.segment_progress >= seg.distance:
                self._update_clamp(force_exact=True)
                self._finish_segment()
                if self.completed:
                    return

        self._update_buckets()
        self._update_clamp()

        if self.step_index % self._detect_steps == 0:
            self._detect()

        if self.t >= self.config.timeout and not self.completed:
            self._end_task("timeout")

    def run(self) -> ExperimentRecord:
        while not self.completed:
            self.step()
        return ExperimentRecord(
            policy=self.policy,
            speed=self.config.cartesian_speed,
            seed=self.config.rng_seed,
            task_time=self.task_time,
            stop_count=self.stop_count,
            success=self.success,
            contacts=self.contacts,
            events=self.events,
            clamp_peak_force=self.clamp_peak,
            impulses=self.impulses,
        )


def step_world(world: World, dt: Optional[float] = None) -> list[SimEvent]:
    """Advance ``world`` by one step and return the events it produced."""
    if dt is not None and abs(dt - world.config.dt) > 1e-15:
        raise ValueError("world steps at its configured dt")
    before = len(world.events)
    world.step()
    return world.events[before:]


def run_task(
    model: RobotModel,
    scenario: ScenarioConfig,
    policy: PolicyKind,
    config: SimConfig,
    params: Optional[PolicyParams] = None,
) -> ExperimentRecord:
    """Run one full repetition of the scripted task."""
    return World(model, scenario, policy, config, params).run()


def event_to_dict(event: SimEvent) -> dict:
    return {"time": event.time, "kind": event.kind.value, "payload": event.payload}


def events_to_jsonl(events) -> str:
    """Line-delimited JSON serialization of an event log."""
    import json

    return "\n".join(json.dumps(event_to_dict(e), sort_keys=True) for e in events)
