"""Turn contact steps into observations, rewards and completion decisions.

For a pair ``{o, p, j, c, d}`` the joint position is compared against the
nearest point of the part cloud. The per-pair reward is

    contact:      w_dis * exp(-w_dk * |d|) + w_dir * max(dbar . dhat, 0)
    not contact:  1 - exp(-w_dk * |d|)
    not care:     1

where ``d`` is the vector from the joint to the nearest point, ``dbar`` its unit
vector and ``dhat`` the unit vector of the requested direction. Pair rewards
are combined with adaptive weights ``w_k = (1 - R_k) / (n - sum(R) + eps)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .coc import (
    CONTACT_CODES,
    JOINT_INDEX,
    JOINTS,
    ChainOfContacts,
    ContactPair,
    ContactStep,
    ContactType,
    Direction,
    JointId,
)
from .errors import EmptyCloud
from .scene import NAV_HEIGHT, NAV_STANDOFF, PartCloud, SceneInstance, nav_target_point, resolve_part

SINGULAR_DISTANCE = 1e-6
_TIME_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class HumanoidPose:
    """World positions of the 15 joints (rows in ``JOINTS`` order) plus root yaw."""

    positions: np.ndarray
    root_yaw: float = 0.0

    def __post_init__(self) -> None:
        pos = np.array(self.positions, dtype=float)
        if pos.shape != (len(JOINTS), 3):
            raise ValueError(f"pose needs {len(JOINTS)}x3 joint positions, got {pos.shape}")
        if not np.isfinite(pos).all() or not math.isfinite(self.root_yaw):
            raise ValueError("pose contains non-finite values")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "root_yaw", float(self.root_yaw))

    @classmethod
    def from_mapping(cls, joints: Mapping[JointId | str, Sequence[float]], root_yaw: float = 0.0) -> "HumanoidPose":
        missing = [j.value for j in JOINTS if j not in joints and j.value not in joints]
        if missing:
            raise ValueError(f"pose is missing joints: {', '.join(missing)}")
        rows = [joints[j] if j in joints else joints[j.value] for j in JOINTS]
        return cls(np.asarray(rows, dtype=float), root_yaw)

    def __getitem__(self, joint: JointId | str) -> np.ndarray:
        return self.positions[JOINT_INDEX[JointId(joint)]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HumanoidPose):
            return NotImplemented
        return self.root_yaw == other.root_yaw and np.array_equal(self.positions, other.positions)

    @property
    def root(self) -> np.ndarray:
        return self[JointId.PELVIS]

    def as_dict(self) -> dict[str, list[float]]:
        return {j.value: self.positions[i].tolist() for i, j in enumerate(JOINTS)}


@dataclass(frozen=True)
class RewardConfig:
    w_dis: float = 0.7
    w_dir: float = 0.3
    w_dk: float = 2.0
    epsilon_e: float = 1e-6
    dist_threshold: float = 0.1
    align_threshold: float = 0.8
    nav_standoff: float = NAV_STANDOFF
    nav_height: float = NAV_HEIGHT

    def __post_init__(self) -> None:
        for name in ("w_dis", "w_dir", "w_dk", "epsilon_e", "dist_threshold", "align_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.w_dis + self.w_dir > 1 + 1e-12:
            raise ValueError("w_dis + w_dir must not exceed 1")


@dataclass(frozen=True, eq=False)
class PairObservation:
    delta: np.ndarray
    contact_code: int
    direction_vec: np.ndarray

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.delta))

    @property
    def alignment(self) -> float | None:
        """Cosine between ``delta`` and the requested direction; None when undefined."""
        dist = self.distance
        if dist < SINGULAR_DISTANCE or not np.any(self.direction_vec):
            return None
        return float(self.delta @ self.direction_vec) / dist

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.delta, [self.contact_code], self.direction_vec])


@dataclass(frozen=True)
class RewardBreakdown:
    per_pair: tuple[tuple[float, float], ...]
    total: float

    @property
    def rewards(self) -> list[float]:
        return [r for r, _ in self.per_pair]

    @property
    def weights(self) -> list[float]:
        return [w for _, w in self.per_pair]


# -- observations ---------------------------------------------------------------


def nearest_point(joint_pos, cloud: PartCloud | np.ndarray) -> tuple[np.ndarray, int]:
    """Closest cloud point to ``joint_pos``; ties go to the lowest index."""
    pts = cloud.points if isinstance(cloud, PartCloud) else np.asarray(cloud, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyCloud("cannot take the nearest point of an empty cloud")
    diff = pts - np.asarray(joint_pos, dtype=float)
    idx = int(np.argmin((diff * diff).sum(axis=1)))
    return pts[idx].copy(), idx


def pair_joint(pair: ContactPair) -> JointId:
    """Joint driven by ``pair``; pseudo-contacts drive the pelvis."""
    return JointId.PELVIS if pair.joint is None else pair.joint


def effective_contact(pair: ContactPair) -> ContactType:
    return ContactType.CONTACT if pair.contact is None else pair.contact


def resolve_nav_target(pair: ContactPair, scene: SceneInstance, cfg: RewardConfig = RewardConfig()) -> np.ndarray:
    if not pair.is_pseudo or pair.direction is Direction.NONE:
        raise ValueError("resolve_nav_target expects a pseudo-contact with a direction")
    return nav_target_point(scene.object(pair.object), pair.direction, cfg.nav_standoff, cfg.nav_height)


def pair_observation(
    pair: ContactPair,
    pose: HumanoidPose,
    scene: SceneInstance,
    cfg: RewardConfig = RewardConfig(),
) -> PairObservation:
    joint_pos = pose[pair_joint(pair)]
    targets = resolve_part(scene, pair, pose, cfg.nav_standoff, cfg.nav_height)
    point, _ = nearest_point(joint_pos, targets)
    if pair.is_pseudo:
        direction = np.zeros(3)
    else:
        direction = scene.object(pair.object).frame_vector(pair.direction)
    return PairObservation(point - joint_pos, CONTACT_CODES[effective_contact(pair)], direction)


def task_observation(
    step: ContactStep, pose: HumanoidPose, scene: SceneInstance, cfg: RewardConfig = RewardConfig()
) -> list[PairObservation]:
    """Uniform task observation: one entry per pair of ``step``, in order."""
    return [pair_observation(p, pose, scene, cfg) for p in step.pairs]


# -- rewards --------------------------------------------------------------------


def pair_reward(obs: PairObservation, contact: ContactType, cfg: RewardConfig = RewardConfig()) -> float:
    dist = obs.distance
    if contact is ContactType.NOT_CARE:
        return 1.0
    if contact is ContactType.NOT_CONTACT:
        return 1.0 - math.exp(-cfg.w_dk * dist)
    align = obs.alignment
    direction_term = cfg.w_dir if align is None else cfg.w_dir * max(align, 0.0)
    return cfg.w_dis * math.exp(-cfg.w_dk * dist) + direction_term


def adaptive_weights(rewards: Sequence[float], epsilon_e: float = 1e-6) -> list[float]:
    # n - sum(R) summed as sum(1 - R): same value, no cancellation when R ~ 1
    gaps = [1.0 - r for r in rewards]
    denom = math.fsum(gaps) + epsilon_e
    return [g / denom for g in gaps]


def breakdown_from_observations(
    step: ContactStep, observations: Sequence[PairObservation], cfg: RewardConfig = RewardConfig()
) -> RewardBreakdown:
    rewards = [pair_reward(o, effective_contact(p), cfg) for p, o in zip(step.pairs, observations)]
    weights = adaptive_weights(rewards, cfg.epsilon_e)
    total = math.fsum(w * r for w, r in zip(weights, rewards))
    return RewardBreakdown(tuple(zip(rewards, weights)), total)


def step_reward(
    step: ContactStep, pose: HumanoidPose, scene: SceneInstance, cfg: RewardConfig = RewardConfig()
) -> RewardBreakdown:
    return breakdown_from_observations(step, task_observation(step, pose, scene, cfg), cfg)


# -- completion -----------------------------------------------------------------


def pair_satisfied(obs: PairObservation, contact: ContactType, cfg: RewardConfig = RewardConfig()) -> bool:
    if contact is ContactType.NOT_CARE:
        return True
    dist = obs.distance
    if contact is ContactType.NOT_CONTACT:
        return dist > cfg.dist_threshold
    if dist >= cfg.dist_threshold:
        return False
    align = obs.alignment
    return align is None or align > cfg.align_threshold


def step_satisfied(step: ContactStep, observations: Sequence[PairObservation], cfg: RewardConfig = RewardConfig()) -> bool:
    return all(pair_satisfied(o, effective_contact(p), cfg) for p, o in zip(step.pairs, observations))


def step_complete(step: ContactStep, pose: HumanoidPose, scene: SceneInstance, cfg: RewardConfig = RewardConfig()) -> bool:
    return step_satisfied(step, task_observation(step, pose, scene, cfg), cfg)


# -- sequencing -----------------------------------------------------------------


class PairError(NamedTuple):
    contact: ContactType
    distance: float


@dataclass(frozen=True)
class StepOutcome:
    step: int
    completed: bool
    time_used: float
    pair_errors: tuple[PairError, ...] = ()


@dataclass(frozen=True)
class SequencerConfig:
    """Time budget: ``step_seconds`` per step, pooled over the chain unless ``per_step_budget``."""

    step_seconds: float = 10.0
    per_step_budget: bool = False
    dwell: float = 0.0


@dataclass(frozen=True)
class SequencerState:
    current_step: int = 0
    elapsed_in_step: float = 0.0
    elapsed_total: float = 0.0
    finished: bool = False
    per_step_outcome: tuple[StepOutcome, ...] = ()
    satisfied_for: float = 0.0

    @property
    def succeeded(self) -> bool:
        return self.finished and bool(self.per_step_outcome) and all(o.completed for o in self.per_step_outcome)

    @property
    def steps_completed(self) -> int:
        return sum(o.completed for o in self.per_step_outcome)


def _pair_errors(step: ContactStep, observations: Sequence[PairObservation]) -> tuple[PairError, ...]:
    return tuple(PairError(effective_contact(p), o.distance) for p, o in zip(step.pairs, observations))


def advance(
    state: SequencerState,
    chain: ChainOfContacts,
    pose: HumanoidPose,
    scene: SceneInstance,
    dt: float,
    cfg: RewardConfig = RewardConfig(),
    seq: SequencerConfig = SequencerConfig(),
    observations: Sequence[PairObservation] | None = None,
) -> SequencerState:
    """Advance the plan clock by ``dt`` and evaluate the current step on ``pose``.

    A step that holds its completion predicate for ``seq.dwell`` seconds is
    recorded and the next one fetched (at most one step per call). Exceeding
    the time budget finishes the trial with the current step failed.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if state.finished:
        raise ValueError("sequencer already finished")
    step = chain.steps[state.current_step]
    if observations is None:
        observations = task_observation(step, pose, scene, cfg)
    in_step = state.elapsed_in_step + dt
    total = state.elapsed_total + dt

    if seq.per_step_budget:
        over = in_step > seq.step_seconds + _TIME_EPS
    else:
        over = total > len(chain) * seq.step_seconds + _TIME_EPS
    if over:
        outcome = StepOutcome(state.current_step, False, in_step, _pair_errors(step, observations))
        return replace(
            state,
            elapsed_in_step=in_step,
            elapsed_total=total,
            finished=True,
            per_step_outcome=state.per_step_outcome + (outcome,),
            satisfied_for=0.0,
        )

    satisfied_for = state.satisfied_for + dt if step_satisfied(step, observations, cfg) else 0.0
    if satisfied_for > 0 and satisfied_for >= seq.dwell - _TIME_EPS:
        outcome = StepOutcome(state.current_step, True, in_step, _pair_errors(step, observations))
        nxt = state.current_step + 1
        return SequencerState(
            current_step=nxt,
            elapsed_in_step=0.0,
            elapsed_total=total,
            finished=nxt >= len(chain),
            per_step_outcome=state.per_step_outcome + (outcome,),
        )
    return replace(state, elapsed_in_step=in_step, elapsed_total=total, satisfied_for=satisfied_for)
