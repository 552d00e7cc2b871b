"""Deterministic kinematic humanoid used in place of a trained policy.

Joints are free points (no bone lengths). Each frame, the joints named by
the active step are driven toward their targets: contact pairs toward the
nearest point of the part, pseudo-contacts move the pelvis to the navigation
point, not-contact pairs push the joint away from the part. All other joints
relax toward a rest pose carried by the pelvis.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

from .coc import JOINT_INDEX, JOINTS, ChainOfContacts, ContactPair, ContactStep, ContactType, JointId
from .sceneplan import PlanEntry
from .scene import SceneInstance, resolve_part, rotate_z
from .taskparser import (
    HumanoidPose,
    PairError,
    RewardBreakdown,
    RewardConfig,
    SequencerConfig,
    SequencerState,
    StepOutcome,
    advance,
    breakdown_from_observations,
    effective_contact,
    nearest_point,
    pair_joint,
    step_reward,
    task_observation,
)

PELVIS_HEIGHT = 0.9

# T-pose offsets from the pelvis in the root frame; left is -x.
DEFAULT_REST_OFFSETS: dict[JointId, tuple[float, float, float]] = {
    JointId.PELVIS: (0.0, 0.0, 0.0),
    JointId.LEFT_HIP: (-0.1, 0.0, -0.05),
    JointId.LEFT_KNEE: (-0.1, 0.0, -0.45),
    JointId.LEFT_FOOT: (-0.1, 0.0, -0.85),
    JointId.RIGHT_HIP: (0.1, 0.0, -0.05),
    JointId.RIGHT_KNEE: (0.1, 0.0, -0.45),
    JointId.RIGHT_FOOT: (0.1, 0.0, -0.85),
    JointId.TORSO: (0.0, 0.0, 0.25),
    JointId.HEAD: (0.0, 0.0, 0.65),
    JointId.LEFT_SHOULDER: (-0.18, 0.0, 0.45),
    JointId.LEFT_ELBOW: (-0.45, 0.0, 0.45),
    JointId.LEFT_HAND: (-0.7, 0.0, 0.45),
    JointId.RIGHT_SHOULDER: (0.18, 0.0, 0.45),
    JointId.RIGHT_ELBOW: (0.45, 0.0, 0.45),
    JointId.RIGHT_HAND: (0.7, 0.0, 0.45),
}


@dataclass(frozen=True)
class ExecutorConfig:
    dt: float = 1.0 / 30.0
    joint_speed: float = 1.5
    root_speed: float = 1.0
    rest_offsets: Mapping[JointId, tuple[float, float, float]] = field(
        default_factory=lambda: dict(DEFAULT_REST_OFFSETS)
    )
    repel_margin: float = 0.05
    start_position: tuple[float, float, float] = (0.0, 0.0, PELVIS_HEIGHT)
    start_yaw: float = 0.0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.joint_speed > 0 and self.root_speed > 0):
            raise ValueError("speeds must be positive")

    def offsets_array(self) -> np.ndarray:
        return np.array([self.rest_offsets.get(j, (0.0, 0.0, 0.0)) for j in JOINTS], dtype=float)


def rest_pose(position, yaw: float = 0.0, cfg: ExecutorConfig | None = None) -> HumanoidPose:
    cfg = cfg or ExecutorConfig()
    pelvis = np.asarray(position, dtype=float)
    offsets = np.array([rotate_z(o, yaw) for o in cfg.offsets_array()])
    return HumanoidPose(pelvis + offsets, yaw)


def _move_toward(pos: np.ndarray, target: np.ndarray, max_step: float) -> np.ndarray:
    delta = target - pos
    dist = float(np.linalg.norm(delta))
    if dist <= max_step:
        return np.array(target, dtype=float)
    return pos + delta * (max_step / dist)


def step_dynamics(
    pose: HumanoidPose,
    targets: Mapping[JointId, np.ndarray],
    cfg: ExecutorConfig = ExecutorConfig(),
    repel: Mapping[JointId, np.ndarray] | None = None,
    dist_threshold: float = 0.1,
) -> HumanoidPose:
    """One kinematic tick.

    ``targets`` attract joints (landing exactly when within one step);
    ``repel`` maps joints to point sets they must keep more than
    ``dist_threshold + repel_margin`` away from.
    """
    repel = repel or {}
    step_joint = cfg.joint_speed * cfg.dt
    step_root = cfg.root_speed * cfg.dt
    old = pose.positions
    new = old.copy()
    pi = JOINT_INDEX[JointId.PELVIS]

    if JointId.PELVIS in targets:
        new[pi] = _move_toward(old[pi], np.asarray(targets[JointId.PELVIS], dtype=float), step_root)

    offsets = cfg.offsets_array()
    keep_out = dist_threshold + cfg.repel_margin
    for joint in JOINTS:
        if joint is JointId.PELVIS:
            continue
        i = JOINT_INDEX[joint]
        rest = new[pi] + rotate_z(offsets[i], pose.root_yaw)
        if joint in targets:
            new[i] = _move_toward(old[i], np.asarray(targets[joint], dtype=float), step_joint)
        elif joint in repel:
            cloud = repel[joint]
            near, _ = nearest_point(old[i], cloud)
            away = old[i] - near
            dist = float(np.linalg.norm(away))
            if dist <= keep_out:
                if dist < 1e-9:
                    away = rest - old[i]
                    if np.linalg.norm(away) < 1e-9:
                        away = np.array([0.0, 0.0, 1.0])
                new[i] = old[i] + away / np.linalg.norm(away) * step_joint
            else:
                candidate = _move_toward(old[i], rest, step_joint)
                c_near, _ = nearest_point(candidate, cloud)
                if np.linalg.norm(candidate - c_near) > keep_out:
                    new[i] = candidate
        else:
            new[i] = _move_toward(old[i], rest, step_joint)
    return HumanoidPose(new, pose.root_yaw)


def step_targets(
    step: ContactStep,
    pose: HumanoidPose,
    scene: SceneInstance,
    reward_cfg: RewardConfig = RewardConfig(),
) -> tuple[dict[JointId, np.ndarray], dict[JointId, np.ndarray]]:
    """Attraction and repulsion targets for the joints used by ``step``."""
    attract: dict[JointId, np.ndarray] = {}
    repel: dict[JointId, np.ndarray] = {}
    for pair in step.pairs:
        contact = effective_contact(pair)
        joint = pair_joint(pair)
        if contact is ContactType.NOT_CARE:
            continue
        cloud = resolve_part(scene, pair, pose, reward_cfg.nav_standoff, reward_cfg.nav_height)
        if contact is ContactType.CONTACT:
            if joint not in attract:
                attract[joint], _ = nearest_point(pose[joint], cloud)
        elif joint not in repel:
            repel[joint] = cloud
    for joint in attract:
        repel.pop(joint, None)
    return attract, repel


# -- trials -----------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    time: float
    step: int
    pose: HumanoidPose
    breakdown: RewardBreakdown


@dataclass
class TrialLog:
    plan_id: str
    chain: ChainOfContacts
    frames: list[Frame]
    per_step_outcome: tuple[StepOutcome, ...]
    succeeded: bool

    @property
    def steps_completed(self) -> int:
        return sum(o.completed for o in self.per_step_outcome)

    @property
    def elapsed(self) -> float:
        return self.frames[-1].time if self.frames else 0.0


def run_trial(
    entry: PlanEntry,
    scene: SceneInstance,
    reward_cfg: RewardConfig = RewardConfig(),
    exec_cfg: ExecutorConfig = ExecutorConfig(),
    seq_cfg: SequencerConfig = SequencerConfig(),
    initial_pose: HumanoidPose | None = None,
    plan_id: str | None = None,
) -> TrialLog:
    chain = entry.chain
    pose = initial_pose or rest_pose(exec_cfg.start_position, exec_cfg.start_yaw, exec_cfg)
    state = SequencerState()
    frames: list[Frame] = []
    # hard stop in case the budget check never triggers (e.g. a huge dwell)
    max_frames = int(math.ceil(len(chain) * seq_cfg.step_seconds / exec_cfg.dt)) + 2
    tick = 0
    while not state.finished and tick < max_frames:
        tick += 1
        step = chain.steps[state.current_step]
        attract, repel = step_targets(step, pose, scene, reward_cfg)
        pose = step_dynamics(pose, attract, exec_cfg, repel, reward_cfg.dist_threshold)
        obs = task_observation(step, pose, scene, reward_cfg)
        frames.append(Frame(tick * exec_cfg.dt, state.current_step, pose, breakdown_from_observations(step, obs, reward_cfg)))
        state = advance(state, chain, pose, scene, exec_cfg.dt, reward_cfg, seq_cfg, observations=obs)
    return TrialLog(plan_id or entry.entry_id, chain, frames, state.per_step_outcome, state.succeeded)


def replay_score(log: TrialLog, scene: SceneInstance, reward_cfg: RewardConfig = RewardConfig()) -> list[RewardBreakdown]:
    return [step_reward(log.chain.steps[f.step], f.pose, scene, reward_cfg) for f in log.frames]


# -- JSON lines -------------------------------------------------------------------


def _outcome_record(o: StepOutcome) -> dict:
    return {
        "step": o.step,
        "completed": o.completed,
        "time_used": o.time_used,
        "pair_errors": [[e.contact.value, e.distance] for e in o.pair_errors],
    }


def iter_log_records(log: TrialLog) -> Iterable[dict]:
    yield {
        "type": "trial",
        "plan_id": log.plan_id,
        "succeeded": log.succeeded,
        "chain": [
            {"description": s.description, "pairs": [p.to_tokens() for p in s.pairs]} for s in log.chain.steps
        ],
        "per_step_outcome": [_outcome_record(o) for o in log.per_step_outcome],
    }
    for f in log.frames:
        yield {
            "type": "frame",
            "time": f.time,
            "step": f.step,
            "root_yaw": f.pose.root_yaw,
            "joints": f.pose.positions.tolist(),
            "rewards": [list(rw) for rw in f.breakdown.per_pair],
            "total": f.breakdown.total,
        }


def write_trial_log(log: TrialLog, fp: IO[str]) -> None:
    for rec in iter_log_records(log):
        fp.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_trial_log(source: str | Path | IO[str]) -> TrialLog:
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text().splitlines()
    else:
        lines = source.read().splitlines()
    records = [json.loads(line) for line in lines if line.strip()]
    if not records or records[0].get("type") != "trial":
        raise ValueError("trial log must start with a 'trial' record")
    head = records[0]
    chain = ChainOfContacts(tuple(
        ContactStep(s["description"], tuple(ContactPair.from_tokens(*p) for p in s["pairs"])) for s in head["chain"]
    ))
    outcomes = tuple(
        StepOutcome(
            o["step"], o["completed"], o["time_used"],
            tuple(PairError(ContactType(c), d) for c, d in o["pair_errors"]),
        )
        for o in head["per_step_outcome"]
    )
    frames = [
        Frame(
            r["time"],
            r["step"],
            HumanoidPose(np.asarray(r["joints"], dtype=float), r["root_yaw"]),
            RewardBreakdown(tuple((float(a), float(b)) for a, b in r["rewards"]), r["total"]),
        )
        for r in records[1:]
        if r.get("type") == "frame"
    ]
    return TrialLog(head["plan_id"], chain, frames, outcomes, head["succeeded"])
