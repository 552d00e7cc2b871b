from __future__ import annotations

import io

import numpy as np
import pytest

from contactchain.coc import JOINTS, ChainOfContacts, ContactPair, ContactStep, JointId
from contactchain.executor import (
    DEFAULT_REST_OFFSETS,
    ExecutorConfig,
    TrialLog,
    read_trial_log,
    replay_score,
    rest_pose,
    run_trial,
    step_dynamics,
    write_trial_log,
)
from contactchain.scene import SceneInstance, scene_for_entry
from contactchain.sceneplan import ObjectSpec, PlanEntry
from contactchain.taskparser import HumanoidPose, RewardConfig, SequencerConfig, task_observation

from conftest import load_fixture

PELVIS = JointId.PELVIS
HAND = JointId.RIGHT_HAND


def test_clamped_final_step_lands_on_target():
    pose = rest_pose((0, 0, 0.9))
    target = pose[HAND] + (0.03, 0, 0)
    out = step_dynamics(pose, {HAND: target})
    np.testing.assert_array_equal(out[HAND], target)


def test_step_length_is_speed_times_dt():
    pose = rest_pose((0, 0, 0.9))
    target = pose[HAND] + (0, 1.0, 0)
    out = step_dynamics(pose, {HAND: target}, ExecutorConfig(joint_speed=1.5, dt=1 / 30))
    assert np.linalg.norm(out[HAND] - pose[HAND]) == pytest.approx(0.05, abs=1e-12)


def test_pelvis_moves_at_root_speed():
    pose = rest_pose((0, 0, 0.9))
    out = step_dynamics(pose, {PELVIS: np.array([10.0, 0, 0.9])}, ExecutorConfig(root_speed=1.0, dt=0.1))
    assert out[PELVIS][0] == pytest.approx(0.1)


def test_relaxes_to_rest():
    cfg = ExecutorConfig()
    pose = rest_pose((0, 0, 0.9))
    disturbed = pose.positions.copy()
    disturbed[JOINTS.index(HAND)] += (0, 0, 0.2)
    out = step_dynamics(HumanoidPose(disturbed), {}, cfg)
    before = np.linalg.norm(disturbed[JOINTS.index(HAND)] - pose[HAND])
    after = np.linalg.norm(out[HAND] - pose[HAND])
    assert after < before
    for _ in range(10):
        out = step_dynamics(out, {}, cfg)
    np.testing.assert_allclose(out.positions, pose.positions, atol=1e-12)


def test_rest_pose_rotates_with_yaw():
    pose = rest_pose((0, 0, 0.9), np.pi / 2)
    left = np.asarray(DEFAULT_REST_OFFSETS[JointId.LEFT_HAND])
    np.testing.assert_allclose(pose[JointId.LEFT_HAND] - pose[PELVIS], (-left[1], left[0], left[2]), atol=1e-12)


def test_repel_pushes_joint_out():
    pose = rest_pose((0, 0, 0.9))
    cloud = pose[HAND].reshape(1, 3) + (0.05, 0, 0)
    out = pose
    for _ in range(10):
        out = step_dynamics(out, {}, repel={HAND: cloud})
    assert np.linalg.norm(out[HAND] - cloud[0]) > 0.1


@pytest.mark.parametrize("level", ["simple", "mid", "hard"])
def test_fixture_trials(level):
    entry = load_fixture(level)
    log = run_trial(entry, scene_for_entry(entry))
    assert log.succeeded
    assert log.steps_completed == len(entry.chain)
    assert log.elapsed <= 10.0 * len(entry.chain) + 1e-9


def test_unreachable_target_fails():
    scene = SceneInstance.from_parts({"far000": {"p": [[100.0, 0, 0]]}})
    chain = ChainOfContacts((ContactStep("reach", (ContactPair.from_tokens("far000", "p", "right_hand", "contact", "up"),)),))
    entry = PlanEntry("x", {"000": ObjectSpec("000", "1", "far")}, chain)
    log = run_trial(entry, scene)
    assert not log.succeeded
    assert log.per_step_outcome[0].completed is False
    assert log.elapsed == pytest.approx(10.0, abs=0.05)


def test_replay_is_deterministic():
    entry = load_fixture("simple")
    scene = scene_for_entry(entry)
    log = run_trial(entry, scene)
    again = run_trial(entry, scene)
    assert [f.step for f in log.frames] == [f.step for f in again.frames]
    replay = replay_score(log, scene)
    assert len(replay) == len(log.frames)
    for frame, b in zip(log.frames, replay):
        assert b.total == pytest.approx(frame.breakdown.total, abs=1e-9)


def test_replay_under_other_config():
    entry = load_fixture("simple")
    scene = scene_for_entry(entry)
    log = run_trial(entry, scene)
    other = RewardConfig(w_dk=5.0)
    replay = replay_score(log, scene, other)
    assert any(abs(a.total - f.breakdown.total) > 1e-6 for a, f in zip(replay, log.frames))
    # observations do not depend on the reward weights
    f = log.frames[0]
    step = log.chain.steps[f.step]
    a = task_observation(step, f.pose, scene, RewardConfig())
    b = task_observation(step, f.pose, scene, other)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.as_vector(), y.as_vector())


def test_replay_empty():
    entry = load_fixture("simple")
    empty = TrialLog("0000", entry.chain, [], (), False)
    assert replay_score(empty, scene_for_entry(entry)) == []


def test_log_roundtrip():
    entry = load_fixture("mid")
    log = run_trial(entry, scene_for_entry(entry), seq_cfg=SequencerConfig())
    buf = io.StringIO()
    write_trial_log(log, buf)
    back = read_trial_log(io.StringIO(buf.getvalue()))
    assert back.plan_id == log.plan_id and back.succeeded == log.succeeded
    assert back.per_step_outcome == log.per_step_outcome
    assert len(back.frames) == len(log.frames)
    assert back.frames[-1].pose == log.frames[-1].pose
    buf2 = io.StringIO()
    write_trial_log(back, buf2)
    assert buf2.getvalue() == buf.getvalue()


def test_config_validation():
    with pytest.raises(ValueError):
        ExecutorConfig(dt=0)
    with pytest.raises(ValueError):
        ExecutorConfig(joint_speed=-1)
