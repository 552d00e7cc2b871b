"""Chain-of-Contacts task specification, reward shaping and evaluation."""

from .coc import (
    JOINTS,
    ChainOfContacts,
    ContactPair,
    ContactStep,
    ContactType,
    Direction,
    JointId,
    JointTarget,
    NavTarget,
    ObjectPart,
    ValidationReport,
    Violation,
    direction_unit,
    encode_pair,
    validate_chain,
)
from .errors import (
    ContactChainError,
    EmptyPlan,
    SchemaError,
    DanglingObjectRef,
    UnknownObject,
    UnknownPart,
    EmptyCloud,
    EmptyBatch,
    NoEligiblePairs,
    MismatchedIds,
    PlannerError,
    AuthMissing,
    PlannerTimeout,
    ServiceError,
    TranscriptMiss,
)
from .executor import ExecutorConfig, TrialLog, replay_score, run_trial, step_dynamics
from .heightmap import HeightmapConfig, sample_heightmap
from .metrics import EvalReport, build_report, classify_level, contact_error, success_rate, success_steps
from .planner import PlannerClientConfig, PromptSpec, build_prompt, plan_from_response, request_plan
from .plantext import normalize_token, parse_plan, render_plan
from .scene import PartCloud, SceneInstance, SceneObject, apply_transform, build_scene, resolve_part, scene_for_entry
from .sceneplan import ObjectSpec, PlanEntry, load_sceneplan, save_sceneplan
from .taskparser import (
    HumanoidPose,
    PairObservation,
    RewardBreakdown,
    RewardConfig,
    SequencerConfig,
    SequencerState,
    adaptive_weights,
    advance,
    nearest_point,
    pair_observation,
    pair_reward,
    pair_satisfied,
    resolve_nav_target,
    step_complete,
    step_reward,
)

__version__ = "0.1.0"
