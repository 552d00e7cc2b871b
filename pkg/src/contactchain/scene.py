"""World-space scene geometry: per-part point clouds, object transforms, lookups."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

from .coc import ContactPair, Direction, JointTarget, NavTarget, ObjectPart, direction_unit
from .errors import SchemaError, UnknownObject, UnknownPart

if TYPE_CHECKING:
    from .sceneplan import ObjectSpec, PlanEntry

NAV_STANDOFF = 0.5
NAV_HEIGHT = 0.9


@dataclass(frozen=True, eq=False)
class PartCloud:
    part_name: str
    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if len(pts) == 0:
            raise ValueError(f"part {self.part_name!r} has no points")
        if not np.isfinite(pts).all():
            raise ValueError(f"part {self.part_name!r} has non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class SceneObject:
    ref: str
    parts: Mapping[str, PartCloud]
    yaw: float = 0.0

    @cached_property
    def points(self) -> np.ndarray:
        return np.concatenate([p.points for p in self.parts.values()])

    @cached_property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        pts = self.points
        return pts.min(axis=0), pts.max(axis=0)

    def frame_vector(self, d: Direction) -> np.ndarray:
        """Direction ``d`` expressed in world coordinates, yawed with the object."""
        return rotate_z(direction_unit(d), self.yaw)


@dataclass(frozen=True, eq=False)
class SceneInstance:
    objects: Mapping[str, SceneObject] = field(default_factory=dict)
    ground_height: float = 0.0

    @classmethod
    def from_parts(
        cls,
        parts: Mapping[str, Mapping[str, np.ndarray]],
        yaws: Mapping[str, float] | None = None,
        ground_height: float = 0.0,
    ) -> "SceneInstance":
        yaws = yaws or {}
        objects = {
            ref: SceneObject(ref, {name: PartCloud(name, pts) for name, pts in clouds.items()}, yaws.get(ref, 0.0))
            for ref, clouds in parts.items()
        }
        return cls(objects, ground_height)

    @cached_property
    def points(self) -> np.ndarray:
        if not self.objects:
            return np.zeros((0, 3))
        return np.concatenate([o.points for o in self.objects.values()])

    def object(self, ref: str) -> SceneObject:
        try:
            return self.objects[ref]
        except KeyError:
            raise UnknownObject(f"object {ref!r} is not in the scene") from None

    def part(self, ref: str, part_name: str) -> PartCloud:
        obj = self.object(ref)
        try:
            return obj.parts[part_name]
        except KeyError:
            raise UnknownPart(f"object {ref!r} has no part {part_name!r}") from None

    def vocab(self) -> set[tuple[str, str]]:
        return {(ref, name) for ref, obj in self.objects.items() for name in obj.parts}


# -- transforms ---------------------------------------------------------------


def rotate_z(v: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    x, y, z = v
    return np.array([c * x - s * y, s * x + c * y, z])


def euler_xyz_matrix(rx: float, ry: float, rz: float) -> np.ndarray:
    """Extrinsic X-then-Y-then-Z rotation matrix (``Rz @ Ry @ Rx``)."""
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    mx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    my = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    mz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return mz @ my @ mx


def apply_transform(points, spec: "ObjectSpec") -> np.ndarray:
    """Rotate by each Euler triple in order, then scale, then translate."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    rot = np.eye(3)
    for triple in spec.rotate:
        rot = euler_xyz_matrix(*triple) @ rot
    return pts @ rot.T * spec.scale + np.asarray(spec.transfer, dtype=float)


def net_yaw(spec: "ObjectSpec") -> float:
    """Net rotation about z contributed by the object's transform."""
    return float(sum(triple[2] for triple in spec.rotate))


# -- assets -------------------------------------------------------------------


def load_asset(path: str | Path) -> dict[str, np.ndarray]:
    """Read a part-cloud asset file (``{part_name: [[x, y, z], ...]}``)."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read asset {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"asset {path} must be a JSON object")
    out = {}
    for name, pts in raw.items():
        arr = np.asarray(pts, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3 or len(arr) == 0:
            raise SchemaError(f"asset {path}: part {name!r} must be a non-empty list of [x, y, z]")
        out[name] = arr
    return out


def _asset_path(asset_id: str, asset_dir: str | Path | None) -> Path:
    if asset_dir is not None:
        return Path(asset_dir) / f"{asset_id}.json"
    return Path(str(resources.files("contactchain") / "assets" / f"{asset_id}.json"))


def build_scene(
    objects: Iterable["ObjectSpec"],
    asset_dir: str | Path | None = None,
    ground_height: float = 0.0,
) -> SceneInstance:
    """Load and place every object's part clouds. Defaults to the packaged stand-in assets."""
    built = {}
    for spec in objects:
        asset = load_asset(_asset_path(spec.id, asset_dir))
        parts = {name: PartCloud(name, apply_transform(pts, spec)) for name, pts in asset.items()}
        built[spec.ref] = SceneObject(spec.ref, parts, net_yaw(spec))
    return SceneInstance(built, ground_height)


def scene_for_entry(entry: "PlanEntry", asset_dir: str | Path | None = None) -> SceneInstance:
    return build_scene(entry.objects.values(), asset_dir)


# -- part resolution ----------------------------------------------------------


def nav_target_point(
    obj: SceneObject,
    direction: Direction,
    standoff: float = NAV_STANDOFF,
    height: float = NAV_HEIGHT,
) -> np.ndarray:
    """Point ``standoff`` metres beyond the object's bounding box along ``direction``.

    The box extent along a yawed direction is its support distance, which
    reduces to the half-extent for axis-aligned directions. The height is
    fixed to the pelvis reference height.
    """
    if direction is Direction.NONE:
        raise ValueError("navigation target needs a direction")
    lo, hi = obj.bbox
    center = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    u = obj.frame_vector(direction)
    reach = float(np.abs(u) @ half)
    target = center + u * (reach + standoff)
    target[2] = height
    return target


def resolve_part(
    scene: SceneInstance,
    pair: ContactPair,
    pose,
    standoff: float = NAV_STANDOFF,
    height: float = NAV_HEIGHT,
) -> np.ndarray:
    """Target point set for a pair, as an ``(m, 3)`` array."""
    if isinstance(pair.part, ObjectPart):
        return scene.part(pair.object, pair.part.part_name).points
    if isinstance(pair.part, JointTarget):
        return np.asarray(pose[pair.part.joint], dtype=float).reshape(1, 3)
    if isinstance(pair.part, NavTarget):
        return nav_target_point(scene.object(pair.object), pair.direction, standoff, height).reshape(1, 3)
    raise UnknownPart(f"cannot resolve part {pair.part!r}")
