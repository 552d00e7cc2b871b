"""ScenePlan documents.

Layout (JSON)::

    {"0000": {"obj": {"000": {"id": "12747", "name": "bed",
                              "rotate": [[1.57, 0, 0]], "scale": 2.5,
                              "transfer": [0, -2, 0]}},
              "chain_of_contacts": [[["bed000", "none", "none", "none", "front"]], ...]}}

Objects are referenced from the chain by ``name + key`` ("bed000").
ScenePlan steps carry no descriptions, so loaded steps have an empty one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .coc import ChainOfContacts, ContactPair, ContactStep
from .errors import DanglingObjectRef, SchemaError
from .plantext import normalize_token


@dataclass(frozen=True)
class ObjectSpec:
    key: str
    id: str
    name: str
    rotate: tuple[tuple[float, float, float], ...] = ()
    scale: float = 1.0
    transfer: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        rotate = tuple(tuple(float(a) for a in t) for t in self.rotate)
        if any(len(t) != 3 for t in rotate):
            raise SchemaError(f"object {self.key}: every rotate entry must be a triple")
        transfer = tuple(float(v) for v in self.transfer)
        if len(transfer) != 3:
            raise SchemaError(f"object {self.key}: transfer must have 3 components")
        scale = float(self.scale)
        if not (scale > 0 and math.isfinite(scale)):
            raise SchemaError(f"object {self.key}: scale must be positive, got {self.scale!r}")
        object.__setattr__(self, "rotate", rotate)
        object.__setattr__(self, "transfer", transfer)
        object.__setattr__(self, "scale", scale)

    @property
    def ref(self) -> str:
        return f"{self.name}{self.key}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "rotate": [list(t) for t in self.rotate],
            "scale": self.scale,
            "transfer": list(self.transfer),
        }

    @classmethod
    def from_dict(cls, key: str, d: Mapping[str, Any]) -> "ObjectSpec":
        if not isinstance(d, Mapping):
            raise SchemaError(f"object {key!r} must be a JSON object")
        missing = [f for f in ("id", "name", "scale", "transfer") if f not in d]
        if missing:
            raise SchemaError(f"object {key!r} is missing {', '.join(missing)}")
        try:
            return cls(
                key=str(key),
                id=str(d["id"]),
                name=str(d["name"]),
                rotate=d.get("rotate", ()),
                scale=d["scale"],
                transfer=d["transfer"],
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"object {key!r}: {exc}") from exc


@dataclass(frozen=True)
class PlanEntry:
    entry_id: str
    objects: Mapping[str, ObjectSpec]
    chain: ChainOfContacts
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        refs = {spec.ref for spec in self.objects.values()}
        for obj in self.chain.objects:
            if obj not in refs:
                raise DanglingObjectRef(f"entry {self.entry_id}: chain references {obj!r}, not declared in obj")

    def object_by_ref(self, ref: str) -> ObjectSpec:
        for spec in self.objects.values():
            if spec.ref == ref:
                return spec
        raise DanglingObjectRef(ref)


def _parse_chain(entry_id: str, raw: Any) -> ChainOfContacts:
    if not isinstance(raw, list) or not raw:
        raise SchemaError(f"entry {entry_id}: chain_of_contacts must be a non-empty list of steps")
    steps = []
    for si, raw_step in enumerate(raw):
        if not isinstance(raw_step, list) or not raw_step:
            raise SchemaError(f"entry {entry_id}: step {si + 1} must be a non-empty list of pairs")
        pairs = []
        for pi, raw_pair in enumerate(raw_step):
            if not isinstance(raw_pair, list) or len(raw_pair) != 5 or not all(isinstance(t, str) for t in raw_pair):
                raise SchemaError(f"entry {entry_id}: step {si + 1} pair {pi + 1} must be 5 strings")
            try:
                pairs.append(ContactPair.from_tokens(*(normalize_token(t) for t in raw_pair)))
            except ValueError as exc:
                raise SchemaError(f"entry {entry_id}: step {si + 1} pair {pi + 1}: {exc}") from exc
        try:
            steps.append(ContactStep("", tuple(pairs)))
        except ValueError as exc:
            raise SchemaError(f"entry {entry_id}: step {si + 1}: {exc}") from exc
    return ChainOfContacts(tuple(steps))


def parse_objects(raw: Any, entry_id: str = "?") -> dict[str, ObjectSpec]:
    if not isinstance(raw, Mapping):
        raise SchemaError(f"entry {entry_id}: obj must be a JSON object")
    return {str(k): ObjectSpec.from_dict(k, v) for k, v in raw.items()}


def load_sceneplan(document: str | bytes | Mapping[str, Any]) -> list[PlanEntry]:
    """Parse a ScenePlan document (JSON text or already-decoded mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(document, Mapping):
        raise SchemaError("a ScenePlan document must be a JSON object keyed by entry id")
    entries = []
    for entry_id, body in document.items():
        if not isinstance(body, Mapping):
            raise SchemaError(f"entry {entry_id} must be a JSON object")
        for key in ("obj", "chain_of_contacts"):
            if key not in body:
                raise SchemaError(f"entry {entry_id} is missing {key!r}")
        objects = parse_objects(body["obj"], entry_id)
        chain = _parse_chain(entry_id, body["chain_of_contacts"])
        extra = {k: v for k, v in body.items() if k not in ("obj", "chain_of_contacts")}
        entries.append(PlanEntry(str(entry_id), objects, chain, extra))
    return entries


def entry_to_dict(entry: PlanEntry) -> dict[str, Any]:
    return {
        "obj": {key: entry.objects[key].to_dict() for key in sorted(entry.objects)},
        "chain_of_contacts": [[pair.to_tokens() for pair in step.pairs] for step in entry.chain.steps],
        **entry.extra,
    }


def save_sceneplan(entries: Iterable[PlanEntry]) -> str:
    """Canonical JSON: sorted keys, 2-space indent, shortest round-trip floats."""
    doc = {entry.entry_id: entry_to_dict(entry) for entry in entries}
    if not doc:
        return "{}"
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
