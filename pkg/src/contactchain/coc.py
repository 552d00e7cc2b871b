"""Chain-of-Contacts domain types.

A chain is an ordered list of steps; each step is a list of contact pairs
``{object, part, joint, contact, direction}``. A "walk to" step is encoded as
a pseudo-contact ``{object, none, none, none, direction}``.

Axis convention used throughout the package: z is up and an object's
"front" is -y in its (yawed) reference frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Union

import numpy as np


class JointId(str, Enum):
    PELVIS = "pelvis"
    LEFT_HIP = "left_hip"
    LEFT_KNEE = "left_knee"
    LEFT_FOOT = "left_foot"
    RIGHT_HIP = "right_hip"
    RIGHT_KNEE = "right_knee"
    RIGHT_FOOT = "right_foot"
    TORSO = "torso"
    HEAD = "head"
    LEFT_SHOULDER = "left_shoulder"
    LEFT_ELBOW = "left_elbow"
    LEFT_HAND = "left_hand"
    RIGHT_SHOULDER = "right_shoulder"
    RIGHT_ELBOW = "right_elbow"
    RIGHT_HAND = "right_hand"

    @classmethod
    def parse(cls, name: str) -> "JointId":
        key = "_".join(name.strip().lower().split())
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown joint {name!r}") from None

    @property
    def spoken(self) -> str:
        """Name with spaces, as written in planner prompts ("left hand")."""
        return self.value.replace("_", " ")


JOINTS: tuple[JointId, ...] = tuple(JointId)
JOINT_INDEX: dict[JointId, int] = {j: i for i, j in enumerate(JOINTS)}


class ContactType(str, Enum):
    CONTACT = "contact"
    NOT_CONTACT = "not contact"
    NOT_CARE = "not care"

    @classmethod
    def parse(cls, token: str) -> "ContactType":
        key = "".join(token.strip().lower().replace("_", " ").split())
        for member in cls:
            if member.value.replace(" ", "") == key:
                return member
        raise ValueError(f"unknown contact type {token!r}")


class Direction(str, Enum):
    UP = "up"
    DOWN = "down"
    FRONT = "front"
    BACK = "back"
    LEFT = "left"
    RIGHT = "right"
    NONE = "none"

    @classmethod
    def parse(cls, token: str) -> "Direction":
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise ValueError(f"unknown direction {token!r}") from None


_DIRECTION_VECTORS = {
    Direction.UP: (0.0, 0.0, 1.0),
    Direction.DOWN: (0.0, 0.0, -1.0),
    Direction.FRONT: (0.0, -1.0, 0.0),
    Direction.BACK: (0.0, 1.0, 0.0),
    Direction.LEFT: (-1.0, 0.0, 0.0),
    Direction.RIGHT: (1.0, 0.0, 0.0),
    Direction.NONE: (0.0, 0.0, 0.0),
}

CONTACT_CODES = {
    ContactType.NOT_CONTACT: 0,
    ContactType.CONTACT: 1,
    ContactType.NOT_CARE: 2,
}
_CODE_TO_CONTACT = {v: k for k, v in CONTACT_CODES.items()}


def direction_unit(d: Direction) -> np.ndarray:
    """Unit vector for ``d`` in the reference frame (zero vector for ``none``)."""
    return np.array(_DIRECTION_VECTORS[Direction(d)], dtype=float)


def encode_pair(c: ContactType, d: Direction) -> tuple[int, np.ndarray]:
    return CONTACT_CODES[ContactType(c)], direction_unit(d)


def decode_contact(code: int) -> ContactType:
    return _CODE_TO_CONTACT[int(code)]


# -- part references ---------------------------------------------------------


@dataclass(frozen=True)
class ObjectPart:
    object_id: str
    part_name: str


@dataclass(frozen=True)
class JointTarget:
    """A humanoid joint used in place of an object part (joint-to-joint contact)."""

    joint: JointId


@dataclass(frozen=True)
class NavTarget:
    """Placeholder part of a pseudo-contact; resolved to a navigation point."""


PartRef = Union[ObjectPart, JointTarget, NavTarget]

NONE_TOKEN = "none"


@dataclass(frozen=True)
class ContactPair:
    object: str
    part: PartRef
    joint: JointId | None
    contact: ContactType | None
    direction: Direction

    def __post_init__(self) -> None:
        if isinstance(self.part, NavTarget):
            if self.joint is not None or self.contact is not None:
                raise ValueError("pseudo-contact must have joint and contact 'none'")
            if self.direction is Direction.NONE:
                raise ValueError("pseudo-contact needs a direction other than 'none'")
        else:
            if self.joint is None or self.contact is None:
                raise ValueError("contact pair needs a joint and a contact type")
            if isinstance(self.part, ObjectPart) and self.part.object_id != self.object:
                raise ValueError("ObjectPart.object_id must match the pair's object")

    @property
    def is_pseudo(self) -> bool:
        return isinstance(self.part, NavTarget)

    @property
    def part_token(self) -> str:
        if isinstance(self.part, ObjectPart):
            return self.part.part_name
        if isinstance(self.part, JointTarget):
            return self.part.joint.value
        return NONE_TOKEN

    @classmethod
    def from_tokens(cls, o: str, p: str, j: str, c: str, d: str) -> "ContactPair":
        """Build a pair from five already-normalized string tokens.

        A part token naming a humanoid joint becomes a :class:`JointTarget`;
        ``none`` in the part, joint and contact slots makes a pseudo-contact.
        """
        direction = Direction.parse(d)
        if p == NONE_TOKEN and j == NONE_TOKEN and c == NONE_TOKEN:
            return cls(o, NavTarget(), None, None, direction)
        if NONE_TOKEN in (p, j, c):
            raise ValueError("only pseudo-contacts may use 'none' for part, joint or contact")
        joint = JointId.parse(j)
        contact = ContactType.parse(c)
        try:
            part: PartRef = JointTarget(JointId.parse(p))
        except ValueError:
            part = ObjectPart(o, p)
        return cls(o, part, joint, contact, direction)

    def to_tokens(self) -> list[str]:
        return [
            self.object,
            self.part_token,
            self.joint.value if self.joint is not None else NONE_TOKEN,
            self.contact.value if self.contact is not None else NONE_TOKEN,
            self.direction.value,
        ]


@dataclass(frozen=True)
class ContactStep:
    description: str
    pairs: tuple[ContactPair, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if not self.pairs:
            raise ValueError("a contact step needs at least one pair")
        n_pseudo = sum(p.is_pseudo for p in self.pairs)
        if n_pseudo and len(self.pairs) > 1:
            raise ValueError("a pseudo-contact step may not contain other pairs")


@dataclass(frozen=True)
class ChainOfContacts:
    steps: tuple[ContactStep, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("a chain of contacts needs at least one step")

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def objects(self) -> list[str]:
        """Referenced object ids in first-use order."""
        seen: dict[str, None] = {}
        for step in self.steps:
            for pair in step.pairs:
                seen.setdefault(pair.object, None)
        return list(seen)


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    step: int
    pair: int
    severity: str
    message: str

    def __str__(self) -> str:
        return f"step {self.step + 1} pair {self.pair + 1}: {self.severity}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_chain(
    chain: ChainOfContacts,
    scene_vocab: Iterable[tuple[str, str]],
    strict: bool = True,
    non_interactable: Iterable[tuple[str, str]] = (),
) -> ValidationReport:
    """Check every pair of ``chain`` against the scene vocabulary.

    ``scene_vocab`` holds ``(object_id, part_name)`` tuples. Pseudo-contacts and
    joint targets only need their object to exist. Parts listed in
    ``non_interactable`` are flagged even when they exist. Violations are
    errors in strict mode and warnings otherwise; they are reported in chain
    order.
    """
    vocab = set(scene_vocab)
    blocked = set(non_interactable)
    objects = {o for o, _ in vocab}
    severity = "error" if strict else "warning"
    report = ValidationReport()
    for si, step in enumerate(chain.steps):
        for pi, pair in enumerate(step.pairs):
            if pair.object not in objects:
                report.violations.append(
                    Violation(si, pi, severity, f"unknown object {pair.object!r}")
                )
                continue
            if not isinstance(pair.part, ObjectPart):
                continue
            key = (pair.object, pair.part.part_name)
            if key not in vocab:
                report.violations.append(
                    Violation(si, pi, severity, f"unknown part {pair.part.part_name!r} of {pair.object!r}")
                )
            elif key in blocked:
                report.violations.append(
                    Violation(si, pi, severity, f"part {pair.part.part_name!r} of {pair.object!r} is not interactable")
                )
    return report
