from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from contactchain.coc import (
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
)
from contactchain.sceneplan import load_sceneplan
from contactchain.taskparser import HumanoidPose

FIXTURES = Path(__file__).parent / "fixtures"
LEVEL_FILES = {lvl: FIXTURES / f"sceneplan_{lvl}.json" for lvl in ("simple", "mid", "hard")}


def load_fixture(level: str):
    (entry,) = load_sceneplan(LEVEL_FILES[level].read_text())
    return entry


def pose_at(**joints) -> HumanoidPose:
    """Pose with every joint at the origin except those given as keyword arrays."""
    pos = np.zeros((len(JOINTS), 3))
    for name, xyz in joints.items():
        pos[JOINTS.index(JointId(name))] = xyz
    return HumanoidPose(pos)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


# -- hypothesis strategies --------------------------------------------------------

_names = st.text("abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=6)
object_ids = st.builds(lambda a, n: f"{a}{n:03d}", _names, st.integers(0, 999)).filter(lambda s: s != "none")
part_names = st.builds(lambda a, b: f"{a}_{b}", _names, _names)
directions = st.sampled_from(list(Direction))
joints = st.sampled_from(JOINTS)
contacts = st.sampled_from(list(ContactType))


@st.composite
def contact_pairs(draw, obj=None):
    o = obj if obj is not None else draw(object_ids)
    kind = draw(st.sampled_from(["part", "joint", "pseudo"]))
    if kind == "pseudo":
        d = draw(directions.filter(lambda d: d is not Direction.NONE))
        return ContactPair(o, NavTarget(), None, None, d)
    part = ObjectPart(o, draw(part_names)) if kind == "part" else JointTarget(draw(joints))
    return ContactPair(o, part, draw(joints), draw(contacts), draw(directions))


@st.composite
def contact_steps(draw):
    desc = draw(st.text("abcdefghijklmnopqrstuvwxyz ,.'", max_size=30).map(lambda s: " ".join(s.split())))
    first = draw(contact_pairs())
    if first.is_pseudo:
        return ContactStep(desc, (first,))
    more = draw(st.lists(contact_pairs().filter(lambda p: not p.is_pseudo), max_size=3))
    return ContactStep(desc, (first, *more))


chains = st.lists(contact_steps(), min_size=1, max_size=6).map(lambda s: ChainOfContacts(tuple(s)))
