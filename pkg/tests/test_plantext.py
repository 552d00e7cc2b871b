from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactchain.coc import ChainOfContacts, ContactPair, ContactStep, ContactType, Direction, JointId
from contactchain.errors import EmptyPlan
from contactchain.plantext import normalize_token, parse_plan, render_plan

from conftest import FIXTURES, chains


def test_single_step():
    chain, diags = parse_plan("Step 2: Sit on the chair.\nPair 1: {chair, seat_surface, pelvis, contact, up}")
    assert len(chain) == 1
    (pair,) = chain.steps[0].pairs
    assert pair.to_tokens() == ["chair", "seat_surface", "pelvis", "contact", "up"]
    assert pair.contact is ContactType.CONTACT and pair.direction is Direction.UP
    # numbering starts at 2, which is reported but not fatal
    assert [d.severity for d in diags] == ["warning"]


def test_two_pairs():
    text = "Step 1: Lie down.\nPair 1: {bed, mattress, pelvis, contact, up}\nPair 2: {bed, pillow, head, contact, up}"
    chain, diags = parse_plan(text)
    assert len(chain) == 1 and len(chain.steps[0].pairs) == 2
    assert diags == []


@pytest.mark.parametrize("text", ["", "   \n\n", "hello world", b"\xff\xfe"])
def test_empty_plans(text):
    with pytest.raises(EmptyPlan):
        parse_plan(text)


def test_spaced_joint_names_and_contact():
    chain, _ = parse_plan("Step 1: x\nPair 1: {Bed, Mattress, Left Hand, Not Contact, Up}")
    pair = chain.steps[0].pairs[0]
    assert pair.object == "bed" and pair.joint is JointId.LEFT_HAND
    assert pair.contact is ContactType.NOT_CONTACT


def test_malformed_lines_become_diagnostics():
    text = "\n".join([
        "Here is your plan:",
        "Step 1: Sit.",
        "Pair 1: {chair, seat, pelvis, contact}",
        "Pair 2: {chair, seat, pelvis, contact, up}",
        "Pair 3: chair, seat",
        "Step 2: Nothing valid.",
        "Pair 1: {chair, seat, elbow, contact, up}",
    ])
    chain, diags = parse_plan(text)
    assert len(chain) == 1 and len(chain.steps[0].pairs) == 1
    lines = {d.line for d in diags}
    assert {1, 3, 5, 6, 7} <= lines
    assert all(d.line >= 1 for d in diags)


def test_appendix_output_counts():
    chain, diags = parse_plan((FIXTURES / "appendix_plan.txt").read_text())
    assert len(chain) == 7
    assert sum(len(s.pairs) for s in chain.steps) == 11
    assert diags == []


def test_render_pseudo_step():
    chain = ChainOfContacts((ContactStep("Get close to the chair.", (
        ContactPair.from_tokens("chair", "none", "none", "none", "front"),)),))
    assert render_plan(chain) == "Step 1: Get close to the chair.\nPair 1: {chair, none, none, none, front}"


def test_render_joint_target():
    chain = ChainOfContacts((ContactStep("Cross legs.", (
        ContactPair.from_tokens("chair", "seat_surface", "pelvis", "contact", "up"),
        ContactPair.from_tokens("chair", "left_knee", "right_foot", "contact", "none"),
    )),))
    assert render_plan(chain).splitlines()[2] == "Pair 2: {chair, left_knee, right_foot, contact, none}"


@pytest.mark.parametrize(
    "raw, expected", [("left hand", "left_hand"), (" Contact ", "contact"), ("seat_surface", "seat_surface")]
)
def test_normalize_token(raw, expected):
    assert normalize_token(raw) == expected


@given(st.text())
def test_normalize_is_idempotent(raw):
    once = normalize_token(raw)
    assert normalize_token(once) == once


@given(chains)
def test_render_parse_roundtrip(chain):
    parsed, diags = parse_plan(render_plan(chain))
    assert parsed == chain
    assert diags == []


@settings(max_examples=300)
@given(st.binary(max_size=200))
def test_parse_never_crashes(data):
    try:
        parse_plan(data)
    except EmptyPlan:
        pass


@given(chains, st.data())
def test_no_fabricated_pairs(chain, data):
    text = render_plan(chain)
    lines = text.splitlines()
    # drop a random subset of lines; every pair parsed must come from a Pair line that survived
    keep = data.draw(st.lists(st.booleans(), min_size=len(lines), max_size=len(lines)))
    kept = "\n".join(line for line, k in zip(lines, keep) if k)
    try:
        parsed, _ = parse_plan(kept)
    except EmptyPlan:
        return
    n_pair_lines = sum(line.startswith("Pair") for line, k in zip(lines, keep) if k)
    assert sum(len(s.pairs) for s in parsed.steps) <= n_pair_lines
