"""Parse and render the line-oriented plan format produced by the planner::

    Step 1: Get close to the chair.
    Pair 1: {chair, none, none, none, front}
    Step 2: Sit on the chair.
    Pair 1: {chair, seat_surface, pelvis, contact, up}

LLM output is treated as untrusted: malformed lines become diagnostics and
are skipped, they never raise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .coc import ChainOfContacts, ContactPair, ContactStep
from .errors import EmptyPlan

_STEP_RE = re.compile(r"^\s*step\s*(\d+)\s*[:.]?\s*(.*?)\s*$", re.IGNORECASE)
_PAIR_RE = re.compile(r"^\s*pair\s*(\d+)\s*[:.]?\s*\{(.*)\}\s*[.,;]?\s*$", re.IGNORECASE)
_PAIR_PREFIX_RE = re.compile(r"^\s*pair\s*\d+", re.IGNORECASE)


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    severity: str
    message: str

    def __post_init__(self) -> None:
        if self.line < 1:
            raise ValueError("diagnostic line numbers start at 1")

    def __str__(self) -> str:
        return f"line {self.line}: {self.severity}: {self.message}"


def normalize_token(raw: str) -> str:
    """Lowercase, trim and join internal whitespace with underscores."""
    return "_".join(raw.strip().lower().split())


def parse_plan(text: str | bytes) -> tuple[ChainOfContacts, list[ParseDiagnostic]]:
    """Parse plan text into a chain plus diagnostics for every skipped line.

    Raises :class:`EmptyPlan` when no step with at least one valid pair is found.
    """
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8", errors="replace")
    diagnostics: list[ParseDiagnostic] = []
    steps: list[ContactStep] = []
    # (line, number, description, pairs) of the step being collected
    current: tuple[int, int, str, list[ContactPair]] | None = None
    expected_step = 1

    def close_current() -> None:
        if current is None:
            return
        line, number, description, pairs = current
        if not pairs:
            diagnostics.append(ParseDiagnostic(line, "error", f"step {number} has no valid pairs; dropped"))
            return
        try:
            steps.append(ContactStep(description, tuple(pairs)))
        except ValueError as exc:
            diagnostics.append(ParseDiagnostic(line, "error", f"step {number}: {exc}; dropped"))

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        m = _STEP_RE.match(line)
        if m:
            close_current()
            number = int(m.group(1))
            if number != expected_step:
                diagnostics.append(
                    ParseDiagnostic(lineno, "warning", f"step numbered {number}, expected {expected_step}")
                )
            expected_step = number + 1
            current = (lineno, number, m.group(2), [])
            continue
        m = _PAIR_RE.match(line)
        if m is None:
            if _PAIR_PREFIX_RE.match(line):
                msg = "pair line without a {...} body"
                severity = "error"
            else:
                msg = "unrecognized line skipped"
                severity = "warning"
            diagnostics.append(ParseDiagnostic(lineno, severity, msg))
            continue
        if current is None:
            diagnostics.append(ParseDiagnostic(lineno, "error", "pair before any step"))
            continue
        body = m.group(2)
        if "{" in body or "}" in body:
            diagnostics.append(ParseDiagnostic(lineno, "error", "nested braces in pair"))
            continue
        fields = [normalize_token(f) for f in body.split(",")]
        if len(fields) != 5:
            diagnostics.append(ParseDiagnostic(lineno, "error", f"pair has {len(fields)} fields, expected 5"))
            continue
        if not all(fields):
            diagnostics.append(ParseDiagnostic(lineno, "error", "pair has an empty field"))
            continue
        pairs = current[3]
        number = int(m.group(1))
        if number != len(pairs) + 1:
            diagnostics.append(
                ParseDiagnostic(lineno, "warning", f"pair numbered {number}, expected {len(pairs) + 1}")
            )
        try:
            pairs.append(ContactPair.from_tokens(*fields))
        except ValueError as exc:
            diagnostics.append(ParseDiagnostic(lineno, "error", str(exc)))
    close_current()

    if not steps:
        raise EmptyPlan("no contact step could be recovered from the plan text")
    return ChainOfContacts(tuple(steps)), diagnostics


def render_pair(pair: ContactPair) -> str:
    return "{" + ", ".join(pair.to_tokens()) + "}"


def render_plan(chain: ChainOfContacts) -> str:
    lines: list[str] = []
    for i, step in enumerate(chain.steps, start=1):
        lines.append(f"Step {i}: {step.description}".rstrip())
        for k, pair in enumerate(step.pairs, start=1):
            lines.append(f"Pair {k}: {render_pair(pair)}")
    return "\n".join(lines)
