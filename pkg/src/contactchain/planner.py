"""Prompt construction and chat-completion client for the plan generator."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import httpx

from .coc import JOINTS, ChainOfContacts, ValidationReport, validate_chain
from .errors import AuthMissing, PlannerTimeout, ServiceError, TranscriptMiss
from .plantext import ParseDiagnostic, normalize_token, parse_plan

log = logging.getLogger(__name__)

DEFAULT_RULES: tuple[str, ...] = (
    "Each task plan should be composite into detailed steps. If the human is not close to the target "
    "object, the first step should be to get close to the object.",
    "Each step should contain meaningful joint-part pairs.",
    "Each joint-part pair should be formatted into {OBJECT, PART, JOINT, Contact type, Contact Direcion}. "
    "Or if the step is getting close to an object, the step should be formatted into "
    "{none, none, none, none, relative direction of the target object}. JOINT should replace JOINT in the "
    "format in the background information. Important: PART in the format should only be replaced by PART "
    "or JOINT in the background information. The choices of Contact type include [contact, not contact]. "
    "The choices of Contact Direction include [front, back, left, right, up, down, none].",
    "Be plausible. Do not generate uncommon interactions.",
    "Only interact with still objects. Do not move objects.",
)


def joints_sentence() -> str:
    return "The human has JOINTS: [" + ", ".join(j.spoken for j in JOINTS) + "]."


@dataclass(frozen=True)
class PromptExample:
    instruction: str
    plan: str
    background: tuple[str, ...] = ()


DEFAULT_EXAMPLE = PromptExample(
    instruction="Generate a 6-step interaction with the object.",
    background=(
        "The room has a [OBJECT: chair].",
        "The [OBJECT: chair] has PARTS: [back_soft_surface, armrest_hard_surface, armrest_hard_surface, seat_surface].",
        joints_sentence(),
        "The human is several meters away from the [OBJECT: chair].",
    ),
    plan="\n".join([
        "Step 1: Get close to the chair.",
        "Pair 1: {chair, none, none, none, front}",
        "Step 2: Sit on the chair.",
        "Pair 1: {chair, seat_surface, pelvis, contact, up}",
        "Step 3: Rest the right hand on the right arm of the chair.",
        "Pair 1: {chair, seat_surfac, pelvis, contact, up}",
        "Pair 2: {chair, armrest_hard_surface, right hand, contact, up}",
        "Step 4: Place the right foot on the left knee.",
        "Pair 1: {chair, seat_surface, pelvis, contact, up}",
        "Pair 2: {chair, left knee, right foot, contact, up}",
        "Step 5: Stand up.",
        "Pair 1: {chair, none, none, none, front}",
        "Step 6: Sit on the chair.",
        "Pair 1: {chair, seat_surface, pelvis, contact, up}",
    ]),
)


@dataclass(frozen=True)
class PromptSpec:
    instruction: str
    objects: tuple[tuple[str, tuple[str, ...]], ...]
    layout_sentences: tuple[str, ...] = ()
    n_plans: int = 1
    rules: tuple[str, ...] = DEFAULT_RULES
    examples: tuple[PromptExample, ...] = (DEFAULT_EXAMPLE,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple((n, tuple(p)) for n, p in self.objects))
        object.__setattr__(self, "layout_sentences", tuple(self.layout_sentences))
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "examples", tuple(self.examples))
        if self.n_plans < 1:
            raise ValueError("n_plans must be at least 1")
        if not self.objects:
            raise ValueError("a prompt needs at least one object")

    def vocab(self) -> set[tuple[str, str]]:
        return {(normalize_token(name), normalize_token(part)) for name, parts in self.objects for part in parts}


def build_prompt(spec: PromptSpec) -> str:
    lines = [
        f"Instruction: {spec.instruction}",
        "Background Information:",
        "[start of background Information]",
        "The room has OBJECTS: [" + ", ".join(name for name, _ in spec.objects) + "].",
    ]
    if spec.layout_sentences:
        lines.append(" ".join(spec.layout_sentences))
    lines.append(" ".join(f"The [OBJECT: {name}] has PARTS: [{', '.join(parts)}]." for name, parts in spec.objects))
    lines.append(joints_sentence())
    lines.append("[end of background Information]")
    noun = "task plan" if spec.n_plans == 1 else "task plans"
    lines.append(
        f"Given the instruction and background information, generate {spec.n_plans} {noun} "
        "according to the following rules and examples."
    )
    lines.append("[start of rules]")
    lines.extend(f"{i}. {rule}" for i, rule in enumerate(spec.rules, start=1))
    lines.append("[end of rules]")
    for ex in spec.examples:
        lines.append("[start of an example]")
        lines.append(f"Instruction: {ex.instruction}")
        if ex.background:
            lines.append("[start of background Information]")
            lines.extend(ex.background)
            lines.append("[end of background Information]")
        lines.append(ex.plan)
        lines.append("[end of an example]")
    return "\n".join(lines) + "\n"


# -- client ---------------------------------------------------------------------


@dataclass(frozen=True)
class PlannerClientConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4"
    token_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    transcript_path: str | None = None
    backoff_base: float = 1.0
    temperature: float | None = None

    def __post_init__(self) -> None:
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @property
    def offline(self) -> bool:
        return self.transcript_path is not None


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def load_transcript(path: str | Path) -> dict[str, str]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise TranscriptMiss(f"cannot read transcript {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise TranscriptMiss(f"transcript {path} must be a JSON object")
    return data


def record_transcript(path: str | Path, prompt: str, response: str) -> None:
    """Add or replace the recorded response for ``prompt``."""
    p = Path(path)
    data = load_transcript(p) if p.exists() else {}
    data[prompt_hash(prompt)] = response
    p.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _retry_delay(cfg: PlannerClientConfig, attempt: int, response: httpx.Response | None = None) -> float:
    if response is not None:
        try:
            return max(0.0, float(response.headers.get("retry-after", "")))
        except ValueError:
            pass
    return cfg.backoff_base * (2 ** attempt)


def request_plan(
    prompt: str,
    cfg: PlannerClientConfig,
    transport: httpx.BaseTransport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Return the model's reply to ``prompt``.

    Offline configs replay a transcript keyed by the prompt hash and never
    touch the network. Online requests retry timeouts, connection errors,
    429 and 5xx with exponential backoff; 401/403 fail immediately.
    """
    if cfg.offline:
        data = load_transcript(cfg.transcript_path)
        key = prompt_hash(prompt)
        if key not in data:
            raise TranscriptMiss(f"no recorded response for prompt {key[:12]}")
        return data[key]

    token = os.environ.get(cfg.token_env, "").strip()
    if not token:
        raise AuthMissing(f"environment variable {cfg.token_env} is not set")
    body: dict = {"model": cfg.model, "messages": [{"role": "user", "content": prompt}]}
    if cfg.temperature is not None:
        body["temperature"] = cfg.temperature
    headers = {"Authorization": f"Bearer {token}"}

    with httpx.Client(transport=transport, timeout=cfg.timeout) as client:
        for attempt in range(cfg.max_retries + 1):
            last = attempt == cfg.max_retries
            try:
                resp = client.post(cfg.endpoint, json=body, headers=headers)
            except httpx.TimeoutException as exc:
                if last:
                    raise PlannerTimeout(f"no response after {attempt + 1} attempts") from exc
                log.warning("planner request timed out (attempt %d)", attempt + 1)
                sleep(_retry_delay(cfg, attempt))
                continue
            except httpx.TransportError as exc:
                if last:
                    raise ServiceError(0, str(exc)) from exc
                log.warning("planner transport error (attempt %d): %s", attempt + 1, exc)
                sleep(_retry_delay(cfg, attempt))
                continue

            if resp.status_code in (401, 403):
                raise AuthMissing(f"planner rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 429 or resp.status_code >= 500:
                if last:
                    raise ServiceError(resp.status_code, resp.text)
                log.warning("planner returned HTTP %d (attempt %d)", resp.status_code, attempt + 1)
                sleep(_retry_delay(cfg, attempt, resp))
                continue
            if resp.status_code != 200:
                raise ServiceError(resp.status_code, resp.text)
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ServiceError(resp.status_code, "malformed chat-completion response") from exc
    raise AssertionError("unreachable")


def request_plans(
    prompts: Sequence[str],
    cfg: PlannerClientConfig,
    max_in_flight: int = 4,
    transport: httpx.BaseTransport | None = None,
) -> list[str]:
    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        return list(pool.map(lambda p: request_plan(p, cfg, transport), prompts))


def plan_from_response(
    text: str,
    scene_vocab: Iterable[tuple[str, str]],
    strict: bool = False,
    non_interactable: Iterable[tuple[str, str]] = (),
) -> tuple[ChainOfContacts, ValidationReport, list[ParseDiagnostic]]:
    chain, diagnostics = parse_plan(text)
    report = validate_chain(chain, scene_vocab, strict=strict, non_interactable=non_interactable)
    return chain, report, diagnostics
