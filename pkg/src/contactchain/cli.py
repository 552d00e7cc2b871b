"""Command-line entry point: validate, plan, run, heightmap, assets."""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .coc import ChainOfContacts, ContactPair, ContactStep
from .errors import ContactChainError, PlannerError, SchemaError
from .executor import ExecutorConfig, TrialLog, rest_pose, run_trial, write_trial_log
from .heightmap import HeightmapConfig, heightmap_csv, heightmap_pgm, sample_heightmap
from .metrics import build_report
from .planner import PlannerClientConfig, PromptSpec, build_prompt, plan_from_response, request_plan
from .plantext import normalize_token, render_plan
from .scene import SceneInstance, build_scene, scene_for_entry
from .sceneplan import ObjectSpec, PlanEntry, load_sceneplan, parse_objects, save_sceneplan
from .taskparser import RewardConfig, SequencerConfig

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_PLANNER = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc


def _load_entries(path: str) -> list[PlanEntry]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return load_sceneplan(text)


def _override(obj, values: dict | None, what: str):
    if not values:
        return obj
    known = {f.name for f in fields(obj)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise SchemaError(f"unknown {what} setting(s): {', '.join(unknown)}")
    return replace(obj, **values)


def load_run_config(path: str | None) -> tuple[RewardConfig, ExecutorConfig, SequencerConfig, HeightmapConfig]:
    """Optional JSON overrides: ``{"reward": {...}, "executor": {...}, "sequencer": {...}, "heightmap": {...}}``."""
    raw = _read_json(path) if path else {}
    if not isinstance(raw, dict):
        raise SchemaError("config must be a JSON object")
    try:
        execu = dict(raw.get("executor") or {})
        for key in ("start_position",):
            if key in execu:
                execu[key] = tuple(execu[key])
        return (
            _override(RewardConfig(), raw.get("reward"), "reward"),
            _override(ExecutorConfig(), execu, "executor"),
            _override(SequencerConfig(), raw.get("sequencer"), "sequencer"),
            _override(HeightmapConfig(), raw.get("heightmap"), "heightmap"),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad config: {exc}") from exc


# -- validate ---------------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    from .coc import validate_chain

    try:
        entries = _load_entries(args.sceneplan)
        scenes = [scene_for_entry(e, args.assets) for e in entries]
    except ContactChainError as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT
    failed = False
    for entry, scene in zip(entries, scenes):
        report = validate_chain(entry.chain, scene.vocab(), strict=args.strict)
        status = "ok" if report.ok else "FAIL"
        print(f"{entry.entry_id}: {status} ({len(entry.chain)} steps, {len(report.errors)} errors, "
              f"{len(report.warnings)} warnings)")
        for v in report.violations:
            print(f"  {v}")
        failed |= not report.ok
    return EXIT_VALIDATION if failed else EXIT_OK


# -- plan -------------------------------------------------------------------------


def _prompt_scene(raw: Any) -> tuple[PromptSpec, list[dict], set[tuple[str, str]]]:
    if not isinstance(raw, dict) or not isinstance(raw.get("objects"), list) or not raw["objects"]:
        raise SchemaError("scene file needs a non-empty 'objects' list")
    objects = []
    for i, o in enumerate(raw["objects"]):
        if not isinstance(o, dict) or "name" not in o or not isinstance(o.get("parts"), list):
            raise SchemaError(f"scene object {i} needs 'name' and a 'parts' list")
        objects.append(o)
    blocked = {(normalize_token(a), normalize_token(b)) for a, b in raw.get("non_interactable", [])}
    spec = PromptSpec(
        instruction="",
        objects=tuple((o["name"], tuple(o["parts"])) for o in objects),
        layout_sentences=tuple(raw.get("layout", ())),
    )
    return spec, objects, blocked


def _entry_from_plan(chain: ChainOfContacts, objects: list[dict], entry_id: str) -> PlanEntry:
    """Rename plan object names to ScenePlan refs (name + key)."""
    specs = {}
    rename = {}
    for i, o in enumerate(objects):
        key = str(o.get("key", f"{i:03d}"))
        spec = ObjectSpec(
            key=key,
            id=str(o.get("id", o["name"])),
            name=normalize_token(o["name"]),
            rotate=o.get("rotate", ()),
            scale=o.get("scale", 1.0),
            transfer=o.get("transfer", (0.0, 0.0, 0.0)),
        )
        specs[key] = spec
        rename[spec.name] = spec.ref
    steps = []
    for step in chain.steps:
        pairs = []
        for pair in step.pairs:
            tokens = pair.to_tokens()
            tokens[0] = rename.get(tokens[0], tokens[0])
            pairs.append(ContactPair.from_tokens(*tokens))
        steps.append(ContactStep(step.description, tuple(pairs)))
    return PlanEntry(entry_id, specs, ChainOfContacts(tuple(steps)))


def cmd_plan(args: argparse.Namespace) -> int:
    try:
        base, objects, blocked = _prompt_scene(_read_json(args.scene))
    except ContactChainError as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT
    spec = replace(base, instruction=args.instruction, n_plans=1)
    prompt = build_prompt(spec)
    if args.print_prompt:
        sys.stdout.write(prompt)
        return EXIT_OK
    cfg = PlannerClientConfig(
        endpoint=args.endpoint,
        model=args.model,
        token_env=args.token_env,
        timeout=args.timeout,
        max_retries=args.retries,
        transcript_path=args.offline,
    )
    try:
        text = request_plan(prompt, cfg)
        chain, report, diagnostics = plan_from_response(text, spec.vocab(), strict=args.strict, non_interactable=blocked)
    except PlannerError as exc:
        _err(f"planner error: {exc}")
        return EXIT_PLANNER
    except ContactChainError as exc:
        # empty or unusable response
        _err(f"planner returned no usable plan: {exc}")
        return EXIT_PLANNER
    for d in diagnostics:
        _err(f"line {d.line}: {d.severity}: {d.message}")
    for v in report.violations:
        _err(str(v))
    sys.stdout.write(render_plan(chain) + "\n")
    try:
        entry = _entry_from_plan(chain, objects, args.entry_id)
    except (ContactChainError, ValueError) as exc:
        _err(f"error: cannot build ScenePlan entry: {exc}")
        return EXIT_INPUT
    sys.stdout.write(save_sceneplan([entry]))
    return EXIT_OK if report.ok else EXIT_VALIDATION


# -- run --------------------------------------------------------------------------


def perturbed_start(seed: int, entry_index: int, trial: int, radius: float) -> tuple[float, float]:
    """Seed-derived xy offset inside a disk of ``radius``; zero when radius is 0."""
    if radius <= 0:
        return 0.0, 0.0
    rng = np.random.default_rng([seed, entry_index, trial])
    r = radius * math.sqrt(rng.random())
    a = 2.0 * math.pi * rng.random()
    return r * math.cos(a), r * math.sin(a)


def _run_one(job: tuple) -> TrialLog:
    entry, scene, reward_cfg, exec_cfg, seq_cfg, offset, plan_id = job
    sx, sy, sz = exec_cfg.start_position
    start = rest_pose((sx + offset[0], sy + offset[1], sz), exec_cfg.start_yaw, exec_cfg)
    return run_trial(entry, scene, reward_cfg, exec_cfg, seq_cfg, initial_pose=start, plan_id=plan_id)


def cmd_run(args: argparse.Namespace) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.perturb < 0:
        raise UsageError("--perturb must be non-negative")
    try:
        reward_cfg, exec_cfg, seq_cfg, _ = load_run_config(args.config)
        entries = _load_entries(args.sceneplan)
        scenes = {e.entry_id: scene_for_entry(e, args.assets) for e in entries}
    except ContactChainError as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT

    jobs = [
        (e, scenes[e.entry_id], reward_cfg, exec_cfg, seq_cfg, perturbed_start(args.seed, i, t, args.perturb), e.entry_id)
        for i, e in enumerate(entries)
        for t in range(args.trials)
    ]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            logs = list(pool.map(_run_one, jobs))
    else:
        logs = [_run_one(j) for j in jobs]

    out = Path(args.out)
    for idx, log in enumerate(logs):
        trial = idx % args.trials
        buf = io.StringIO()
        write_trial_log(log, buf)
        write_atomic(out / "logs" / f"{log.plan_id}_{trial:03d}.jsonl", buf.getvalue())
    report = build_report(logs, entries, clamp=args.clamp)
    write_atomic(out / "report.json", report.to_json())
    write_atomic(out / "report.txt", report.to_table())
    sys.stdout.write(report.to_table())
    return EXIT_OK


# -- heightmap --------------------------------------------------------------------


def _parse_vec3(text: str) -> tuple[float, float, float]:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(parts) != 3 or not all(math.isfinite(v) for v in parts):
        raise argparse.ArgumentTypeError(f"expected three finite numbers, got {text!r}")
    return parts[0], parts[1], parts[2]


def _finite_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return v


def heightmap_scene(raw: Any, asset_dir: str | None) -> tuple[SceneInstance, np.ndarray | None]:
    """Scene from ``{"obj": {...}}`` (or a ScenePlan document's first entry) plus optional raw ``points``."""
    if not isinstance(raw, dict):
        raise SchemaError("scene file must be a JSON object")
    if "obj" not in raw and raw and all(isinstance(v, dict) and "obj" in v for v in raw.values()):
        raw = next(iter(raw.values()))
    objects = parse_objects(raw.get("obj", {}))
    scene = build_scene(objects.values(), asset_dir, ground_height=float(raw.get("ground_height", 0.0)))
    extra = None
    if "points" in raw:
        extra = np.asarray(raw["points"], dtype=float).reshape(-1, 3)
        if not np.isfinite(extra).all():
            raise SchemaError("points must be finite")
    return scene, extra


def cmd_heightmap(args: argparse.Namespace) -> int:
    try:
        _, _, _, hm_cfg = load_run_config(args.config)
        scene, extra = heightmap_scene(_read_json(args.scene), args.assets)
    except (ContactChainError, ValueError) as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT
    points = scene.points if extra is None else np.concatenate([scene.points, extra])
    values = sample_heightmap(scene, args.pos, args.yaw, hm_cfg, points=points)
    out = Path(args.out)
    write_atomic(out.with_suffix(".csv"), heightmap_csv(values))
    write_atomic(out.with_suffix(".pgm"), heightmap_pgm(values, scene.ground_height))
    print(f"wrote {out.with_suffix('.csv')} and {out.with_suffix('.pgm')}")
    return EXIT_OK


def cmd_assets(args: argparse.Namespace) -> int:
    from .standins import write_assets

    for path in write_assets(args.dir):
        print(path)
    return EXIT_OK


# -- entry ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="contactchain", description="Chain-of-Contacts planning, execution and evaluation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a ScenePlan file against its assets")
    v.add_argument("sceneplan")
    v.add_argument("--strict", action="store_true", help="treat unknown parts as errors")
    v.add_argument("--assets", help="asset directory (default: packaged stand-ins)")
    v.set_defaults(func=cmd_validate)

    pl = sub.add_parser("plan", help="ask the language model for a plan")
    pl.add_argument("instruction")
    pl.add_argument("--scene", required=True, help="JSON with objects, parts and layout sentences")
    pl.add_argument("--offline", metavar="TRANSCRIPT", help="replay responses from a transcript file")
    pl.add_argument("--endpoint", default=PlannerClientConfig.endpoint)
    pl.add_argument("--model", default=PlannerClientConfig.model)
    pl.add_argument("--token-env", default=PlannerClientConfig.token_env)
    pl.add_argument("--timeout", type=_finite_float, default=PlannerClientConfig.timeout)
    pl.add_argument("--retries", type=int, default=PlannerClientConfig.max_retries)
    pl.add_argument("--entry-id", default="0000")
    pl.add_argument("--strict", action="store_true")
    pl.add_argument("--print-prompt", action="store_true", help="print the prompt and exit")
    pl.set_defaults(func=cmd_plan)

    r = sub.add_parser("run", help="execute every plan with the kinematic executor and score it")
    r.add_argument("sceneplan")
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--perturb", type=_finite_float, default=0.0, metavar="RADIUS",
                   help="jitter the start position within RADIUS metres")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", default="runs")
    r.add_argument("--assets")
    r.add_argument("--config", help="JSON config overrides")
    r.add_argument("--clamp", choices=("max", "min"), default="max", help="not-contact error clamp")
    r.set_defaults(func=cmd_run)

    h = sub.add_parser("heightmap", help="sample the ego-centric heightmap")
    h.add_argument("scene")
    h.add_argument("--pos", type=_parse_vec3, default=(0.0, 0.0, 0.9))
    h.add_argument("--yaw", type=_finite_float, default=0.0)
    h.add_argument("--out", default="heightmap")
    h.add_argument("--assets")
    h.add_argument("--config")
    h.set_defaults(func=cmd_heightmap)

    a = sub.add_parser("assets", help="write the stand-in part clouds")
    a.add_argument("dir")
    a.set_defaults(func=cmd_assets)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _err(f"contactchain: error: {exc}")
        return EXIT_USAGE
    except ContactChainError as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
