"""Command-line interface: synth, gen-dataset, infer, eval, loss-check, selfcheck.

Exit codes: 0 on success, 1 for any toolkit invariant or data failure, 2 for
usage errors. All randomness enters through explicit seed flags or the
config file; nothing reads the clock.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from math import fsum
from pathlib import Path

from .errors import ToolkitError
from .evaluation import evaluate, format_report, read_predictions, render_roc_figures, write_report
from .losses import LossConfig, bce_loss, contrastive_loss, read_batch_file, total_loss
from .model import AdfeConfig, ModelParams, RmvitConfig, clip_scores, init_params, load_params
from .model.params import adfe_from_mapping, rmvit_from_mapping
from .pipeline import (
    MANIFEST_NAME,
    PipelineConfig,
    Stage,
    execute_plan,
    expected_counts,
    plan_stages,
    read_manifest,
)
from .selfcheck import INJECTABLE_FAULTS, run_selfcheck
from .sources import build_inventory, write_synthetic_sources
from .synth import (
    ArtifactKind,
    ArtifactSpec,
    IntensityLevel,
    STOCHASTIC_KINDS,
    apply_artifact,
    kind_from_name,
    level_from_name,
)
from .video import read_y4m, write_y4m

PREDICTION_HEADER = ["patch_id", *(k.cli_name for k in ArtifactKind), "labels"]


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of the JSON run-configuration file."""

    pipeline: PipelineConfig
    adfe: AdfeConfig
    rmvit: RmvitConfig
    init_seed: int
    sources: str | None
    out: str | None


def load_run_config(path: str | None, overrides: list[str] | None = None) -> RunConfig:
    """Read the config file (paper-value defaults when absent), apply --set."""
    doc: dict = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ToolkitError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ToolkitError(f"config {path} must hold a JSON object")
    for item in overrides or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ToolkitError(f"--set needs key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except ValueError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ToolkitError(f"--set {key}: {part} is not a section")
        node[parts[-1]] = value

    unknown = set(doc) - {"pipeline", "model", "paths"}
    if unknown:
        raise ToolkitError(f"unknown config sections: {sorted(unknown)}")
    model = dict(doc.get("model", {}))
    unknown = set(model) - {"adfe", "rmvit", "init_seed"}
    if unknown:
        raise ToolkitError(f"unknown model config keys: {sorted(unknown)}")
    paths = dict(doc.get("paths", {}))
    unknown = set(paths) - {"sources", "out"}
    if unknown:
        raise ToolkitError(f"unknown paths config keys: {sorted(unknown)}")
    try:
        return RunConfig(
            pipeline=PipelineConfig.from_mapping(doc.get("pipeline", {})),
            adfe=adfe_from_mapping(model.get("adfe", {})),
            rmvit=rmvit_from_mapping(model.get("rmvit", {})),
            init_seed=int(model.get("init_seed", 0)),
            sources=paths.get("sources"),
            out=paths.get("out"),
        )
    except TypeError as exc:
        raise ToolkitError(f"bad config value: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args) -> int:
    kind = kind_from_name(args.artifact)
    level = level_from_name(args.level)
    if kind in STOCHASTIC_KINDS and args.seed is None:
        raise UsageError(f"--seed is required for {kind.cli_name}")
    spec = ArtifactSpec.for_level(kind, level, args.seed)
    clip = read_y4m(args.input)
    out = apply_artifact(clip, spec, stride=args.stride)
    write_y4m(out, args.output)
    seed = "-" if spec.seed is None else str(spec.seed)
    print(f"applied artifact={kind.cli_name} level={level.value} param={spec.param:g} seed={seed}")
    print(f"wrote {args.output} ({out.width}x{out.height}x{out.length})")
    return 0


def _print_counts(counts: dict[str, int]) -> None:
    for stage in Stage:
        print(f"{stage.value} {counts[stage.value]}")
    print(f"augmented {counts['augmented']}")
    print(f"total {counts['total']}")


def cmd_gen_dataset(args) -> int:
    cfg = load_run_config(args.config, args.set)
    stages = tuple(Stage(s) for s in args.stage) if args.stage else None
    if args.dry_run:
        _print_counts(expected_counts(cfg.pipeline))
        return 0

    sources_dir = args.sources or cfg.sources
    out_dir = args.out or cfg.out
    if not sources_dir or not out_dir:
        raise UsageError("gen-dataset needs --sources and --out (flags or config paths)")
    sources_dir = Path(sources_dir)
    if args.seed_sources is not None and not (sources_dir / "inventory.json").exists():
        write_synthetic_sources(sources_dir, cfg.pipeline, args.seed_sources)
    inventory = build_inventory(sources_dir)
    records = plan_stages(cfg.pipeline, inventory, stages)
    report = execute_plan(records, inventory, Path(out_dir), cfg.pipeline, jobs=args.jobs)
    per_stage = {st.value: sum(1 for r in records if r.stage is st) for st in Stage}
    for name, count in per_stage.items():
        if count:
            print(f"{name} {count}")
    print(f"total {report.patch_count}")
    print(f"manifest {report.manifest_path}")
    return 0


def _load_model(args) -> ModelParams:
    if args.params:
        return load_params(args.params)
    if args.init_seed is None:
        raise UsageError("infer needs --params or --init-seed")
    cfg = load_run_config(args.model_config, args.set)
    return init_params(args.init_seed, cfg.adfe, cfg.rmvit)


def cmd_infer(args) -> int:
    params = _load_model(args)
    jobs: list[tuple[str, Path]] = []
    if args.dataset:
        root = Path(args.dataset)
        for rec in read_manifest(root / MANIFEST_NAME):
            jobs.append((rec.patch_id, root / rec.output_path))
    if args.input:
        for path in args.input:
            jobs.append((args.id or Path(path).stem, Path(path)))
    if not jobs:
        raise UsageError("infer needs --dataset and/or --input")

    out = Path(args.output)
    header_needed = not out.exists() or out.stat().st_size == 0
    with open(out, "a") as fh:
        if header_needed:
            fh.write(",".join(PREDICTION_HEADER) + "\n")
        for patch_id, path in jobs:
            scores = clip_scores(read_y4m(path), params)
            bits = "".join("1" if s > 0.5 else "0" for s in scores)
            fh.write(",".join([patch_id, *(f"{s:.9f}" for s in scores), bits]) + "\n")
    print(f"wrote {len(jobs)} prediction lines to {out}")
    return 0


def cmd_eval(args) -> int:
    records = read_manifest(args.manifest)
    predictions = read_predictions(args.predictions)
    report = evaluate(records, predictions)
    out_dir = Path(args.out)
    write_report(report, out_dir)
    if not args.no_figures:
        render_roc_figures(report, out_dir)
    sys.stdout.write(format_report(report))
    print(f"report {out_dir / 'report.csv'}")
    return 0


def cmd_loss_check(args) -> int:
    batch = read_batch_file(args.batch)
    cfg = LossConfig(alpha=args.alpha, beta=args.beta, temperature=args.tau)
    contrastive = contrastive_loss(batch, cfg)
    bce = [bce_loss(batch.labels[i], batch.probs[i], cfg.eps) for i in range(batch.size)]
    print(f"contrastive {fsum(contrastive):.9f}")
    print(f"bce {fsum(bce):.9f}")
    print(f"total {total_loss(batch, cfg):.9f}")
    return 0


def cmd_selfcheck(args) -> int:
    results = run_selfcheck(args.inject_fault)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(f"{'ok' if r.passed else 'FAIL'} {r.name} - {r.detail}")
    if failed:
        print(f"selfcheck failed: {', '.join(r.name for r in failed)}", file=sys.stderr)
        return 1
    print(f"selfcheck passed ({len(results)} invariants)")
    return 0


# ---------------------------------------------------------------------------
# parser plumbing

class UsageError(Exception):
    """Bad flag combination detected after argparse; maps to exit code 2."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artifactkit",
        description="Streaming-video artifact synthesis, dataset generation, and detector evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="apply one artifact to a Y4M clip")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--artifact", required=True, choices=[k.cli_name for k in ArtifactKind])
    p.add_argument("--level", required=True, choices=[lv.value for lv in IntensityLevel])
    p.add_argument("--seed", type=int, default=None, help="required for stochastic artifacts")
    p.add_argument("--stride", type=int, default=1, help="temporal subsampling for motion blur")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("gen-dataset", help="plan and synthesize the labeled patch database")
    p.add_argument("--config", default=None, help="JSON run config; defaults mirror the full-scale setup")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config field, e.g. pipeline.master_seed=7")
    p.add_argument("--dry-run", action="store_true", help="print closed-form counts only")
    p.add_argument("--sources", default=None, help="source directory with inventory.json")
    p.add_argument("--out", default=None, help="output dataset directory")
    p.add_argument("--stage", action="append", default=[], choices=[s.value for s in Stage])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed-sources", type=int, default=None,
                   help="materialize a synthetic source inventory first (toy/demo runs)")
    p.set_defaults(fn=cmd_gen_dataset)

    p = sub.add_parser("infer", help="run the reference detector over clips or a dataset")
    p.add_argument("--dataset", default=None, help="dataset directory (manifest + patches)")
    p.add_argument("--input", action="append", default=[], help="standalone Y4M clip (repeatable)")
    p.add_argument("--id", default=None, help="patch id for a single --input clip")
    p.add_argument("--params", default=None, help="params file written by save_params")
    p.add_argument("--init-seed", type=int, default=None, help="seeded untrained weights")
    p.add_argument("--model-config", default=None, help="JSON run config for model shapes")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--output", required=True, help="predictions file (appended)")
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("eval", help="score predictions against manifest ground truth")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True, help="directory for report.csv, ROC CSVs and figures")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("loss-check", help="print reference losses for a plain-text batch file")
    p.add_argument("--batch", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=0.1)
    p.set_defaults(fn=cmd_loss_check)

    p = sub.add_parser("selfcheck", help="run the embedded invariant suite")
    p.add_argument("--inject-fault", default=None, choices=INJECTABLE_FAULTS,
                   help="deliberately break one invariant (testing the failure path)")
    p.set_defaults(fn=cmd_selfcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
