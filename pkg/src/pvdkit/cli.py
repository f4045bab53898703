"""Command-line entry point exposing the pipeline as subcommands.

Exit codes: 0 success, 1 usage error, 2 runtime error. Logs go to stderr;
results go to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset, decompose as decompose_mod, metrics, raster, scenegen, svgio, vectorize
from .fitting import FitOptions, perceive
from .primitives import (
    PerceptionResult,
    aggregate_perception,
    parse_perception,
    primitive_from_dict,
    Scene,
)
from .tasks import generators, prompts, reasoner

log = logging.getLogger("pvdkit")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvdkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="build an <SVG, PVD> dataset file")
    p.add_argument("--spec", help="JSON spec file; omit for the full default recipe")
    p.add_argument("--scale-divisor", type=int, default=1,
                   help="divide the default per-concept counts by this factor")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-augment", action="store_true")

    p = sub.add_parser("render", help="render a PVD record file to a PNG")
    p.add_argument("--pvd", required=True, help="perception JSON or primitive list file")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)

    p = sub.add_parser("vectorize", help="convert a PNG into SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--external", help="external vectorizer command with {input} {output}")
    p.add_argument("--tol", type=float, default=1.5)

    p = sub.add_parser("decompose", help="select salient paths from an SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--threshold", type=float, default=decompose_mod.DEFAULT_THRESHOLD)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("perceive", help="image -> PVD perception")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vectorizer", choices=["builtin", "external"], default="builtin")
    p.add_argument("--external-command", help="required with --vectorizer external")
    p.add_argument("--threshold", type=float, default=decompose_mod.DEFAULT_THRESHOLD)
    p.add_argument("--report", choices=["score"], help="also print the reconstruction score")

    p = sub.add_parser("gen-tasks", help="generate task instances")
    p.add_argument("--task", choices=sorted(generators.TASK_GENERATORS), required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run-eval", help="assemble prompts, query, score")
    p.add_argument("--tasks", required=True, help="task directory from gen-tasks")
    p.add_argument("--mode", choices=["txt", "mm"], default="txt")
    p.add_argument("--endpoint", help="JSON endpoint config {base_url, model, key_env}")
    p.add_argument("--offline", help="fixture directory for network-free replay")
    p.add_argument("--threshold", type=float, default=decompose_mod.DEFAULT_THRESHOLD)
    p.add_argument("--save-prompts", help="optional directory to dump assembled prompts")

    p = sub.add_parser("analyze", help="perception-quality correlation report")
    p.add_argument("--records", required=True,
                   help="JSONL of {task, score, correct} records")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plots", action="store_true", help="also write SVG plots")

    return parser


def _load_perception(path: Path) -> PerceptionResult:
    text = path.read_text(encoding="utf-8").strip()
    data = json.loads(text)
    if isinstance(data, dict):
        return parse_perception(text)
    from .primitives import from_entries

    return from_entries([[primitive_from_dict(d) for d in data]])


def _cmd_gen_dataset(args) -> int:
    if args.spec:
        spec = dataset.DatasetSpec.from_dict(json.loads(Path(args.spec).read_text()))
    else:
        spec = dataset.DatasetSpec.default(divisor=args.scale_divisor)
    cfg = scenegen.GenConfig()
    augment = None if args.no_augment else scenegen.AugmentParams()
    n = dataset.build_dataset(spec, cfg, args.out, seed=args.seed, augment=augment)
    print(n)
    return 0


def _cmd_render(args) -> int:
    result = _load_perception(Path(args.pvd))
    scene = Scene(
        width=args.width, height=args.height,
        objects=tuple(result.all_primitives()),
    )
    raster.write_png(raster.render_scene(scene), args.out)
    return 0


def _cmd_vectorize(args) -> int:
    img = raster.read_png(args.input)
    if args.external:
        doc = vectorize.vectorize_external(img, args.external)
    else:
        doc = vectorize.vectorize(img, vectorize.VectorizeOptions(simplify_tol=args.tol))
    Path(args.out).write_text(svgio.emit_svg(doc), encoding="utf-8")
    return 0


def _cmd_decompose(args) -> int:
    doc = svgio.parse_svg(Path(args.input).read_text(encoding="utf-8"))
    report = decompose_mod.decompose(doc, args.threshold)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, (idx, sub) in enumerate(report.selected):
        (out_dir / f"object_{k}.svg").write_text(svgio.emit_svg(sub), encoding="utf-8")
    (out_dir / "report.json").write_text(
        json.dumps(
            {
                "threshold": report.threshold,
                "selected": report.selected_indices(),
                "skipped": [[i, g] for i, g in report.skipped],
                "trace": report.trace,
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    return 0


def _cmd_perceive(args) -> int:
    img = raster.read_png(args.input)
    opts = FitOptions()
    if args.vectorizer == "external":
        if not args.external_command:
            raise ValueError("--external-command is required with --vectorizer external")
        doc = vectorize.vectorize_external(img, args.external_command)
        from .fitting import perceive_document

        result = perceive_document(doc, opts, args.threshold)
    else:
        result = perceive(img, opts, args.threshold)
    Path(args.out).write_text(aggregate_perception(result) + "\n", encoding="utf-8")
    if args.report == "score":
        print(f"{metrics.perception_score(img, result):.4f}")
    return 0


def _cmd_gen_tasks(args) -> int:
    generators.generate_task_set(args.task, args.n, args.seed, args.out)
    print(args.n)
    return 0


def _cmd_run_eval(args) -> int:
    task_dir = Path(args.tasks)
    records = [
        json.loads(line)
        for line in (task_dir / "records.jsonl").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    if not records:
        raise ValueError("task directory holds no records")
    if args.offline:
        client = reasoner.OfflineFixtures(args.offline)
        ask = client.query
    else:
        if not args.endpoint:
            raise ValueError("provide --endpoint or --offline")
        cfg = reasoner.EndpointConfig(**json.loads(Path(args.endpoint).read_text()))
        ask = lambda prompt, image=None: reasoner.query_reasoner(cfg, prompt, image)
    prompts_dir = Path(args.save_prompts) if args.save_prompts else None
    if prompts_dir:
        prompts_dir.mkdir(parents=True, exist_ok=True)
    predictions = []
    for rec in records:
        img = raster.read_png(task_dir / rec["image"])
        perception = perceive(img, FitOptions(), args.threshold)
        template = prompts.template_for_task(rec["meta"].get("task", ""))
        prompt = prompts.assemble_prompt(template, perception, {"question": rec["question"]})
        if prompts_dir:
            (prompts_dir / f"{rec['id']}.txt").write_text(prompt, encoding="utf-8")
        response = ask(prompt, img if args.mode == "mm" else None)
        predictions.append(response)
    accuracy = reasoner.score_answers(records, predictions)
    print(f"{accuracy:.2f}")
    return 0


def _cmd_analyze(args) -> int:
    records = [
        json.loads(line)
        for line in Path(args.records).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    report = metrics.correlation_report(records)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    if args.plots:
        (out_dir / "task_scatter.svg").write_text(metrics.scatter_plot_svg(report))
        (out_dir / "instance_density.svg").write_text(metrics.density_plot_svg(report))
    return 0


_COMMANDS = {
    "gen-dataset": _cmd_gen_dataset,
    "render": _cmd_render,
    "vectorize": _cmd_vectorize,
    "decompose": _cmd_decompose,
    "perceive": _cmd_perceive,
    "gen-tasks": _cmd_gen_tasks,
    "run-eval": _cmd_run_eval,
    "analyze": _cmd_analyze,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface package errors as exit 2
        log.error("%s: %s", type(exc).__name__, exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
