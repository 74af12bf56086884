"""Command-line entry point: ``cvdloss <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from cvdloss import __version__

log = logging.getLogger("cvdloss")

DEFICIENCY_CHOICES = ("protan", "deutan")


def _deficiency(args: argparse.Namespace):
    from cvdloss.simulation import Deficiency

    return Deficiency.parse(args.deficiency)


def _sidecar(out: Path, argv: Sequence[str], **extra: object) -> None:
    from cvdloss.report import run_metadata, write_metadata

    write_metadata(out.with_name(out.name + ".run.json"), run_metadata(argv, **extra))


def cmd_simulate(args: argparse.Namespace, argv: Sequence[str]) -> int:
    from cvdloss.color import linear_to_srgb, srgb_to_linear
    from cvdloss.imageio import read_png, write_png
    from cvdloss.simulation import simulate_image

    d = _deficiency(args)
    write_png(args.output, linear_to_srgb(simulate_image(srgb_to_linear(read_png(args.input)), d)))
    _sidecar(args.output, argv, deficiency=d.value)
    return 0


def cmd_daltonize(args: argparse.Namespace, argv: Sequence[str]) -> int:
    from cvdloss.daltonization import daltonize
    from cvdloss.imageio import read_png, write_png

    d = _deficiency(args)
    result = daltonize(read_png(args.input), d)
    write_png(args.output, result.image)
    _sidecar(args.output, argv, deficiency=d.value, clip_fraction=result.clip_fraction)
    print(json.dumps({"deficiency": d.value, "clip_fraction": result.clip_fraction}))
    return 0


def cmd_gmm(args: argparse.Namespace, argv: Sequence[str]) -> int:
    from cvdloss.color import linear_rgb_to_oklab, srgb_to_linear
    from cvdloss.gradient import gradient_magnitude_map
    from cvdloss.imageio import gmm_to_gray8, read_png, write_gmm_raw, write_png
    from cvdloss.simulation import simulate_image

    linear = srgb_to_linear(read_png(args.input))
    if args.deficiency:
        linear = simulate_image(linear, _deficiency(args))
    gmm = gradient_magnitude_map(linear_rgb_to_oklab(linear))
    write_png(args.output, gmm_to_gray8(gmm))
    if args.raw:
        write_gmm_raw(args.raw, gmm)
    _sidecar(args.output, argv, max_gradient=float(gmm.max()))
    return 0


def cmd_score(args: argparse.Namespace, argv: Sequence[str]) -> int:
    from cvdloss.imageio import read_png
    from cvdloss.metric import cvdloss_for_image

    score = cvdloss_for_image(read_png(args.input), _deficiency(args))
    print(json.dumps(score.as_dict()))
    return 0


def _manifest(args: argparse.Namespace):
    from cvdloss.pipeline import discover_manifest, load_manifest

    if args.manifest:
        return load_manifest(args.manifest, args.category), args.manifest.resolve().parent
    return discover_manifest(args.root, args.category), args.root.resolve()


def _workers(args: argparse.Namespace) -> int:
    from cvdloss.pipeline import default_workers

    return args.workers if args.workers is not None else default_workers()


def cmd_evaluate(args: argparse.Namespace, argv: Sequence[str]) -> int:
    from cvdloss import pipeline, report

    manifest, base = _manifest(args)
    workers = _workers(args)
    records = pipeline.evaluate_corpus(manifest, workers=workers)
    normalize = args.normalize == "standard"
    if normalize:
        records = pipeline.normalize_by_standard(records)
    summaries = pipeline.summarize(records)

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    report.write_scores(out / "scores.tsv", records, base)
    report.write_summary(out / "summary.tsv", summaries)
    figures = report.emit_score_boxplots(report.read_tsv(out / "scores.tsv"), out / "figures", normalize)
    errors = sum(1 for r in records if not r.ok)
    no_baseline = sorted({f"{s.category}/{s.deficiency.value}" for s in summaries if s.baseline is None})
    report.write_metadata(
        out / "run.json",
        report.run_metadata(
            argv, workers=workers, images=len(manifest), records=len(records), errors=errors,
            no_baseline=no_baseline, normalize=args.normalize,
            figures=[f.relative_to(out).as_posix() for f in figures],
        ),
    )
    print(f"{len(records)} records from {len(manifest)} images, {errors} error(s); results in {out}")
    for group in no_baseline:
        print(f"no baseline: {group}")
    return 0


def cmd_verify(args: argparse.Namespace, argv: Sequence[str]) -> int:
    from cvdloss import pipeline, report

    manifest, base = _manifest(args)
    workers = _workers(args)
    experiment = pipeline.daltonization_experiment(manifest, workers=workers)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    report.write_deltas(out / "deltas.tsv", experiment, base)
    report.write_delta_summary(out / "delta_summary.tsv", experiment)
    figures = report.emit_delta_boxplots(report.read_tsv(out / "deltas.tsv"), out / "figures")
    report.write_metadata(
        out / "run.json",
        report.run_metadata(
            argv, workers=workers, images=sum(1 for r in manifest.records if r.prompt_type == "standard"),
            excluded=experiment.excluded, figures=[f.relative_to(out).as_posix() for f in figures],
        ),
    )
    for (cat, d), dist in experiment.summaries.items():
        median = "n/a" if dist is None else report.fmt(dist.median)
        print(f"{cat}\t{d.value}\tmedian log10 delta {median}")
    print(f"{experiment.excluded} excluded (degenerate or unreadable); results in {out}")
    return 0


def cmd_report(args: argparse.Namespace, argv: Sequence[str]) -> int:
    from cvdloss import report

    out: Path = args.out
    written = []
    if args.scores:
        written += report.emit_score_boxplots(report.read_tsv(args.scores), out, args.normalize == "standard")
    if args.deltas:
        written += report.emit_delta_boxplots(report.read_tsv(args.deltas), out)
    if not written:
        raise ValueError("report needs --scores and/or --deltas")
    report.write_metadata(out / "run.json", report.run_metadata(argv, figures=[p.name for p in written]))
    print(f"{len(written)} figure(s) in {out}")
    return 0


def cmd_seed_cards(directory: Path, count: int, argv: Sequence[str]) -> int:
    from cvdloss.cards import write_card_corpus
    from cvdloss.pipeline import discover_manifest, format_manifest
    from cvdloss.report import run_metadata, write_metadata

    root = write_card_corpus(directory, count)
    manifest = discover_manifest(root)
    (root / "manifest.tsv").write_text(format_manifest(manifest, relative_to=root), encoding="utf-8")
    write_metadata(root / "run.json", run_metadata(argv, cards=count))
    print(f"{count} cards and manifest.tsv written to {root}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvdloss",
        description="Gradient-based color accessibility scores for protanopia and deuteranopia.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument(
        "--seed-cards", type=Path, metavar="DIR",
        help="write a synthetic red/green card corpus (and manifest.tsv) to DIR and exit",
    )
    parser.add_argument("--count", type=int, default=100, help="number of cards for --seed-cards (default 100)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def deficiency_arg(p: argparse.ArgumentParser, required: bool = True) -> None:
        p.add_argument("--deficiency", "-d", choices=DEFICIENCY_CHOICES, required=required)

    p = sub.add_parser("simulate", help="simulate dichromat vision of a PNG")
    deficiency_arg(p)
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("daltonize", help="daltonize a PNG at full strength")
    deficiency_arg(p)
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.set_defaults(func=cmd_daltonize)

    p = sub.add_parser("gmm", help="write the gradient magnitude map as grayscale PNG")
    deficiency_arg(p, required=False)
    p.add_argument("--raw", type=Path, help="also write the raw float64 map (GMM1 format)")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.set_defaults(func=cmd_gmm)

    p = sub.add_parser("score", help="print the CVDLoss of a PNG as JSON")
    deficiency_arg(p)
    p.add_argument("input", type=Path)
    p.set_defaults(func=cmd_score)

    for name, func, helptext in (
        ("evaluate", cmd_evaluate, "score a corpus and write tables and figures"),
        ("verify-daltonization", cmd_verify, "run the daltonization experiment on standard-prompt images"),
    ):
        p = sub.add_parser(name, help=helptext)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--manifest", type=Path, help="tab-separated manifest file")
        src.add_argument("--root", type=Path, help="directory laid out as <category>/<prompt_type>/*.png")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--workers", type=int, help="worker processes (default: $CVDLOSS_WORKERS or 1)")
        p.add_argument(
            "--category", action="append", default=[], metavar="NAME",
            help="accept an extra category name (repeatable)",
        )
        if name == "evaluate":
            p.add_argument("--normalize", choices=("standard", "none"), default="standard")
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="redraw box-plot figures from emitted tables")
    p.add_argument("--scores", type=Path, help="scores.tsv from evaluate")
    p.add_argument("--deltas", type=Path, help="deltas.tsv from verify-daltonization")
    p.add_argument("--normalize", choices=("standard", "none"), default="standard")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.seed_cards is None and args.command is None:
        parser.print_usage(sys.stderr)
        print("cvdloss: error: a subcommand or --seed-cards is required", file=sys.stderr)
        return 2
    try:
        if args.seed_cards is not None:
            return cmd_seed_cards(args.seed_cards, args.count, ["cvdloss", *argv])
        return args.func(args, ["cvdloss", *argv])
    except (ValueError, OSError) as exc:
        print(f"cvdloss: error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
