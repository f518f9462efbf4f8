"""Command-line entry point for the fuzzy topic engine."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .io import load_embeddings
from .pipeline import (
    NoClustersError,
    PipelineConfig,
    derive_seed,
    grid_search_mcs,
    run_phase1,
    run_pipeline,
)
from .report import RenderSpec, render_scatter, write_plots, write_report
from .tsne import TsneConfig, project, reseeded

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_CLUSTERS = 3
EXIT_USAGE = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise _UsageError(message)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="embedding file to load")
    parser.add_argument(
        "--format",
        choices=["jsonl", "binary"],
        default=None,
        help="input format (default: .jsonl/.ndjson means jsonl, else binary)",
    )
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out-dir", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--mcs", type=int, default=None, help="pin the phase-1 minimal cluster size (skips the grid search)")
    parser.add_argument("--mcs-grid", default=None, metavar="LO:HI:STEP", help="inclusive grid of candidate minimal cluster sizes")
    parser.add_argument("--phase2-mcs", type=int, default=None)
    parser.add_argument("--top-n", type=int, default=None)
    parser.add_argument("--min-samples", type=int, default=None)
    parser.add_argument("--perplexity", type=float, default=None)
    parser.add_argument("--iterations", type=int, default=None)
    parser.add_argument("--early-exaggeration-factor", type=float, default=None)
    parser.add_argument("--early-exaggeration-iters", type=int, default=None)
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--momentum-initial", type=float, default=None)
    parser.add_argument("--momentum-final", type=float, default=None)
    parser.add_argument("--tsne-method", choices=["exact", "barnes_hut"], default=None)
    parser.add_argument("--bh-theta", type=float, default=None)
    parser.add_argument("--glosh-sign", choices=["inverted", "literal"], default=None)
    parser.add_argument(
        "--phase2-scope", choices=["per-topic", "global"], default=None
    )
    parser.add_argument(
        "--dump-tree",
        action="store_true",
        help="also write the phase-1 condensed tree as a debug TSV",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="fuzzytopics", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "full two-phase pipeline: report, topics, and plots"),
        ("gridsearch", "print the minimal-cluster-size score table"),
        ("phase1", "run phase 1 only and write its plot and summary"),
        ("phase2", "run both phases and write the per-topic plots"),
        ("plot", "run the pipeline and write only the SVG plots"),
        ("report", "run the pipeline and write only the report files"),
    ):
        sub = commands.add_parser(name, help=text)
        _add_common_flags(sub)
    return parser


def _parse_grid(text: str) -> tuple[int, ...]:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise _UsageError(f"--mcs-grid expects LO:HI or LO:HI:STEP, got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
    except ValueError as exc:
        raise _UsageError(f"--mcs-grid expects integers: {text!r}") from exc
    if step < 1 or hi < lo:
        raise _UsageError(f"--mcs-grid range is empty: {text!r}")
    return tuple(range(lo, hi + 1, step))


def _load_file_config(path: str | None) -> dict:
    if path is None:
        return {}
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return raw


def _pick(flag_value, file_cfg: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    if key in file_cfg:
        return file_cfg[key]
    return default


def _materialize_config(args: argparse.Namespace) -> PipelineConfig:
    file_cfg = _load_file_config(args.config)
    tsne_cfg = file_cfg.get("tsne", {})
    if not isinstance(tsne_cfg, dict):
        raise ValueError("config key 'tsne' must be an object")
    defaults = TsneConfig()
    tsne = TsneConfig(
        perplexity=_pick(args.perplexity, tsne_cfg, "perplexity", defaults.perplexity),
        iterations=_pick(args.iterations, tsne_cfg, "iterations", defaults.iterations),
        early_exaggeration_factor=_pick(
            args.early_exaggeration_factor,
            tsne_cfg,
            "early_exaggeration_factor",
            defaults.early_exaggeration_factor,
        ),
        early_exaggeration_iters=_pick(
            args.early_exaggeration_iters,
            tsne_cfg,
            "early_exaggeration_iters",
            defaults.early_exaggeration_iters,
        ),
        learning_rate=_pick(
            args.learning_rate, tsne_cfg, "learning_rate", defaults.learning_rate
        ),
        momentum_initial=_pick(
            args.momentum_initial,
            tsne_cfg,
            "momentum_initial",
            defaults.momentum_initial,
        ),
        momentum_final=_pick(
            args.momentum_final, tsne_cfg, "momentum_final", defaults.momentum_final
        ),
        seed=tsne_cfg.get("seed", defaults.seed),
        method=_pick(args.tsne_method, tsne_cfg, "method", defaults.method),
        bh_theta=_pick(args.bh_theta, tsne_cfg, "bh_theta", defaults.bh_theta),
    )
    if args.mcs is not None:
        grid = (args.mcs,)
    elif args.mcs_grid is not None:
        grid = _parse_grid(args.mcs_grid)
    elif "mcs_grid" in file_cfg:
        grid = tuple(int(m) for m in file_cfg["mcs_grid"])
    else:
        grid = tuple(range(5, 65))
    scope = _pick(args.phase2_scope, file_cfg, "phase2_scope", "per_topic")
    pipeline_defaults = PipelineConfig()
    return PipelineConfig(
        mcs_grid=grid,
        phase2_min_cluster_size=_pick(
            args.phase2_mcs,
            file_cfg,
            "phase2_min_cluster_size",
            pipeline_defaults.phase2_min_cluster_size,
        ),
        top_n=_pick(args.top_n, file_cfg, "top_n", pipeline_defaults.top_n),
        phase2_scope=str(scope).replace("-", "_"),
        tsne=tsne,
        glosh_sign=_pick(
            args.glosh_sign, file_cfg, "glosh_sign", pipeline_defaults.glosh_sign
        ),
        seed=_pick(args.seed, file_cfg, "seed", pipeline_defaults.seed),
        min_samples=_pick(args.min_samples, file_cfg, "min_samples", None),
    )


def _load_input(args: argparse.Namespace):
    fmt = args.format
    if fmt is None:
        fmt = "jsonl" if args.input.endswith((".jsonl", ".ndjson")) else "binary"
    return load_embeddings(args.input, fmt)


def _require_out_dir(args: argparse.Namespace) -> Path:
    if args.out_dir is None:
        raise _UsageError(f"'{args.command}' requires --out-dir")
    return Path(args.out_dir)


def _dispatch(args: argparse.Namespace) -> int:
    cfg = _materialize_config(args)
    dataset = _load_input(args)

    if args.command == "gridsearch":
        projection = project(
            dataset.matrix, reseeded(cfg.tsne, derive_seed(cfg.seed, 1))
        )
        _, table = grid_search_mcs(projection.coords, cfg.mcs_grid, cfg.min_samples)
        print("mcs\tscore\tclusters")
        for mcs, score, clusters in table:
            print(f"{mcs}\t{score:.6g}\t{clusters}")
        if args.out_dir is not None:
            out = _require_out_dir(args)
            out.mkdir(parents=True, exist_ok=True)
            with (out / "gridsearch.csv").open("w", encoding="utf-8") as handle:
                handle.write("mcs,score,clusters\n")
                for mcs, score, clusters in table:
                    handle.write(f"{mcs},{score:.6g},{clusters}\n")
        return EXIT_OK

    if args.command == "phase1":
        out = _require_out_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        phase1 = run_phase1(dataset, cfg)
        render_scatter(
            phase1.projection,
            phase1.membership,
            RenderSpec(),
            out / "scatter_phase1.svg",
        )
        _write_phase1_summary(dataset, phase1, out)
        _write_run_meta(cfg, out)
        _maybe_dump_tree(args, phase1, out)
        return EXIT_OK

    out = _require_out_dir(args)
    report = run_pipeline(dataset, cfg)
    if args.command in ("run", "report", "phase2"):
        write_report(report, out)
    if args.command in ("run", "plot", "phase2"):
        out.mkdir(parents=True, exist_ok=True)
        write_plots(report, out, RenderSpec())
    if args.command == "plot":
        _write_run_meta(cfg, out)
    _maybe_dump_tree(args, report.phase1, out)
    return EXIT_OK


def _write_run_meta(cfg: PipelineConfig, out: Path) -> None:
    from .pipeline import _config_echo

    payload = {"seed": cfg.seed, "config": _config_echo(cfg)}
    (out / "run_meta").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _maybe_dump_tree(args: argparse.Namespace, phase1, out: Path) -> None:
    if getattr(args, "dump_tree", False) and phase1.tree is not None:
        from .hierarchy import dump_condensed_tree

        dump_condensed_tree(phase1.tree, out / "condensed_tree_phase1.tsv")


def _write_phase1_summary(dataset, phase1, out: Path) -> None:
    with (out / "phase1.json-lines").open("w", encoding="utf-8") as handle:
        handle.write(
            json.dumps(
                {
                    "record": "phase1",
                    "chosen_mcs": phase1.chosen_mcs,
                    "clusters": int(phase1.selection.n_clusters),
                    "retained": int(phase1.retained.shape[0]),
                    "grid": [
                        {"mcs": m, "score": s if s > float("-inf") else None, "clusters": c}
                        for m, s, c in (phase1.grid_scores or ())
                    ],
                },
                sort_keys=True,
                separators=(",", ":"),
            )
            + "\n"
        )
        for i, doc in enumerate(dataset.documents):
            handle.write(
                json.dumps(
                    {
                        "record": "document",
                        "article_id": doc.id,
                        "hard_label": int(phase1.selection.hard_labels[i]),
                        "p_any": float(phase1.membership.p_any[i]),
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoClustersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CLUSTERS
    except (FileNotFoundError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(cli_main())
