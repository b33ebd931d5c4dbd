"""Command-line entry point.

Subcommands mirror the pipeline stages: `gen-data` writes synthetic
profiling csv pairs, `train-gen` fits a synthesizer, `serve`/`fetch` move
the model file between nodes, `adapt` fits and applies the mapping,
`run-task` executes the whole pipeline from a task file or preset, `report`
re-renders a saved report, and `diagnose` computes correlation diagnostics.
Report-producing commands write matplotlib figures next to their csv/json
output unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .data import default_schema, fit_column_stats, load_csv, write_csv
from .errors import FtcaError, UsageError
from .fednet import TransferLog, fetch_model_bytes, serve_source
from .harness import (
    SyntheticVnfConfig,
    export_histograms,
    gen_synthetic_vnf,
    negative_transfer_score,
    parse_task_file,
    pearson_matrix,
    preset_task,
    render_report,
    reports_from_json,
    task_file_text,
)
from .tabgen import GAN, STATISTICAL, GanTrainConfig, fit_statistical, serialize_model, train_gan
from .tca import TcaConfig, fit_tca, serialize_mapping, transform
from .kernels import mmd_mapped_form


def _parse_address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise UsageError(f"expected host:port, got {text!r}")
    return host, int(port)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v)


def _synth_config(args: argparse.Namespace) -> SyntheticVnfConfig:
    return SyntheticVnfConfig(
        n_source=args.n_source,
        n_target=args.n_target,
        feature_dim=args.feature_dim,
        shift_vector=_floats(args.shift) or None,
        scale_vector=_floats(args.scale) or None,
        label_rule=args.label_rule,
        noise_std=args.noise_std,
        seed=args.seed,
        independent_labels=tuple(v for v in args.independent_labels.split(",") if v),
    )


def cmd_gen_data(args: argparse.Namespace) -> int:
    if args.preset:
        task = preset_task(args.preset, args.seed)
        cfg = task.source_data
        if not isinstance(cfg, SyntheticVnfConfig):
            raise UsageError(f"preset {args.preset!r} does not use synthetic data")
    else:
        cfg = _synth_config(args)
    source, target = gen_synthetic_vnf(cfg)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(source, outdir / "source.csv")
    write_csv(target, outdir / "target.csv")
    print(f"wrote {outdir / 'source.csv'} ({source.n} rows) and "
          f"{outdir / 'target.csv'} ({target.n} rows)")
    return 0


def cmd_train_gen(args: argparse.Namespace) -> int:
    ds = load_csv(args.input, default_schema())
    if args.kind == STATISTICAL:
        model = fit_statistical(ds)
    else:
        cfg = GanTrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            noise_dim=args.noise_dim,
            learning_rate=args.learning_rate,
            seed=args.seed,
        )
        model = train_gan(ds, cfg)
    blob = serialize_model(model)
    Path(args.output).write_bytes(blob)
    print(f"wrote {args.output} ({len(blob)} bytes, kind={args.kind})")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    log = TransferLog(args.log)
    server = serve_source(_parse_address(args.bind), args.model, log)
    print(f"serving {args.model} on {server.address[0]}:{server.address[1]} "
          f"(log: {args.log or 'in-memory'})")
    try:
        while True:
            import time

            time.sleep(0.5)
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        server.close()
    return 0


def cmd_fetch(args: argparse.Namespace) -> int:
    blob = fetch_model_bytes(_parse_address(args.server), timeout=args.timeout)
    Path(args.output).write_bytes(blob)
    print(f"fetched {len(blob)} bytes into {args.output}")
    return 0


def cmd_adapt(args: argparse.Namespace) -> int:
    schema = default_schema()
    source = load_csv(args.source, schema)
    target = load_csv(args.target, schema)
    names = schema.feature_names
    stats = fit_column_stats(np.vstack([source.features, target.features]), names)
    xs, xt = stats.transform(source.features), stats.transform(target.features)
    cfg = TcaConfig(lam=args.lam, m=args.m)
    mapping = fit_tca(xs, xt, cfg, norm_stats=stats)
    Path(args.mapping).write_bytes(serialize_mapping(mapping))
    zs, zt = transform(mapping, xs), transform(mapping, xt)
    header = ",".join(f"tc{i}" for i in range(zs.shape[1]))
    for path, Z in ((args.mapped_source, zs), (args.mapped_target, zt)):
        if path:
            lines = [header] + [",".join(repr(v) for v in row) for row in Z]
            Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    before = mmd_mapped_form(np.eye(len(names)), xs, xt)
    after = mmd_mapped_form(mapping.W, xs, xt)
    print(f"wrote {args.mapping}; mmd before={before:.6g} after={after:.6g}")
    return 0


def cmd_run_task(args: argparse.Namespace) -> int:
    if bool(args.task) == bool(args.preset):
        raise UsageError("give exactly one of --task or --preset")
    if args.task:
        task = parse_task_file(Path(args.task).read_text(encoding="utf-8"))
        if args.seed is not None:
            task = harness.parse_task_mapping(
                {**harness.task_to_mapping(task), "seed": str(args.seed)}
            )
    else:
        task = preset_task(args.preset, args.seed if args.seed is not None else 0)
    report, artifacts = harness.run_ftca_task_detailed(task)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.csv").write_bytes(render_report(report, "csv"))
    (outdir / "report.json").write_bytes(render_report(report, "json"))
    (outdir / "report.md").write_bytes(render_report(report, "markdown"))
    (outdir / "task.txt").write_text(task_file_text(task), encoding="utf-8")
    feat_names = artifacts.target.schema.feature_names
    (outdir / "histograms.csv").write_bytes(
        export_histograms(
            artifacts.generated_norm,
            artifacts.target_norm,
            artifacts.mapped_source,
            artifacts.mapped_target,
            bins=args.bins,
            feature_names=feat_names,
        )
    )

    if not args.no_figures:
        from . import figures

        figdir = outdir / "figures"
        figdir.mkdir(exist_ok=True)
        figures.feature_shift_figure(
            artifacts.generated_norm,
            artifacts.target_norm,
            artifacts.mapped_source,
            artifacts.mapped_target,
            figdir / "feature_shift.png",
            feature_names=feat_names,
        )
        figures.correlation_heatmap(artifacts.source, figdir / "source_correlation.png")
        figures.prediction_figure(report, figdir / "predictions.png")

    print(render_report(report, "markdown").decode("utf-8"))
    print(f"mmd before mapping: {report.mmd_before:.6g}")
    print(f"mmd after mapping:  {report.mmd_after:.6g}")
    print(f"outputs in {outdir}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    reports = reports_from_json(Path(args.input).read_bytes())
    rendered = render_report(reports, args.format)
    if args.output == "-":
        sys.stdout.write(rendered.decode("utf-8"))
    else:
        Path(args.output).write_bytes(rendered)
        print(f"wrote {args.output}")
    if args.figures_dir:
        from . import figures

        figdir = Path(args.figures_dir)
        figdir.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            figures.prediction_figure(rep, figdir / f"{rep.task}_predictions.png")
        print(f"figures in {figdir}")
    return 0


def cmd_diagnose(args: argparse.Namespace) -> int:
    ds = load_csv(args.input, default_schema())
    corr = pearson_matrix(ds)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = ds.schema.all_names
    lines = ["," + ",".join(names)]
    for name, row in zip(names, corr):
        lines.append(name + "," + ",".join(repr(v) for v in row))
    (outdir / "pearson.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    score_lines = ["label,score,negative_transfer_risk"]
    for label in ds.schema.label_names:
        score = negative_transfer_score(ds, label)
        flagged = score < harness.NEGATIVE_TRANSFER_THRESHOLD
        score_lines.append(f"{label},{score!r},{str(flagged).lower()}")
        marker = "  [negative-transfer risk]" if flagged else ""
        print(f"{label}: score={score:.3f}{marker}")
    (outdir / "scores.csv").write_text("\n".join(score_lines) + "\n", encoding="utf-8")

    if not args.no_figures:
        from . import figures

        figures.correlation_heatmap(ds, outdir / "correlation.png")
    print(f"outputs in {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftca",
        description="Federated transfer component analysis for VNF profiling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write synthetic source/target csv files")
    p.add_argument("--outdir", required=True)
    p.add_argument("--preset", choices=sorted(harness.PRESETS), default=None)
    p.add_argument("--n-source", type=int, default=800, dest="n_source")
    p.add_argument("--n-target", type=int, default=300, dest="n_target")
    p.add_argument("--feature-dim", type=int, default=6, dest="feature_dim")
    p.add_argument("--shift", default="", help="comma-separated per-feature mean shift")
    p.add_argument("--scale", default="", help="comma-separated per-feature scale factors")
    p.add_argument("--label-rule", default="linear",
                   choices=("linear", "piecewise", "saturating"), dest="label_rule")
    p.add_argument("--noise-std", type=float, default=0.05, dest="noise_std")
    p.add_argument("--independent-labels", default="", dest="independent_labels")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-gen", help="train a synthesizer on a csv file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--kind", choices=(STATISTICAL, GAN), default=STATISTICAL)
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--batch-size", type=int, default=64, dest="batch_size")
    p.add_argument("--noise-dim", type=int, default=16, dest="noise_dim")
    p.add_argument("--learning-rate", type=float, default=5e-3, dest="learning_rate")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_gen)

    p = sub.add_parser("serve", help="serve a model file to target nodes")
    p.add_argument("--bind", default="127.0.0.1:7070")
    p.add_argument("--model", required=True)
    p.add_argument("--log", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("fetch", help="fetch a model file from a source node")
    p.add_argument("--server", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("adapt", help="fit the mapping and write mapped csv files")
    p.add_argument("--source", required=True, help="generated-source csv")
    p.add_argument("--target", required=True)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--mapping", required=True, help="output .ftcamodel path")
    p.add_argument("--mapped-source", default=None, dest="mapped_source")
    p.add_argument("--mapped-target", default=None, dest="mapped_target")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("run-task", help="run the full pipeline from a task file or preset")
    p.add_argument("--task", default=None)
    p.add_argument("--preset", choices=sorted(harness.PRESETS), default=None)
    p.add_argument("--outdir", required=True)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--no-figures", action="store_true", dest="no_figures")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run_task)

    p = sub.add_parser("report", help="re-render a saved report.json")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("csv", "json", "markdown"), default="csv")
    p.add_argument("--output", default="-")
    p.add_argument("--figures-dir", default=None, dest="figures_dir")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("diagnose", help="correlation matrix and negative-transfer scores")
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--no-figures", action="store_true", dest="no_figures")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_diagnose)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FtcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
