"""Command-line entry point: ``defectlab <subcommand> ...``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .balancer import DistributionBalancer
from .config import ConfigError, DatasetSpec, ExperimentConfig, load_config, parse_config
from .data import DataError, decode, encode, impute_global, parse_arff, read_dataset, write_arff, write_csv
from .evaluation import (
    boxplot_rows,
    cross_validate,
    report_csv,
    report_markdown,
    summary_markdown,
    timing_csv,
)
from .metrics import wdl
from .pipeline import DefectPipeline
from .stats import ADJUSTMENTS, METHODS, kruskal_wallis, posthoc

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

_METHOD_TITLES = {
    "conover": "Conover",
    "dunn": "Dunn",
    "nemenyi_tukey": "Tukey-Kramer (Nemenyi)",
    "nemenyi_chisq": "Chi-square (Nemenyi)",
}
_ADJ_TITLES = {
    "none": "without p-value adjustment",
    "holm": "adjusted by the Holm FWER method",
    "bh": "adjusted by the Benjamini-Hochberg FDR method",
}


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DEFECTLAB_THREADS", "1")))
    except ValueError:
        raise ConfigError("DEFECTLAB_THREADS must be an integer") from None


def _load(path, fmt=None, class_column=-1):
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    return read_dataset(path, fmt, class_column)


def _class_column(value):
    if value is None:
        return -1
    try:
        return int(value)
    except ValueError:
        return value


def _pipeline_config(args) -> ExperimentConfig:
    """Config from --config when given, else defaults; CLI flags override."""
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config({})
    if args.seed is not None:
        cfg.seed = args.seed
    if args.mode is not None:
        cfg.mode = args.mode
    if args.format is not None:
        cfg.formats = (args.format,)
    if args.out is not None:
        cfg.output_dir = Path(args.out)
    return cfg


# -------------------------------------------------------------------- subcommands


def _evaluate_dataset(spec: DatasetSpec, cfg: ExperimentConfig):
    t0 = time.perf_counter()
    d = _load(spec.path, spec.format, spec.class_column)
    t1 = time.perf_counter()
    if spec.positive_label is not None and spec.positive_label not in d.schema.classes:
        raise ConfigError(
            f"positive label {spec.positive_label!r} is not a class of {spec.path} {list(d.schema.classes)}"
        )
    report = cross_validate(
        d,
        classifier=cfg.make_classifier(),
        balancer=cfg.make_balancer(),
        folds=cfg.folds,
        mode=cfg.mode,
        seed=cfg.seed,
        positive=spec.positive_label,
        stratified=cfg.stratified,
        n_jobs=1,
    )
    t2 = time.perf_counter()
    times = {"load": t1 - t0, "cross_validate": t2 - t1, "balance": report.balance_time}
    return report, times


def _write_reports(cfg: ExperimentConfig, reports: dict, times: dict) -> list[Path]:
    out = cfg.output_dir
    written = []
    for name, rep in reports.items():
        if "csv" in cfg.formats:
            write_atomic(out / f"{name}_report.csv", report_csv(rep))
            write_atomic(out / f"{name}_timing.csv", timing_csv(rep))
            written += [out / f"{name}_report.csv", out / f"{name}_timing.csv"]
        if "md" in cfg.formats:
            write_atomic(out / f"{name}_report.md", report_markdown(name, rep))
            written.append(out / f"{name}_report.md")
    if "md" in cfg.formats:
        write_atomic(out / "summary.md", summary_markdown(reports))
        written.append(out / "summary.md")
    write_atomic(out / "boxplot_data.csv", boxplot_rows(reports))
    written.append(out / "boxplot_data.csv")
    return written


def cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("run needs --config")
    cfg = _pipeline_config(args)
    out = cfg.output_dir
    if args.check:
        return _check_manifest(out / "manifest.json")
    if cfg.seed is None:
        raise ConfigError("no seed: set cv.seed in the config or pass --seed")
    if not cfg.datasets:
        raise ConfigError("config lists no datasets")
    t0 = time.perf_counter()
    workers = min(_threads(), len(cfg.datasets))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda s: _evaluate_dataset(s, cfg), cfg.datasets))
    else:
        results = [_evaluate_dataset(s, cfg) for s in cfg.datasets]
    reports = {s.name: r for s, (r, _) in zip(cfg.datasets, results)}
    times = {s.name: t for s, (_, t) in zip(cfg.datasets, results)}
    written = _write_reports(cfg, reports, times)
    manifest = {
        "toolkit": "defectlab",
        "version": __version__,
        "config": cfg.echo(),
        "seeds": {"master": cfg.seed},
        "stage_times": {**times, "total": time.perf_counter() - t0},
        "artifacts": {p.relative_to(out).as_posix(): _sha256(p) for p in written},
    }
    write_atomic(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for name, rep in reports.items():
        a = rep.aggregate
        auc_s = "n/a" if a.auc is None else f"{a.auc:.4f}"
        print(f"{name}: accuracy={a.accuracy:.4f} f_score={a.f_score:.4f} auc={auc_s} balance={a.balance:.4f}")
    return EXIT_OK


def _check_manifest(path: Path) -> int:
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    bad = []
    for rel, digest in manifest.get("artifacts", {}).items():
        p = path.parent / rel
        if not p.exists() or _sha256(p) != digest:
            bad.append(rel)
    if bad:
        print(f"error: manifest check failed for {', '.join(bad)}", file=sys.stderr)
        return EXIT_DATA
    print(f"ok: {len(manifest.get('artifacts', {}))} artifacts match {path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _pipeline_config(args)
    if cfg.seed is None:
        cfg.seed = 0
    if args.folds is not None:
        cfg.folds = args.folds
    name = Path(args.input).stem
    spec = DatasetSpec(Path(args.input), name, None, _class_column(args.class_column), args.positive)
    report, times = _evaluate_dataset(spec, cfg)
    if args.out is not None:
        _write_reports(cfg, {name: report}, {name: times})
    fmt = args.format or "md"
    sys.stdout.write(report_csv(report) if fmt == "csv" else report_markdown(name, report))
    return EXIT_OK


def _balance_params(args, cfg: ExperimentConfig) -> dict:
    params = dict(cfg.balance or {"b": 30})
    if args.b is not None:
        params["b"] = args.b if args.b == "max" else int(args.b)
    if args.family is not None:
        params["family"] = args.family
    return params


def cmd_balance(args) -> int:
    cfg = _pipeline_config(args)
    d = _load(args.input, None, _class_column(args.class_column))
    enc = encode(impute_global(d))
    params = _balance_params(args, cfg)
    sampler = DistributionBalancer(
        **params,
        onehot_groups=enc.onehot_groups,
        binary_columns=enc.binary_columns,
        random_state=cfg.seed or 0,
    )
    X, y = sampler.fit_resample(enc.matrix, enc.labels)
    out = decode(enc.with_rows(X, y), d.schema)
    target = Path(args.output)
    text = write_csv(out) if target.suffix.lower() == ".csv" else write_arff(out)
    write_atomic(target, text)
    counts = ", ".join(f"{k}={v}" for k, v in out.class_counts().items())
    print(f"wrote {out.n_rows} rows to {target} ({counts})")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _pipeline_config(args)
    d = _load(args.input, None, _class_column(args.class_column))
    balancer = None if args.no_balance else DistributionBalancer(**_balance_params(args, cfg))
    pipe = DefectPipeline(cfg.make_classifier(), balancer, random_state=cfg.seed or 0).fit(d)
    write_atomic(Path(args.model), pipe.to_json())
    net = pipe.classifier_.network_
    print(f"wrote model with {net.n_centers} hidden unit(s) to {args.model}")
    return EXIT_OK


def cmd_predict(args) -> int:
    path = Path(args.model)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    try:
        pipe = DefectPipeline.from_json(path.read_text(encoding="utf-8"))
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: {exc}") from None
    d = _load(args.input, None, _class_column(args.class_column))
    scores = pipe.decision_function(d)
    pred = pipe.predict(d)
    classes = pipe.schema_.classes
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "actual", "predicted"] + [f"score_{c}" for c in classes])
    for i in range(d.n_rows):
        w.writerow(
            [i, d.schema.classes[d.labels[i]], classes[pred[i]]]
            + ["" if not np.isfinite(s) else repr(float(s)) for s in scores[i]]
        )
    if args.out:
        write_atomic(Path(args.out) if Path(args.out).suffix else Path(args.out) / "predictions.csv", buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def read_results(path) -> dict[str, dict[str, float]]:
    """``method -> {dataset: value}`` from a (method, dataset, value) CSV.

    Empty values are skipped. Methods keep their order of first appearance.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"results file not found: {path}")
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    if not rows:
        raise DataError(f"{path}: empty results file")
    header = [h.strip().lower() for h in rows[0]]
    try:
        im, ids, iv = header.index("method"), header.index("dataset"), header.index("value")
    except ValueError:
        raise DataError(f"{path}: header must contain method, dataset, value") from None
    out: dict[str, dict[str, float]] = {}
    for lineno, r in enumerate(rows[1:], start=2):
        if not r or not any(c.strip() for c in r):
            continue
        if len(r) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} fields")
        v = r[iv].strip()
        if v in ("", "-", "?"):
            out.setdefault(r[im].strip(), {})
            continue
        try:
            out.setdefault(r[im].strip(), {})[r[ids].strip()] = float(v)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: value {v!r} is not a number") from None
    return out


def _lower_triangle_md(title: str, names, P) -> str:
    lines = [title, "", "| | " + " | ".join(names[:-1]) + " |", "|---" * len(names) + "|"]
    for i in range(1, len(names)):
        cells = [f"{P[i, j]:.6f}" for j in range(i)] + [""] * (len(names) - 1 - i)
        lines.append(f"| {names[i]} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    results = read_results(args.input)
    names = list(results)
    if len(names) < 2:
        raise DataError("compare needs at least two methods")
    groups = [list(results[n].values()) for n in names]
    if any(not g for g in groups):
        raise DataError("every method needs at least one value")
    omnibus = kruskal_wallis(groups)
    header = f"Kruskal-Wallis: {omnibus.statistic:.6f}, df={omnibus.df}, p={omnibus.p_value:.6f}"
    md = [f"{header}\n"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "adjustment", "row", "column", "p_value"])
    for method in METHODS:
        for adj in ADJUSTMENTS:
            P = posthoc(groups, method, adj, names)
            for row, col, p in P.lower_triangle():
                w.writerow([method, adj, row, col, f"{p:.6f}"])
            md.append(_lower_triangle_md(f"{_METHOD_TITLES[method]} p-values, {_ADJ_TITLES[adj]}:", names, P.p_values))
    md_text = "\n".join(md)
    fmt = args.format or "md"
    if args.out:
        out = Path(args.out)
        write_atomic(out / "omnibus.csv", f"statistic,df,p_value\n{omnibus.statistic:.6f},{omnibus.df},{omnibus.p_value:.6f}\n")
        write_atomic(out / "posthoc.csv", buf.getvalue())
        write_atomic(out / "posthoc.md", md_text)
        print(header)
    else:
        sys.stdout.write(header + "\n" + buf.getvalue() if fmt == "csv" else md_text)
    return EXIT_OK


def cmd_wdl(args) -> int:
    results = read_results(args.input)
    names = list(results)
    if len(names) < 2:
        raise DataError("wdl needs at least two methods")
    table = {}
    for a in names:
        for b in names:
            if a == b:
                continue
            common = [k for k in results[a] if k in results[b]]
            table[a, b] = wdl([results[a][k] for k in common], [results[b][k] for k in common], args.epsilon)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "versus", "wins", "draws", "losses"])
        for (a, b), rec in table.items():
            w.writerow([a, b, rec.wins, rec.draws, rec.losses])
        text = buf.getvalue()
    else:
        lines = ["| Algorithm | " + " | ".join(names) + " |", "|---" * (len(names) + 1) + "|"]
        for a in names:
            cells = ["----" if a == b else str(table[a, b]) for b in names]
            lines.append(f"| {a} | " + " | ".join(cells) + " |")
        text = "\n".join(lines) + "\n"
    if args.out:
        write_atomic(Path(args.out) / f"wdl.{args.format or 'md'}", text)
    sys.stdout.write(text)
    return EXIT_OK


# ------------------------------------------------------------------------ parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--mode", choices=("paper", "leakfree"), help="cross-validation protocol")
    common.add_argument("--format", choices=("csv", "md"), help="report format")

    parser = argparse.ArgumentParser(prog="defectlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"defectlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run a configured experiment")
    p.add_argument("--check", action="store_true", help="verify artifact hashes against the manifest")
    p.set_defaults(func=cmd_run)

    def dataset_args(p):
        p.add_argument("--class-column", help="CSV class column name or index (default: last)")

    def balance_args(p):
        p.add_argument("--b", help="rows per class (integer or 'max')")
        p.add_argument("--family", choices=("gaussian", "poisson"))

    p = sub.add_parser("balance", parents=[common], help="write a DBB-regenerated dataset")
    p.add_argument("input")
    p.add_argument("output")
    dataset_args(p)
    balance_args(p)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("train", parents=[common], help="train and save a model")
    p.add_argument("input")
    p.add_argument("model")
    p.add_argument("--no-balance", action="store_true")
    dataset_args(p)
    balance_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="score a dataset with a saved model")
    p.add_argument("model")
    p.add_argument("input")
    dataset_args(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="cross-validate one dataset")
    p.add_argument("input")
    p.add_argument("--folds", type=int)
    p.add_argument("--positive", help="positive (defective) class label")
    dataset_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common], help="rank tests over a results CSV")
    p.add_argument("input", help="CSV with method,dataset,value columns")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("wdl", parents=[common], help="win/draw/loss matrix over a results CSV")
    p.add_argument("input", help="CSV with method,dataset,value columns")
    p.add_argument("--epsilon", type=float, default=1e-9)
    p.set_defaults(func=cmd_wdl)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
