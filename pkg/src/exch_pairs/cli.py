"""Command-line entry point: ``exch-pairs <command> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import reference
from .data_io import (MANIFEST, load_benchmark, load_dataset, load_report, benchmark_sizes,
                      save_dataset, save_json, save_report)
from .errors import ExchPairsError, InvalidArgumentError
from .evaluation import (evaluate_benchmark, evaluate_dataset, items_from_benchmark,
                         items_from_dataset, screen_items)
from .generator import (HyperParams, assemble_dataset, fit_size_model, noisify_dataset,
                        parse_cells)
from .methods import METHODS
from .metrics import INDEPENDENCE_THRESHOLD
from .weights import WeightProblem, distance_report, fit_weights, loo_cross_validation

log = logging.getLogger("exch_pairs")


class UsageError(Exception):
    pass


def _methods(arg: str) -> list[str]:
    names = [m.strip() for m in arg.split(",") if m.strip()]
    canon = {k.lower(): k for k in METHODS}
    bad = [m for m in names if m.lower() not in canon]
    if bad or not names:
        raise UsageError(f"unknown method(s) {bad}; choose from {sorted(METHODS)}")
    return [canon[m.lower()] for m in names]


def _is_dataset(path: Path) -> bool:
    return (path / MANIFEST).is_file()


def _emit(args, text: str) -> None:
    if not args.quiet:
        print(text)


# --- commands ----------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.per_cell < 2 or args.per_cell % 2:
        raise UsageError(f"--per-cell must be a positive even number, got {args.per_cell}")
    try:
        cells = parse_cells(args.cells)
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from exc
    size_model = None
    if args.sizes_from:
        size_model = fit_size_model(benchmark_sizes(load_benchmark(args.sizes_from)))
    hyper = HyperParams(max_K=args.max_k, max_o=args.max_o, P=args.momentum_p,
                        gamma_m=args.gamma_m, gamma_v=args.gamma_v)
    ds = assemble_dataset(cells, args.per_cell, args.seed, sigma_x=args.sigma_x,
                          sigma_y=args.sigma_y, n_samples=args.n_samples,
                          size_model=size_model, hyper=hyper)
    ds.settings["command"] = _effective(args)
    out = save_dataset(ds, args.out)
    log.info("wrote %d examples to %s", len(ds.examples), out)
    _emit(args, str(out))
    return 0


def cmd_noisify(args) -> int:
    ds = load_dataset(args.data)
    noisy = noisify_dataset(ds, args.noise_add, args.noise_mult, args.seed)
    noisy.settings["command"] = _effective(args)
    _emit(args, str(save_dataset(noisy, args.out)))
    return 0


def _load_items(path: Path):
    if _is_dataset(path):
        return items_from_dataset(load_dataset(path))
    return items_from_benchmark(load_benchmark(path))


def cmd_evaluate(args) -> int:
    methods = _methods(args.methods)
    path = Path(args.data)
    kw = dict(screen=args.screen, threshold=args.threshold, config=_effective(args))
    if _is_dataset(path):
        report, scores = evaluate_dataset(load_dataset(path), methods, str(path), **kw)
        ids = [f"ex{i:05d}" for i in range(report.n_items)]
    else:
        pairs = load_benchmark(path)
        report, scores = evaluate_benchmark(pairs, methods, str(path), **kw)
        ids = [p.id for p in pairs if not p.skipped]
    save_report(report, args.out)
    if args.scores:
        with open(args.scores, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", *methods])
            for i in sorted(range(len(ids)), key=ids.__getitem__):
                w.writerow([ids[i], *(f"{scores[m][i]:.12g}" for m in methods)])
    for m in methods:
        r = report.metrics[m]
        _emit(args, f"{m}\tAUROC {r['auroc']:.4f} ({r['weighted_auroc']:.4f})\t"
                    f"accuracy {r['accuracy']:.4f} ({r['weighted_accuracy']:.4f})")
    if report.screened is not None:
        _emit(args, f"screened as independent (D < {args.threshold}): {len(report.screened)}")
        for pid in report.screened:
            _emit(args, f"  {pid}")
    return 0


def cmd_screen(args) -> int:
    rows = screen_items(_load_items(Path(args.data)), args.threshold)
    lines = ["id,hoeffding_d,independent"] + [f"{i},{d:.12g},{int(f)}" for i, d, f in rows]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
        _write_config(args, args.out)
    if args.out:
        _emit(args, f"{sum(f for _, _, f in rows)} of {len(rows)} deemed independent")
    else:
        print("\n".join(lines))
    return 0


def _reference_vector(source: str, methods: list[str], metric: str) -> np.ndarray:
    if source == "published":
        return np.array(reference.lookup(reference.TUEBINGEN, metric, methods))
    d = json.loads(Path(source).read_text())
    if "metrics" in d:
        return np.array([d["metrics"][m][metric] for m in methods])
    return np.array([d[m] for m in methods])


def cmd_fit_weights(args) -> int:
    rep = load_report(args.report)
    if rep.kind != "dataset" or args.metric not in rep.per_cell:
        raise ExchPairsError(f"{args.report}: not a per-cell dataset report")
    A = np.array(rep.per_cell[args.metric])
    try:
        b = _reference_vector(args.reference, rep.methods, args.metric)
    except (KeyError, OSError, ValueError) as exc:
        raise ExchPairsError(f"reference {args.reference}: {exc}") from exc
    problem = WeightProblem(A, b, args.reg)
    fit = fit_weights(problem, seed=args.seed)
    out = {"methods": rep.methods, "cells": rep.cells, "metric": args.metric,
           "A": A.tolist(), "b": b.tolist(), "reg": args.reg, "w": fit.w.tolist(),
           "objective": fit.objective, "config": _effective(args)}
    l1, l2 = distance_report(A @ fit.w, b)
    out["in_sample"] = {"l1": l1, "l2": l2}
    if args.loo and len(rep.methods) >= 2:
        loo = loo_cross_validation(problem, seed=args.seed)
        out["loo"] = {"l1": loo.l1, "l2": loo.l2, "abs_errors": loo.abs_errors.tolist()}
    save_json(out, args.out)
    _emit(args, f"objective {fit.objective:.6g}; in-sample l1 {l1:.4f} l2 {l2:.4f}")
    return 0


def cmd_train(args) -> int:
    from .synthnn import TrainConfig, save_checkpoint, train
    ds = load_dataset(args.data)
    cfg = TrainConfig(alpha=args.alpha, lam=args.lam, batch=args.batch, epochs=args.epochs,
                      blur_sigma=args.blur, seed=args.seed, scale=args.scale,
                      val_fraction=args.val_fraction)
    params, history = train(ds.examples, cfg, progress=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "model.npz", params, cfg.arch, cfg)
    history.to_csv(out / "history.csv")
    save_json({"command": _effective(args), "config": asdict(cfg)}, out / "config.json")
    last = history.rows[-1]
    _emit(args, f"val AUROC {last.get('val_auroc', float('nan')):.4f} "
                f"accuracy {last.get('val_accuracy', float('nan')):.4f}")
    return 0


def cmd_score(args) -> int:
    from .metrics import auroc_arrays
    from .synthnn import asymmetry_score, load_checkpoint
    ckpt = Path(args.checkpoint)
    if ckpt.is_dir():
        ckpt = ckpt / "model.npz"
    params, arch, _ = load_checkpoint(ckpt)
    items = _load_items(Path(args.data))
    rows = []
    for it in items:
        try:
            s = asymmetry_score(params, arch, it.xs, it.ys)
        except ExchPairsError as exc:
            log.warning("%s: %s", it.id, exc)
            continue
        rows.append((it.id, s, "XtoY" if s >= 0 else "YtoX", it.label.value, it.weight))
    rows.sort(key=lambda r: r[0])
    _write_config(args, args.out)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "score", "decision", "label", "weight"])
        for r in rows:
            w.writerow([r[0], f"{r[1]:.12g}", r[2], r[3], f"{r[4]:.12g}"])
    pos = np.array([r[3] == "XtoY" for r in rows])
    if pos.any() and (~pos).any():
        s = np.array([r[1] for r in rows])
        wts = np.array([r[4] for r in rows])
        _emit(args, f"AUROC {auroc_arrays(s, pos):.4f} (weighted {auroc_arrays(s, pos, wts):.4f})"
                    f"  accuracy {np.mean((s >= 0) == pos):.4f}")
    return 0


def cmd_report(args) -> int:
    rep = load_report(args.report)
    lines = [f"{rep.kind} report: {rep.source} ({rep.n_items} items)"]
    for m in rep.methods:
        r = rep.metrics[m]
        lines.append(f"{m:8s} AUROC {r['auroc']:.4f} weighted {r['weighted_auroc']:.4f}  "
                     f"accuracy {r['accuracy']:.4f} weighted {r['weighted_accuracy']:.4f}")
    if args.weights:
        wj = json.loads(Path(args.weights).read_text())
        w = np.array(wj["w"])
        for metric in ("auroc", "accuracy"):
            approx = np.array(rep.per_cell[metric]) @ w
            lines.append(f"cell-weighted {metric}: " + ", ".join(
                f"{m} {v:.4f}" for m, v in zip(rep.methods, approx)))
    if args.reference:
        for metric in ("auroc", "accuracy"):
            ours = [rep.metrics[m][metric] for m in rep.methods]
            ref = _reference_vector(args.reference, rep.methods, metric)
            l1, l2 = distance_report(ours, ref)
            lines.append(f"distance to reference ({metric}): l1 {l1:.4f}  l2 {l2:.4f}")
    print("\n".join(lines))
    if args.plots:
        _plots(rep, Path(args.plots), args.scores)
    return 0


def _read_scores(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = [c for c in rows[0] if c not in ("id", "decision", "label", "weight")] if rows else []
    return {c: np.array([float(r[c]) for r in rows]) for c in cols}


def _plots(rep, outdir: Path, scores_csv=None) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 3))
    xs = np.arange(len(rep.methods))
    ax.bar(xs - 0.2, [rep.metrics[m]["auroc"] for m in rep.methods], 0.4, label="AUROC")
    ax.bar(xs + 0.2, [rep.metrics[m]["accuracy"] for m in rep.methods], 0.4, label="accuracy")
    ax.set_xticks(xs, rep.methods)
    ax.axhline(0.5, color="k", lw=0.5)
    ax.legend()
    fig.tight_layout()
    fig.savefig(outdir / "metrics.png", dpi=120)
    plt.close(fig)
    if rep.per_cell:
        fig, ax = plt.subplots(figsize=(10, 1 + 0.4 * len(rep.methods)))
        im = ax.imshow(np.array(rep.per_cell["auroc"]), aspect="auto", vmin=0, vmax=1,
                       cmap="coolwarm")
        ax.set_yticks(range(len(rep.methods)), rep.methods)
        ax.set_xlabel("cell")
        fig.colorbar(im, ax=ax, label="AUROC")
        fig.tight_layout()
        fig.savefig(outdir / "per_cell_auroc.png", dpi=120)
        plt.close(fig)
    if scores_csv:
        table = _read_scores(scores_csv)
        fig, axes = plt.subplots(1, len(table), figsize=(3 * len(table), 2.5), squeeze=False)
        for ax, (name, vals) in zip(axes[0], table.items()):
            ax.hist(vals, bins=30)
            ax.axvline(0, color="k", lw=0.5)
            ax.set_title(name)
        fig.tight_layout()
        fig.savefig(outdir / "score_distributions.png", dpi=120)
        plt.close(fig)


# --- parser ----------------------------------------------------------------------

def _effective(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _write_config(args, out) -> None:
    save_json({"command": _effective(args)}, Path(out).with_suffix(".config.json"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="exch-pairs", description=__doc__.splitlines()[0])
    p.add_argument("--quiet", action="store_true", help="print only data on stdout")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a balanced synthetic dataset")
    g.add_argument("--cells", default="all", help="'all' or comma list of mechanisms")
    g.add_argument("--per-cell", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sigma-x", type=float, default=0.01)
    g.add_argument("--sigma-y", type=float, default=0.01)
    g.add_argument("--n-samples", type=int, default=500)
    g.add_argument("--sizes-from", help="benchmark dir to fit the sample-size mixture on")
    g.add_argument("--max-k", type=int, default=6)
    g.add_argument("--max-o", type=int, default=5)
    g.add_argument("--momentum-p", type=float, default=2.0)
    g.add_argument("--gamma-m", type=float, default=3.0)
    g.add_argument("--gamma-v", type=float, default=1.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    n = sub.add_parser("noisify", help="add additive and multiplicative noise to a dataset")
    n.add_argument("--data", required=True)
    n.add_argument("--noise-add", type=float, default=0.1)
    n.add_argument("--noise-mult", type=float, default=0.1)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--out", required=True)
    n.set_defaults(func=cmd_noisify)

    e = sub.add_parser("evaluate", help="run direction scorers on a dataset or benchmark")
    e.add_argument("--data", required=True)
    e.add_argument("--methods", default=",".join(METHODS))
    e.add_argument("--screen", action="store_true", help="list pairs deemed independent")
    e.add_argument("--threshold", type=float, default=INDEPENDENCE_THRESHOLD)
    e.add_argument("--scores", help="optional per-item score CSV")
    e.add_argument("--out", default="report.json")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("screen", help="Hoeffding's D independence screen")
    s.add_argument("--data", required=True)
    s.add_argument("--threshold", type=float, default=INDEPENDENCE_THRESHOLD)
    s.add_argument("--out")
    s.set_defaults(func=cmd_screen)

    f = sub.add_parser("fit-weights", help="fit per-cell weights to a reference benchmark")
    f.add_argument("--report", required=True, help="dataset report.json from evaluate")
    f.add_argument("--reference", default="published",
                   help="'published' (bundled Tuebingen values), a benchmark "
                        "report.json or a {method: value} JSON")
    f.add_argument("--metric", choices=("auroc", "accuracy"), default="auroc")
    f.add_argument("--reg", type=float, default=1.0)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--loo", action="store_true", help="also report leave-one-out distances")
    f.add_argument("--out", default="weights.json")
    f.set_defaults(func=cmd_fit_weights)

    t = sub.add_parser("train", help="train the image classifier on a generated dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--scale", choices=("full", "desk"), default="desk")
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--batch", type=int, default=32)
    t.add_argument("--alpha", type=float, default=1e-4)
    t.add_argument("--lam", type=float, default=0.01)
    t.add_argument("--blur", type=float, default=0.5)
    t.add_argument("--val-fraction", type=float, default=0.2)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="output directory")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("score", help="asymmetry scores from a trained checkpoint")
    c.add_argument("--checkpoint", required=True, help="model.npz or a train output directory")
    c.add_argument("--data", required=True)
    c.add_argument("--out", default="scores.csv")
    c.set_defaults(func=cmd_score)

    r = sub.add_parser("report", help="summarize a report, optionally with plots")
    r.add_argument("--report", required=True)
    r.add_argument("--weights")
    r.add_argument("--reference")
    r.add_argument("--plots", help="directory for PNG figures")
    r.add_argument("--scores", help="score CSV from evaluate/score, plotted as histograms")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else
                        logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"exch-pairs: error: {exc}", file=sys.stderr)
        return 2
    except (ExchPairsError, OSError, ValueError) as exc:
        print(f"exch-pairs {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
