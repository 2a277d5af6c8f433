"""Batch command-line front end.

Subcommands are selected with --command: train a federated model from a
CSV or a generated Gaussian mixture, replay removal streams against a
checkpoint (unlearn), time unlearning against full retraining (bench),
or run the Monte-Carlo experiment suites. Every run writes a manifest
echoing the fully resolved configuration; re-running from that manifest
(--config manifest.json) reproduces the run byte for byte.
"""

from __future__ import annotations

import argparse
import csv as csv_mod
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import kernels
from .errors import DataError, FedkmeansError
from .evaluation import (
    GaussianMixtureSpec,
    PartitionSpec,
    adversarial_provider,
    batch_removal_trend,
    benchmark_unlearning,
    gamma_sweep,
    gen_gaussian,
    loss_ratio,
    partition_noniid,
    random_request_stream,
    retrain_probability_experiment,
)
from .federation import (
    RemovalRequest,
    TrainConfig,
    federated_train,
    load_checkpoint,
    save_checkpoint,
)
from .grid import fit_scale


def load_csv(path, label_column: bool | None = None):
    """Load a rectangular numeric CSV.

    An optional single header row is detected when every cell of the
    first row is non-numeric. The trailing column is treated as integer
    labels when the header names it "label" (or ``label_column=True``
    forces it). NaN/Inf and non-numeric cells are rejected with the
    offending row number (1-based, header included).
    """
    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        for row in csv_mod.reader(fh):
            if row and any(cell.strip() for cell in row):
                rows.append([cell.strip() for cell in row])
    if not rows:
        raise DataError(f"{path}: empty file")

    def try_floats(cells):
        try:
            return [float(c) for c in cells]
        except ValueError:
            return None

    header = None
    start = 0
    first = try_floats(rows[0])
    if first is None:
        if all(try_floats([c]) is None for c in rows[0]):
            header = rows[0]
            start = 1
        else:
            bad = next(c for c in rows[0] if try_floats([c]) is None)
            raise DataError(f"{path}: row 1: non-numeric cell {bad!r}")
    width = len(rows[start]) if start < len(rows) else len(rows[0])
    data = []
    for rno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise DataError(f"{path}: row {rno}: expected {width} cells, got {len(row)}")
        vals = try_floats(row)
        if vals is None:
            bad = next(c for c in row if try_floats([c]) is None)
            raise DataError(f"{path}: row {rno}: non-numeric cell {bad!r}")
        if not all(np.isfinite(vals)):
            raise DataError(f"{path}: row {rno}: non-finite value")
        data.append(vals)
    if not data:
        raise DataError(f"{path}: no data rows")
    matrix = np.asarray(data, dtype=np.float64)
    want_labels = label_column is True or (
        label_column is None and header is not None
        and header[-1].lower() == "label")
    labels = None
    if want_labels:
        if matrix.shape[1] < 2:
            raise DataError(f"{path}: label column requires at least 2 columns")
        lab = matrix[:, -1]
        if not np.all(lab == np.rint(lab)):
            bad = int(np.flatnonzero(lab != np.rint(lab))[0])
            raise DataError(f"{path}: row {start + bad + 1}: non-integer label")
        labels = lab.astype(np.int64)
        matrix = matrix[:, :-1]
    return matrix, labels


def _parse_gaussian(text: str) -> GaussianMixtureSpec:
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError("--gaussian expects K:d:count:var")
    return GaussianMixtureSpec(k=int(parts[0]), dim=int(parts[1]),
                               per_cluster=int(parts[2]), variance=float(parts[3]))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fedkmeans",
        description="Secure federated K-means with exact unlearning")
    ap.add_argument("--command", required=True,
                    choices=["train", "unlearn", "bench", "experiment"])
    ap.add_argument("--config", help="key=value file or a manifest JSON; "
                                     "explicit flags win")
    ap.add_argument("--data", help="CSV dataset path")
    ap.add_argument("--label-column", action="store_true",
                    help="treat the trailing CSV column as labels")
    ap.add_argument("--gaussian", help="generate data: K:d:count:var")
    ap.add_argument("--clients", type=int, default=10)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--kprime", type=int, default=0,
                    help="max true clusters per client (0: iid split)")
    ap.add_argument("--gamma", default="auto",
                    help="quantization step, or 'auto' for 1/sqrt(n)")
    ap.add_argument("--seed", type=int, default=0)
    sec = ap.add_mutually_exclusive_group()
    sec.add_argument("--secure", dest="secure", action="store_true", default=True)
    sec.add_argument("--plaintext", dest="secure", action="store_false")
    ap.add_argument("--gen-mode", choices=["weighted", "uniform"], default="uniform")
    ap.add_argument("--decrement-counts", action="store_true")
    ap.add_argument("--removals", type=int, default=10,
                    help="number of unlearning rounds")
    ap.add_argument("--adversarial", action="store_true")
    ap.add_argument("--batch-size", type=int, default=1)
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--checkpoint", help="model checkpoint to unlearn/bench")
    ap.add_argument("--requests", help="JSON file with a recorded request stream")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--reference-runs", type=int, default=10)
    ap.add_argument("--baseline-samples", type=int, default=5)
    ap.add_argument("--experiment-name",
                    choices=["retrain_prob", "gamma_sweep", "batch_removal"])
    ap.add_argument("--trials", type=int, default=10000)
    ap.add_argument("--n", type=int, default=100, help="experiment dataset size")
    ap.add_argument("--no-loss", action="store_true",
                    help="skip loss-ratio tracking during unlearn/bench")
    return ap


_CONFIG_KEYS = {
    "command": str, "data": str, "gaussian": str, "clients": int, "k": int,
    "kprime": int, "gamma": str, "seed": int, "secure": bool, "gen_mode": str,
    "decrement_counts": bool, "removals": int, "adversarial": bool,
    "batch_size": int, "out": str, "checkpoint": str, "requests": str,
    "workers": int, "reference_runs": int, "baseline_samples": int,
    "experiment_name": str, "trials": int, "n": int, "no_loss": bool,
    "label_column": bool,
}


def _apply_config_file(args: argparse.Namespace, path: str,
                       explicit: set[str]) -> None:
    """Merge a key=value file or manifest JSON under explicit flags."""
    text = Path(path).read_text()
    values: dict = {}
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        values = doc.get("resolved", doc)
    else:
        for lno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}: line {lno}: expected key=value")
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
    for key, val in values.items():
        if key not in _CONFIG_KEYS or key in explicit:
            continue
        typ = _CONFIG_KEYS[key]
        if typ is bool and isinstance(val, str):
            val = val.lower() in ("1", "true", "yes", "on")
        elif val is not None:
            val = typ(val)
        setattr(args, key, val)


def _explicit_flags(argv: list[str]) -> set[str]:
    out = set()
    for tok in argv:
        if tok.startswith("--"):
            name = tok[2:].split("=")[0].replace("-", "_")
            if name == "plaintext":
                name = "secure"
            out.add(name)
    return out


def _train_config(args) -> TrainConfig:
    gamma = None if str(args.gamma).lower() == "auto" else float(args.gamma)
    return TrainConfig(
        k=args.k, gamma=gamma, secure=args.secure, gen_mode=args.gen_mode,
        decrement_counts=args.decrement_counts, master_seed=args.seed,
        workers=args.workers,
    )


def _prepare_clients(args):
    """Load or generate data, scale, and split across clients."""
    if args.data and args.gaussian:
        raise DataError("pass either --data or --gaussian, not both")
    if args.gaussian:
        spec = _parse_gaussian(args.gaussian)
        spec = GaussianMixtureSpec(k=spec.k, dim=spec.dim,
                                   per_cluster=spec.per_cluster,
                                   variance=spec.variance, seed=args.seed)
        points, labels, _ = gen_gaussian(spec)
    elif args.data:
        points, labels = load_csv(args.data, label_column=args.label_column or None)
    else:
        raise DataError("train needs --data or --gaussian")
    transform = fit_scale(points)
    scaled = transform.apply(points)
    if labels is not None:
        k_global = int(labels.max()) + 1
        kp = args.kprime if args.kprime >= 1 else k_global
        spec = PartitionSpec(num_clients=args.clients, k_prime=kp, seed=args.seed)
        cp, ci = partition_noniid(scaled, labels, k_global, spec)
    else:
        from .rng import DATAGEN, derive_generator
        rng = derive_generator(args.seed, DATAGEN, 3)
        owner = rng.integers(0, args.clients, size=scaled.shape[0])
        cp = [scaled[owner == c] for c in range(args.clients)]
        ci = [np.flatnonzero(owner == c).astype(np.int64) for c in range(args.clients)]
    return cp, ci, transform


def _write_manifest(args, outdir: Path, derived: dict) -> None:
    resolved = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    doc = {"resolved": resolved,
           "derived": dict(derived, backend=kernels.BACKEND, version=__version__)}
    (outdir / "manifest.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv_mod.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                        for c in columns])


# metrics.csv stays byte-identical across reruns; wall-clock goes to timings.csv
_ROUND_COLUMNS = [
    "round", "kind", "client_id", "removed_points", "removed_clients",
    "retrained", "server_skipped", "server_rng_draws", "loss_ratio",
]
_TIMING_COLUMNS = [
    "round", "client_seconds", "server_seconds", "round_seconds",
    "accum_seconds", "retrain_seconds_est", "accum_retrain_seconds",
]


def _cmd_train(args, outdir: Path) -> int:
    cp, ci, transform = _prepare_clients(args)
    cfg = _train_config(args)
    model = federated_train(cp, ci, cfg, scale=transform)
    save_checkpoint(model, outdir / "checkpoint.json")
    if args.no_loss:
        ratio = float("nan")
    else:
        ratio, _ = loss_ratio(model, args.reference_runs, seed=args.seed)
    row = {
        "n": model.total_points(), "d": model.grid.dim, "k": cfg.k,
        "clients": model.num_clients, "gamma": model.grid.gamma,
        "bins_per_dim": model.grid.bins_per_dim,
        "total_bins": model.grid.total_bins,
        "modulus": model.modulus if model.modulus else 0,
        "loss_ratio": ratio,
    }
    _write_csv(outdir / "metrics.csv", [row], list(row))
    _write_csv(outdir / "timings.csv",
               [{"train_seconds": model.last_timing.round_seconds}],
               ["train_seconds"])
    _write_manifest(args, outdir, derived={
        "gamma": model.grid.gamma, "bins_per_dim": model.grid.bins_per_dim,
        "total_bins": str(model.grid.total_bins),
        "modulus": str(model.modulus) if model.modulus else None,
        "syndrome_len": model.syndrome_len,
    })
    print(f"trained {model.num_clients} clients, n={model.total_points()}, "
          f"loss_ratio={ratio:.4f}" if not args.no_loss else "trained")
    return 0


def _load_requests(path: str) -> list[RemovalRequest]:
    doc = json.loads(Path(path).read_text())
    out = []
    for item in doc:
        out.append(RemovalRequest(
            kind=item["kind"], client_id=item.get("client_id"),
            point_ids=tuple(item.get("point_ids", ())),
            client_ids=tuple(item.get("client_ids", ()))))
    return out


def _dump_requests(reqs: list[RemovalRequest], path: Path) -> None:
    doc = [{"kind": r.kind, "client_id": r.client_id,
            "point_ids": list(r.point_ids), "client_ids": list(r.client_ids)}
           for r in reqs]
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _cmd_unlearn(args, outdir: Path, baseline_samples: int) -> int:
    if not args.checkpoint:
        raise DataError("unlearn/bench need --checkpoint")
    model = load_checkpoint(args.checkpoint)
    kwargs = dict(baseline_samples=baseline_samples,
                  warmup_rounds=3 if baseline_samples else 0,
                  reference_runs=args.reference_runs, seed=args.seed,
                  track_loss=not args.no_loss)
    recorded = None
    if args.requests:
        recorded = _load_requests(args.requests)
        result = benchmark_unlearning(model, requests=recorded, **kwargs)
    elif args.adversarial:
        result = benchmark_unlearning(model, provider=adversarial_provider(args.batch_size),
                                      rounds=args.removals, **kwargs)
    else:
        recorded = random_request_stream(model, args.removals, args.seed,
                                         batch_size=args.batch_size)
        result = benchmark_unlearning(model, requests=recorded, **kwargs)
    if recorded is not None:
        _dump_requests(recorded, outdir / "requests.json")
    _write_csv(outdir / "metrics.csv", result["rows"], _ROUND_COLUMNS)
    _write_csv(outdir / "timings.csv", result["rows"], _TIMING_COLUMNS)
    save_checkpoint(model, outdir / "checkpoint.json")
    summary = {k: result[k] for k in ("initial_loss_ratio",
                                      "median_noretrain_seconds",
                                      "median_retrain_seconds",
                                      "speedup_noretrain")}
    (outdir / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                    indent=2) + "\n")
    _write_manifest(args, outdir, derived={"rounds": len(result["rows"])})
    print(f"{len(result['rows'])} rounds; "
          f"speedup(no-retrain)={result['speedup_noretrain']:.1f}x"
          if baseline_samples else f"{len(result['rows'])} rounds")
    return 0


def _cmd_experiment(args, outdir: Path) -> int:
    name = args.experiment_name
    if name == "retrain_prob":
        rows = []
        for mode in ("random", "adversarial"):
            rows.append(retrain_probability_experiment(
                args.n, args.k, args.trials, mode=mode, seed=args.seed,
                r=args.batch_size))
        cols = list(rows[0])
    elif name == "batch_removal":
        rows = batch_removal_trend(args.n, args.k, [1, 10, 30],
                                   trials=args.trials, seed=args.seed)
        cols = list(rows[0])
    elif name == "gamma_sweep":
        cp, ci, _ = _prepare_clients(args)
        n_total = sum(p.shape[0] for p in cp)
        center = 1.0 / max(1, round(n_total ** 0.5))
        gammas = sorted({1.0 / max(1, round(1.0 / (center * f)))
                         for f in (0.33, 0.5, 1.0, 2.0, 3.0)})
        rows = gamma_sweep(cp, ci, _train_config(args), gammas,
                           reference_runs=args.reference_runs, seed=args.seed)
        cols = list(rows[0])
    else:
        raise DataError("experiment needs --experiment-name")
    _write_csv(outdir / "metrics.csv", rows, cols)
    _write_manifest(args, outdir, derived={"experiment": name})
    print(f"experiment {name}: {len(rows)} rows -> {outdir / 'metrics.csv'}")
    return 0


def run(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.command == "train":
        return _cmd_train(args, outdir)
    if args.command == "unlearn":
        return _cmd_unlearn(args, outdir, baseline_samples=0)
    if args.command == "bench":
        return _cmd_unlearn(args, outdir, baseline_samples=args.baseline_samples)
    if args.command == "experiment":
        return _cmd_experiment(args, outdir)
    raise DataError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        _apply_config_file(args, args.config, _explicit_flags(argv))
    try:
        return run(args)
    except FedkmeansError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
