"""Synthetic data, metrics, and removal experiments.

Covers the evaluation surface: Gaussian mixture generation, non-iid
client partitioning, the loss ratio against an approximated centralized
optimum, adversarial removal selection, retrain-probability Monte Carlo,
and the unlearning-vs-retraining benchmark with parallel-client timing
accounting (slowest client plus server; mask generation is offline and
excluded).
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, replace

import numpy as np

from . import rng as rng_mod
from .clustering import WeightedDataset, federated_objective, kmeans_full, objective
from .errors import PartitionError
from .federation import (
    GlobalModel,
    RemovalRequest,
    RoundTiming,
    TrainConfig,
    federated_train,
    federated_unlearn,
)
from .rng import derive_generator


@dataclass(frozen=True)
class GaussianMixtureSpec:
    k: int
    dim: int
    per_cluster: int
    variance: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.dim < 1 or self.per_cluster < 1 or self.variance <= 0:
            raise ValueError("invalid Gaussian mixture spec")


def gen_gaussian(spec: GaussianMixtureSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spherical Gaussian clusters with centers uniform in the unit hypercube.

    Returns (points, labels, centers); per_cluster samples per component.
    """
    rng = derive_generator(spec.seed, rng_mod.DATAGEN, 1)
    centers = rng.random((spec.k, spec.dim))
    std = math.sqrt(spec.variance)
    pts = []
    labels = []
    for c in range(spec.k):
        pts.append(centers[c] + std * rng.normal(size=(spec.per_cluster, spec.dim)))
        labels.append(np.full(spec.per_cluster, c, dtype=np.int64))
    return np.concatenate(pts), np.concatenate(labels), centers


@dataclass(frozen=True)
class PartitionSpec:
    num_clients: int
    k_prime: int
    seed: int = 0


def partition_noniid(points: np.ndarray, labels: np.ndarray, k_global: int,
                     spec: PartitionSpec) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Disjoint client split where each client sees at most k_prime labels.

    Clients are dealt k_prime consecutive labels round-robin; each
    cluster's points are then spread uniformly over the clients holding
    its label. k_prime == k_global is an unconstrained iid split.
    """
    ln = spec.num_clients
    kp = spec.k_prime
    if not 1 <= kp <= k_global:
        raise PartitionError(f"k_prime must be in [1, {k_global}], got {kp}")
    if ln * kp < k_global:
        raise PartitionError(
            f"{ln} clients x {kp} labels cannot cover {k_global} clusters")
    holders: dict[int, list[int]] = {c: [] for c in range(k_global)}
    for client in range(ln):
        for t in range(kp):
            lab = (client * kp + t) % k_global
            if client not in holders[lab]:
                holders[lab].append(client)
    rng = derive_generator(spec.seed, rng_mod.DATAGEN, 2)
    owner = np.empty(points.shape[0], dtype=np.int64)
    for lab in range(k_global):
        rows = np.flatnonzero(labels == lab)
        if rows.size == 0:
            continue
        hs = holders[lab]
        owner[rows] = np.asarray(hs, dtype=np.int64)[rng.integers(0, len(hs), size=rows.size)]
    client_points, client_ids = [], []
    for client in range(ln):
        rows = np.flatnonzero(owner == client)
        client_points.append(points[rows].copy())
        client_ids.append(rows.astype(np.int64))
    return client_points, client_ids


# ---------------------------------------------------------------------------
# Metrics.

def client_representatives(model: GlobalModel, state) -> np.ndarray:
    """What the server saw for each local centroid: bin centers when the
    pipeline quantizes, the raw centroids in plaintext mode."""
    if model.config.secure:
        return np.array([model.grid.bin_center(model.grid.bin_index(c))
                         for c in state.centroid_centers])
    return state.centroid_centers


def federated_loss(model: GlobalModel) -> float:
    """Induced-assignment objective over the currently active data."""
    active = model.active_clients()
    data = [WeightedDataset(c.points) for c in active]
    centers = [c.centroid_centers for c in active]
    reps = [client_representatives(model, c) for c in active]
    return federated_objective(data, centers, reps, model.server.centers)


def centralized_reference(points: np.ndarray, k: int, runs: int, seed: int,
                          t_max: int = 100, tol: float = 1e-6) -> float:
    """Approximate centralized optimum: best of ``runs`` full clusterings."""
    data = WeightedDataset(points)
    best = math.inf
    for r in range(runs):
        rng = derive_generator(seed, rng_mod.EVAL, 1, r)
        cl = kmeans_full(data, k, rng, t_max=t_max, tol=tol)
        best = min(best, objective(data, cl.centers))
    return best


def pooled_points(model: GlobalModel) -> np.ndarray:
    return np.concatenate([c.points for c in model.active_clients()])


def loss_ratio(model: GlobalModel, reference_runs: int = 10, seed: int = 0,
               reference: float | None = None) -> tuple[float, float]:
    """Federated objective over the approximated centralized optimum.

    Returns (ratio, reference) so callers replaying long removal streams
    can reuse the reference instead of re-running it every round.
    """
    if reference is None:
        reference = centralized_reference(pooled_points(model), model.config.k,
                                          reference_runs, seed,
                                          model.config.t_max, model.config.tol)
    return federated_loss(model) / reference, reference


def point_contributions(model: GlobalModel) -> list[tuple[float, int, int]]:
    """Per-point (contribution, client_id, point_id) under the induced
    assignment, every active point."""
    from .clustering import assign
    from . import kernels

    out = []
    for state in model.active_clients():
        data = WeightedDataset(state.points)
        local_labels = assign(data, state.centroid_centers)
        reps = client_representatives(model, state)
        rep_map, _ = kernels.assign_points(
            np.ascontiguousarray(reps, dtype=np.float64), model.server.centers)
        target = model.server.centers[rep_map[local_labels]]
        diff = state.points - target
        contrib = np.einsum("nd,nd->n", diff, diff)
        out.extend(zip(contrib.tolist(), [state.client_id] * state.n,
                       state.ids.tolist()))
    return out


def adversarial_select(model: GlobalModel, r: int) -> list[tuple[int, int]]:
    """The r points with the largest objective contribution (ties by id)."""
    contribs = point_contributions(model)
    contribs.sort(key=lambda t: (-t[0], t[1], t[2]))
    return [(cid, pid) for _, cid, pid in contribs[:r]]


@dataclass(frozen=True)
class RemovalAnalysis:
    """Instance constants of the removal-complexity analysis."""

    epsilon1: float   # cluster-size imbalance n / (K * s_min)
    epsilon2: float   # smallest outlier threshold admitting no outliers


def removal_analysis(points: np.ndarray, labels: np.ndarray) -> RemovalAnalysis:
    ks = np.unique(labels)
    n = points.shape[0]
    s_min = min(int(np.sum(labels == c)) for c in ks)
    eps1 = n / (len(ks) * s_min)
    eps2 = 1.0
    for c in ks:
        rows = points[labels == c]
        center = rows.mean(axis=0)
        d2 = np.einsum("nd,nd->n", rows - center, rows - center)
        phi = float(np.sum(d2))
        if phi > 0:
            eps2 = max(eps2, float(np.max(d2)) * rows.shape[0] / phi)
    return RemovalAnalysis(epsilon1=float(eps1), epsilon2=float(eps2))


# ---------------------------------------------------------------------------
# Retrain-probability Monte Carlo.

def retrain_probability_experiment(n: int, k: int, trials: int, mode: str = "random",
                                   seed: int = 0, r: int = 1, dim: int = 2) -> dict:
    """Empirical probability that a removal hits the seeded centroid set.

    random: r uniformly chosen points per trial; the exact hit rate for
    r=1 is K/n. adversarial: the r most-outlying points w.r.t. the
    instance's reference clustering, fixed across trials; reported
    against the ceiling min{1, r*K^2*eps1*eps2/n} (constant-free ratio).
    """
    if mode not in ("random", "adversarial"):
        raise ValueError(f"unknown removal mode {mode!r}")
    per = max(1, n // k)
    spec = GaussianMixtureSpec(k=k, dim=dim, per_cluster=per, variance=0.05, seed=seed)
    points, labels, _ = gen_gaussian(spec)
    points = points[:n]
    labels = labels[:n]
    if points.shape[0] < n:
        raise ValueError("n must be <= k * ceil(n/k)")
    data = WeightedDataset(points)

    analysis = removal_analysis(points, labels)
    if mode == "adversarial":
        ref = kmeans_full(data, k, derive_generator(seed, rng_mod.EVAL, 3))
        from . import kernels
        _, d2 = kernels.assign_points(points, ref.centers)
        targets = set(np.argsort(-d2, kind="stable")[:r].tolist())

    removal_rng = derive_generator(seed, rng_mod.EVAL, 4)
    hits = 0
    from .clustering import kmeanspp_init
    for t in range(trials):
        trial_rng = derive_generator(seed, rng_mod.EVAL, 5, t)
        cl = kmeanspp_init(data, k, trial_rng)
        chosen = set(cl.indices.tolist())
        if mode == "random":
            removed = set(removal_rng.choice(n, size=r, replace=False).tolist())
        else:
            removed = targets
        hits += bool(chosen & removed)
    rate = hits / trials
    stderr = math.sqrt(max(rate * (1 - rate), 1e-12) / trials)
    expected = min(1.0, r * k / n) if mode == "random" else \
        min(1.0, r * k * k * analysis.epsilon1 * analysis.epsilon2 / n)
    return {
        "mode": mode, "n": n, "k": k, "r": r, "trials": trials,
        "rate": rate, "stderr": stderr, "expected_bound": expected,
        "epsilon1": analysis.epsilon1, "epsilon2": analysis.epsilon2,
    }


# ---------------------------------------------------------------------------
# Unlearning benchmark.

def full_retrain(model: GlobalModel, seed_label: int) -> tuple[GlobalModel, float]:
    """Train from scratch on the current active data with fresh streams.

    Returns the retrained model and its wall time under parallel-client
    accounting (slowest client + server; offline mask time excluded).
    """
    active = model.active_clients()
    pts = [c.points.copy() for c in active]
    ids = [c.ids.copy() for c in active]
    mixed = (model.config.master_seed * 1_000_003 + seed_label * 7_919 + 0x7E7A11)
    cfg = replace(model.config, master_seed=mixed & 0x7FFFFFFF)
    fresh = federated_train(pts, ids, cfg, scale=model.scale)
    return fresh, fresh.last_timing.round_seconds


def random_request_stream(model: GlobalModel, rounds: int, seed: int,
                          batch_size: int = 1) -> list[RemovalRequest]:
    """Uniformly chosen remaining points, ``batch_size`` per round from one
    client (the client owning the first drawn point)."""
    rng = derive_generator(seed, rng_mod.EVAL, 6)
    live: dict[int, list[int]] = {
        c.client_id: c.ids.tolist() for c in model.active_clients()
    }
    reqs = []
    for _ in range(rounds):
        total = sum(len(v) for v in live.values())
        if total == 0:
            break
        flat = int(rng.integers(0, total))
        for cid in sorted(live):
            if flat < len(live[cid]):
                take = min(batch_size, len(live[cid]))
                picked = [live[cid].pop(flat % len(live[cid]))]
                while len(picked) < take:
                    picked.append(live[cid].pop(int(rng.integers(0, len(live[cid])))))
                reqs.append(RemovalRequest(kind="single", client_id=cid,
                                           point_ids=tuple(picked)))
                break
            flat -= len(live[cid])
    return reqs


def adversarial_provider(batch_size: int = 1):
    """Per-round request factory: the top contributor's client gives up its
    ``batch_size`` highest-contribution points."""
    def provide(model: GlobalModel, _rnd: int) -> RemovalRequest | None:
        contribs = point_contributions(model)
        if not contribs:
            return None
        contribs.sort(key=lambda t: (-t[0], t[1], t[2]))
        top_client = contribs[0][1]
        pids = [pid for _, cid, pid in contribs if cid == top_client][:batch_size]
        return RemovalRequest(kind="single", client_id=top_client,
                              point_ids=tuple(pids))
    return provide


def benchmark_unlearning(model: GlobalModel, requests: list[RemovalRequest] | None = None,
                         provider=None, rounds: int | None = None,
                         baseline_samples: int = 5, warmup_rounds: int = 3,
                         reference_runs: int = 10, seed: int = 0,
                         track_loss: bool = True) -> dict:
    """Replay a removal stream, timing each round against full retraining.

    Requests come either as a precomputed list or from ``provider(model,
    round)`` (for adversarial streams, which depend on the evolving
    model). The baseline is measured median-of-``baseline_samples`` (full
    local+global retrain on the then-current data); per-round baseline
    estimates reuse that median. The first ``warmup_rounds`` rounds are
    excluded from the speed-up statistics.
    """
    if (requests is None) == (provider is None):
        raise ValueError("pass exactly one of requests / provider")
    total_rounds = len(requests) if requests is not None else int(rounds)
    rows = []
    reference = None
    if track_loss:
        ratio0, reference = loss_ratio(model, reference_runs, seed)
    else:
        ratio0 = float("nan")
    baseline_times: list[float] = []
    if baseline_samples > 0:
        _, bt = full_retrain(model, seed_label=0)
        baseline_times.append(bt)
    accum = 0.0
    accum_base = 0.0
    sample_at = set()
    if baseline_samples > 1 and total_rounds:
        idx = np.linspace(0, total_rounds - 1, baseline_samples - 1)
        sample_at = {int(v) for v in idx}
    for rnd in range(total_rounds):
        req = requests[rnd] if requests is not None else provider(model, rnd)
        if req is None:
            break
        draws_before = model.server.rng.draws
        federated_unlearn(model, req)
        timing: RoundTiming = model.last_timing
        if rnd in sample_at:
            _, bt = full_retrain(model, seed_label=rnd + 1)
            baseline_times.append(bt)
        est = statistics.median(baseline_times) if baseline_times else float("nan")
        if track_loss:
            ratio, _ = loss_ratio(model, reference_runs, seed, reference=reference)
        else:
            ratio = float("nan")
        accum += timing.round_seconds
        accum_base += est
        rows.append({
            "round": rnd + 1,
            "kind": req.kind,
            "client_id": req.client_id if req.kind == "single" else -1,
            "removed_points": len(req.point_ids) if req.kind == "single" else 0,
            "removed_clients": len(req.client_ids) if req.kind == "multi" else 0,
            "retrained": int(model.last_retrained),
            "server_skipped": int(model.last_server_skipped),
            "server_rng_draws": model.server.rng.draws - draws_before,
            "client_seconds": max(timing.client_seconds.values()) if timing.client_seconds else 0.0,
            "server_seconds": timing.server_seconds,
            "round_seconds": timing.round_seconds,
            "accum_seconds": accum,
            "retrain_seconds_est": est,
            "accum_retrain_seconds": accum_base,
            "loss_ratio": ratio,
        })
    measured = [r for r in rows[warmup_rounds:] if not r["retrained"]
                and r["server_skipped"]]
    median_round = statistics.median([r["round_seconds"] for r in measured]) \
        if measured else float("nan")
    median_base = statistics.median(baseline_times) if baseline_times else float("nan")
    return {
        "rows": rows,
        "initial_loss_ratio": ratio0,
        "median_noretrain_seconds": median_round,
        "median_retrain_seconds": median_base,
        "speedup_noretrain": (median_base / median_round)
            if measured and median_round > 0 else float("nan"),
    }


def batch_removal_trend(n: int, k: int, batch_sizes: list[int], trials: int,
                        seed: int = 0, dim: int = 2) -> list[dict]:
    """Retrain frequency versus batch size (monotone trend expected)."""
    out = []
    for r in batch_sizes:
        res = retrain_probability_experiment(n, k, trials, mode="random",
                                             seed=seed, r=r, dim=dim)
        out.append({"batch_size": r, "retrain_rate": res["rate"],
                    "stderr": res["stderr"], "trials": trials})
    return out


def gamma_sweep(client_points, client_ids, base_config: TrainConfig,
                gammas: list[float], reference_runs: int = 10,
                seed: int = 0) -> list[dict]:
    """Loss ratio across quantization steps (recorded, not asserted)."""
    rows = []
    pooled = np.concatenate(client_points)
    reference = centralized_reference(pooled, base_config.k, reference_runs, seed)
    for gamma in gammas:
        cfg = replace(base_config, gamma=gamma)
        model = federated_train(client_points, client_ids, cfg)
        ratio, _ = loss_ratio(model, reference_runs, seed, reference=reference)
        rows.append({"gamma": gamma, "bins_per_dim": model.grid.bins_per_dim,
                     "total_bins": model.grid.total_bins,
                     "modulus_bits": model.modulus.bit_length() if model.modulus else 0,
                     "loss_ratio": ratio})
    return rows
