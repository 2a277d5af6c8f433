"""Client and server state machines for federated clustering and unlearning.

Training (secure mode): every client runs K-means++ seeding only,
quantizes its ordered centroids onto the shared grid, and transmits
masked power-sum syndromes of its per-bin count vector through the wire
format. The server aggregates, decodes the exact aggregate multiset,
regenerates a surrogate dataset from the occupied bins, and runs full
weighted K-means++ on it. Plaintext mode ships (centroids, sizes)
directly and clusters the weighted union.

Unlearning: a single-client removal resamples that client's centroid
tail only when a removed point was one of its ordered centroids
(prefix before the first hit is kept). All clients then re-encode under
fresh masks; if the aggregate syndromes are unchanged the server keeps
its model untouched (and consumes zero randomness), otherwise it
regenerates and re-clusters with a fresh per-round stream. Removing
whole clients turns them into pure mask transmitters.

Per the protocol-literal default, a non-centroid removal leaves the
client's counts stale; ``decrement_counts=True`` instead decrements the
removed points' bins, which forces the server path.
"""

from __future__ import annotations

import base64
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import aggregate as agg
from . import rng as rng_mod
from .clustering import (
    CentroidList,
    WeightedDataset,
    assign,
    kmeans_full,
    kmeanspp_init,
    seed_tail,
)
from .errors import InfeasibleError, ProtocolError
from .field import select_prime
from .grid import GridSpec, ScaleTransform, grid_for
from .rng import CountingGenerator

GEN_WEIGHTED = "weighted"
GEN_UNIFORM = "uniform"


@dataclass(frozen=True)
class TrainConfig:
    k: int
    gamma: float | None = None       # None: 1/sqrt(n_total) rule
    secure: bool = True
    gen_mode: str = GEN_UNIFORM
    decrement_counts: bool = False
    master_seed: int = 0
    t_max: int = 100
    tol: float = 1e-6
    workers: int = 1
    shared_shift: bool = False

    def __post_init__(self):
        if self.gen_mode not in (GEN_WEIGHTED, GEN_UNIFORM):
            raise ValueError(f"unknown generation mode {self.gen_mode!r}")
        if self.k < 1 or self.workers < 1:
            raise ValueError("k and workers must be >= 1")


@dataclass(frozen=True)
class RemovalRequest:
    """Either R points from one client, or all data of a set of clients."""

    kind: str                        # "single" | "multi"
    client_id: int | None = None
    point_ids: tuple[int, ...] = ()
    client_ids: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind == "single":
            if self.client_id is None or not self.point_ids:
                raise ValueError("single-client removal needs a client and point ids")
        elif self.kind == "multi":
            if not self.client_ids:
                raise ValueError("multi-client removal needs client ids")
        else:
            raise ValueError(f"unknown removal kind {self.kind!r}")


@dataclass
class ClientState:
    client_id: int
    points: np.ndarray               # (n, d) scaled coordinates
    ids: np.ndarray                  # (n,) stable point ids
    centroid_centers: np.ndarray     # (K, d) in selection order
    centroid_ids: np.ndarray         # (K,) stable ids of the seeded points
    sizes: np.ndarray                # (K,) int64 cluster sizes
    multiset: dict[int, int]
    rng: CountingGenerator
    active: bool = True

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass
class ServerState:
    centers: np.ndarray | None
    sizes: np.ndarray | None
    multiset: dict[int, int] | None      # decoded aggregate (secure mode)
    xs_points: np.ndarray | None
    xs_weights: np.ndarray | None
    gen_mode: str
    rng: CountingGenerator
    agg_syndromes: list[int] | None      # aggregate view, secure mode
    plain_view: tuple | None             # canonical view, plaintext mode
    degenerate: bool = False


@dataclass
class RoundTiming:
    client_seconds: dict[int, float] = field(default_factory=dict)
    server_seconds: float = 0.0
    offline_seconds: float = 0.0     # mask generation; excluded per protocol

    @property
    def round_seconds(self) -> float:
        """Parallel-client accounting: slowest client plus the server."""
        longest = max(self.client_seconds.values()) if self.client_seconds else 0.0
        return longest + self.server_seconds


@dataclass
class GlobalModel:
    config: TrainConfig
    grid: GridSpec
    modulus: int | None              # None in plaintext mode
    syndrome_len: int
    clients: list[ClientState]
    server: ServerState
    round_counter: int = 0
    scale: ScaleTransform | None = None
    last_timing: RoundTiming | None = None
    last_retrained: bool = False
    last_server_skipped: bool = False

    @property
    def num_clients(self) -> int:
        return len(self.clients)

    def active_clients(self) -> list[ClientState]:
        return [c for c in self.clients if c.active]

    def total_points(self) -> int:
        return sum(c.n for c in self.active_clients())


# ---------------------------------------------------------------------------
# Client-side operations.

def build_multiset(centers: np.ndarray, sizes: np.ndarray, grid: GridSpec) -> dict[int, int]:
    """Counts per occupied bin; centroids sharing a bin pool their sizes."""
    ms: dict[int, int] = {}
    for c, s in zip(centers, sizes):
        j = grid.bin_index(c)
        ms[j] = ms.get(j, 0) + int(s)
    return ms


def client_train(client_id: int, points: np.ndarray, ids: np.ndarray, k: int,
                 grid: GridSpec, rng: CountingGenerator) -> ClientState:
    """Seeding-only local training plus grid summary (no Lloyd at clients)."""
    data = WeightedDataset(points)
    cl = kmeanspp_init(data, k, rng)
    sizes = np.rint(cl.sizes).astype(np.int64)
    return ClientState(
        client_id=client_id,
        points=data.points,
        ids=np.asarray(ids, dtype=np.int64),
        centroid_centers=cl.centers,
        centroid_ids=np.asarray(ids, dtype=np.int64)[cl.indices],
        sizes=sizes,
        multiset=build_multiset(cl.centers, sizes, grid),
        rng=rng,
    )


def client_unlearn(state: ClientState, point_ids, k: int, grid: GridSpec,
                   decrement_counts: bool = False) -> bool:
    """Remove points by id; resample the centroid tail only when needed.

    Returns True when the centroid set was recomputed. Without a
    recompute the recorded sizes and multiset stay as trained (stale)
    unless ``decrement_counts`` is set.
    """
    removed = np.asarray(sorted(set(int(v) for v in point_ids)), dtype=np.int64)
    known = np.isin(removed, state.ids)
    if not known.all():
        raise ValueError(f"unknown point ids {removed[~known].tolist()} "
                         f"on client {state.client_id}")
    keep = ~np.isin(state.ids, removed)
    removed_set = set(removed.tolist())
    hits = [t for t, cid in enumerate(state.centroid_ids.tolist()) if cid in removed_set]

    if not hits:
        if decrement_counts:
            labels = assign(WeightedDataset(state.points), state.centroid_centers)
            for pos in np.flatnonzero(~keep):
                lab = int(labels[pos])
                state.sizes[lab] -= 1
                j = grid.bin_index(state.centroid_centers[lab])
                state.multiset[j] -= 1
                if state.multiset[j] == 0:
                    del state.multiset[j]
                if state.sizes[lab] < 0:
                    raise ProtocolError("cluster size underflow")
        state.points = state.points[keep]
        state.ids = state.ids[keep]
        return False

    first = hits[0]
    prefix_centers = state.centroid_centers[:first].copy()
    prefix_ids = state.centroid_ids[:first].copy()
    new_points = state.points[keep]
    new_ids = state.ids[keep]
    data = WeightedDataset(new_points)
    if k > data.distinct_points():
        raise InfeasibleError(
            f"client {state.client_id}: {data.distinct_points()} distinct points "
            f"left after removal, cannot reseed K={k}"
        )
    tail = seed_tail(data, k, state.rng, prefix_centers=prefix_centers)
    centers = np.concatenate([prefix_centers, new_points[tail]]) if first else new_points[tail].copy()
    cids = np.concatenate([prefix_ids, new_ids[tail]]) if first else new_ids[tail].copy()
    labels = assign(data, centers)
    sizes = np.bincount(labels, minlength=k).astype(np.int64)
    state.points = new_points
    state.ids = new_ids
    state.centroid_centers = centers
    state.centroid_ids = cids
    state.sizes = sizes
    state.multiset = build_multiset(centers, sizes, grid)
    return True


# ---------------------------------------------------------------------------
# Server-side operations.

def generate_server_dataset(q: dict[int, int], grid: GridSpec, mode: str,
                            rng: CountingGenerator) -> WeightedDataset:
    """Surrogate dataset from the decoded aggregate.

    weighted: one point per occupied bin at its center, weight = count.
    uniform: count points drawn uniformly inside the bin cell (the
    experimental default).
    """
    bins = sorted(q)
    if not bins:
        raise InfeasibleError("empty aggregate multiset")
    if mode == GEN_WEIGHTED:
        pts = np.array([grid.bin_center(j) for j in bins], dtype=np.float64)
        wts = np.array([q[j] for j in bins], dtype=np.float64)
        order = np.lexsort(pts.T[::-1])  # canonical row order, dim 0 primary
        return WeightedDataset(pts[order], wts[order])
    if mode == GEN_UNIFORM:
        chunks = []
        for j in bins:
            center = grid.bin_center(j)
            draws = np.asarray(rng.random((q[j], grid.dim)))
            chunks.append(center[None, :] + grid.gamma * (draws - 0.5))
        return WeightedDataset(np.concatenate(chunks))
    raise ValueError(f"unknown generation mode {mode!r}")


def server_cluster(xs: WeightedDataset, k: int, rng: CountingGenerator,
                   t_max: int, tol: float) -> CentroidList:
    """Full weighted K-means++ at the server; infeasible K is surfaced."""
    if k > xs.distinct_points():
        raise InfeasibleError(
            f"server dataset has {xs.distinct_points()} distinct points, K={k}"
        )
    return kmeans_full(xs, k, rng, t_max=t_max, tol=tol)


def plaintext_view(clients: list[ClientState]) -> tuple:
    """Canonical weighted union of client centroids (lex-sorted, merged)."""
    rows: dict[tuple, int] = {}
    for c in clients:
        if not c.active:
            continue
        for center, size in zip(c.centroid_centers, c.sizes):
            key = tuple(float(v) for v in center)
            rows[key] = rows.get(key, 0) + int(size)
    keys = sorted(rows)
    return tuple((k, rows[k]) for k in keys)


def _plaintext_dataset(view: tuple) -> WeightedDataset:
    pts = np.array([list(k) for k, _ in view], dtype=np.float64)
    wts = np.array([w for _, w in view], dtype=np.float64)
    return WeightedDataset(pts, wts)


# ---------------------------------------------------------------------------
# Orchestration.

def _run_clients(tasks, workers: int):
    """Run per-client closures, optionally in a thread pool; returns seconds."""
    times: dict[int, float] = {}
    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        def timed(item):
            cid, fn = item
            t0 = time.perf_counter()
            fn()
            return cid, time.perf_counter() - t0

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for cid, dt in pool.map(timed, tasks):
                times[cid] = dt
    else:
        for cid, fn in tasks:
            t0 = time.perf_counter()
            fn()
            times[cid] = time.perf_counter() - t0
    return times


def _encode_round(model: GlobalModel, round_id: int) -> tuple[list[bytes], float, dict[int, float]]:
    """All clients (incl. inactive, as pure maskers) emit wire messages."""
    t0 = time.perf_counter()
    masks = agg.gen_masks(model.num_clients, model.syndrome_len, model.modulus,
                          model.config.master_seed, round_id=round_id)
    offline = time.perf_counter() - t0
    messages: list[bytes] = [b""] * model.num_clients
    tasks = []
    for state in model.clients:
        def encode_one(state=state):
            q = state.multiset if state.active else {}
            agg.validate_multiset(q, max_nonzeros=model.config.k,
                                  total_bins=model.grid.total_bins)
            syn = agg.encode_client(q, masks[state.client_id], model.modulus,
                                    model.syndrome_len)
            messages[state.client_id] = agg.encode_message(
                state.client_id, model.config.k, model.num_clients,
                model.modulus, model.grid.total_bins, syn)
        tasks.append((state.client_id, encode_one))
    times = _run_clients(tasks, model.config.workers)
    return messages, offline, times


def _server_aggregate(model: GlobalModel, messages: list[bytes]) -> list[int]:
    return agg.aggregate_messages(messages, model.modulus, model.syndrome_len,
                                  model.num_clients)


def federated_train(client_points: list[np.ndarray], client_ids: list[np.ndarray],
                    config: TrainConfig,
                    scale: ScaleTransform | None = None) -> GlobalModel:
    """Run the one-shot training protocol over pre-scaled client datasets."""
    if not client_points:
        raise ValueError("need at least one client")
    dim = client_points[0].shape[1]
    n_total = sum(p.shape[0] for p in client_points)
    num_clients = len(client_points)

    grid = grid_for(config.gamma, dim, n_total)
    if config.shared_shift:
        shift_rng = rng_mod.derive_generator(config.master_seed, rng_mod.DATAGEN, 0xF0)
        shift = shift_rng.random(dim) * grid.gamma
        grid = GridSpec(gamma=grid.gamma, dim=dim, shift=shift)

    syndrome_len = 2 * config.k * num_clients
    modulus = None
    if config.secure:
        modulus = select_prime(max(n_total, grid.total_bins) + 1).p

    clients: list[ClientState] = [None] * num_clients  # type: ignore[list-item]
    tasks = []
    for cid in range(num_clients):
        def train_one(cid=cid):
            rng = CountingGenerator.from_seed(config.master_seed, rng_mod.CLIENT, cid)
            clients[cid] = client_train(cid, client_points[cid], client_ids[cid],
                                        config.k, grid, rng)
        tasks.append((cid, train_one))
    client_times = _run_clients(tasks, config.workers)

    server_rng = CountingGenerator.from_seed(config.master_seed, rng_mod.SERVER, 0)
    server = ServerState(
        centers=None, sizes=None, multiset=None, xs_points=None, xs_weights=None,
        gen_mode=config.gen_mode, rng=server_rng, agg_syndromes=None, plain_view=None,
    )
    model = GlobalModel(
        config=config, grid=grid, modulus=modulus, syndrome_len=syndrome_len,
        clients=clients, server=server, scale=scale,
    )

    timing = RoundTiming(client_seconds=client_times)
    if config.secure:
        messages, offline, enc_times = _encode_round(model, round_id=0)
        for cid, dt in enc_times.items():
            timing.client_seconds[cid] = timing.client_seconds.get(cid, 0.0) + dt
        timing.offline_seconds = offline
        t0 = time.perf_counter()
        syn = _server_aggregate(model, messages)
        q = agg.decode(syn, modulus, grid.total_bins)
        if agg.multiset_total(q) != n_total:
            raise ProtocolError("decoded aggregate count disagrees with dataset size")
        xs = generate_server_dataset(q, grid, config.gen_mode, server_rng)
        cl = server_cluster(xs, config.k, server_rng, config.t_max, config.tol)
        timing.server_seconds = time.perf_counter() - t0
        server.multiset = q
        server.agg_syndromes = syn
    else:
        t0 = time.perf_counter()
        view = plaintext_view(clients)
        xs = _plaintext_dataset(view)
        cl = server_cluster(xs, config.k, server_rng, config.t_max, config.tol)
        timing.server_seconds = time.perf_counter() - t0
        server.plain_view = view
    server.centers = cl.centers
    server.sizes = cl.sizes
    server.xs_points = xs.points
    server.xs_weights = xs.weights
    model.last_timing = timing
    return model


def federated_unlearn(model: GlobalModel, request: RemovalRequest) -> GlobalModel:
    """Serve a removal request in place; see the module docstring."""
    round_id = model.round_counter + 1
    timing = RoundTiming()
    retrained = False

    if request.kind == "single":
        state = model.clients[request.client_id]
        if not state.active:
            raise ValueError(f"client {request.client_id} already removed")
        t0 = time.perf_counter()
        retrained = client_unlearn(state, request.point_ids, model.config.k,
                                   model.grid, model.config.decrement_counts)
        timing.client_seconds[state.client_id] = time.perf_counter() - t0
    else:
        for cid in request.client_ids:
            state = model.clients[cid]
            state.points = state.points[:0]
            state.ids = state.ids[:0]
            state.centroid_centers = state.centroid_centers[:0]
            state.centroid_ids = state.centroid_ids[:0]
            state.sizes = state.sizes[:0]
            state.multiset = {}
            state.active = False

    server = model.server
    skipped = False
    if model.config.secure:
        messages, offline, enc_times = _encode_round(model, round_id=round_id)
        for cid, dt in enc_times.items():
            timing.client_seconds[cid] = timing.client_seconds.get(cid, 0.0) + dt
        timing.offline_seconds = offline
        t0 = time.perf_counter()
        syn = _server_aggregate(model, messages)
        if syn == server.agg_syndromes:
            skipped = True
        else:
            server.agg_syndromes = syn
            if all(s == 0 for s in syn):
                _mark_degenerate(server)
            else:
                q = agg.decode(syn, model.modulus, model.grid.total_bins)
                server.multiset = q
                fresh = CountingGenerator.from_seed(model.config.master_seed,
                                                    rng_mod.SERVER, round_id)
                server.rng = fresh
                xs = generate_server_dataset(q, model.grid, server.gen_mode, fresh)
                cl = server_cluster(xs, model.config.k, fresh,
                                    model.config.t_max, model.config.tol)
                server.centers = cl.centers
                server.sizes = cl.sizes
                server.xs_points = xs.points
                server.xs_weights = xs.weights
        timing.server_seconds = time.perf_counter() - t0
    else:
        t0 = time.perf_counter()
        view = plaintext_view(model.clients)
        if view == server.plain_view:
            skipped = True
        else:
            server.plain_view = view
            if not view:
                _mark_degenerate(server)
            else:
                fresh = CountingGenerator.from_seed(model.config.master_seed,
                                                    rng_mod.SERVER, round_id)
                server.rng = fresh
                xs = _plaintext_dataset(view)
                cl = server_cluster(xs, model.config.k, fresh,
                                    model.config.t_max, model.config.tol)
                server.centers = cl.centers
                server.sizes = cl.sizes
                server.xs_points = xs.points
                server.xs_weights = xs.weights
        timing.server_seconds = time.perf_counter() - t0

    model.round_counter = round_id
    model.last_timing = timing
    model.last_retrained = retrained
    model.last_server_skipped = skipped
    return model


def _mark_degenerate(server: ServerState) -> None:
    server.degenerate = True
    server.centers = None
    server.sizes = None
    server.multiset = {}
    server.xs_points = None
    server.xs_weights = None


# ---------------------------------------------------------------------------
# Checkpoint format: a self-describing JSON archive. Arrays are base64 of
# their little-endian bytes so reloads are bit-exact.

_CHECKPOINT_FORMAT = "fedkmeans-checkpoint"
_CHECKPOINT_VERSION = 2


def _arr_to_json(a: np.ndarray | None) -> dict | None:
    if a is None:
        return None
    a = np.ascontiguousarray(a)
    return {
        "dtype": a.dtype.str,
        "shape": list(a.shape),
        "data": base64.b64encode(a.tobytes()).decode("ascii"),
    }


def _arr_from_json(d: dict | None) -> np.ndarray | None:
    if d is None:
        return None
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).copy()


def model_to_dict(model: GlobalModel) -> dict:
    cfg = model.config
    return {
        "format": _CHECKPOINT_FORMAT,
        "version": _CHECKPOINT_VERSION,
        # workers is an execution detail, not model state: results are
        # identical for any worker count, so it stays out of checkpoints
        "config": {
            "k": cfg.k, "gamma": cfg.gamma, "secure": cfg.secure,
            "gen_mode": cfg.gen_mode, "decrement_counts": cfg.decrement_counts,
            "master_seed": cfg.master_seed, "t_max": cfg.t_max, "tol": cfg.tol,
            "shared_shift": cfg.shared_shift,
        },
        "grid": {
            "gamma": model.grid.gamma, "dim": model.grid.dim,
            "shift": _arr_to_json(model.grid.shift),
        },
        "modulus": model.modulus,
        "syndrome_len": model.syndrome_len,
        "round_counter": model.round_counter,
        "scale": None if model.scale is None else {
            "center": _arr_to_json(model.scale.center),
            "scale": _arr_to_json(model.scale.scale),
        },
        "clients": [
            {
                "client_id": c.client_id,
                "points": _arr_to_json(c.points),
                "ids": _arr_to_json(c.ids),
                "centroid_centers": _arr_to_json(c.centroid_centers),
                "centroid_ids": _arr_to_json(c.centroid_ids),
                "sizes": _arr_to_json(c.sizes),
                "multiset": {str(j): v for j, v in sorted(c.multiset.items())},
                "rng": c.rng.state(),
                "active": c.active,
            }
            for c in model.clients
        ],
        "server": {
            "centers": _arr_to_json(model.server.centers),
            "sizes": _arr_to_json(model.server.sizes),
            "multiset": None if model.server.multiset is None else
                {str(j): v for j, v in sorted(model.server.multiset.items())},
            "xs_points": _arr_to_json(model.server.xs_points),
            "xs_weights": _arr_to_json(model.server.xs_weights),
            "gen_mode": model.server.gen_mode,
            "rng": model.server.rng.state(),
            "agg_syndromes": model.server.agg_syndromes,
            "plain_view": None if model.server.plain_view is None else
                [[list(kv[0]), kv[1]] for kv in model.server.plain_view],
            "degenerate": model.server.degenerate,
        },
    }


def model_from_dict(doc: dict) -> GlobalModel:
    if doc.get("format") != _CHECKPOINT_FORMAT:
        raise ProtocolError("not a model checkpoint")
    cfg = TrainConfig(**doc["config"])
    shift = _arr_from_json(doc["grid"]["shift"])
    grid = GridSpec(gamma=doc["grid"]["gamma"], dim=doc["grid"]["dim"], shift=shift)
    scale = None
    if doc["scale"] is not None:
        scale = ScaleTransform(center=_arr_from_json(doc["scale"]["center"]),
                               scale=_arr_from_json(doc["scale"]["scale"]))
    clients = []
    for c in doc["clients"]:
        clients.append(ClientState(
            client_id=c["client_id"],
            points=_arr_from_json(c["points"]),
            ids=_arr_from_json(c["ids"]),
            centroid_centers=_arr_from_json(c["centroid_centers"]),
            centroid_ids=_arr_from_json(c["centroid_ids"]),
            sizes=_arr_from_json(c["sizes"]),
            multiset={int(j): v for j, v in c["multiset"].items()},
            rng=CountingGenerator.from_state(c["rng"]),
            active=c["active"],
        ))
    s = doc["server"]
    server = ServerState(
        centers=_arr_from_json(s["centers"]),
        sizes=_arr_from_json(s["sizes"]),
        multiset=None if s["multiset"] is None else
            {int(j): v for j, v in s["multiset"].items()},
        xs_points=_arr_from_json(s["xs_points"]),
        xs_weights=_arr_from_json(s["xs_weights"]),
        gen_mode=s["gen_mode"],
        rng=CountingGenerator.from_state(s["rng"]),
        agg_syndromes=s["agg_syndromes"],
        plain_view=None if s["plain_view"] is None else
            tuple((tuple(row[0]), row[1]) for row in s["plain_view"]),
        degenerate=s["degenerate"],
    )
    return GlobalModel(
        config=cfg, grid=grid, modulus=doc["modulus"],
        syndrome_len=doc["syndrome_len"], clients=clients, server=server,
        round_counter=doc["round_counter"], scale=scale,
    )


def model_to_bytes(model: GlobalModel) -> bytes:
    return json.dumps(model_to_dict(model), sort_keys=True,
                      separators=(",", ":")).encode("utf-8")


def save_checkpoint(model: GlobalModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_checkpoint(path) -> GlobalModel:
    with open(path, "rb") as fh:
        return model_from_dict(json.loads(fh.read().decode("utf-8")))


def client_state_bytes(state: ClientState) -> bytes:
    """Canonical serialization of one client, for isolation checks."""
    doc = {
        "client_id": state.client_id,
        "points": _arr_to_json(state.points),
        "ids": _arr_to_json(state.ids),
        "centroid_centers": _arr_to_json(state.centroid_centers),
        "centroid_ids": _arr_to_json(state.centroid_ids),
        "sizes": _arr_to_json(state.sizes),
        "multiset": {str(j): v for j, v in sorted(state.multiset.items())},
        "rng": state.rng.state(),
        "active": state.active,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
