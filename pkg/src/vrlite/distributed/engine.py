"""Distributed run driver over two transports.

The simulated transport is fully deterministic: compute and message
delivery advance a virtual clock, and whenever several messages are
ready at the same instant a seeded scheduler picks the next one
uniformly. The socket transport runs the same protocol over localhost
TCP streams using the binary frame codec, with one worker thread per
connection and centrally serialized applies.

Both modes bootstrap identically: one plain-SGD epoch over worker 0's
shard initializes (x, x_bar, g_bar), which is broadcast to every worker
before the first distributed epoch. Epoch 1 in the snapshot log is that
bootstrap; epoch k >= 2 closes after each worker has contributed its
(k-1)-th distributed epoch.
"""

from __future__ import annotations

import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..model import Dataset, LossModel
from ..optim import (
    GRAD_EVALS_PER_SGD_STEP,
    GRAD_EVALS_PER_VR_STEP,
    vrlite_init,
)
from ..seeding import optimizer_rng, scheduler_rng, shard_rng
from .protocol import (
    DecodeError,
    MessageTag,
    ProtocolMessage,
    decode_handshake,
    decode_message,
    encode_handshake,
    encode_message,
)
from .runtime import (
    CentralState,
    adopt_global_state,
    central_async_apply,
    central_async_state,
    central_sync_aggregate,
    central_sync_state,
    init_worker,
    shard_dataset,
    worker_async_epoch,
    worker_sync_epoch,
)

MODES = ("sync", "async")
TRANSPORTS = ("sim", "socket")

_SOCKET_TIMEOUT = 60.0


@dataclass
class DistributedConfig:
    mode: str
    workers: int
    epochs: int
    eta: float
    seed: int
    transport: str = "sim"
    latency: float = 0.0      # virtual ms added to every simulated message
    step_cost: float = 1.0    # virtual ms per per-sample gradient evaluation
    speed: tuple[float, ...] | None = None  # per-worker speed multipliers (sim)
    accum_grad: str = "post"


@dataclass
class EpochSnapshot:
    """Central iterate at an epoch boundary plus the clock reading
    (virtual ms under the simulated transport, wall ms under sockets)."""

    epoch: int
    clock_ms: float
    x: np.ndarray


@dataclass
class DistributedResult:
    x: np.ndarray
    x_bar: np.ndarray
    g_bar: np.ndarray
    central: CentralState
    workers: list
    snapshots: list[EpochSnapshot] = field(default_factory=list)
    diverged: bool = False


def _validate(cfg: DistributedConfig, n: int):
    if cfg.mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if cfg.transport not in TRANSPORTS:
        raise ValueError(f"transport must be one of {TRANSPORTS}")
    if cfg.workers < 1:
        raise ValueError("workers must be >= 1")
    if cfg.workers > n:
        raise ValueError(f"cannot run {cfg.workers} workers on {n} samples")
    if cfg.epochs < 1:
        raise ValueError("epochs must be >= 1")
    if cfg.latency < 0 or cfg.step_cost < 0:
        raise ValueError("latency and step_cost must be >= 0")
    if cfg.speed is not None:
        if len(cfg.speed) != cfg.workers:
            raise ValueError("speed must list one multiplier per worker")
        if any(s <= 0 for s in cfg.speed):
            raise ValueError("speed multipliers must be > 0")


def run_distributed(model: LossModel, ds: Dataset, cfg: DistributedConfig,
                    stop_when: Callable[[np.ndarray], bool] | None = None,
                    ) -> DistributedResult:
    """Execute a distributed vrlite run to its epoch budget.

    stop_when, evaluated on the central iterate at each snapshot, ends a
    simulated run early (used by stepsize sweeps); it is not supported
    under the socket transport. A non-finite central iterate always
    stops the run and flags it diverged.
    """
    _validate(cfg, len(ds))
    if stop_when is not None and cfg.transport == "socket":
        raise ValueError("early stopping requires the simulated transport")

    p = cfg.workers
    shards = shard_dataset(ds, p, shard_rng(cfg.seed))
    wrngs = [optimizer_rng(cfg.seed, s) for s in range(p)]
    speed = tuple(cfg.speed) if cfg.speed is not None else (1.0,) * p

    boot = vrlite_init(model, shards[0].dataset, cfg.eta, wrngs[0],
                       cfg.accum_grad)
    sgd_evals = GRAD_EVALS_PER_SGD_STEP[cfg.accum_grad]
    clock = (len(shards[0].dataset) * sgd_evals * cfg.step_cost / speed[0]
             + cfg.latency)
    snapshots = [EpochSnapshot(1, clock, boot.x.copy())]
    workers = [init_worker(s, boot.x, boot.averages.x_bar, boot.averages.g_bar)
               for s in range(p)]
    if cfg.mode == "sync":
        central = central_sync_state(boot.x, boot.averages.x_bar,
                                     boot.averages.g_bar, p)
    else:
        central = central_async_state(ds.dimension, p)

    diverged = not np.isfinite(boot.x).all()
    stopped = diverged or (stop_when is not None and stop_when(boot.x))

    if not stopped and cfg.epochs > 1:
        if cfg.transport == "sim":
            if cfg.mode == "sync":
                diverged = _sim_sync(model, shards, cfg, speed, wrngs, workers,
                                     central, snapshots, clock, stop_when)
            else:
                diverged = _sim_async(model, shards, cfg, speed, wrngs, workers,
                                      central, snapshots, clock, stop_when)
        else:
            diverged = _socket_run(model, shards, cfg, wrngs, workers, central,
                                   snapshots, boot)

    return DistributedResult(x=central.x.copy(), x_bar=central.x_bar.copy(),
                             g_bar=central.g_bar.copy(), central=central,
                             workers=workers, snapshots=snapshots,
                             diverged=diverged)


def _sim_sync(model, shards, cfg, speed, wrngs, workers, central, snapshots,
              clock, stop_when) -> bool:
    p = cfg.workers
    vr_evals = GRAD_EVALS_PER_VR_STEP[cfg.accum_grad]
    for epoch in range(2, cfg.epochs + 1):
        reports = []
        costs = []
        for s in range(p):
            workers[s], msg = worker_sync_epoch(workers[s], shards[s], model,
                                                cfg.eta, wrngs[s],
                                                cfg.accum_grad)
            reports.append(msg)
            costs.append(len(shards[s].dataset) * vr_evals * cfg.step_cost
                         / speed[s])
        # Barrier: the round closes when the slowest report arrives, then
        # the broadcast costs one more latency hop.
        clock += max(costs) + 2.0 * cfg.latency
        gmsg = central_sync_aggregate(reports, p)
        central.x[:] = gmsg.v1
        central.x_bar[:] = gmsg.v2
        central.g_bar[:] = gmsg.v3
        central.reports_seen += 1
        for s in range(p):
            workers[s] = adopt_global_state(workers[s], gmsg)
        snapshots.append(EpochSnapshot(epoch, clock, gmsg.v1.copy()))
        if not np.isfinite(gmsg.v1).all():
            return True
        if stop_when is not None and stop_when(gmsg.v1):
            return False
    return False


def _sim_async(model, shards, cfg, speed, wrngs, workers, central, snapshots,
               clock, stop_when) -> bool:
    p = cfg.workers
    vr_evals = GRAD_EVALS_PER_VR_STEP[cfg.accum_grad]
    srng = scheduler_rng(cfg.seed)

    def compute_cost(s):
        return len(shards[s].dataset) * vr_evals * cfg.step_cost / speed[s]

    # (ready_time, worker, message) for reports in flight.
    pending: list[list] = []
    for s in range(p):
        workers[s], msg = worker_async_epoch(workers[s], shards[s], model,
                                             cfg.eta, wrngs[s], cfg.accum_grad)
        pending.append([clock + compute_cost(s) + cfg.latency, s, msg])

    applies = 0
    now = clock
    while pending:
        tmin = min(item[0] for item in pending)
        tied = [k for k, item in enumerate(pending) if item[0] == tmin]
        choice = tied[int(srng.integers(len(tied)))] if len(tied) > 1 else tied[0]
        ready, s, msg = pending.pop(choice)
        now = max(now, ready)
        _, reply = central_async_apply(central, msg)
        applies += 1
        arrival = now + cfg.latency
        workers[s] = adopt_global_state(workers[s], reply)
        if workers[s].epoch < cfg.epochs:
            workers[s], nxt = worker_async_epoch(workers[s], shards[s], model,
                                                 cfg.eta, wrngs[s],
                                                 cfg.accum_grad)
            pending.append([arrival + compute_cost(s) + cfg.latency, s, nxt])
        if applies % p == 0:
            epoch = 1 + applies // p
            snapshots.append(EpochSnapshot(epoch, now, central.x.copy()))
            if not np.isfinite(central.x).all():
                return True
            if stop_when is not None and stop_when(central.x):
                return False
    return False


# ---------------------------------------------------------------------------
# Socket transport


def _recv_exact(conn, nbytes: int) -> bytes | None:
    """Read exactly nbytes; None on clean EOF at a frame boundary."""
    chunks = []
    got = 0
    while got < nbytes:
        chunk = conn.recv(nbytes - got)
        if not chunk:
            if got == 0:
                return None
            raise DecodeError("connection closed mid-frame", offset=got)
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def _read_frame(conn, expected_d: int) -> ProtocolMessage | None:
    head = _recv_exact(conn, 4)
    if head is None:
        return None
    (payload_len,) = struct.unpack("<I", head)
    limit = 9 + 3 * 8 * expected_d
    if payload_len > limit:
        raise DecodeError(
            f"length mismatch: declared {payload_len} payload bytes, "
            f"connection allows at most {limit}", offset=0)
    body = _recv_exact(conn, payload_len)
    if body is None or len(body) != payload_len:
        raise DecodeError("connection closed mid-frame", offset=4)
    return decode_message(head + body, expected_d=expected_d)


def _socket_run(model, shards, cfg, wrngs, workers, central, snapshots,
                boot) -> bool:
    """Run the configured rounds over localhost TCP. Returns the
    diverged flag. Worker threads own their shard, rng and connection;
    the central loop in this thread serializes every state change."""
    p = cfg.workers
    d = shards[0].dataset.dimension
    epochs = cfg.epochs
    errors: list[BaseException] = []
    final_states: dict[int, object] = {}

    listener = socket.create_server(("127.0.0.1", 0))
    listener.settimeout(_SOCKET_TIMEOUT)
    port = listener.getsockname()[1]

    def worker_main(s: int):
        try:
            conn = socket.create_connection(("127.0.0.1", port),
                                            timeout=_SOCKET_TIMEOUT)
            with conn:
                conn.sendall(encode_handshake(d))
                hello = _read_frame(conn, d)
                if hello is None:
                    raise RuntimeError(f"worker {s}: no initial broadcast")
                w = init_worker(s, hello.v1, hello.v2, hello.v3)
                step = (worker_sync_epoch if cfg.mode == "sync"
                        else worker_async_epoch)
                for _ in range(2, epochs + 1):
                    w, msg = step(w, shards[s], model, cfg.eta, wrngs[s],
                                  cfg.accum_grad)
                    conn.sendall(encode_message(msg))
                    reply = _read_frame(conn, d)
                    if reply is None:
                        raise RuntimeError(f"worker {s}: central hung up")
                    w = adopt_global_state(w, reply)
                final_states[s] = w
        except BaseException as exc:  # surfaced in the driver thread
            errors.append(exc)

    threads = [threading.Thread(target=worker_main, args=(s,), daemon=True)
               for s in range(p)]
    for t in threads:
        t.start()

    t0 = time.perf_counter()
    diverged = False
    conns = []
    try:
        with listener:
            for _ in range(p):
                conn, _addr = listener.accept()
                conn.settimeout(_SOCKET_TIMEOUT)
                conns.append(conn)
        hello = ProtocolMessage(MessageTag.GLOBAL_STATE, 0, 1, boot.x,
                                boot.averages.x_bar, boot.averages.g_bar)
        hello_bytes = encode_message(hello)
        for conn in conns:
            got = _recv_exact(conn, 9)
            if got is None:
                raise RuntimeError("worker disconnected before handshake")
            if decode_handshake(got) != d:
                raise DecodeError("handshake dimension disagrees with dataset",
                                  offset=5)
            conn.sendall(hello_bytes)

        if cfg.mode == "sync":
            for epoch in range(2, epochs + 1):
                reports = [_read_frame(conn, d) for conn in conns]
                if any(r is None for r in reports):
                    raise RuntimeError("worker hung up before the barrier")
                gmsg = central_sync_aggregate(reports, p)
                central.x[:] = gmsg.v1
                central.x_bar[:] = gmsg.v2
                central.g_bar[:] = gmsg.v3
                central.reports_seen += 1
                out = encode_message(gmsg)
                for conn in conns:
                    conn.sendall(out)
                clock = (time.perf_counter() - t0) * 1000.0
                snapshots.append(EpochSnapshot(epoch, clock, gmsg.v1.copy()))
                # Keep the protocol running to budget even when the
                # iterate blows up; breaking here would strand workers.
                diverged = diverged or not np.isfinite(gmsg.v1).all()
        else:
            inbox: queue.Queue = queue.Queue()

            def reader(idx: int, conn):
                try:
                    while True:
                        msg = _read_frame(conn, d)
                        if msg is None:
                            return
                        inbox.put((idx, msg))
                except BaseException as exc:
                    errors.append(exc)

            readers = [threading.Thread(target=reader, args=(i, c), daemon=True)
                       for i, c in enumerate(conns)]
            for t in readers:
                t.start()
            expected = p * (epochs - 1)
            for k in range(expected):
                idx, msg = inbox.get(timeout=_SOCKET_TIMEOUT)
                _, reply = central_async_apply(central, msg)
                conns[idx].sendall(encode_message(reply))
                if (k + 1) % p == 0:
                    epoch = 1 + (k + 1) // p
                    clock = (time.perf_counter() - t0) * 1000.0
                    snapshots.append(EpochSnapshot(epoch, clock,
                                                   central.x.copy()))
                    diverged = diverged or not np.isfinite(central.x).all()
        for t in threads:
            t.join(timeout=_SOCKET_TIMEOUT)
    finally:
        for conn in conns:
            conn.close()

    if errors:
        raise RuntimeError(f"distributed run aborted: {errors[0]!r}") from errors[0]
    for s, w in final_states.items():
        workers[s] = w
    return diverged
