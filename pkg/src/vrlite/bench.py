"""Benchmark driver: experiment configs, per-epoch metric rows, the
stepsize sweep, and deterministic CSV output.

Per-epoch timing is a virtual clock, not wall time: each per-sample
gradient evaluation costs one unit and each simulated message hop costs
the configured latency. That keeps CSV output byte-identical across
repeated runs with the same config and seed. Only the socket transport
reports real elapsed milliseconds.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .data import SyntheticSpec, gen_gaussian_classification, gen_linear_regression, load_libsvm
from .distributed.engine import DistributedConfig, run_distributed
from .model import (
    DEFAULT_LAMBDA,
    Dataset,
    LossModel,
    full_gradient,
    objective,
)
from .optim import (
    GRAD_EVALS_PER_SGD_STEP,
    GRAD_EVALS_PER_VR_STEP,
    initial_state,
    saga_epoch,
    saga_init,
    sgd_epoch,
    svrg_epoch,
    vrlite_epoch,
    vrlite_init,
)
from .seeding import optimizer_rng

ALGOS = ("sgd", "svrg", "saga", "vrlite")
MODES = ("seq", "sync", "async")
TRANSPORTS = ("sim", "socket")

CSV_HEADER = "algo,mode,workers,epoch,wall_ms,objective,rel_grad_norm,eta,seed"
DEFAULT_GRID = tuple((2.0 ** k) * 1e-4 for k in range(13))
DEFAULT_TARGET = 1e-6

TOY_N = 5000
TOY_D = 20


@dataclass
class ExperimentConfig:
    algo: str
    dataset: str                      # "toy-class" | "toy-reg" | "libsvm:<path>"
    eta: float | None = None
    mode: str = "seq"
    lam: float = DEFAULT_LAMBDA
    epochs: int = 30
    workers: int = 1
    transport: str = "sim"
    latency_ms: float = 0.0
    seed: int = 0
    out_path: str | None = None
    target_rel: float = DEFAULT_TARGET
    stop_at_rel: float | None = None  # end a run once this metric is reached
    accum_grad: str = "post"

    def validate(self):
        if self.algo not in ALGOS:
            raise ValueError(f"algo must be one of {ALGOS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.transport not in TRANSPORTS:
            raise ValueError(f"transport must be one of {TRANSPORTS}")
        if self.mode != "seq" and self.algo != "vrlite":
            raise ValueError("distributed modes support only algo='vrlite'")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.mode == "seq" and self.workers != 1:
            raise ValueError("sequential runs use exactly one worker")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be >= 0")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be finite and >= 0")
        known = ("toy-class", "toy-reg")
        if self.dataset not in known and not self.dataset.startswith("libsvm:"):
            raise ValueError(
                f"dataset must be one of {known} or 'libsvm:<path>'")


@dataclass
class MetricsRow:
    algo: str
    mode: str
    workers: int
    epoch: int
    wall_ms: float
    objective: float
    rel_grad_norm: float
    eta: float
    seed: int


@dataclass
class ExperimentResult:
    rows: list[MetricsRow]
    diverged: bool
    eta: float
    config: ExperimentConfig


@dataclass
class EtaOutcome:
    eta: float
    epochs_to_target: int | None
    diverged: bool
    final_rel: float | None


@dataclass
class SweepResult:
    best_eta: float | None
    target_rel: float
    outcomes: list[EtaOutcome] = field(default_factory=list)


def load_dataset(cfg: ExperimentConfig) -> tuple[Dataset, LossModel]:
    """Materialize the configured dataset and the matching loss model
    (logistic for classification tasks, ridge otherwise)."""
    if cfg.dataset == "toy-class":
        ds = gen_gaussian_classification(
            SyntheticSpec(n=TOY_N, d=TOY_D, task="classification", seed=cfg.seed))
    elif cfg.dataset == "toy-reg":
        ds, _ = gen_linear_regression(
            SyntheticSpec(n=TOY_N, d=TOY_D, task="regression", seed=cfg.seed))
    else:
        path = cfg.dataset.split(":", 1)[1]
        ds = load_libsvm(path)
    kind = "logistic" if ds.task == "classification" else "ridge"
    return ds, LossModel(kind, cfg.lam)


def _metrics(model, ds, x, norm0):
    with np.errstate(over="ignore", invalid="ignore"):
        obj = objective(model, ds, x)
        rel = float(np.linalg.norm(full_gradient(model, ds, x)) / norm0)
    return obj, rel


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the configured optimizer for the epoch budget, recording one
    row per epoch (epoch 0 is the all-zeros starting point). On a
    non-finite iterate or metric the run stops and is flagged diverged;
    no non-finite row is emitted. Writes CSV to cfg.out_path when set."""
    cfg.validate()
    if cfg.eta is None:
        raise ValueError("eta is required (or use stepsize_sweep)")
    ds, model = load_dataset(cfg)
    d = ds.dimension
    x0 = np.zeros(d)
    norm0 = float(np.linalg.norm(full_gradient(model, ds, x0)))
    if norm0 == 0.0:
        raise ValueError("gradient at the zero iterate is zero; nothing to run")

    def row(epoch, wall, x):
        obj, rel = _metrics(model, ds, x, norm0)
        return MetricsRow(cfg.algo, cfg.mode, cfg.workers, epoch, wall, obj,
                          rel, cfg.eta, cfg.seed), math.isfinite(obj) and math.isfinite(rel)

    first, _ = row(0, 0.0, x0)
    rows = [first]
    diverged = False

    if cfg.epochs > 0:
        if cfg.mode == "seq":
            diverged = _run_sequential(cfg, model, ds, rows, row)
        else:
            diverged = _run_distributed_rows(cfg, model, ds, rows, row, norm0)

    result = ExperimentResult(rows=rows, diverged=diverged, eta=cfg.eta,
                              config=cfg)
    if cfg.out_path:
        write_csv(rows, cfg.out_path)
    return result


def _run_sequential(cfg, model, ds, rows, row) -> bool:
    n = len(ds)
    rng = optimizer_rng(cfg.seed)
    stop_at = cfg.stop_at_rel
    wall = 0.0
    sgd_cost = n * GRAD_EVALS_PER_SGD_STEP[cfg.accum_grad]
    vr_cost = n * GRAD_EVALS_PER_VR_STEP[cfg.accum_grad]

    if cfg.algo == "vrlite":
        state = vrlite_init(model, ds, cfg.eta, rng, cfg.accum_grad)
        wall += sgd_cost
        r, ok = row(1, wall, state.x)
        if not ok or not np.isfinite(state.x).all():
            return True
        rows.append(r)
        if stop_at is not None and r.rel_grad_norm <= stop_at:
            return False
        for epoch in range(2, cfg.epochs + 1):
            state = vrlite_epoch(state, model, ds, cfg.eta, rng, cfg.accum_grad)
            wall += vr_cost
            r, ok = row(epoch, wall, state.x)
            if not ok or not np.isfinite(state.x).all():
                return True
            rows.append(r)
            if stop_at is not None and r.rel_grad_norm <= stop_at:
                return False
        return False

    if cfg.algo == "sgd":
        state = initial_state(ds.dimension)
        for epoch in range(1, cfg.epochs + 1):
            state = sgd_epoch(state, model, ds, cfg.eta, rng, cfg.accum_grad)
            wall += sgd_cost
            r, ok = row(epoch, wall, state.x)
            if not ok or not np.isfinite(state.x).all():
                return True
            rows.append(r)
            if stop_at is not None and r.rel_grad_norm <= stop_at:
                return False
        return False

    if cfg.algo == "svrg":
        x = np.zeros(ds.dimension)
        epoch_cost = n + (2 * n) * 2  # snapshot pass plus 2n two-gradient steps
        for epoch in range(1, cfg.epochs + 1):
            x = svrg_epoch(x, model, ds, cfg.eta, rng)
            wall += epoch_cost
            r, ok = row(epoch, wall, x)
            if not ok or not np.isfinite(x).all():
                return True
            rows.append(r)
            if stop_at is not None and r.rel_grad_norm <= stop_at:
                return False
        return False

    # saga
    x = np.zeros(ds.dimension)
    st = saga_init(model, ds, x)
    wall += n  # filling the table costs one gradient pass
    for epoch in range(1, cfg.epochs + 1):
        x, st = saga_epoch(x, model, ds, st, cfg.eta, rng)
        wall += n
        r, ok = row(epoch, wall, x)
        if not ok or not np.isfinite(x).all():
            return True
        rows.append(r)
        if stop_at is not None and r.rel_grad_norm <= stop_at:
            return False
    return False


def _run_distributed_rows(cfg, model, ds, rows, row, norm0) -> bool:
    stop_at = cfg.stop_at_rel
    stop_when = None
    if stop_at is not None and cfg.transport == "sim":
        def stop_when(x):
            with np.errstate(over="ignore", invalid="ignore"):
                rel = float(np.linalg.norm(full_gradient(model, ds, x)) / norm0)
            return math.isfinite(rel) and rel <= stop_at

    dcfg = DistributedConfig(
        mode=cfg.mode,
        workers=cfg.workers,
        epochs=cfg.epochs,
        eta=cfg.eta,
        seed=cfg.seed,
        transport=cfg.transport,
        latency=cfg.latency_ms,
        accum_grad=cfg.accum_grad,
    )
    result = run_distributed(model, ds, dcfg, stop_when=stop_when)
    diverged = result.diverged
    for snap in result.snapshots:
        r, ok = row(snap.epoch, snap.clock_ms, snap.x)
        if not ok:
            diverged = True
            break
        rows.append(r)
    return diverged


def epochs_to_target(rows: list[MetricsRow], target: float) -> int | None:
    """First epoch at which the metric is at or below target."""
    for r in rows:
        if r.rel_grad_norm <= target:
            return r.epoch
    return None


def stepsize_sweep(cfg: ExperimentConfig, grid=None) -> SweepResult:
    """Run cfg at every stepsize in the grid and pick the best.

    Best means fewest epochs to reach cfg.target_rel; ties go to the
    smaller stepsize, so the answer does not depend on grid order.
    Diverged runs and runs that never reach the target are excluded.
    best_eta is None when nothing qualifies."""
    grid = DEFAULT_GRID if grid is None else tuple(grid)
    if not grid or any(not (g > 0 and math.isfinite(g)) for g in grid):
        raise ValueError("sweep grid must contain positive finite stepsizes")
    outcomes = []
    for eta in grid:
        run_cfg = replace(cfg, eta=float(eta), stop_at_rel=cfg.target_rel,
                          out_path=None)
        res = run_experiment(run_cfg)
        reached = epochs_to_target(res.rows, cfg.target_rel)
        final = res.rows[-1].rel_grad_norm if res.rows else None
        outcomes.append(EtaOutcome(float(eta), reached, res.diverged, final))
    candidates = [(o.epochs_to_target, o.eta) for o in outcomes
                  if not o.diverged and o.epochs_to_target is not None]
    best = min(candidates)[1] if candidates else None
    return SweepResult(best_eta=best, target_rel=cfg.target_rel,
                       outcomes=outcomes)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def render_csv(rows: list[MetricsRow]) -> str:
    """CSV text: fixed header, 17-significant-digit reals, LF endings."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            r.algo, r.mode, str(r.workers), str(r.epoch), _fmt(r.wall_ms),
            _fmt(r.objective), _fmt(r.rel_grad_norm), _fmt(r.eta), str(r.seed),
        ]))
    return "\n".join(lines) + "\n"


def write_csv(rows: list[MetricsRow], path: str | os.PathLike):
    """Atomically write the rows: the file appears complete or not at all."""
    text = render_csv(rows)
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
