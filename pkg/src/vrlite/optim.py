"""Sequential stochastic optimizers over a Dataset.

The headline method ("vrlite") is variance-reduced SGD whose correction
is anchored at running epoch averages instead of a snapshot point: each
epoch keeps the mean iterate x_bar and the mean per-step gradient g_bar
of the previous epoch, and every step moves along

    grad_i(x) - grad_i(x_bar) + g_bar.

This avoids both the periodic full-gradient pass of SVRG and the
per-sample gradient table of SAGA; the price is that the correction is
biased, since g_bar is not the exact mean gradient at x_bar. SGD, SVRG
and SAGA are provided as baselines. All randomness comes from a
caller-owned numpy Generator, so trajectories are reproducible given a
seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Dataset, LossModel, _check_dim, _row_grad, _sigmoid_vec, full_gradient

ACCUM_MODES = ("post", "reuse")

# Per-sample gradient evaluations performed by one inner step, used by
# the benchmark's deterministic cost accounting.
GRAD_EVALS_PER_VR_STEP = {"post": 3, "reuse": 2}
GRAD_EVALS_PER_SGD_STEP = {"post": 2, "reuse": 1}


@dataclass
class EpochAverages:
    """Running epoch averages plus the raw accumulators behind them."""

    x_bar: np.ndarray
    g_bar: np.ndarray
    acc_x: np.ndarray
    acc_g: np.ndarray
    steps: int

    @classmethod
    def zeros(cls, d: int) -> "EpochAverages":
        return cls(np.zeros(d), np.zeros(d), np.zeros(d), np.zeros(d), 0)


@dataclass
class OptState:
    """Iterate plus the averages carried between epochs."""

    x: np.ndarray
    averages: EpochAverages
    epoch_index: int
    rng_seed: int | None = None


@dataclass
class PermutationSampler:
    """One shuffled pass over indices 0..n-1, consumed at most once."""

    order: np.ndarray
    cursor: int = 0

    def __iter__(self):
        return self

    def __next__(self) -> int:
        if self.cursor >= self.order.shape[0]:
            raise StopIteration
        i = int(self.order[self.cursor])
        self.cursor += 1
        return i


def permutation(n: int, rng: np.random.Generator) -> PermutationSampler:
    """Uniform random permutation of 0..n-1 drawn from rng."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return PermutationSampler(order=rng.permutation(n))


def vr_step(x, grad_x, grad_ref, grad_avg, eta):
    """One corrected step: x - eta * (grad_x - grad_ref + grad_avg)."""
    return x - eta * (grad_x - grad_ref + grad_avg)


def vrlite_step(model: LossModel, sample, x, averages: EpochAverages, eta: float):
    """Apply one vrlite update for the given sample.

    The correction gradient is taken at the previous epoch's mean
    iterate, and the previous epoch's mean step gradient stands in for
    the full gradient.
    """
    logistic = model.kind == "logistic"
    lam2 = 2.0 * model.lam
    g_x = _row_grad(logistic, lam2, sample.features, sample.label, x)
    g_ref = _row_grad(logistic, lam2, sample.features, sample.label, averages.x_bar)
    return vr_step(x, g_x, g_ref, averages.g_bar, eta)


def _check_eta(eta: float):
    if not (np.isfinite(eta) and eta >= 0.0):
        raise ValueError("eta must be finite and >= 0")


def _check_accum(accum_grad: str):
    if accum_grad not in ACCUM_MODES:
        raise ValueError(f"accum_grad must be one of {ACCUM_MODES}")


def _run_vr_epoch(model, ds, x, x_bar, g_bar, eta, order, accum_grad):
    """Inner vrlite epoch; returns (x, EpochAverages for this epoch)."""
    logistic = model.kind == "logistic"
    lam2 = 2.0 * model.lam
    reuse = accum_grad == "reuse"
    F, L = ds.features, ds.labels
    acc_x = np.zeros_like(x)
    acc_g = np.zeros_like(x)
    steps = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in order:
            a = F[i]
            b = L[i]
            g_x = _row_grad(logistic, lam2, a, b, x)
            g_ref = _row_grad(logistic, lam2, a, b, x_bar)
            x = vr_step(x, g_x, g_ref, g_bar, eta)
            acc_x += x
            acc_g += g_x if reuse else _row_grad(logistic, lam2, a, b, x)
            steps += 1
    return x, EpochAverages(acc_x / steps, acc_g / steps, acc_x, acc_g, steps)


def _run_sgd_epoch(model, ds, x, eta, order, accum_grad):
    """Plain SGD epoch that maintains the same accumulators as the vr
    epoch, so it can both bootstrap vrlite and serve as a fair baseline."""
    logistic = model.kind == "logistic"
    lam2 = 2.0 * model.lam
    reuse = accum_grad == "reuse"
    F, L = ds.features, ds.labels
    acc_x = np.zeros_like(x)
    acc_g = np.zeros_like(x)
    steps = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in order:
            a = F[i]
            b = L[i]
            g = _row_grad(logistic, lam2, a, b, x)
            x = x - eta * g
            acc_x += x
            acc_g += g if reuse else _row_grad(logistic, lam2, a, b, x)
            steps += 1
    return x, EpochAverages(acc_x / steps, acc_g / steps, acc_x, acc_g, steps)


def initial_state(d: int) -> OptState:
    """Zero iterate with zeroed averages, epoch counter at 0."""
    return OptState(x=np.zeros(d), averages=EpochAverages.zeros(d), epoch_index=0)


def vrlite_init(model: LossModel, ds: Dataset, eta: float,
                rng: np.random.Generator, accum_grad: str = "post") -> OptState:
    """Bootstrap pass: one plain-SGD epoch from x = 0 whose accumulators
    seed the first usable (x_bar, g_bar) pair.

    accum_grad picks where the accumulated gradient is evaluated: "post"
    evaluates it at the just-updated iterate (one extra gradient per
    step), "reuse" reuses the step gradient already in hand.
    """
    _check_eta(eta)
    _check_accum(accum_grad)
    order = permutation(len(ds), rng)
    x, averages = _run_sgd_epoch(model, ds, np.zeros(ds.dimension), eta, order,
                                 accum_grad)
    return OptState(x=x, averages=averages, epoch_index=1)


def vrlite_epoch(state: OptState, model: LossModel, ds: Dataset, eta: float,
                 rng: np.random.Generator, accum_grad: str = "post") -> OptState:
    """One vrlite epoch: a full without-replacement pass in permutation
    order, corrected by the previous epoch's averages."""
    _check_eta(eta)
    _check_accum(accum_grad)
    order = permutation(len(ds), rng)
    x, averages = _run_vr_epoch(model, ds, state.x, state.averages.x_bar,
                                state.averages.g_bar, eta, order, accum_grad)
    return OptState(x=x, averages=averages, epoch_index=state.epoch_index + 1,
                    rng_seed=state.rng_seed)


def sgd_epoch(state: OptState, model: LossModel, ds: Dataset, eta: float,
              rng: np.random.Generator, accum_grad: str = "post") -> OptState:
    """One plain-SGD epoch in permutation order. Keeps the same epoch
    accumulators as vrlite for fair instrumentation; they do not feed
    back into the updates."""
    _check_eta(eta)
    _check_accum(accum_grad)
    order = permutation(len(ds), rng)
    x, averages = _run_sgd_epoch(model, ds, state.x, eta, order, accum_grad)
    return OptState(x=x, averages=averages, epoch_index=state.epoch_index + 1,
                    rng_seed=state.rng_seed)


def svrg_epoch(x: np.ndarray, model: LossModel, ds: Dataset, eta: float,
               rng: np.random.Generator, inner_steps: int | None = None) -> np.ndarray:
    """One SVRG round: snapshot the iterate, take the exact full gradient
    there, then run inner corrected steps with indices drawn uniformly
    with replacement. Returns the last inner iterate.

    inner_steps defaults to 2n. All inner indices are drawn from rng up
    front, so the consumption of randomness is well defined.
    """
    _check_eta(eta)
    n = len(ds)
    inner = 2 * n if inner_steps is None else inner_steps
    if inner < 0:
        raise ValueError("inner_steps must be >= 0")
    y = x.copy()
    g_full = full_gradient(model, ds, y)
    idx = rng.integers(0, n, size=inner)
    logistic = model.kind == "logistic"
    lam2 = 2.0 * model.lam
    F, L = ds.features, ds.labels
    with np.errstate(over="ignore", invalid="ignore"):
        for i in idx:
            a = F[i]
            b = L[i]
            g_x = _row_grad(logistic, lam2, a, b, x)
            g_ref = _row_grad(logistic, lam2, a, b, y)
            x = vr_step(x, g_x, g_ref, g_full, eta)
    return x


@dataclass
class SagaState:
    """Per-sample gradient table and its incrementally maintained mean."""

    grad_table: np.ndarray  # (n, d)
    table_mean: np.ndarray  # (d,)


def saga_init(model: LossModel, ds: Dataset, x0: np.ndarray) -> SagaState:
    """Fill the gradient table with per-sample gradients at x0."""
    _check_dim(x0.shape[0], ds.dimension)
    z = ds.features @ x0
    if model.kind == "logistic":
        coefs = ds.labels * _sigmoid_vec(ds.labels * z)
    else:
        coefs = 2.0 * (z - ds.labels)
    table = coefs[:, None] * ds.features + (2.0 * model.lam) * x0
    return SagaState(grad_table=table, table_mean=table.mean(axis=0))


def saga_step(x: np.ndarray, i: int, model: LossModel, ds: Dataset,
              st: SagaState, eta: float) -> tuple[np.ndarray, SagaState]:
    """One SAGA update for sample i. The state is modified in place and
    returned: the table entry is refreshed with the gradient at the
    pre-update iterate and the mean is adjusted incrementally."""
    n = len(ds)
    if not 0 <= i < n:
        raise IndexError(f"sample index {i} out of range for n={n}")
    logistic = model.kind == "logistic"
    lam2 = 2.0 * model.lam
    with np.errstate(over="ignore", invalid="ignore"):
        g = _row_grad(logistic, lam2, ds.features[i], float(ds.labels[i]), x)
        delta = g - st.grad_table[i]
        x_new = x - eta * (delta + st.table_mean)
        st.table_mean += delta / n
        st.grad_table[i] = g
    return x_new, st


def saga_epoch(x: np.ndarray, model: LossModel, ds: Dataset, st: SagaState,
               eta: float, rng: np.random.Generator) -> tuple[np.ndarray, SagaState]:
    """n SAGA steps with indices drawn uniformly with replacement."""
    _check_eta(eta)
    n = len(ds)
    for i in rng.integers(0, n, size=n):
        x, st = saga_step(x, int(i), model, ds, st, eta)
    return x, st
