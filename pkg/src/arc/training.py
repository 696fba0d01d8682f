"""Training engine: AMSGrad steps, the decaying learning-rate schedule with
plateau drops, 16+16 rotation-augmented minibatches, and evaluation with
confusion matrices.

Everything is deterministic given the seed: batch draws, rotation angles,
dropout masks and initialization all come from generators spawned off one
seed sequence, and training is a single logical thread.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import dataset as dataset_mod
from .errors import ConfigError, NumericalError
from .nn import Network, build_arc_network, checkpoint_from_network, cross_entropy
from .preprocess import PipelineConfig
from .raster import rotate

log = logging.getLogger(__name__)

METRICS_HEADER = "epoch,lr,train_loss,train_acc,val_loss,val_acc"


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


@dataclass
class MomentState:
    """Per-parameter AMSGrad state: first/second moments and the running max
    of the second moment."""

    m: np.ndarray
    v: np.ndarray
    vhat: np.ndarray

    @classmethod
    def zeros_like(cls, param: np.ndarray) -> "MomentState":
        return cls(np.zeros_like(param), np.zeros_like(param), np.zeros_like(param))


def amsgrad_update(
    param: np.ndarray,
    grad: np.ndarray,
    state: MomentState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """One in-place AMSGrad step (canonical form, no bias correction).

    g = grad + wd * param; m and v are the usual exponential moments;
    vhat = max(vhat, v); param -= lr * m / (sqrt(vhat) + eps).
    """
    g = grad + weight_decay * param if weight_decay else grad
    state.m *= beta1
    state.m += (1.0 - beta1) * g
    state.v *= beta2
    state.v += (1.0 - beta2) * g * g
    np.maximum(state.vhat, state.v, out=state.vhat)
    param -= lr * state.m / (np.sqrt(state.vhat) + eps)


class AmsGrad:
    """AMSGrad over a network's parameter slots.

    Weight decay applies only to slots flagged for it (conv and dense weights
    and biases; not batch-norm or PReLU parameters). A non-finite gradient
    aborts the whole step before any parameter or state mutates.
    """

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8, weight_decay: float = 0.01):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.state: dict[str, MomentState] = {}
        self.t = 0

    def step(self, slots, lr: float) -> None:
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        pending = []
        for name, layer, key, decay in slots:
            grad = layer.grads.get(key)
            if grad is None:
                raise NumericalError(f"no gradient for {name}; run backward first")
            if not np.isfinite(grad).all():
                raise NumericalError(f"non-finite gradient in {name}; step aborted")
            pending.append((name, layer, key, decay, grad))
        for name, layer, key, decay, grad in pending:
            param = layer.params[key]
            st = self.state.get(name)
            if st is None:
                st = MomentState.zeros_like(param)
                self.state[name] = st
            wd = self.weight_decay if decay else 0.0
            amsgrad_update(param, grad, st, lr, self.beta1, self.beta2, self.eps, wd)
        self.t += 1


# ---------------------------------------------------------------------------
# Learning-rate schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    base_lr: float = 0.001
    decay_a: float = 0.96  # per epoch up to the switch epoch
    decay_b: float = 0.75  # per epoch after it
    decay_switch: int = 20
    plateau_factor: float = 0.1
    plateau_patience: int = 5
    plateau_min_delta: float = 1e-4


def plateau_events(val_losses, patience: int, min_delta: float) -> int:
    """Count plateau triggers: no improvement over the running best by more
    than min_delta for `patience` consecutive epochs; the window resets after
    each trigger."""
    best = math.inf
    streak = 0
    events = 0
    for loss in val_losses:
        if loss < best - min_delta:
            best = loss
            streak = 0
        else:
            streak += 1
            if streak >= patience:
                events += 1
                streak = 0
    return events


def lr_at(epoch: int, schedule: Schedule = Schedule(), val_history=()) -> float:
    """Learning rate for a zero-based epoch given the validation-loss history
    of all previous epochs."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    s = schedule
    lr = s.base_lr * s.decay_a ** min(epoch, s.decay_switch) * s.decay_b ** max(0, epoch - s.decay_switch)
    events = plateau_events(val_history, s.plateau_patience, s.plateau_min_delta)
    return lr * s.plateau_factor**events


# ---------------------------------------------------------------------------
# Batch assembly
# ---------------------------------------------------------------------------


def assemble_minibatch(pool, rng: np.random.Generator, half: int = 16):
    """Draw `half` distinct examples and append a 90/180/270-rotated copy of
    each (lossless rotation path), doubling the batch.

    A pool smaller than `half` is padded by resampling with replacement.
    """
    n = len(pool)
    if n == 0:
        raise ConfigError("empty training pool")
    if n >= half:
        idx = rng.choice(n, size=half, replace=False)
    else:
        log.warning("pool of %d smaller than %d; resampling with replacement", n, half)
        idx = np.concatenate([np.arange(n), rng.choice(n, size=half - n, replace=True)])
    picked = [pool[int(i)] for i in idx]
    batch = list(picked)
    for img, label in picked:
        k = int(rng.integers(1, 4))
        batch.append((rotate(img, 90.0 * k), label))
    return batch


def batch_to_tensors(batch, dtype=np.float32):
    """Stack (raster, one-hot) pairs into network tensors; pixels scaled to [0, 1]."""
    x = np.stack([img.transpose(2, 0, 1) for img, _ in batch]).astype(dtype) / 255.0
    y = np.stack([label for _, label in batch]).astype(dtype)
    return x, y


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass
class ConfusionMatrix:
    """True-class by predicted-class counts with a row-percentage view."""

    counts: np.ndarray

    def percentages(self) -> np.ndarray:
        c = self.counts.astype(np.float64)
        sums = c.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = np.where(sums > 0, c / sums * 100.0, 0.0)
        return pct

    def confused_rows(self) -> list[int]:
        off = self.counts.copy()
        np.fill_diagonal(off, 0)
        return [int(i) for i in np.nonzero(off.sum(axis=1))[0]]

    def counts_csv(self) -> str:
        return "\n".join(",".join(str(int(v)) for v in row) for row in self.counts) + "\n"

    def percentages_csv(self) -> str:
        pct = self.percentages()
        return "\n".join(",".join(f"{v:.4f}" for v in row) for row in pct) + "\n"


@dataclass
class EvalResult:
    accuracy: float
    loss: float
    confusion: ConfusionMatrix


def evaluate(network: Network, pool, batch_size: int = 64) -> EvalResult:
    """Top-1 accuracy, mean loss, and the confusion matrix over a split."""
    if len(pool) == 0:
        raise ConfigError("cannot evaluate an empty split")
    was_training = network.training
    network.eval()
    try:
        k = len(pool[0][1])
        counts = np.zeros((k, k), dtype=np.int64)
        loss_sum = 0.0
        correct = 0
        for start in range(0, len(pool), batch_size):
            chunk = pool[start : start + batch_size]
            x, y = batch_to_tensors(chunk, network.dtype)
            probs = network.forward(x)
            loss, _ = cross_entropy(probs, y)
            loss_sum += loss * len(chunk)
            pred = probs.argmax(axis=-1)
            true = y.argmax(axis=-1)
            correct += int((pred == true).sum())
            np.add.at(counts, (true, pred), 1)
        total = len(pool)
        return EvalResult(correct / total, loss_sum / total, ConfusionMatrix(counts))
    finally:
        network.training = was_training


# ---------------------------------------------------------------------------
# Trainer
# ---------------------------------------------------------------------------


@dataclass
class EpochStats:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float

    def csv_line(self) -> str:
        return ",".join(
            [str(self.epoch), repr(self.lr), repr(self.train_loss), repr(self.train_acc), repr(self.val_loss), repr(self.val_acc)]
        )


class Trainer:
    """Single-writer training loop over in-memory pools of (raster, one-hot)."""

    def __init__(
        self,
        network: Network,
        train_pool,
        val_pool=None,
        schedule: Schedule = Schedule(),
        optimizer: AmsGrad | None = None,
        seed=0,
        batch_size: int = 32,
        steps_per_epoch: int | None = None,
    ):
        if batch_size % 2 != 0:
            raise ConfigError("batch size must be even (half fresh, half rotated)")
        self.network = network
        self.train_pool = train_pool
        self.val_pool = val_pool or []
        self.schedule = schedule
        self.optimizer = optimizer or AmsGrad()
        self.half = batch_size // 2
        self.steps_per_epoch = steps_per_epoch or max(1, len(train_pool) // self.half)
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        batch_ss, dropout_ss = ss.spawn(2)
        self.batch_rng = np.random.default_rng(batch_ss)
        self.dropout_rng = np.random.default_rng(dropout_ss)
        self.epoch = 0
        self.val_history: list[float] = []
        self.history: list[EpochStats] = []

    def run_epoch(self) -> EpochStats:
        lr = lr_at(self.epoch, self.schedule, self.val_history)
        net = self.network
        net.train()
        loss_sum = 0.0
        correct = 0
        seen = 0
        for _ in range(self.steps_per_epoch):
            batch = assemble_minibatch(self.train_pool, self.batch_rng, self.half)
            x, y = batch_to_tensors(batch, net.dtype)
            probs = net.forward(x, rng=self.dropout_rng)
            loss, grad_logits = cross_entropy(probs, y)
            net.backward_from_logits(grad_logits)
            self.optimizer.step(net.parameters(), lr)
            loss_sum += loss * len(batch)
            correct += int((probs.argmax(-1) == y.argmax(-1)).sum())
            seen += len(batch)
        net.eval()
        if self.val_pool:
            val = evaluate(net, self.val_pool)
            val_loss, val_acc = val.loss, val.accuracy
            self.val_history.append(val_loss)
        else:
            val_loss = val_acc = float("nan")
        stats = EpochStats(self.epoch, lr, loss_sum / seen, correct / seen, val_loss, val_acc)
        self.history.append(stats)
        self.epoch += 1
        return stats


# ---------------------------------------------------------------------------
# Orchestrated training from a config
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    dataset_root: str
    catalog_path: str
    out_dir: str
    cache_dir: str | None = None
    seed: int = 0
    max_epochs: int = 100
    batch_size: int = 32
    fractions: tuple[float, float, float] = (0.65, 0.25, 0.10)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    num_classes: int | None = None
    dtype: str = "float32"
    checkpoint_every: int = 0
    stop_at_val_acc: float | None = None
    resume: str | None = None  # warm-start from a checkpoint (fresh optimizer state)

    def __post_init__(self):
        if self.batch_size % 2 != 0 or self.batch_size < 2:
            raise ConfigError("batch_size must be even and positive")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ConfigError("split fractions must sum to 1")

    def describe(self) -> dict:
        d = {
            "dataset_root": str(self.dataset_root),
            "catalog_path": str(self.catalog_path),
            "out_dir": str(self.out_dir),
            "cache_dir": str(self.cache_dir) if self.cache_dir else None,
            "seed": self.seed,
            "max_epochs": self.max_epochs,
            "batch_size": self.batch_size,
            "fractions": list(self.fractions),
            "pipeline": self.pipeline.to_dict(),
            "num_classes": self.num_classes,
            "dtype": self.dtype,
            "checkpoint_every": self.checkpoint_every,
            "stop_at_val_acc": self.stop_at_val_acc,
            "resume": self.resume,
        }
        return d


@dataclass
class TrainResult:
    checkpoint_path: str
    best_checkpoint_path: str
    metrics_path: str
    history: list[EpochStats]
    quarantined: list[str]


def train(config: TrainConfig) -> TrainResult:
    """Full training run from a dataset directory; deterministic per seed.

    Writes `metrics.csv`, `best.ckpt` (best validation accuracy, or best
    training accuracy when there is no validation split) and `final.ckpt`
    into the output directory. A numerical failure stops training and keeps
    the last good checkpoints.
    """
    catalog = dataset_mod.Catalog.load(config.catalog_path)
    index = dataset_mod.scan(config.dataset_root, catalog)
    index = dataset_mod.stratified_split(index, config.fractions, config.seed)
    cache = dataset_mod.PreprocessCache(config.cache_dir) if config.cache_dir else None

    train_pool, quarantined_train = dataset_mod.build_pool(index, "train", catalog, config.pipeline, cache)
    if not train_pool:
        raise ConfigError("training split is empty")
    val_pool, quarantined_val = dataset_mod.build_pool(index, "val", catalog, config.pipeline, cache)

    num_classes = config.num_classes or len(catalog)
    init_ss, trainer_ss = np.random.SeedSequence(config.seed).spawn(2)
    dtype = np.dtype(config.dtype)
    network = build_arc_network(num_classes=num_classes, rng=np.random.default_rng(init_ss), dtype=dtype)

    start_epoch = 0
    if config.resume:
        from .nn import Checkpoint

        ckpt = Checkpoint.load(config.resume)
        if ckpt.meta["num_classes"] != num_classes:
            raise ConfigError(
                f"resume checkpoint has {ckpt.meta['num_classes']} classes, expected {num_classes}"
            )
        network.load_state_arrays(ckpt.arrays)
        start_epoch = ckpt.meta["epoch"] + 1
        log.info("resumed from %s at epoch %d (optimizer state starts fresh)", config.resume, start_epoch)

    trainer = Trainer(
        network,
        train_pool,
        val_pool,
        seed=trainer_ss,
        batch_size=config.batch_size,
    )
    trainer.epoch = start_epoch

    os.makedirs(config.out_dir, exist_ok=True)
    metrics_path = os.path.join(config.out_dir, "metrics.csv")
    best_path = os.path.join(config.out_dir, "best.ckpt")
    final_path = os.path.join(config.out_dir, "final.ckpt")
    best_metric = -1.0

    with open(metrics_path, "w") as metrics:
        metrics.write(METRICS_HEADER + "\n")
        while trainer.epoch < config.max_epochs:
            try:
                stats = trainer.run_epoch()
            except NumericalError as exc:
                log.error("training aborted at epoch %d: %s", trainer.epoch, exc)
                break
            metrics.write(stats.csv_line() + "\n")
            metrics.flush()
            log.info(
                "epoch %d lr=%.3g train_loss=%.4f train_acc=%.4f val_loss=%.4f val_acc=%.4f",
                stats.epoch, stats.lr, stats.train_loss, stats.train_acc, stats.val_loss, stats.val_acc,
            )
            gate = stats.val_acc if val_pool else stats.train_acc
            if gate > best_metric:
                best_metric = gate
                checkpoint_from_network(network, epoch=stats.epoch, seed=config.seed, metrics=_metric_dict(stats)).save(best_path)
            if config.checkpoint_every and (stats.epoch + 1) % config.checkpoint_every == 0:
                snap = os.path.join(config.out_dir, f"epoch{stats.epoch:03d}.ckpt")
                checkpoint_from_network(network, epoch=stats.epoch, seed=config.seed, metrics=_metric_dict(stats)).save(snap)
            if config.stop_at_val_acc is not None and val_pool and stats.val_acc >= config.stop_at_val_acc:
                log.info("validation accuracy target reached; stopping early")
                break

    last = trainer.history[-1] if trainer.history else None
    checkpoint_from_network(
        network,
        epoch=last.epoch if last else 0,
        seed=config.seed,
        metrics=_metric_dict(last) if last else {},
    ).save(final_path)
    if not os.path.exists(best_path):
        checkpoint_from_network(network, epoch=0, seed=config.seed).save(best_path)
    return TrainResult(final_path, best_path, metrics_path, trainer.history, quarantined_train + quarantined_val)


def _metric_dict(stats: EpochStats) -> dict:
    out = {"train_loss": stats.train_loss, "train_acc": stats.train_acc}
    if not math.isnan(stats.val_loss):
        out["val_loss"] = stats.val_loss
        out["val_acc"] = stats.val_acc
    return out
