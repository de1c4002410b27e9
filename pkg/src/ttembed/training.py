"""Desk-scale training demos.

Two tasks prove the layers are trainable by plain SGD:

* matrix-fit: regress the layer onto a fixed random target matrix with
  batched mean-squared error;
* toy-classify: sentences of 8 tokens drawn from one half of the
  vocabulary, mean-pooled embedding, linear head, logistic loss, head
  and cores trained jointly.

Everything is driven by a seeded generator, single-threaded, so
identical configs produce bitwise-identical traces.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .layers import LowRankEmbedding, TTEmbedding, random_lowrank
from .planning import FactorizationPlan
from .trmatrix import random_tr
from .ttmatrix import glorot_tt

TASKS = ("matrix-fit", "toy-classify")
KINDS = ("tt", "tr", "lowrank", "dense")


class DivergenceError(RuntimeError):
    """Loss became non-finite; carries the offending step number."""

    def __init__(self, step: int):
        super().__init__(f"non-finite loss at step {step}")
        self.step = step


@dataclass
class TrainConfig:
    plan: FactorizationPlan
    task: str = "matrix-fit"
    steps: int = 1000
    batch: int = 16
    lr: float = 0.05
    seed: int = 0
    kind: str = "tt"
    ring_rank: int = 2
    lowrank_dim: int = 8
    init_std: float | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.steps < 1 or self.batch < 1:
            raise ValueError("steps and batch must be >= 1")
        if not (np.isfinite(self.lr) and self.lr >= 0.0):
            raise ValueError("learning rate must be finite and >= 0")


@dataclass
class TrainTrace:
    losses: list
    final_checksum: str
    wall_clock: float
    metadata: dict = field(default_factory=dict)


def _make_layer(cfg: TrainConfig, vocab: int):
    plan, seed = cfg.plan, cfg.seed + 1
    if cfg.kind == "tt":
        return TTEmbedding(glorot_tt(plan, seed, std=cfg.init_std), vocab=vocab)
    if cfg.kind == "tr":
        std = cfg.init_std if cfg.init_std is not None else 0.3
        return TTEmbedding(
            random_tr(plan, cfg.ring_rank, std, seed), vocab=vocab
        )
    if cfg.kind == "dense":
        dense_plan = FactorizationPlan(
            row_factors=(plan.padded_rows,),
            col_factors=(plan.cols,),
            requested_rows=plan.requested_rows,
            ranks=(),
        )
        return TTEmbedding(glorot_tt(dense_plan, seed, std=cfg.init_std), vocab=vocab)
    std = cfg.init_std if cfg.init_std is not None else 0.3
    return random_lowrank(plan.padded_rows, plan.cols, cfg.lowrank_dim, std, seed)


def _parameters(layer):
    if isinstance(layer, LowRankEmbedding):
        return [layer.u, layer.v]
    return layer.weights.cores


def _checksum(layer) -> str:
    h = hashlib.sha256()
    for p in _parameters(layer):
        h.update(np.ascontiguousarray(p).tobytes())
    return h.hexdigest()


def run_matrix_fit(cfg: TrainConfig) -> TrainTrace:
    """SGD on the MSE between looked-up rows and a fixed random target."""
    if cfg.task != "matrix-fit":
        raise ValueError("config task is not matrix-fit")
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    rows, cols = cfg.plan.padded_rows, cfg.plan.cols
    target = rng.standard_normal((rows, cols))
    layer = _make_layer(cfg, vocab=rows)

    def full_mse(lyr):
        return float(np.mean(np.sum((lyr.materialize() - target) ** 2, axis=1)))

    initial_mse = full_mse(
        layer if isinstance(layer, LowRankEmbedding) else layer.weights
    )
    losses = []
    for step in range(cfg.steps):
        idx = rng.integers(0, rows, size=cfg.batch)
        out = layer.forward(idx)
        diff = out - target[idx]
        # per-row squared error, averaged over the batch
        loss = float(np.mean(np.sum(diff**2, axis=1)))
        if not np.isfinite(loss):
            raise DivergenceError(step)
        losses.append(loss)
        upstream = (2.0 / cfg.batch) * diff
        layer.apply_gradients(layer.backward(idx, upstream), cfg.lr)
    final_mse = full_mse(
        layer if isinstance(layer, LowRankEmbedding) else layer.weights
    )
    return TrainTrace(
        losses=losses,
        final_checksum=_checksum(layer),
        wall_clock=time.perf_counter() - t0,
        metadata={"initial_full_mse": initial_mse, "final_full_mse": final_mse},
    )


def _make_sentences(rng, vocab: int, count: int, length: int = 8):
    half = vocab // 2
    labels = rng.integers(0, 2, size=count)
    lows = np.where(labels == 0, 0, half)
    tokens = lows[:, None] + rng.integers(0, half, size=(count, length))
    return tokens, 2.0 * labels - 1.0  # labels in {-1, +1}


def _accuracy(layer, w, b, tokens, y) -> float:
    emb = layer.forward(tokens.ravel()).reshape(tokens.shape[0], tokens.shape[1], -1)
    z = emb.mean(axis=1) @ w + b
    return float(np.mean(np.sign(z) == y))


def run_toy_classify(cfg: TrainConfig) -> TrainTrace:
    """Joint SGD on embedding cores plus a linear head, logistic loss."""
    if cfg.task != "toy-classify":
        raise ValueError("config task is not toy-classify")
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    vocab = cfg.plan.requested_rows
    if vocab < 2:
        raise ValueError("toy-classify needs a vocabulary of at least 2")
    dim = cfg.plan.cols
    train_x, train_y = _make_sentences(rng, vocab, count=512)
    test_x, test_y = _make_sentences(rng, vocab, count=256)
    layer = _make_layer(cfg, vocab=vocab)
    w = rng.normal(0.0, 0.1, size=dim)
    b = 0.0
    initial_acc = _accuracy(layer, w, b, test_x, test_y)
    length = train_x.shape[1]
    losses = []
    for step in range(cfg.steps):
        pick = rng.integers(0, train_x.shape[0], size=cfg.batch)
        toks, y = train_x[pick], train_y[pick]
        emb = layer.forward(toks.ravel()).reshape(cfg.batch, length, dim)
        pooled = emb.mean(axis=1)
        z = pooled @ w + b
        loss = float(np.mean(np.log1p(np.exp(-y * z))))
        if not np.isfinite(loss):
            raise DivergenceError(step)
        losses.append(loss)
        dz = -y / (1.0 + np.exp(y * z)) / cfg.batch
        dw = pooled.T @ dz
        db = float(dz.sum())
        upstream = np.repeat(np.outer(dz, w) / length, length, axis=0)
        layer.apply_gradients(layer.backward(toks.ravel(), upstream), cfg.lr)
        w -= cfg.lr * dw
        b -= cfg.lr * db
    final_acc = _accuracy(layer, w, b, test_x, test_y)
    return TrainTrace(
        losses=losses,
        final_checksum=_checksum(layer),
        wall_clock=time.perf_counter() - t0,
        metadata={
            "initial_accuracy": initial_acc,
            "heldout_accuracy": final_acc,
            "embedding_parameters": layer.parameter_count(),
        },
    )


def run(cfg: TrainConfig) -> TrainTrace:
    return run_matrix_fit(cfg) if cfg.task == "matrix-fit" else run_toy_classify(cfg)
