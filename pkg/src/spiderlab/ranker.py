"""Linear quality estimator trained by stochastic subgradient descent.

A single weight vector plus bias maps a page's term vector to a promise
score.  Training is epsilon-insensitive support-vector regression with
the 1/(reg * t) step schedule, sparse updates via the usual scale-factor
trick, and a seeded shuffle per epoch so identical inputs give identical
models.

The depth objective regresses on the *negated* depth label so that a
larger score always means a more promising page; the discount objective
regresses on the discounted-reward label directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._stats import spearman
from .labeling import TrainingExample
from .textpipe import TermVector

OBJECTIVES = ("depth", "discount")


class TrainingError(RuntimeError):
    """Raised when a training set cannot produce a meaningful model."""


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    objective: str
    train_meta: dict
    epoch_losses: list[float] = field(default_factory=list, repr=False)

    @property
    def dim(self) -> int:
        return len(self.weights)


def regression_target(example: TrainingExample, objective: str) -> float | None:
    """The value the model regresses on; None marks an unusable example."""
    if objective == "depth":
        return None if example.depth is None else -float(example.depth)
    if objective == "discount":
        return float(example.discount)
    raise ValueError(f"unknown objective: {objective}")


def train(
    examples: Sequence[TrainingExample],
    objective: str,
    *,
    dim: int | None = None,
    reg: float = 1e-4,
    epochs: int = 20,
    epsilon: float = 0.1,
    seed: int = 0,
) -> LinearModel:
    """Fit a linear model to (vector, label) pairs.

    reg is the L2 penalty, epochs the number of full passes, epsilon the
    insensitive-loss margin.  Examples with no usable label (unreachable
    depth under the depth objective) are skipped.  Raises
    :class:`TrainingError` for fewer than two usable examples or a
    degenerate constant target.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    if reg <= 0 or epochs < 1 or epsilon < 0:
        raise ValueError("need reg > 0, epochs >= 1, epsilon >= 0")
    usable = [
        (ex.vector, y)
        for ex in examples
        if (y := regression_target(ex, objective)) is not None
    ]
    if len(usable) < 2:
        raise TrainingError(f"need at least 2 usable examples, have {len(usable)}")
    targets = np.array([y for _, y in usable])
    if np.all(targets == targets[0]):
        raise TrainingError(
            f"degenerate labels: every usable target equals {targets[0]:g}"
        )
    max_index = max((int(v.indices[-1]) for v, _ in usable if len(v)), default=-1)
    if dim is None:
        if max_index < 0:
            raise TrainingError("all example vectors are empty; cannot infer dimension")
        dim = max_index + 1
    elif max_index >= dim:
        raise ValueError(f"example index {max_index} exceeds model dimension {dim}")

    rng = np.random.default_rng(seed)
    v = np.zeros(dim, dtype=np.float64)  # weights = scale * v
    scale = 1.0
    bias = 0.0
    t = 0
    epoch_losses: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(len(usable))
        loss_sum = 0.0
        for j in order:
            vec, y = usable[j]
            t += 1
            step = 1.0 / (reg * t)
            shrink = 1.0 - 1.0 / t
            if shrink <= 0.0:
                v[:] = 0.0
                scale = 1.0
            else:
                scale *= shrink
            if len(vec):
                pred = scale * float(v[vec.indices] @ vec.weights) + bias
            else:
                pred = bias
            err = pred - y
            loss_sum += max(0.0, abs(err) - epsilon)
            if abs(err) > epsilon:
                sign = 1.0 if err > 0 else -1.0
                if len(vec):
                    v[vec.indices] -= (step * sign / scale) * vec.weights
                bias -= step * sign
            if scale < 1e-120:
                v *= scale
                scale = 1.0
        epoch_losses.append(loss_sum / len(usable))

    weights = scale * v
    if not (np.all(np.isfinite(weights)) and np.isfinite(bias)):
        raise TrainingError("training diverged to non-finite weights")
    return LinearModel(
        weights=weights,
        bias=float(bias),
        objective=objective,
        train_meta={"seed": seed, "reg": reg, "epochs": epochs, "epsilon": epsilon},
        epoch_losses=epoch_losses,
    )


def predict(model: LinearModel, vector: TermVector) -> float:
    """Score a term vector: weights . vector + bias (bias alone if empty)."""
    if len(vector) == 0:
        return model.bias
    if int(vector.indices[-1]) >= model.dim:
        raise ValueError(
            f"vector index {int(vector.indices[-1])} outside model dimension {model.dim}"
        )
    return float(model.weights[vector.indices] @ vector.weights) + model.bias


@dataclass
class ModelReport:
    spearman: float
    mean_loss: float
    n_examples: int


def evaluate_model(model: LinearModel, examples: Sequence[TrainingExample]) -> ModelReport:
    """Rank agreement (Spearman, average ranks on ties) and mean
    epsilon-insensitive loss of the model on its own objective's labels."""
    pairs = [
        (predict(model, ex.vector), y)
        for ex in examples
        if (y := regression_target(ex, model.objective)) is not None
    ]
    if not pairs:
        raise ValueError("no usable examples to evaluate on")
    preds = [p for p, _ in pairs]
    targets = [y for _, y in pairs]
    epsilon = model.train_meta.get("epsilon", 0.0)
    losses = [max(0.0, abs(p - y) - epsilon) for p, y in pairs]
    return ModelReport(
        spearman=spearman(preds, targets),
        mean_loss=float(np.mean(losses)),
        n_examples=len(pairs),
    )


def save_model(path: str | Path, model: LinearModel) -> None:
    """Header lines (#key<TAB>value), then index<TAB>weight per nonzero."""
    meta = model.train_meta
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim\t{model.dim}\n")
        fh.write(f"#bias\t{model.bias:.17g}\n")
        fh.write(f"#objective\t{model.objective}\n")
        fh.write(f"#reg\t{meta.get('reg')}\n")
        fh.write(f"#epochs\t{meta.get('epochs')}\n")
        fh.write(f"#epsilon\t{meta.get('epsilon')}\n")
        fh.write(f"#seed\t{meta.get('seed')}\n")
        for i in np.nonzero(model.weights)[0]:
            fh.write(f"{int(i)}\t{model.weights[i]:.17g}\n")


def load_model(path: str | Path) -> LinearModel:
    header: dict[str, str] = {}
    rows: list[tuple[int, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("\t")
                header[key] = value
                continue
            idx, _, wt = line.partition("\t")
            rows.append((int(idx), float(wt)))
    try:
        dim = int(header["dim"])
        bias = float(header["bias"])
        objective = header["objective"]
    except KeyError as exc:
        raise ValueError(f"{path}: model header missing {exc}") from None
    weights = np.zeros(dim, dtype=np.float64)
    for i, w in rows:
        if not 0 <= i < dim:
            raise ValueError(f"{path}: weight index {i} outside dimension {dim}")
        weights[i] = w
    meta = {}
    for key in ("reg", "epsilon"):
        if key in header:
            meta[key] = float(header[key])
    for key in ("epochs", "seed"):
        if key in header:
            meta[key] = int(header[key])
    return LinearModel(weights=weights, bias=bias, objective=objective, train_meta=meta)
