"""The 101->100->100->86 fully-connected Q-network: forward pass,
epsilon-greedy selection, temporal-difference targets, one-step SGD
training, experience replay and checkpointing.

Everything is plain numpy with hand-written backpropagation; parameters
are treated as immutable and every training step returns a fresh set.
Initialization uses a self-contained splitmix64 stream so identical seeds
give identical parameters on any platform.
"""

from __future__ import annotations

import random
import struct
from collections import deque
from dataclasses import dataclass

import numpy as np

from .features import FEATURE_LENGTH, LabelRegistry

LAYER_DIMS: tuple[int, ...] = (FEATURE_LENGTH, 100, 100, 86)
ACTION_COUNT = LAYER_DIMS[-1]

_CKPT_MAGIC = b"DQCERT\x00\x01"


class DimensionMismatch(ValueError):
    """An input or parameter array has the wrong shape."""


class NonFiniteLoss(RuntimeError):
    """A training step produced a non-finite loss; carries the batch."""

    def __init__(self, loss: float, batch):
        super().__init__(f"non-finite loss {loss!r}")
        self.batch = list(batch)


class CorruptCheckpoint(ValueError):
    """A checkpoint file failed its magic/version/dimension validation."""


@dataclass(frozen=True)
class QParams:
    """Weights and biases of the three dense layers (ReLU, ReLU, identity)."""

    w0: np.ndarray
    b0: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        expected = [
            (LAYER_DIMS[0], LAYER_DIMS[1]),
            (LAYER_DIMS[1],),
            (LAYER_DIMS[1], LAYER_DIMS[2]),
            (LAYER_DIMS[2],),
            (LAYER_DIMS[2], LAYER_DIMS[3]),
            (LAYER_DIMS[3],),
        ]
        arrays = (self.w0, self.b0, self.w1, self.b1, self.w2, self.b2)
        for arr, shape in zip(arrays, expected):
            if arr.shape != shape:
                raise DimensionMismatch(f"parameter shape {arr.shape} != {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite parameter values")

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.w0, self.b0, self.w1, self.b1, self.w2, self.b2)


@dataclass(frozen=True)
class Transition:
    """One interaction step; terminal transitions carry no next state."""

    state: tuple[int, ...]
    action: int
    reward: int
    next_state: tuple[int, ...] | None
    terminal: bool

    def __post_init__(self):
        if self.terminal != (self.next_state is None):
            raise ValueError("terminal transitions and only they omit next_state")
        if len(self.state) != FEATURE_LENGTH:
            raise DimensionMismatch(f"state length {len(self.state)} != {FEATURE_LENGTH}")
        if self.next_state is not None and len(self.next_state) != FEATURE_LENGTH:
            raise DimensionMismatch(f"next_state length {len(self.next_state)} != {FEATURE_LENGTH}")


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.9
    epsilon: float = 0.1
    learning_rate: float = 1e-3
    replay_capacity: int = 10_000
    batch_size: int = 32
    use_target_network: bool = False
    target_sync_interval: int = 500
    paper_literal_loss: bool = False  # predict max-Q instead of Q(s, taken action)
    max_grad_norm: float = 10.0  # global-norm gradient clip; 0 disables

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.max_grad_norm < 0.0:
            raise ValueError("max_grad_norm must be >= 0")


# ---------------------------------------------------------------------------
# Initialization

_M64 = (1 << 64) - 1


def _splitmix64(seed: int):
    state = seed & _M64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        yield z ^ (z >> 31)


def init(seed: int) -> QParams:
    """Symmetry-broken uniform weights scaled by fan-in, zero biases."""
    stream = _splitmix64(seed)

    def uniform(rows: int, cols: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(rows)
        values = [((next(stream) / 2.0**64) * 2.0 - 1.0) * bound for _ in range(rows * cols)]
        return np.array(values, dtype=np.float64).reshape(rows, cols)

    return QParams(
        w0=uniform(LAYER_DIMS[0], LAYER_DIMS[1]),
        b0=np.zeros(LAYER_DIMS[1]),
        w1=uniform(LAYER_DIMS[1], LAYER_DIMS[2]),
        b1=np.zeros(LAYER_DIMS[2]),
        w2=uniform(LAYER_DIMS[2], LAYER_DIMS[3]),
        b2=np.zeros(LAYER_DIMS[3]),
    )


# ---------------------------------------------------------------------------
# Forward / selection / targets

def _forward_batch(params: QParams, x: np.ndarray):
    z0 = x @ params.w0 + params.b0
    h0 = np.maximum(z0, 0.0)
    z1 = h0 @ params.w1 + params.b1
    h1 = np.maximum(z1, 0.0)
    q = h1 @ params.w2 + params.b2
    return z0, h0, z1, h1, q


def forward(params: QParams, state) -> np.ndarray:
    """Q-values for one state (86 reals)."""
    x = np.asarray(state, dtype=np.float64)
    if x.shape != (FEATURE_LENGTH,):
        raise DimensionMismatch(f"state shape {x.shape} != ({FEATURE_LENGTH},)")
    return _forward_batch(params, x[None, :])[-1][0]


def select_action(qvalues, epsilon: float, rng: random.Random) -> int:
    """Epsilon-greedy pick; greedy ties break toward the lowest action id."""
    q = np.asarray(qvalues, dtype=np.float64)
    if q.shape != (ACTION_COUNT,):
        raise DimensionMismatch(f"qvalues shape {q.shape} != ({ACTION_COUNT},)")
    if epsilon > 0.0 and rng.random() < epsilon:
        return rng.randrange(ACTION_COUNT)
    return int(np.argmax(q))


def td_target(transition: Transition, params_target: QParams, gamma: float = 0.9) -> float:
    """Bellman target: reward, plus discounted max next-Q when non-terminal."""
    if transition.terminal:
        return float(transition.reward)
    return float(transition.reward) + gamma * float(np.max(forward(params_target, transition.next_state)))


# ---------------------------------------------------------------------------
# Training

def train_step(
    params: QParams,
    batch,
    config: TrainConfig,
    params_target: QParams | None = None,
) -> tuple[QParams, float]:
    """One SGD step on the mean squared TD error of a batch.

    The predicted value is Q(state, taken action) by default; with
    ``paper_literal_loss`` it is the maximum Q-value of the state.
    Returns fresh parameters and the scalar loss.
    """
    batch = list(batch)
    if not batch:
        raise ValueError("empty batch")
    target_net = params_target if params_target is not None else params

    x = np.asarray([t.state for t in batch], dtype=np.float64)
    targets = np.asarray([td_target(t, target_net, config.gamma) for t in batch])
    z0, h0, z1, h1, q = _forward_batch(params, x)

    n = len(batch)
    rows = np.arange(n)
    if config.paper_literal_loss:
        cols = np.argmax(q, axis=1)
    else:
        cols = np.asarray([t.action for t in batch], dtype=np.intp)
    predicted = q[rows, cols]
    errors = predicted - targets
    with np.errstate(over="ignore"):
        loss = float(np.mean(errors**2))
    if not np.isfinite(loss):
        raise NonFiniteLoss(loss, batch)

    dq = np.zeros_like(q)
    dq[rows, cols] = 2.0 * errors / n
    dw2 = h1.T @ dq
    db2 = dq.sum(axis=0)
    dh1 = dq @ params.w2.T
    dz1 = dh1 * (z1 > 0.0)
    dw1 = h0.T @ dz1
    db1 = dz1.sum(axis=0)
    dh0 = dz1 @ params.w1.T
    dz0 = dh0 * (z0 > 0.0)
    dw0 = x.T @ dz0
    db0 = dz0.sum(axis=0)

    grads = [dw0, db0, dw1, db1, dw2, db2]
    if config.max_grad_norm > 0.0:
        total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
        if total > config.max_grad_norm:
            scale = config.max_grad_norm / total
            grads = [g * scale for g in grads]

    lr = config.learning_rate
    updated = QParams(
        w0=params.w0 - lr * grads[0],
        b0=params.b0 - lr * grads[1],
        w1=params.w1 - lr * grads[2],
        b1=params.b1 - lr * grads[3],
        w2=params.w2 - lr * grads[4],
        b2=params.b2 - lr * grads[5],
    )
    return updated, loss


class ReplayBuffer:
    """Bounded uniform-sampling experience store."""

    def __init__(self, capacity: int):
        self._items: deque[Transition] = deque(maxlen=capacity)

    def add(self, transition: Transition) -> None:
        self._items.append(transition)

    def sample(self, k: int, rng: random.Random) -> list[Transition]:
        return [self._items[rng.randrange(len(self._items))] for _ in range(k)]

    def clear(self) -> None:
        self._items.clear()

    def __len__(self):
        return len(self._items)


# ---------------------------------------------------------------------------
# Checkpoints

def save(params: QParams, registry: LabelRegistry, path) -> None:
    """Write a versioned binary checkpoint plus a human-readable label
    registry sidecar (``<path>.labels``)."""
    registry_blob = registry.to_text().encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(_CKPT_MAGIC)
        handle.write(struct.pack("<II", 1, len(LAYER_DIMS)))
        handle.write(struct.pack(f"<{len(LAYER_DIMS)}I", *LAYER_DIMS))
        for arr in params.arrays():
            handle.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        handle.write(struct.pack("<I", len(registry_blob)))
        handle.write(registry_blob)
    with open(f"{path}.labels", "w", encoding="utf-8") as handle:
        handle.write(registry.to_text())


def load(path) -> tuple[QParams, LabelRegistry]:
    """Read a checkpoint; any structural mismatch raises CorruptCheckpoint."""
    with open(path, "rb") as handle:
        blob = handle.read()
    view = memoryview(blob)

    def take(n: int) -> memoryview:
        nonlocal view
        if len(view) < n:
            raise CorruptCheckpoint("truncated checkpoint")
        chunk, view = view[:n], view[n:]
        return chunk

    if bytes(take(len(_CKPT_MAGIC))) != _CKPT_MAGIC:
        raise CorruptCheckpoint("bad magic")
    version, nlayers = struct.unpack("<II", take(8))
    if version != 1:
        raise CorruptCheckpoint(f"unsupported checkpoint version {version}")
    if nlayers != len(LAYER_DIMS):
        raise CorruptCheckpoint(f"layer count {nlayers} != {len(LAYER_DIMS)}")
    dims = struct.unpack(f"<{nlayers}I", take(4 * nlayers))
    if dims != LAYER_DIMS:
        raise CorruptCheckpoint(f"layer dimensions {dims} != {LAYER_DIMS}")

    arrays = []
    for rows, cols in zip(LAYER_DIMS[:-1], LAYER_DIMS[1:]):
        arrays.append(np.frombuffer(bytes(take(8 * rows * cols)), dtype=np.float64).reshape(rows, cols))
        arrays.append(np.frombuffer(bytes(take(8 * cols)), dtype=np.float64))
    (reg_len,) = struct.unpack("<I", take(4))
    registry = LabelRegistry.from_text(bytes(take(reg_len)).decode("utf-8"))
    if len(view):
        raise CorruptCheckpoint("trailing bytes after checkpoint payload")
    w0, b0, w1, b1, w2, b2 = arrays
    return QParams(w0, b0, w1, b1, w2, b2), registry
