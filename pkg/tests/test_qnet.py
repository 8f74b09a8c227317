"""Q-network tests: shape contracts, the frozen forward golden, selection
semantics, TD targets, gradient correctness against central finite
differences, convergence, and checkpoint round-trips."""

import dataclasses
import json
import math
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from diffcert import qnet
from diffcert.features import FEATURE_LENGTH, default_registry
from diffcert.qnet import (
    ACTION_COUNT,
    CorruptCheckpoint,
    DimensionMismatch,
    QParams,
    ReplayBuffer,
    TrainConfig,
    Transition,
    forward,
    init,
    select_action,
    td_target,
    train_step,
)

GOLDEN = json.loads((Path(__file__).parent / "data" / "forward_golden.json").read_text())


def random_state(rng):
    return tuple(rng.randint(-1, 4) for _ in range(FEATURE_LENGTH))


def random_transition(rng):
    terminal = rng.random() < 0.5
    return Transition(
        state=random_state(rng),
        action=rng.randrange(ACTION_COUNT),
        reward=rng.choice([100, -1]),
        next_state=None if terminal else random_state(rng),
        terminal=terminal,
    )


def test_init_deterministic():
    a, b = init(7), init(7)
    assert all((x == y).all() for x, y in zip(a.arrays(), b.arrays()))
    c = init(8)
    assert any((x != y).any() for x, y in zip(a.arrays(), c.arrays()))


def test_init_shapes_and_zero_biases():
    p = init(1)
    assert p.w0.shape == (101, 100) and p.w1.shape == (100, 100) and p.w2.shape == (100, 86)
    assert not p.b0.any() and not p.b1.any() and not p.b2.any()


def test_forward_shape_and_dimension_guard():
    p = init(1)
    out = forward(p, [0] * FEATURE_LENGTH)
    assert out.shape == (ACTION_COUNT,)
    assert np.isfinite(out).all()
    with pytest.raises(DimensionMismatch):
        forward(p, [0] * 100)


def test_forward_golden_fixture():
    p = init(GOLDEN["init_seed"])
    got = forward(p, GOLDEN["state"])
    assert np.allclose(got, GOLDEN["qvalues"], rtol=0, atol=1e-12)


def test_forward_dead_relu_reduces_to_bias_path():
    p = init(3)
    # drive every first-layer unit negative: output must equal the pure
    # bias composition through the remaining layers
    dead = dataclasses.replace(p, b0=np.full(100, -1e6))
    state = [1] * FEATURE_LENGTH
    h1 = np.maximum(p.b1, 0.0)
    expected = h1 @ p.w2 + p.b2
    assert np.allclose(forward(dead, state), expected)


def test_select_action_greedy_and_ties():
    rng = random.Random(0)
    q = np.zeros(ACTION_COUNT)
    q[17] = 5.0
    assert select_action(q, 0.0, rng) == 17
    q = np.zeros(ACTION_COUNT)
    q[3] = q[9] = 2.0
    assert select_action(q, 0.0, rng) == 3  # lowest id wins ties


@given(st.floats(min_value=0.01, max_value=1000.0), st.integers(min_value=0, max_value=85))
def test_select_action_scale_invariant(scale, winner):
    rng = random.Random(1)
    q = np.full(ACTION_COUNT, -1.0)
    q[winner] = 1.0
    assert select_action(q * scale, 0.0, rng) == winner


def test_select_action_uniform_exploration_chi_square():
    # epsilon=1 must draw uniformly: chi-square over 10^5 draws stays
    # within 5 sigma of the dof-85 expectation
    rng = random.Random(42)
    draws = 100_000
    counts = [0] * ACTION_COUNT
    q = np.zeros(ACTION_COUNT)
    for _ in range(draws):
        counts[select_action(q, 1.0, rng)] += 1
    expected = draws / ACTION_COUNT
    chi2 = sum((c - expected) ** 2 / expected for c in counts)
    dof = ACTION_COUNT - 1
    assert chi2 < dof + 5 * math.sqrt(2 * dof)


def test_td_target_branches():
    p = init(2)
    state = tuple([1] * FEATURE_LENGTH)
    terminal = Transition(state, 0, 100, None, True)
    assert td_target(terminal, p) == 100.0
    nxt = tuple([2] * FEATURE_LENGTH)
    non_terminal = Transition(state, 0, -1, nxt, False)
    expected = -1 + 0.9 * float(np.max(forward(p, nxt)))
    assert td_target(non_terminal, p, gamma=0.9) == pytest.approx(expected)
    assert td_target(non_terminal, p, gamma=0.0) == -1.0


def test_td_target_arithmetic_example():
    # reward -1, max next-Q 10, gamma 0.9 -> 8.0
    p = init(2)
    state = tuple([1] * FEATURE_LENGTH)
    nxt = tuple([2] * FEATURE_LENGTH)
    bumped = dataclasses.replace(p, b2=p.b2 + (10.0 - float(np.max(forward(p, nxt)))))
    tr = Transition(state, 0, -1, nxt, False)
    assert td_target(tr, bumped, gamma=0.9) == pytest.approx(8.0, abs=1e-9)


def test_transition_invariant():
    state = tuple([0] * FEATURE_LENGTH)
    with pytest.raises(ValueError):
        Transition(state, 0, 100, None, False)
    with pytest.raises(ValueError):
        Transition(state, 0, -1, state, True)


def test_zero_learning_rate_is_identity():
    rng = random.Random(5)
    p = init(5)
    batch = [random_transition(rng) for _ in range(4)]
    updated, _ = train_step(p, batch, TrainConfig(learning_rate=0.0))
    assert all((a == b).all() for a, b in zip(p.arrays(), updated.arrays()))


def test_train_step_rejects_empty_batch():
    with pytest.raises(ValueError):
        train_step(init(1), [], TrainConfig())


def test_single_transition_convergence():
    # Q(s, a) must reach 100 +/- 1.0 within 5000 default-config steps
    state = tuple([3, 3, 4, -1, 1, 2, 1, 0] + [0] * 93)
    tr = Transition(state, 17, 100, None, True)
    params, cfg = init(7), TrainConfig()
    for step in range(5000):
        params, _ = train_step(params, [tr], cfg)
        if abs(float(forward(params, state)[17]) - 100.0) < 1.0:
            break
    assert abs(float(forward(params, state)[17]) - 100.0) < 1.0
    assert step < 5000


def _loss_and_masks(params, batch, targets):
    x = np.asarray([t.state for t in batch], dtype=np.float64)
    z0, h0, z1, h1, q = qnet._forward_batch(params, x)
    rows = np.arange(len(batch))
    cols = np.asarray([t.action for t in batch])
    loss = float(np.mean((q[rows, cols] - targets) ** 2))
    return loss, (z0 > 0, z1 > 0)


def finite_difference_check(batch_seed: int, param_seed: int, coords_per_tensor: int = 30, tolerance: float = 1e-4):
    """Central-difference oracle for one batch; returns max relative error.

    Targets are frozen to a fixed network (semi-gradient semantics).
    Two kinds of coordinates cannot be certified by finite differences
    and are skipped: those whose perturbation flips a ReLU mask (the loss
    is not differentiable there) and those whose gradient magnitude sits
    below the difference quotient's cancellation-noise floor for the
    requested relative tolerance.
    """
    rng = random.Random(batch_seed)
    batch = [random_transition(rng) for _ in range(8)]
    params = init(param_seed)
    frozen_target = init(param_seed + 1000)
    cfg = TrainConfig(gamma=0.9)
    targets = np.asarray([td_target(t, frozen_target, cfg.gamma) for t in batch])

    probe = TrainConfig(learning_rate=1.0, max_grad_norm=0.0)
    updated, _ = train_step(params, batch, probe, params_target=frozen_target)
    analytic = {name: getattr(params, name) - getattr(updated, name) for name in ("w0", "b0", "w1", "b1", "w2", "b2")}

    h = 1e-4
    eps = float(np.finfo(np.float64).eps)
    worst = 0.0
    coord_rng = random.Random(param_seed ^ 0xFD)
    for name, grad in analytic.items():
        base = getattr(params, name)
        for _ in range(coords_per_tensor):
            idx = tuple(coord_rng.randrange(s) for s in base.shape)
            up, down = base.copy(), base.copy()
            up[idx] += h
            down[idx] -= h
            loss_up, masks_up = _loss_and_masks(dataclasses.replace(params, **{name: up}), batch, targets)
            loss_down, masks_down = _loss_and_masks(dataclasses.replace(params, **{name: down}), batch, targets)
            if not all((a == b).all() for a, b in zip(masks_up, masks_down)):
                continue  # ReLU kink crossed
            fd = (loss_up - loss_down) / (2 * h)
            g = float(grad[idx])
            noise_floor = eps * max(abs(loss_up), abs(loss_down)) / h
            if max(abs(fd), abs(g)) < noise_floor / tolerance:
                continue  # below what central differences can resolve
            worst = max(worst, abs(fd - g) / max(abs(fd), abs(g)))
    return worst


def test_gradients_match_finite_differences():
    assert finite_difference_check(100, 200) < 1e-4


def test_paper_literal_loss_trains_max_column():
    rng = random.Random(9)
    p = init(9)
    state = random_state(rng)
    tr = Transition(state, 5, 100, None, True)
    cfg = TrainConfig(paper_literal_loss=True)
    updated, _ = train_step(p, [tr], cfg)
    before = forward(p, state)
    after = forward(updated, state)
    moved = int(np.argmax(np.abs(after - before)))
    assert moved == int(np.argmax(before))  # the max column moved, not action 5


def test_non_finite_loss_reported():
    p = init(1)
    bad = dataclasses.replace(p, b2=p.b2 + 1e200)
    state = tuple([1] * FEATURE_LENGTH)
    tr = Transition(state, 0, 100, None, True)
    with pytest.raises(qnet.NonFiniteLoss):
        # squaring 1e200 errors overflows to inf
        train_step(bad, [tr], TrainConfig())


def test_replay_buffer_capacity_and_uniformity():
    rng = random.Random(3)
    buf = ReplayBuffer(capacity=5)
    items = [random_transition(rng) for _ in range(8)]
    for item in items:
        buf.add(item)
    assert len(buf) == 5
    sample = buf.sample(10, rng)
    assert all(s in items[3:] for s in sample)


def test_toy_mdp_one_state(tmp_path):
    # single state, action k lands terminal reward 100, everything else -1:
    # greedy argmax converges to k for several seeds
    state = tuple([2] * FEATURE_LENGTH)
    for seed in range(3):
        rng = random.Random(seed)
        k = rng.randrange(ACTION_COUNT)
        params = init(seed)
        cfg = TrainConfig()
        for step in range(3000):
            action = select_action(forward(params, state), cfg.epsilon, rng)
            reward = 100 if action == k else -1
            tr = Transition(state, action, reward, None, True)
            params, _ = train_step(params, [tr], cfg)
            if step % 50 == 0 and int(np.argmax(forward(params, state))) == k and step > 200:
                break
        assert int(np.argmax(forward(params, state))) == k


# ---------------------------------------------------------------------------
# Checkpoints

def test_checkpoint_round_trip(tmp_path):
    p = init(11)
    reg = default_registry()
    path = tmp_path / "net.ckpt"
    qnet.save(p, reg, path)
    loaded, loaded_reg = qnet.load(path)
    assert all((a == b).all() for a, b in zip(p.arrays(), loaded.arrays()))
    assert loaded_reg == reg
    assert (tmp_path / "net.ckpt.labels").exists()


def test_checkpoint_truncation_detected(tmp_path):
    p = init(11)
    path = tmp_path / "net.ckpt"
    qnet.save(p, default_registry(), path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(CorruptCheckpoint):
        qnet.load(path)


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "net.ckpt"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 64)
    with pytest.raises(CorruptCheckpoint):
        qnet.load(path)


def test_checkpoint_dimension_guard(tmp_path):
    # doctor the stored output dimension: 86 -> 87
    import struct

    p = init(11)
    path = tmp_path / "net.ckpt"
    qnet.save(p, default_registry(), path)
    blob = bytearray(path.read_bytes())
    dims_off = len(qnet._CKPT_MAGIC) + 8
    dims = list(struct.unpack_from("<4I", blob, dims_off))
    assert dims == [101, 100, 100, 86]
    struct.pack_into("<4I", blob, dims_off, 101, 100, 100, 87)
    path.write_bytes(bytes(blob))
    with pytest.raises(CorruptCheckpoint):
        qnet.load(path)
