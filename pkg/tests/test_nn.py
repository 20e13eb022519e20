import numpy as np
import pytest

import graphdraw.tensor as T
from graphdraw.nn import (
    Adam,
    GRUCell,
    MLP,
    ParamStore,
    PlateauScheduler,
    glorot_uniform,
    load_checkpoint,
    save_checkpoint,
)


def numeric_grad_scalar(f, arr, eps=1e-6):
    g = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        hi = f()
        flat[i] = keep - eps
        lo = f()
        flat[i] = keep
        gf[i] = (hi - lo) / (2 * eps)
    return g


def test_glorot_bounds_and_shape():
    rng = np.random.default_rng(0)
    w = glorot_uniform((30, 50), rng)
    lim = np.sqrt(6.0 / 80.0)
    assert w.shape == (30, 50)
    assert np.all(np.abs(w) <= lim)
    assert np.abs(w).max() > 0.5 * lim


def test_mlp_gradcheck_every_parameter():
    rng = np.random.default_rng(1)
    store = ParamStore()
    mlp = MLP(store, "f", 3, 5, 2, rng)
    x = rng.normal(size=(4, 3))

    def run():
        return float(T.tsum(T.square(mlp(T.Tensor(x)))).data)

    for p in store.tensors():
        store.zero_grad()
        tape = T.Tape()
        with T.record(tape):
            loss = T.tsum(T.square(mlp(T.Tensor(x))))
        tape.backward(loss)
        got = p.grad
        want = numeric_grad_scalar(run, p.data)
        assert np.allclose(got, want, atol=1e-6), p.name


def test_gru_gradcheck_every_parameter():
    rng = np.random.default_rng(2)
    store = ParamStore()
    gru = GRUCell(store, "g", 4, 3, rng)
    m = rng.normal(size=(5, 4))
    h = rng.normal(size=(5, 3))

    def run():
        return float(T.tsum(T.square(gru(T.Tensor(m), T.Tensor(h)))).data)

    for p in store.tensors():
        store.zero_grad()
        tape = T.Tape()
        with T.record(tape):
            loss = T.tsum(T.square(gru(T.Tensor(m), T.Tensor(h))))
        tape.backward(loss)
        want = numeric_grad_scalar(run, p.data)
        assert np.allclose(p.grad, want, atol=1e-6), p.name


def test_gru_interpolates_between_state_and_candidate():
    # if z saturates at 0 the state passes through unchanged
    rng = np.random.default_rng(3)
    store = ParamStore()
    gru = GRUCell(store, "g", 2, 2, rng)
    store["g.wz"].data[:] = 0.0
    store["g.uz"].data[:] = 0.0
    store["g.bz"].data[:] = -50.0
    h = rng.normal(size=(3, 2))
    out = gru(T.Tensor(rng.normal(size=(3, 2))), T.Tensor(h))
    assert np.allclose(out.data, h, atol=1e-12)


def test_adam_minimizes_quadratic():
    store = ParamStore()
    rng = np.random.default_rng(4)
    p = store.create("x", (3,), rng)
    p.data = np.array([5.0, -4.0, 2.0])
    opt = Adam(store, lr=0.1)
    for _ in range(500):
        opt.zero_grad()
        tape = T.Tape()
        with T.record(tape):
            loss = T.tsum(T.square(p))
        tape.backward(loss)
        opt.step()
    assert np.all(np.abs(p.data) < 1e-3)


def test_adam_first_step_size_is_lr():
    # with bias correction the first update has magnitude ~lr per coordinate
    store = ParamStore()
    rng = np.random.default_rng(5)
    p = store.create("x", (1,), rng)
    p.data = np.array([1.0])
    opt = Adam(store, lr=0.01)
    p.grad = np.array([123.456])
    opt.step()
    assert abs(1.0 - p.data[0]) == pytest.approx(0.01, rel=1e-6)


def test_plateau_13_identical_steps_one_decay():
    store = ParamStore()
    opt = Adam(store, lr=2e-4)
    sched = PlateauScheduler(opt, factor=0.7, patience=12, threshold=2.0)
    for _ in range(13):
        sched.step(1.0)
    assert sched.n_decays == 1
    assert opt.lr == pytest.approx(1.4e-4, rel=1e-12)


def test_plateau_rel_threshold_is_percent_of_best():
    store = ParamStore()
    opt = Adam(store, lr=1.0)
    sched = PlateauScheduler(opt, factor=0.5, patience=3, threshold=2.0)
    sched.step(0.5)       # best = 0.5, margin = 2% of 0.5 = 0.01
    sched.step(0.485)     # improvement 0.015 > 0.01: resets, new best
    assert sched.bad_count == 0 and sched.best == 0.485
    sched.step(0.4805)    # improvement 0.0045 < 0.0097: bad step
    assert sched.bad_count == 1 and sched.best == 0.485
    sched.step(0.49)
    sched.step(0.49)
    assert sched.n_decays == 1 and opt.lr == 0.5


def test_plateau_abs_mode_and_reset():
    store = ParamStore()
    opt = Adam(store, lr=1.0)
    sched = PlateauScheduler(opt, factor=0.5, patience=2, threshold=0.1,
                             mode="abs")
    sched.step(10.0)      # sets best
    sched.step(9.0)       # improvement > 0.1: resets
    assert sched.bad_count == 0 and sched.n_decays == 0
    sched.step(8.95)      # too small an improvement
    sched.step(8.94)
    assert sched.n_decays == 1 and opt.lr == 0.5
    with pytest.raises(ValueError):
        PlateauScheduler(opt, mode="bogus")


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    store = ParamStore()
    MLP(store, "enc", 4, 8, 3, rng)
    path = tmp_path / "model.json"
    save_checkpoint(path, store, {"hidden": 8, "note": "unit"})
    cfg, state = load_checkpoint(path)
    assert cfg == {"hidden": 8, "note": "unit"}
    rng2 = np.random.default_rng(7)
    store2 = ParamStore()
    MLP(store2, "enc", 4, 8, 3, rng2)
    store2.load_state_dict(state)
    for name in store.names():
        assert np.array_equal(store[name].data, store2[name].data)


def test_checkpoint_same_bytes(tmp_path):
    rng = np.random.default_rng(8)
    store = ParamStore()
    MLP(store, "enc", 2, 3, 2, rng)
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    save_checkpoint(a, store, {"hidden": 3})
    save_checkpoint(b, store, {"hidden": 3})
    assert a.read_bytes() == b.read_bytes()


def test_load_state_dict_validates():
    rng = np.random.default_rng(9)
    store = ParamStore()
    MLP(store, "enc", 2, 3, 2, rng)
    good = store.state_dict()
    bad = dict(good)
    bad.pop("enc.w1")
    with pytest.raises(ValueError):
        store.load_state_dict(bad)
    bad2 = dict(good)
    bad2["enc.w1"] = np.zeros((5, 5))
    with pytest.raises(ValueError):
        store.load_state_dict(bad2)
