"""Numerics core: forward-value oracles and per-primitive gradient checks."""

import numpy as np
import pytest

from stkd import tensor as T
from stkd.errors import InvalidArgumentError
from stkd.gradcheck import finite_diff_check

RNG = np.random.default_rng(7)
TOL = 1e-4


def check(f, params, tol=TOL):
    report = finite_diff_check(f, params, rel_tol=tol)
    assert report.passed, str(report)


def p(shape, scale=1.0, seed=None):
    rng = np.random.default_rng(seed) if seed is not None else RNG
    return T.Tensor(rng.standard_normal(shape) * scale, requires_grad=True)


# ---------------------------------------------------------------------------
# forward oracles (frozen independent values)
# ---------------------------------------------------------------------------

def test_softmax_matches_reference_values():
    # Reference computed with scipy.special.softmax on [1,2,3]/3.
    out = T.softmax(T.Tensor([1.0, 2.0, 3.0]), temperature=3.0)
    expected = [0.23023721634819047, 0.32132191985276876, 0.44844086379904069]
    np.testing.assert_allclose(out.data, expected, rtol=1e-12)
    assert abs(out.data.sum() - 1.0) < 1e-12


def test_softmax_shift_invariance():
    v = RNG.standard_normal(9)
    a = T.softmax(T.Tensor(v)).data
    b = T.softmax(T.Tensor(v + 123.456)).data
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_softmax_extreme_scores_stay_finite():
    out = T.softmax(T.Tensor([1e4, -1e4, 0.0])).data
    assert np.all(np.isfinite(out))
    assert abs(out.sum() - 1.0) < 1e-12


def test_softmax_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        T.softmax(T.Tensor(np.zeros((2, 2))))
    with pytest.raises(InvalidArgumentError):
        T.softmax(T.Tensor(np.zeros(0)))
    with pytest.raises(InvalidArgumentError):
        T.softmax(T.Tensor([1.0, 2.0]), temperature=0.0)
    with pytest.raises(InvalidArgumentError):
        T.softmax(T.Tensor([1.0, 2.0]), temperature=-1.0)


def test_masked_softmax_zeroes_masked_entries():
    x = T.Tensor([[1.0, 5.0, 2.0], [3.0, 1.0, 4.0]])
    valid = np.array([[True, False, True], [True, True, True]])
    y = T.masked_softmax(x, valid).data
    assert y[0, 1] == 0.0
    np.testing.assert_allclose(y.sum(axis=-1), [1.0, 1.0], atol=1e-12)
    # masked-out entry never influences the valid ones
    x2 = T.Tensor([[1.0, -999.0, 2.0], [3.0, 1.0, 4.0]])
    y2 = T.masked_softmax(x2, valid).data
    np.testing.assert_allclose(y, y2, atol=1e-15)


def test_masked_softmax_all_masked_row_is_zero():
    x = T.Tensor([[1.0, 2.0], [3.0, 4.0]])
    valid = np.array([[False, False], [True, True]])
    y = T.masked_softmax(x, valid).data
    assert np.all(y[0] == 0.0)
    assert abs(y[1].sum() - 1.0) < 1e-12


def test_cross_entropy_matches_reference():
    # -log(0.7) computed independently.
    out = T.cross_entropy(T.Tensor([0.1, 0.7, 0.2]), 1)
    assert abs(out.item() - 0.35667494393873245) < 1e-12


def test_cross_entropy_zero_probability_is_clamped():
    out = T.cross_entropy(T.Tensor([1.0, 0.0]), 1)
    assert abs(out.item() - (-np.log(T.CLAMP))) < 1e-9
    with pytest.raises(IndexError):
        T.cross_entropy(T.Tensor([0.5, 0.5]), 2)


def test_kl_divergence_matches_scipy_reference():
    # scipy.stats.entropy([0.1,0.2,0.3,0.4], [0.25]*4)
    out = T.kl_divergence(T.Tensor([0.1, 0.2, 0.3, 0.4]),
                          T.Tensor([0.25, 0.25, 0.25, 0.25]))
    assert abs(out.item() - 0.10644013528622315) < 1e-12


def test_kl_divergence_zero_p_entries_contribute_nothing():
    # scipy.stats.entropy([0, .5, .5], [.2, .4, .4])
    out = T.kl_divergence(T.Tensor([0.0, 0.5, 0.5]), T.Tensor([0.2, 0.4, 0.4]))
    assert abs(out.item() - 0.22314355131420971) < 1e-12


def test_kl_divergence_identical_distributions_is_zero():
    q = T.softmax(T.Tensor(RNG.standard_normal(11))).data
    out = T.kl_divergence(T.Tensor(q.copy()), T.Tensor(q.copy()))
    assert abs(out.item()) < 1e-12


def test_kl_divergence_shape_mismatch_raises():
    with pytest.raises(InvalidArgumentError):
        T.kl_divergence(T.Tensor([0.5, 0.5]), T.Tensor([0.2, 0.4, 0.4]))


def test_layer_norm_forward_matches_reference():
    x = T.Tensor([[1.0, 2.0, 3.0, 4.0]])
    y = T.layer_norm(x, T.Tensor(np.ones(4)), T.Tensor(np.zeros(4)))
    expected = [-1.34164025, -0.44721342, 0.44721342, 1.34164025]
    np.testing.assert_allclose(y.data[0], expected, atol=1e-7)
    assert abs(y.data.mean()) < 1e-9


def test_log_clamps_below_floor():
    y = T.log(T.Tensor([0.0, 1e-20, 1.0]))
    assert y.data[0] == np.log(T.CLAMP)
    assert y.data[1] == np.log(T.CLAMP)
    assert y.data[2] == 0.0


# ---------------------------------------------------------------------------
# gradient checks, one per primitive
# ---------------------------------------------------------------------------

def test_grad_add_mul_broadcast():
    a, b = p((3, 4), seed=0), p((1, 4), seed=1)
    check(lambda q: T.tsum(q["a"] * 2.0 + q["b"] * q["a"]), {"a": a, "b": b})


def test_grad_sub_div():
    a, b = p((2, 3), seed=2), p((2, 3), seed=3)
    b.data = np.abs(b.data) + 0.5
    check(lambda q: T.tsum(T.div(T.sub(q["a"], 1.5), q["b"])), {"a": a, "b": b})


def test_grad_power():
    a = p((5,), seed=4)
    a.data = np.abs(a.data) + 0.5
    check(lambda q: T.tsum(T.power(q["a"], 3.0)), {"a": a})


def test_grad_matmul_2d():
    a, b = p((4, 3), seed=5), p((3, 2), seed=6)
    check(lambda q: T.tsum(q["a"] @ q["b"]), {"a": a, "b": b})


def test_grad_matmul_batched():
    a, b = p((2, 3, 4), seed=7), p((2, 4, 2), seed=8)
    check(lambda q: T.tsum(q["a"] @ q["b"]), {"a": a, "b": b})


def test_grad_matmul_broadcast_weight():
    a, b = p((2, 3, 4), seed=9), p((4, 5), seed=10)
    check(lambda q: T.tsum(T.power(q["a"] @ q["b"], 2.0)), {"a": a, "b": b})


def test_grad_relu():
    a = p((4, 4), seed=11)
    check(lambda q: T.tsum(T.relu(q["a"])), {"a": a})


def test_grad_sigmoid_tanh_exp():
    a = p((3, 3), seed=12)
    check(lambda q: T.tsum(T.sigmoid(q["a"]) + T.tanh(q["a"]) + T.exp(q["a"])),
          {"a": a})


def test_grad_log():
    a = p((6,), seed=13)
    a.data = np.abs(a.data) + 0.1
    check(lambda q: T.tsum(T.log(q["a"])), {"a": a})


def test_grad_sum_mean_axes():
    a = p((3, 4), seed=14)
    check(lambda q: T.tsum(T.power(T.tmean(q["a"], axis=1), 2.0)), {"a": a})
    check(lambda q: T.tsum(T.power(T.tsum(q["a"], axis=0, keepdims=True), 2.0)),
          {"a": a})


def test_grad_reshape_swapaxes_concat():
    a, b = p((2, 6), seed=15), p((2, 2), seed=16)
    def f(q):
        r = T.reshape(q["a"], (2, 3, 2))
        s = T.swapaxes(r, 1, 2)
        c = T.concat([T.reshape(s, (2, 6)), q["b"]], axis=1)
        return T.tsum(T.power(c, 2.0))
    check(f, {"a": a, "b": b})


def test_grad_rows_slice():
    a = p((5, 3), seed=17)
    check(lambda q: T.tsum(T.power(T.rows(q["a"], 1, 4), 2.0)), {"a": a})


def test_grad_take_rows_with_repeats():
    table = p((6, 3), seed=18)
    ids = np.array([[0, 2, 2], [5, 0, 1]])
    check(lambda q: T.tsum(T.power(T.take_rows(q["t"], ids), 2.0)), {"t": table})


def test_take_rows_range_check():
    table = T.Tensor(np.zeros((3, 2)))
    with pytest.raises(IndexError):
        T.take_rows(table, np.array([3]))
    with pytest.raises(IndexError):
        T.take_rows(table, np.array([-1]))


def test_grad_take_rows_padded():
    table = p((6, 3), seed=19)
    ids = np.array([[1, 0, 3], [0, 5, 0]])  # 0 = padding, yields zero rows
    out = T.take_rows_padded(table, ids, pad_below=1)
    assert np.all(out.data[0, 1] == 0.0)
    check(lambda q: T.tsum(T.power(T.take_rows_padded(q["t"], ids, pad_below=1), 2.0)),
          {"t": table})


def test_grad_take_at_take_positions():
    a = p((4, 5), seed=20)
    idx = np.array([0, 4, 2, 2])
    check(lambda q: T.tsum(T.power(T.take_at(q["a"], idx), 2.0)), {"a": a})
    b = p((3, 4, 2), seed=21)
    pos = np.array([3, 0, 2])
    check(lambda q: T.tsum(T.power(T.take_positions(q["b"], pos), 2.0)), {"b": b})


def test_grad_segment_sum():
    x = p((7, 3), seed=22)
    seg = np.array([0, 1, 1, 2, 0, 2, 2])
    out = T.segment_sum(x, seg, 4)
    # segment 3 receives nothing
    assert np.all(out.data[3] == 0.0)
    np.testing.assert_allclose(out.data[0], x.data[0] + x.data[4], atol=1e-12)
    check(lambda q: T.tsum(T.power(T.segment_sum(q["x"], seg, 4), 2.0)), {"x": x})


def test_grad_softmax_masked_and_temperature():
    a = p((3, 5), seed=23)
    valid = np.array([[1, 1, 0, 1, 1], [1, 1, 1, 1, 1], [0, 1, 1, 0, 1]], bool)
    w = T.Tensor(np.random.default_rng(24).standard_normal((3, 5)))
    for tau in (1.0, 3.0):
        check(lambda q, tau=tau: T.tsum(
            w * T.masked_softmax(q["a"], valid, temperature=tau)), {"a": a})


def test_grad_layer_norm():
    x, g, b = p((2, 3, 4), seed=25), p((4,), seed=26), p((4,), seed=27)
    w = T.Tensor(np.random.default_rng(28).standard_normal((2, 3, 4)))
    check(lambda q: T.tsum(w * T.layer_norm(q["x"], q["g"], q["b"])),
          {"x": x, "g": g, "b": b})


def test_grad_cross_entropy_and_kl_through_softmax():
    a = p((7,), seed=29)
    check(lambda q: T.cross_entropy(T.softmax(q["a"]), 3), {"a": a})
    target = T.softmax(T.Tensor(np.random.default_rng(30).standard_normal(7))).data
    check(lambda q: T.kl_divergence(target, T.softmax(q["a"])), {"a": a})


def test_grad_batch_losses():
    a = p((4, 6), seed=31)
    targets = np.array([0, 5, 2, 2])
    check(lambda q: T.batch_cross_entropy(T.masked_softmax(q["a"]), targets),
          {"a": a})
    pk = T.masked_softmax(T.Tensor(np.random.default_rng(32).standard_normal((4, 6)))).data
    check(lambda q: T.batch_kl_divergence(pk, T.masked_softmax(q["a"])), {"a": a})


def test_grad_accumulates_across_reuse():
    # A tensor consumed twice must receive the sum of both contributions.
    a = p((3,), seed=33)
    out = T.tsum(a * a) + T.tsum(a * 3.0)
    out.backward()
    np.testing.assert_allclose(a.grad, 2.0 * a.data + 3.0, atol=1e-12)


def test_dropout_scaling_and_grad_mask():
    x = T.Tensor(np.ones((1000,)), requires_grad=True)
    rng = np.random.default_rng(0)
    y = T.dropout(x, 0.25, rng)
    kept = y.data > 0
    np.testing.assert_allclose(y.data[kept], 1.0 / 0.75, atol=1e-12)
    assert abs(kept.mean() - 0.75) < 0.05
    T.tsum(y).backward()
    np.testing.assert_allclose(x.grad[~kept], 0.0, atol=0)
    # rate 0 short-circuits to the identity
    assert T.dropout(x, 0.0, rng) is x
