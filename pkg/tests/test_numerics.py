import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmft import numerics as nx
from mmft.errors import DimensionError, GraphError, NumericError
from mmft.numerics import Tensor, grad_check, no_grad, softmax_stable, xavier_uniform


def leaf(a):
    return Tensor(np.asarray(a, dtype=float), requires_grad=True)


# -- matmul ---------------------------------------------------------------------

def test_matmul_identity():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal((Tensor(np.eye(2)) @ Tensor(a)).data, a)


def test_matmul_row_sums():
    out = Tensor([[1.0, 2.0], [3.0, 4.0]]) @ Tensor([[1.0], [1.0]])
    np.testing.assert_array_equal(out.data, [[3.0], [7.0]])


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))


def test_matmul_shared_weight_gradient(rng):
    x, w = leaf(rng.normal(size=(2, 3, 4))), leaf(rng.normal(size=(4, 5)))
    (x @ w).sum().backward()
    np.testing.assert_allclose(w.grad, x.data.reshape(-1, 4).sum(axis=0)[:, None] * np.ones((1, 5)))


# -- softmax ------------------------------------------------------------------

def test_softmax_symmetric():
    np.testing.assert_allclose(softmax_stable(Tensor([0.0, 0.0])).data, [0.5, 0.5])


def test_softmax_no_overflow():
    out = softmax_stable(Tensor([1000.0, 0.0])).data
    assert np.all(np.isfinite(out))
    assert out[0] == pytest.approx(1.0) and out[1] == pytest.approx(0.0, abs=1e-300)


def test_softmax_of_logs():
    out = softmax_stable(Tensor(np.log([1.0, 2.0, 3.0, 4.0]))).data
    np.testing.assert_allclose(out, [0.1, 0.2, 0.3, 0.4], atol=1e-15)


def test_softmax_nan_rejected():
    with pytest.raises(NumericError):
        softmax_stable(Tensor([np.nan, 0.0]))


def test_masked_softmax_zero_weight_and_full_mask():
    out = nx.softmax(Tensor([[1.0, 5.0, 2.0]]), mask=np.array([[True, False, True]])).data
    assert out[0, 1] == 0.0
    assert out.sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NumericError):
        nx.softmax(Tensor([[1.0, 2.0]]), mask=np.array([[False, False]]))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 8)),
              elements=st.floats(-1e3, 1e3)))
def test_softmax_rows_sum_to_one(x):
    out = softmax_stable(Tensor(x), axis=-1).data
    assert np.all(out >= 0)
    np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-12)


# -- backward -------------------------------------------------------------------

def test_square_gradient():
    x = leaf(3.0)
    (x * x).backward()
    assert x.grad == pytest.approx(6.0)


def test_sum_gradient():
    x = leaf([1.0, 1.0, 1.0])
    x.sum().backward()
    np.testing.assert_array_equal(x.grad, [1.0, 1.0, 1.0])


def test_backward_needs_scalar():
    with pytest.raises(GraphError):
        (leaf([1.0, 2.0]) * 2.0).backward()


def test_backward_twice_rejected():
    x = leaf(2.0)
    y = x * x
    y.backward()
    with pytest.raises(GraphError):
        y.backward()


def test_gradients_accumulate_over_reused_input():
    x = leaf(2.0)
    (x * x + x).backward()
    assert x.grad == pytest.approx(5.0)


def test_no_grad_records_nothing():
    x = leaf(2.0)
    with no_grad():
        y = x * x
    assert not y.requires_grad


def test_forward_overflow_is_numeric_error():
    with pytest.raises(NumericError):
        nx.exp(Tensor([1000.0]))


def test_log_of_negative_is_numeric_error():
    with pytest.raises(NumericError):
        nx.log(Tensor([-1.0]))


def test_two_layer_perceptron_matches_finite_differences(rng):
    x = rng.normal(size=(4, 3))
    target = rng.normal(size=(4, 1))

    def f(w1, b1, w2):
        h = nx.tanh(Tensor(x) @ w1 + b1)
        d = h @ w2 - target
        return (d * d).mean()

    report = grad_check(f, [leaf(rng.normal(size=(3, 5))), leaf(rng.normal(size=5)),
                            leaf(rng.normal(size=(5, 1)))], step=1e-5, tol=1e-4)
    assert report.passed and report.max_rel_error < 1e-4


# -- grad_check ---------------------------------------------------------------------

def test_grad_check_linear_is_exact(rng):
    c = rng.normal(size=6)
    report = grad_check(lambda x: (x * c).sum(), leaf(rng.normal(size=6)))
    assert report.passed and report.max_rel_error < 1e-10


def test_grad_check_softmax_cross_entropy(rng):
    onehot = np.eye(4)[[0, 2, 3]]

    def f(z):
        return -(nx.log_softmax(z, axis=-1) * onehot).sum()

    assert grad_check(f, leaf(rng.normal(size=(3, 4))), tol=1e-4).passed


def test_grad_check_flags_corrupted_rule(rng):
    def bad_square(a):
        return Tensor._from_op(a.data ** 2, (a,), lambda g: (g * 3.0 * a.data,), "bad_square")

    report = grad_check(lambda x: bad_square(x).sum(), leaf(rng.normal(size=5)))
    assert not report.passed and report.failures


# -- initialisation and determinism -----------------------------------------------

def test_xavier_bounds_and_determinism():
    a = xavier_uniform((20, 30), np.random.default_rng(1))
    b = xavier_uniform((20, 30), np.random.default_rng(1))
    limit = np.sqrt(6.0 / 50.0)
    assert np.abs(a.data).max() <= limit
    np.testing.assert_array_equal(a.data, b.data)
    assert a.requires_grad


def test_bit_identical_forward_and_backward(rng):
    x = rng.normal(size=(3, 4))
    w = rng.normal(size=(4, 2))

    def run():
        wt = leaf(w)
        out = nx.tanh(Tensor(x) @ wt).sum()
        out.backward()
        return out.data.tobytes(), wt.grad.tobytes()

    assert run() == run()


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 4)), elements=st.floats(-5, 5)))
def test_grad_shapes_match_data(x):
    t = leaf(x)
    (nx.sigmoid(t) * t).sum().backward()
    assert t.grad.shape == t.data.shape
