import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polsar_cvnn import CTensor, tensor, wirtinger_backward
from polsar_cvnn.cxcore import (angle, cabs, cexp, concat, conj, div, getitem, imag, make_complex, matmul, mean,
                                mul, real, relu, reshape, sqrt, transpose, tsum)
from polsar_cvnn.errors import ContractViolation, ShapeError
from polsar_cvnn.gradcheck import numeric_grad, rel_error

from conftest import crandn


def leaf(a):
    return CTensor(np.array(a), requires_grad=True)


def check(loss_fn, *leaves, tol=1e-7):
    for t in leaves:
        t.grad = None
    loss_fn().backward()
    for t in leaves:
        num = numeric_grad(loss_fn, t)
        assert rel_error(t.grad.ravel(), num) < tol


def test_abs_squared_gradient_is_twice_z(rng):
    # d|z|^2/dx + j d|z|^2/dy = 2x + 2jy
    z = leaf(crandn(rng, 5))
    tsum(mul(z, conj(z))).real.backward()
    np.testing.assert_allclose(z.grad, 2 * z.data, rtol=1e-12)


def test_real_linear_form_gradient_is_conjugate(rng):
    # L = Re(a z): dL/dx = Re a, dL/dy = -Im a
    a = crandn(rng, 4)
    z = leaf(crandn(rng, 4))
    tsum(real(mul(z, CTensor(a)))).backward()
    np.testing.assert_allclose(z.grad, np.conj(a), rtol=1e-12)


def test_real_leaf_gets_real_gradient(rng):
    x = leaf(rng.standard_normal(6))
    tsum(mul(x, x)).backward()
    assert not np.iscomplexobj(x.grad)
    np.testing.assert_allclose(x.grad, 2 * x.data)


UNARY = {
    "conj": lambda a: tsum(mul(conj(a), CTensor(np.arange(1, a.size + 1).reshape(a.shape) * (1 + 2j)))).real,
    "abs": lambda a: tsum(cabs(a)),
    "angle": lambda a: tsum(mul(angle(a), angle(a))),
    "exp": lambda a: tsum(cabs(cexp(a))),
    "sqrt": lambda a: tsum(cabs(sqrt(a))),
    "real_imag": lambda a: tsum(mul(real(a), imag(a))),
    "mean": lambda a: cabs(mean(mul(a, a))),
    "reshape_T": lambda a: tsum(cabs(mul(transpose(reshape(a, (a.shape[1], a.shape[0]))), a))),
    "getitem": lambda a: tsum(cabs(getitem(a, (slice(None), slice(0, 2))))),
    "relu_re": lambda a: tsum(mul(relu(real(a)), imag(a))),
    "div": lambda a: tsum(cabs(div(CTensor(np.full(a.shape, 1 + 1j)), a))),
}


@pytest.mark.parametrize("name", sorted(UNARY))
@given(seed=st.integers(0, 2 ** 16), rows=st.integers(2, 4), cols=st.integers(2, 4))
def test_unary_ops_match_finite_differences(name, seed, rows, cols):
    rng = np.random.default_rng(seed)
    a = leaf(crandn(rng, rows, cols) + 0.5)
    check(lambda: UNARY[name](a), a, tol=1e-6)


@given(seed=st.integers(0, 2 ** 16), n=st.integers(1, 4), k=st.integers(1, 4), m=st.integers(1, 4))
def test_matmul_and_concat_gradients(seed, n, k, m):
    rng = np.random.default_rng(seed)
    a, b = leaf(crandn(rng, n, k)), leaf(crandn(rng, k, m))
    c = leaf(crandn(rng, n, m))

    def loss():
        y = concat([matmul(a, b), c], axis=1)
        return tsum(mul(y, conj(y))).real

    check(loss, a, b, c)


def test_broadcast_gradients_reduce_to_operand_shape(rng):
    a = leaf(crandn(rng, 3, 4))
    b = leaf(crandn(rng, 1, 4))
    loss = lambda: tsum(cabs(mul(a, b) + b))  # noqa: E731
    check(loss, a, b)
    assert b.grad.shape == (1, 4)


def test_every_reachable_tensor_gets_a_grad(rng):
    a = leaf(crandn(rng, 3))
    h = mul(a, a)
    g = cabs(h)
    loss = tsum(g)
    loss.backward()
    for t in (a, h, g, loss):
        assert t.grad is not None


def test_leaves_argument_restricts_storage(rng):
    a, b = leaf(crandn(rng, 3)), leaf(crandn(rng, 3))
    h = mul(a, b)
    wirtinger_backward(tsum(cabs(h)), leaves=[a])
    assert a.grad is not None and b.grad is None and h.grad is None


def test_gradients_accumulate(rng):
    a = leaf(crandn(rng, 3))
    tsum(cabs(a)).backward()
    first = a.grad.copy()
    tsum(cabs(a)).backward()
    np.testing.assert_allclose(a.grad, 2 * first)


def test_nonscalar_or_complex_loss_rejected(rng):
    a = leaf(crandn(rng, 3))
    with pytest.raises(ContractViolation):
        wirtinger_backward(mul(a, a))
    with pytest.raises(ContractViolation):
        wirtinger_backward(tsum(mul(a, CTensor(np.full(3, 1j)))) + 5j)


def test_shape_mismatch_raises(rng):
    with pytest.raises(ShapeError):
        mul(leaf(crandn(rng, 3)), leaf(crandn(rng, 4)))


def test_make_complex_roundtrip(rng):
    x, y = leaf(rng.standard_normal(4)), leaf(rng.standard_normal(4))
    z = make_complex(x, y)
    tsum(mul(real(z), imag(z))).backward()
    np.testing.assert_allclose(x.grad, y.data)
    np.testing.assert_allclose(y.grad, x.data)


def test_tensor_defaults_to_complex64():
    t = tensor([1, 2])
    assert t.dtype == np.complex64 and not t.requires_grad
