import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kdlab.autodiff import Graph, ShapeError, Tensor, grad_check
from kdlab.losses import continuation_kd_loss
from kdlab.models import forward, init_network, mlp_spec


def central_diff(loss_value, params, eps=1e-5):
    """Independent finite-difference oracle: perturb every entry by +-eps."""
    grads = []
    for p in params:
        flat = p.data.reshape(-1)
        g = np.empty_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = loss_value()
            flat[i] = orig - eps
            f_minus = loss_value()
            flat[i] = orig
            g[i] = (f_plus - f_minus) / (2 * eps)
        grads.append(g.reshape(p.data.shape))
    return grads


def test_sum_sq_example():
    g = Graph()
    out = g.sum_sq(Tensor([3.0, 4.0]))
    assert float(out.data) == 25.0


def test_relu_example():
    g = Graph()
    out = g.relu(Tensor([-1.0, 2.0]))
    assert out.data.tolist() == [0.0, 2.0]


def test_relu_subgradient_at_zero_is_zero():
    g = Graph()
    x = Tensor([[0.0, -1.0, 2.0]], requires_grad=True)
    root = g.mean(g.relu(x))
    g.backward(root)
    assert x.grad.tolist() == [[0.0, 0.0, 1.0 / 3.0]]


def test_matmul_hand_dot_product():
    # 1x2 [1,2] times 2x1 [3,4]^T: 1*3 + 2*4 = 11
    g = Graph()
    out = g.matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]]))
    assert out.data.tolist() == [[11.0]]


def test_matmul_shape_error_names_both_shapes():
    g = Graph()
    with pytest.raises(ShapeError, match=r"\(1, 2\).*\(3, 1\)"):
        g.matmul(Tensor([[1.0, 2.0]]), Tensor([[1.0], [2.0], [3.0]]))


def test_add_shape_error():
    g = Graph()
    with pytest.raises(ShapeError):
        g.add(Tensor([1.0, 2.0]), Tensor([1.0, 2.0, 3.0]))


def test_backward_of_sum_sq():
    g = Graph()
    x = Tensor([3.0], requires_grad=True)
    root = g.sum_sq(x)
    g.backward(root)
    assert x.grad.tolist() == [6.0]


def test_backward_constant_root_gives_zero_grads():
    g = Graph()
    w = Tensor([1.0, 2.0], requires_grad=True)
    root = g.mean(Tensor([5.0, 7.0]))
    g.backward(root)
    assert w.grad.tolist() == [0.0, 0.0]


def test_backward_rejects_non_scalar_root():
    g = Graph()
    x = Tensor([1.0, 2.0], requires_grad=True)
    vec = g.scale(x, 2.0)
    with pytest.raises(ShapeError):
        g.backward(vec)


def test_backward_rejects_foreign_root():
    g = Graph()
    with pytest.raises(ValueError):
        g.backward(Tensor(1.0))


def test_repeated_backward_accumulates():
    g = Graph()
    x = Tensor([3.0], requires_grad=True)
    root = g.sum_sq(x)
    g.backward(root)
    g.backward(root)
    assert x.grad.tolist() == [12.0]


def test_constants_never_receive_grad():
    g = Graph()
    w = Tensor([[1.0, -2.0]], requires_grad=True)
    c = Tensor([[3.0, 4.0]])
    root = g.sum_sq(g.mul(w, c))
    g.backward(root)
    assert c.grad.tolist() == [[0.0, 0.0]]
    assert np.any(w.grad != 0.0)


def test_pick_and_log_sum_exp_against_numpy():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(5, 4))
    labels = rng.integers(0, 4, size=5)
    g = Graph()
    t = Tensor(x, requires_grad=True)
    lse = g.log_sum_exp(t, axis=1)
    picked = g.pick(t, labels)
    assert np.allclose(lse.data, np.log(np.exp(x).sum(axis=1)), rtol=1e-12)
    assert np.array_equal(picked.data, x[np.arange(5), labels])
    root = g.mean(g.sub(lse, picked))
    g.backward(root)
    softmax = np.exp(x) / np.exp(x).sum(axis=1, keepdims=True)
    expected = softmax / 5
    expected[np.arange(5), labels] -= 1 / 5
    assert np.allclose(t.grad, expected, rtol=1e-10)


def test_hinge_loss_gradient_matches_central_differences():
    """Annealed-hinge loss on random 4-logit inputs, finite-difference oracle."""
    rng = np.random.default_rng(7)
    z_s0 = rng.normal(size=(1, 4))
    z_t = rng.normal(size=(1, 4))
    z_s = Tensor(z_s0.copy(), requires_grad=True)
    phi, m = 0.7, 0.5

    g = Graph()
    root = continuation_kd_loss(g, z_s, z_t, phi, m)
    g.backward(root)

    def loss_value():
        g2 = Graph()
        return float(continuation_kd_loss(g2, z_s, z_t, phi, m).data)

    (numeric,) = central_diff(loss_value, [z_s], eps=1e-5)
    rel = np.abs(z_s.grad - numeric) / np.maximum(1e-12, np.abs(z_s.grad) + np.abs(numeric))
    assert rel.max() <= 1e-4


def test_grad_check_quadratic_is_tight():
    x = Tensor([1.0, -2.0, 3.0], requires_grad=True)

    def loss_fn(g):
        return g.sum_sq(x)

    assert grad_check(loss_fn, [x]) <= 1e-6


def test_grad_check_mlp_mse_seed0():
    net = init_network(mlp_spec(2, [16, 16], 1, "tanh"), 0)
    rng = np.random.default_rng(0)
    x = Tensor(rng.normal(size=(8, 2)))
    y = rng.normal(size=(8, 1))

    def loss_fn(g):
        pred = forward(g, net, x)
        diff = g.sub(pred, Tensor(y))
        return g.mean(g.sum_sq(diff, axis=1))

    assert grad_check(loss_fn, net.parameters()) <= 1e-4


def test_grad_check_hinge_away_from_kink():
    rng = np.random.default_rng(11)
    z_t = rng.normal(size=(3, 4))
    z_s = Tensor(z_t + rng.normal(scale=0.5, size=(3, 4)), requires_grad=True)
    phi, m = 0.8, 0.5
    sq = ((z_s.data - phi * z_t) ** 2).sum(axis=1)
    assert np.all(np.abs(sq - m * phi) >= 1e-3), "fixture must stay clear of the hinge kink"

    def loss_fn(g):
        return continuation_kd_loss(g, z_s, z_t, phi, m)

    assert grad_check(loss_fn, [z_s]) <= 1e-4


def test_grad_check_validates_inputs():
    x = Tensor([1.0], requires_grad=True)
    with pytest.raises(ValueError):
        grad_check(lambda g: g.sum_sq(x), [x], eps=0.0)
    bad = Tensor([np.inf])
    with pytest.raises(FloatingPointError):
        grad_check(lambda g: g.sum_sq(g.mul(x, bad)), [x])


@given(a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_gradient_accumulation_linearity(a, b):
    """backward(a*L1 + b*L2) equals a*grad(L1) + b*grad(L2)."""
    x0 = np.array([0.7, -1.3, 2.1])

    def build(g, x):
        l1 = g.sum_sq(x)
        l2 = g.mean(g.relu(x))
        return l1, l2

    x = Tensor(x0.copy(), requires_grad=True)
    g = Graph()
    l1, l2 = build(g, x)
    g.backward(g.add(g.scale(l1, a), g.scale(l2, b)))
    combined = x.grad.copy()

    grads = []
    for which in (0, 1):
        x.zero_grad()
        g = Graph()
        parts = build(g, x)
        g.backward(parts[which])
        grads.append(x.grad.copy())

    assert np.allclose(combined, a * grads[0] + b * grads[1], rtol=1e-12, atol=1e-12)


def test_forward_and_backward_are_deterministic():
    def run():
        net = init_network(mlp_spec(3, [8], 2, "relu"), 5)
        x = Tensor(np.linspace(-1, 1, 12).reshape(4, 3))
        g = Graph()
        out = forward(g, net, x)
        root = g.mean(g.sum_sq(out, axis=1))
        g.backward(root)
        return out.data.copy(), [p.grad.copy() for p in net.parameters()]

    v1, g1 = run()
    v2, g2 = run()
    assert np.array_equal(v1, v2)
    for a, b in zip(g1, g2):
        assert np.array_equal(a, b)


def test_finite_outputs_on_finite_inputs():
    net = init_network(mlp_spec(4, [16, 16], 3, "relu"), 9)
    rng = np.random.default_rng(1)
    x = Tensor(rng.normal(scale=5.0, size=(32, 4)))
    g = Graph()
    out = forward(g, net, x)
    root = g.mean(g.sum_sq(out, axis=1))
    g.backward(root)
    assert np.isfinite(out.data).all()
    assert all(np.isfinite(p.grad).all() for p in net.parameters())
