import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dwmgrad.errors import ConfigError, NumericalError
from dwmgrad.objectives import (
    Objective,
    SyntheticDataset,
    build_objective,
    gradient_check,
    linear,
    linear_regression,
    logistic_regression,
    make_blobs,
    make_regression,
    mlp_unflatten,
    numerical_gradient,
    quadratic,
    rosenbrock,
    spd_matrix,
    tiny_mlp,
)


def test_rosenbrock_values():
    f = rosenbrock()
    assert f.dimension == 2
    assert f([1, 1]) == 0.0
    assert f([0, 0]) == 1.0
    np.testing.assert_array_equal(f.grad(np.array([1.0, 1.0])), [0.0, 0.0])
    np.testing.assert_array_equal(f.minimizer, [1.0, 1.0])
    np.testing.assert_array_equal(f.default_start, [-1.2, 1.0])


def test_rosenbrock_gradient_check():
    assert gradient_check(rosenbrock(), [0.5, 0.5], 1e-5) <= 1e-6


def test_quadratic_identity():
    f = quadratic(2)
    assert f([3.0, 4.0]) == 12.5
    np.testing.assert_array_equal(f.grad(np.array([3.0, 4.0])), [3.0, 4.0])
    assert f(np.zeros(2)) == 0.0
    assert f.strong_convexity == 1.0


def test_spd_matrix_spectrum():
    a = spd_matrix(10, 10.0, seed=4)
    np.testing.assert_allclose(a, a.T)
    eig = np.linalg.eigvalsh(a)
    np.testing.assert_allclose([eig[0], eig[-1]], [1.0, 10.0], rtol=1e-10)
    np.testing.assert_array_equal(a, spd_matrix(10, 10.0, seed=4))
    with pytest.raises(ConfigError):
        spd_matrix(3, 0.5, 0)


def test_quadratic_random_gradient():
    f = quadratic(6, 25.0, seed=2)
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert gradient_check(f, rng.standard_normal(6), 1e-5) <= 1e-6
    assert np.max(np.abs(f.grad(f.minimizer))) <= 1e-10


def test_linear_gradient_check_exact():
    f = linear([1.0, -2.0, 0.5])
    rng = np.random.default_rng(1)
    for _ in range(5):
        assert gradient_check(f, rng.standard_normal(3)) <= 1e-10


def test_quadratic_gradient_check_any_h():
    f = quadratic(4, 5.0, seed=3)
    x = np.random.default_rng(2).standard_normal(4)
    for h in (1e-3, 1e-4, 1e-5):
        assert gradient_check(f, x, h) <= 1e-8


def test_gradient_check_rejects_bad_inputs():
    with pytest.raises(ValueError):
        numerical_gradient(rosenbrock(), [0, 0], 0.0)
    bad = Objective("bad", 1, lambda p: float("nan"), lambda p: np.zeros(1))
    with pytest.raises(NumericalError):
        gradient_check(bad, [0.0])


def test_blobs_reproducible_and_balanced():
    a = make_blobs(50, 3, 1.0, seed=9)
    b = make_blobs(50, 3, 1.0, seed=9)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()
    assert (a.labels == 0).sum() == 25 and (a.labels == 1).sum() == 25
    assert not np.array_equal(a.features, make_blobs(50, 3, 1.0, seed=10).features)


def test_dataset_csv_roundtrip(tmp_path):
    data = make_blobs(20, 4, 1.0, seed=1)
    path = tmp_path / "blobs.csv"
    data.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "x0,x1,x2,x3,label"
    back = SyntheticDataset.from_csv(path)
    assert back.features.tobytes() == data.features.tobytes()
    assert back.labels.tobytes() == data.labels.tobytes()


def test_logistic_zero_weights_is_ln2():
    f = logistic_regression(make_blobs(40, 3, 1.0, 0))
    assert f.dimension == 4
    assert f(np.zeros(4)) == pytest.approx(math.log(2), abs=1e-15)


def test_logistic_gradient():
    f = logistic_regression(make_blobs(40, 3, 1.0, 0))
    rng = np.random.default_rng(5)
    for _ in range(10):
        assert gradient_check(f, rng.standard_normal(4)) <= 1e-6


def test_logistic_separable_limit():
    x = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    f = logistic_regression(SyntheticDataset(x, np.array([0.0, 0.0, 1.0, 1.0])))
    w = np.array([1.0, 0.0])
    losses = [f(s * w) for s in (1, 2, 4, 8, 16, 32)]
    assert all(b < a for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-12


def test_mlp_zero_params_is_ln2():
    data = make_blobs(30, 2, 1.0, 0)
    f = tiny_mlp(data, 8)
    assert f.dimension == 8 * 2 + 8 + 8 + 1
    assert f(np.zeros(f.dimension)) == pytest.approx(math.log(2), abs=1e-15)


def test_mlp_gradient_random_points():
    data = make_blobs(30, 3, 1.0, 2)
    f = tiny_mlp(data, 6)
    rng = np.random.default_rng(6)
    worst = max(gradient_check(f, rng.uniform(-2, 2, f.dimension)) for _ in range(50))
    assert worst <= 1e-5


def test_mlp_hidden_permutation_symmetry():
    data = make_blobs(30, 2, 1.0, 0)
    h, d = 5, 2
    f = tiny_mlp(data, h)
    p = np.random.default_rng(7).standard_normal(f.dimension)
    w1, b1, w2, b2 = mlp_unflatten(p, d, h)
    perm = np.random.default_rng(8).permutation(h)
    q = np.concatenate([w1[perm].ravel(), b1[perm], w2[perm], [b2]])
    assert f(q) == pytest.approx(f(p), rel=1e-14)


def test_linear_regression_minimizer():
    f = linear_regression(*make_regression(50, 3, 0.1, 0))
    assert np.max(np.abs(f.grad(f.minimizer))) <= 1e-10
    assert f.strong_convexity > 0


def test_restrict_selects_rows():
    data = make_blobs(10, 2, 1.0, 0)
    f = logistic_regression(data)
    idx = np.array([0, 0, 5])
    g = f.restrict(idx)
    expected = logistic_regression(SyntheticDataset(data.features[idx], data.labels[idx]))
    p = np.array([0.3, -0.2, 0.1])
    assert g(p) == expected(p)


def test_registry():
    assert build_objective("rosenbrock").name == "rosenbrock"
    assert build_objective("quadratic", dimension=3, condition_number=2.0, seed=1).dimension == 3
    assert build_objective("mlp", n_samples=20, dimension=2, hidden_units=3).dimension == 13
    with pytest.raises(ConfigError):
        build_objective("himmelblau")
    with pytest.raises(ConfigError):
        build_objective("quadratic", dim=3)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_objectives_are_pure(seed):
    rng = np.random.default_rng(seed)
    for f in (rosenbrock(), quadratic(3, 4.0, 1), tiny_mlp(make_blobs(20, 2, 1.0, 1), 3)):
        x = rng.standard_normal(f.dimension)
        assert f(x) == f(x)
        assert f.grad(x).tobytes() == f.grad(x).tobytes()
