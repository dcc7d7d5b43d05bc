"""Differentiable test objectives with hand-derived gradients."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, NumericalError


@dataclass(frozen=True)
class Objective:
    name: str
    dimension: int
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    minimizer: Optional[np.ndarray] = None
    strong_convexity: Optional[float] = None
    default_start: Optional[np.ndarray] = None
    # dataset-backed objectives: indices -> objective restricted to those rows
    restrict: Optional[Callable[[np.ndarray], "Objective"]] = None
    n_samples: Optional[int] = None
    # dataset-backed classifiers: params -> fraction correctly classified
    accuracy: Optional[Callable[[np.ndarray], float]] = None

    def __call__(self, params) -> float:
        return self.value(np.asarray(params, dtype=float))


# ---------------------------------------------------------------------------
# Analytic test functions
# ---------------------------------------------------------------------------


def rosenbrock() -> Objective:
    """f(x, y) = (1 - x)^2 + 100 (y - x^2)^2, minimum 0 at (1, 1)."""

    def value(p):
        x, y = p
        return float((1 - x) ** 2 + 100 * (y - x * x) ** 2)

    def grad(p):
        x, y = p
        r = y - x * x
        return np.array([-2 * (1 - x) - 400 * x * r, 200 * r])

    return Objective(
        "rosenbrock",
        2,
        value,
        grad,
        minimizer=np.array([1.0, 1.0]),
        default_start=np.array([-1.2, 1.0]),
    )


def spd_matrix(dimension: int, condition_number: float, seed: int) -> np.ndarray:
    """Random orthogonal basis with eigenvalues linearly spaced in [1, condition_number]."""
    if condition_number < 1:
        raise ConfigError(f"condition_number must be >= 1, got {condition_number}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dimension, dimension)))
    q = q * np.sign(np.diag(r))
    eigs = np.linspace(1.0, condition_number, dimension) if dimension > 1 else np.ones(1)
    a = (q * eigs) @ q.T
    return (a + a.T) / 2


def quadratic(dimension: int, condition_number: float = 1.0, seed: int = 0,
              matrix: Optional[np.ndarray] = None) -> Objective:
    """f(theta) = 0.5 theta^T A theta with smallest eigenvalue 1.

    ``condition_number == 1`` gives A = I exactly. Pass ``matrix`` to use a
    specific SPD matrix (its smallest eigenvalue becomes the strong-convexity
    constant).
    """
    if dimension < 1:
        raise ConfigError("dimension must be >= 1")
    if matrix is not None:
        a = np.asarray(matrix, dtype=float)
        m = float(np.linalg.eigvalsh(a)[0])
    elif condition_number == 1:
        a, m = np.eye(dimension), 1.0
    else:
        a, m = spd_matrix(dimension, condition_number, seed), 1.0

    def value(p):
        return float(0.5 * p @ (a @ p))

    def grad(p):
        return a @ p

    start = np.random.default_rng(seed + 1).standard_normal(dimension)
    return Objective(
        "quadratic",
        dimension,
        value,
        grad,
        minimizer=np.zeros(dimension),
        strong_convexity=m,
        default_start=start,
    )


def linear(coefficients) -> Objective:
    """f(theta) = c . theta. Mainly useful for checking the finite-difference code."""
    c = np.asarray(coefficients, dtype=float)
    return Objective("linear", c.size, lambda p: float(c @ p), lambda p: c.copy())


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticDataset:
    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,), values in {0, 1}
    seed: int = 0

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise ConfigError("dataset needs a non-empty 2-D feature matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ConfigError("labels must have one entry per sample")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def to_csv(self, path) -> None:
        d = self.n_features
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(d)] + ["label"])
            for x, y in zip(self.features, self.labels):
                w.writerow([f"{v:.17g}" for v in x] + [f"{y:.17g}"])

    @classmethod
    def from_csv(cls, path, seed: int = 0) -> "SyntheticDataset":
        rows = list(csv.reader(Path(path).read_text().splitlines()))
        body = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(body[:, :-1], body[:, -1], seed)


def make_blobs(n_samples: int = 200, dimension: int = 2, separation: float = 1.0,
               seed: int = 0) -> SyntheticDataset:
    """Two unit-covariance Gaussian classes centred at +/- separation * e_1.

    Classes are balanced (n // 2 in class 0, the rest in class 1), so each
    class has at least one sample whenever ``n_samples >= 2``.
    """
    if n_samples < 2:
        raise ConfigError("need at least two samples")
    if dimension < 1:
        raise ConfigError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    labels = np.zeros(n_samples)
    labels[n_samples // 2:] = 1.0
    centre = np.zeros(dimension)
    centre[0] = separation
    x = rng.standard_normal((n_samples, dimension)) + np.where(labels[:, None] > 0, centre, -centre)
    return SyntheticDataset(x, labels, seed)


def make_regression(n_samples: int = 200, dimension: int = 5, noise: float = 0.1,
                    seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_samples, dimension))
    w = rng.standard_normal(dimension)
    y = x @ w + 0.5 + noise * rng.standard_normal(n_samples)
    return x, y


# ---------------------------------------------------------------------------
# Dataset-backed objectives
# ---------------------------------------------------------------------------


def _bce_from_logits(z, y):
    # mean of log(1 + e^z) - y z, stable for large |z|
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_regression(data: SyntheticDataset) -> Objective:
    """Mean cross-entropy of a linear classifier; params = (weights, bias)."""
    x, y = data.features, data.labels
    n, d = x.shape

    def value(p):
        return _bce_from_logits(x @ p[:d] + p[d], y)

    def grad(p):
        r = (_sigmoid(x @ p[:d] + p[d]) - y) / n
        return np.concatenate([x.T @ r, [r.sum()]])

    def accuracy(p):
        return float(np.mean(((x @ p[:d] + p[d]) > 0) == (y > 0.5)))

    def restrict(idx):
        return logistic_regression(SyntheticDataset(x[idx], y[idx], data.seed))

    return Objective("logistic", d + 1, value, grad, default_start=np.zeros(d + 1),
                     restrict=restrict, n_samples=n, accuracy=accuracy)


def mlp_unflatten(p, n_features: int, hidden: int):
    """Split a flat vector into W1 (hidden x n_features, row-major), b1, w2, b2."""
    h, d = hidden, n_features
    w1 = p[: h * d].reshape(h, d)
    b1 = p[h * d: h * d + h]
    w2 = p[h * d + h: h * d + 2 * h]
    b2 = p[h * d + 2 * h]
    return w1, b1, w2, b2


def tiny_mlp(data: SyntheticDataset, hidden_units: int = 8, init_seed: Optional[int] = None) -> Objective:
    """One tanh hidden layer, sigmoid output, mean cross-entropy loss.

    The default start is a small Gaussian draw (scale 0.5) seeded from the
    dataset seed unless ``init_seed`` is given; an all-zero start is a saddle
    where hidden units never separate.
    """
    if hidden_units < 1:
        raise ConfigError("hidden_units must be >= 1")
    x, y = data.features, data.labels
    n, d = x.shape
    h = hidden_units
    dim = h * d + 2 * h + 1

    def forward(p):
        w1, b1, w2, b2 = mlp_unflatten(p, d, h)
        a = np.tanh(x @ w1.T + b1)
        return a, a @ w2 + b2

    def value(p):
        return _bce_from_logits(forward(p)[1], y)

    def grad(p):
        w1, b1, w2, b2 = mlp_unflatten(p, d, h)
        a, z = forward(p)
        dz = (_sigmoid(z) - y) / n  # (n,)
        g_w2 = a.T @ dz
        g_b2 = dz.sum()
        da = np.outer(dz, w2) * (1 - a * a)  # (n, h)
        g_w1 = da.T @ x
        g_b1 = da.sum(axis=0)
        return np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])

    def accuracy(p):
        return float(np.mean((forward(p)[1] > 0) == (y > 0.5)))

    def restrict(idx):
        return tiny_mlp(SyntheticDataset(x[idx], y[idx], data.seed), h, init_seed)

    seed = data.seed if init_seed is None else init_seed
    start = 0.5 * np.random.default_rng(seed + 7919).standard_normal(dim)
    return Objective("mlp", dim, value, grad, default_start=start,
                     restrict=restrict, n_samples=n, accuracy=accuracy)


def linear_regression(features: np.ndarray, targets: np.ndarray) -> Objective:
    """Half mean squared error of an affine model; params = (weights, bias)."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    n, d = x.shape

    def value(p):
        r = x @ p[:d] + p[d] - y
        return float(0.5 * np.mean(r * r))

    def grad(p):
        r = (x @ p[:d] + p[d] - y) / n
        return np.concatenate([x.T @ r, [r.sum()]])

    xb = np.hstack([x, np.ones((n, 1))])
    sol = np.linalg.lstsq(xb, y, rcond=None)[0]
    m = float(np.linalg.eigvalsh(xb.T @ xb / n)[0])

    def restrict(idx):
        return linear_regression(x[idx], y[idx])

    return Objective("linear_regression", d + 1, value, grad, minimizer=sol,
                     strong_convexity=m if m > 0 else None, default_start=np.zeros(d + 1),
                     restrict=restrict, n_samples=n)


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------


def numerical_gradient(objective: Objective, point, h: float = 1e-5) -> np.ndarray:
    """Central differences (f(x + h e_i) - f(x - h e_i)) / 2h."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(point, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp, fm = objective.value(x + e), objective.value(x - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericalError(f"non-finite objective value near coordinate {i}")
        out[i] = (fp - fm) / (2 * h)
    return out


def gradient_check(objective: Objective, point, h: float = 1e-5, floor: float = 1e-6) -> float:
    """Largest per-coordinate relative error between analytic and central-difference gradients.

    The denominator is ``max(|analytic|, |numeric|, floor)`` so coordinates
    with a vanishing gradient are measured absolutely at scale ``floor``.
    """
    x = np.asarray(point, dtype=float)
    analytic = np.asarray(objective.grad(x), dtype=float)
    numeric = numerical_gradient(objective, x, h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


def build_objective(name: str, **params) -> Objective:
    """Construct a named objective from plain (JSON-able) parameters."""
    try:
        if name == "rosenbrock":
            return rosenbrock(**params)
        if name == "quadratic":
            return quadratic(**params)
        if name == "logistic":
            data = make_blobs(**params)
            return logistic_regression(data)
        if name == "mlp":
            hidden = params.pop("hidden_units", 8)
            return tiny_mlp(make_blobs(**params), hidden)
        if name == "linear_regression":
            return linear_regression(*make_regression(**params))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for objective {name!r}: {exc}") from None
    raise ConfigError(f"unknown objective {name!r}; expected one of {OBJECTIVES}")


OBJECTIVES = ("rosenbrock", "quadratic", "logistic", "mlp", "linear_regression")
