"""
DWMGrad and baseline optimizers.

Every optimizer is a pure function of ``(state, params, gradient, loss)``
returning new ``(params, state)``; nothing is mutated in place, so a state
can be copied, stored or handed to another worker between steps.

DWMGrad keeps an integer history window ``omega`` in ``[1, delta]``. The
window grows while the loss keeps improving and shrinks otherwise. It
controls both the momentum decay (``omega / delta``) and the normalisation
of the squared-gradient accumulator that sets per-parameter step sizes::

    omega_t = min(omega + 1, delta) if beta > 0 else max(omega - 1, 1)
    v_t     = (v_{t-1} * omega_{t-1} + g_t**2) / omega_t
    lr_t    = alpha0 / (sqrt(v_t) + eps)
    gamma_t = (omega_t / delta) * gamma_{t-1} + lr_t * g_t
    theta_t = theta_{t-1} - gamma_t

Baselines: sgd, msgd, nag, adagrad, rmsprop, adam, adamw.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, InvariantError, NumericalError

BETA_MODES = ("difference", "cumulative")
SECOND_MOMENT_RULES = ("prose", "literal")

# lr entries above this multiple of alpha0 raise the trajectory ceiling flag
LR_CEILING_FACTOR = 1e3


# ---------------------------------------------------------------------------
# DWMGrad
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DwmGradConfig:
    alpha0: float = 1e-3
    omega_init: int = 5
    delta: int = 10
    gamma_init: float = 0.0
    epsilon: float = 1e-8
    beta_mode: str = "difference"
    second_moment_rule: str = "prose"

    def __post_init__(self):
        if isinstance(self.omega_init, bool) or int(self.omega_init) != self.omega_init:
            raise ConfigError(f"omega_init must be an integer, got {self.omega_init!r}")
        if isinstance(self.delta, bool) or int(self.delta) != self.delta:
            raise ConfigError(f"delta must be an integer, got {self.delta!r}")
        object.__setattr__(self, "omega_init", int(self.omega_init))
        object.__setattr__(self, "delta", int(self.delta))
        if not 1 <= self.omega_init <= self.delta:
            raise ConfigError(
                f"need 1 <= omega_init <= delta, got omega_init={self.omega_init}, delta={self.delta}"
            )
        if not (np.isfinite(self.alpha0) and self.alpha0 > 0):
            raise ConfigError(f"alpha0 must be > 0, got {self.alpha0}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not np.isfinite(self.gamma_init):
            raise ConfigError("gamma_init must be finite")
        if self.beta_mode not in BETA_MODES:
            raise ConfigError(f"beta_mode must be one of {BETA_MODES}, got {self.beta_mode!r}")
        if self.second_moment_rule not in SECOND_MOMENT_RULES:
            raise ConfigError(
                f"second_moment_rule must be one of {SECOND_MOMENT_RULES}, "
                f"got {self.second_moment_rule!r}"
            )


@dataclass
class DwmGradState:
    omega: int
    beta: float
    momentum: np.ndarray
    second_moment: np.ndarray
    prev_loss: Optional[float] = None
    step_count: int = 0
    # last raw gradient; only read by the literal second-moment rule
    prev_grad: Optional[np.ndarray] = None
    # step sizes of the most recent step (None before the first step)
    lr: Optional[np.ndarray] = None

    def copy(self) -> "DwmGradState":
        return dataclasses.replace(
            self,
            momentum=self.momentum.copy(),
            second_moment=self.second_moment.copy(),
            prev_grad=None if self.prev_grad is None else self.prev_grad.copy(),
            lr=None if self.lr is None else self.lr.copy(),
        )


def _check_dimension(dimension) -> int:
    if int(dimension) != dimension or dimension < 1:
        raise ConfigError(f"dimension must be a positive integer, got {dimension!r}")
    return int(dimension)


def dwmgrad_init(config: DwmGradConfig, dimension: int) -> DwmGradState:
    d = _check_dimension(dimension)
    return DwmGradState(
        omega=config.omega_init,
        beta=0.0,
        momentum=np.full(d, float(config.gamma_init)),
        second_moment=np.zeros(d),
        prev_grad=np.zeros(d) if config.second_moment_rule == "literal" else None,
    )


def window_update(omega: int, beta: float, delta: int) -> int:
    """Grow the window by one when ``beta > 0``, otherwise shrink it by one."""
    if delta < 1:
        raise ConfigError(f"delta must be >= 1, got {delta}")
    if not 1 <= omega <= delta:
        raise ConfigError(f"omega={omega} outside [1, {delta}]")
    if beta > 0:
        return min(omega + 1, delta)
    return max(omega - 1, 1)


def update_second_moment(
    second_moment: np.ndarray,
    gradient: np.ndarray,
    omega_prev: int,
    omega_new: int,
    rule: str = "prose",
    prev_grad: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Window-weighted squared-gradient accumulator.

    ``prose``:   v_t = (v_{t-1} * omega_prev + g_t**2) / omega_new
    ``literal``: v_t = g_{t-1} * omega_prev / omega_new + g_{t-1}**2 / omega_new

    The literal form can go negative; callers clamp it before the square root.
    """
    if omega_new < 1:
        raise InvariantError(f"window collapsed to {omega_new}")
    if rule == "prose":
        return (second_moment * omega_prev + gradient * gradient) / omega_new
    if rule == "literal":
        if prev_grad is None:
            raise InvariantError("literal rule needs the previous gradient")
        return prev_grad * omega_prev / omega_new + prev_grad * prev_grad / omega_new
    raise ConfigError(f"unknown second-moment rule {rule!r}")


def adaptive_lr(second_moment: np.ndarray, alpha0: float, epsilon: float) -> np.ndarray:
    return alpha0 / (np.sqrt(second_moment) + epsilon)


def momentum_update(
    momentum: np.ndarray, omega: int, delta: int, lr: np.ndarray, gradient: np.ndarray
) -> np.ndarray:
    return (omega / delta) * momentum + lr * gradient


def _require_finite(gradient, loss=None):
    if loss is not None and not np.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss!r}")
    if not np.all(np.isfinite(gradient)):
        raise NumericalError("non-finite gradient entry")


def dwmgrad_step(
    state: DwmGradState,
    params: np.ndarray,
    gradient: np.ndarray,
    loss: float,
    config: DwmGradConfig,
) -> tuple[np.ndarray, DwmGradState]:
    """One DWMGrad update. ``gradient`` is taken at ``params``, ``loss`` is f(params).

    Raises NumericalError (and leaves ``state`` untouched) on a non-finite
    loss or gradient.
    """
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != params.shape or params.shape != state.momentum.shape:
        raise ValueError(
            f"shape mismatch: params {params.shape}, gradient {gradient.shape}, "
            f"state {state.momentum.shape}"
        )
    _require_finite(gradient, loss)
    loss = float(loss)

    beta = state.beta
    if state.prev_loss is not None:
        improvement = state.prev_loss - loss
        beta = improvement if config.beta_mode == "difference" else beta + improvement

    omega = window_update(state.omega, beta, config.delta)
    v = update_second_moment(
        state.second_moment,
        gradient,
        state.omega,
        omega,
        config.second_moment_rule,
        state.prev_grad,
    )
    lr = adaptive_lr(np.maximum(v, 0.0), config.alpha0, config.epsilon)
    momentum = momentum_update(state.momentum, omega, config.delta, lr, gradient)
    new_params = params - momentum

    new_state = DwmGradState(
        omega=omega,
        beta=beta,
        momentum=momentum,
        second_moment=v,
        prev_loss=loss,
        step_count=state.step_count + 1,
        prev_grad=gradient.copy() if config.second_moment_rule == "literal" else None,
        lr=lr,
    )
    return new_params, new_state


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

BASELINES = ("sgd", "msgd", "nag", "adagrad", "rmsprop", "adam", "adamw")


@dataclass(frozen=True)
class BaselineConfig:
    kind: str
    lr: float = 1e-3
    momentum: float = 0.9  # msgd / nag
    rho: float = 0.99  # rmsprop decay
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.01  # adamw only

    def __post_init__(self):
        if self.kind not in BASELINES:
            raise ConfigError(f"unknown baseline {self.kind!r}; expected one of {BASELINES}")
        if not (np.isfinite(self.lr) and self.lr > 0):
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        for name in ("momentum", "rho", "beta1", "beta2"):
            value = getattr(self, name)
            if not 0 <= value < 1:
                raise ConfigError(f"{name} must lie in [0, 1), got {value}")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")


@dataclass
class BaselineState:
    kind: str
    step_count: int = 0
    velocity: Optional[np.ndarray] = None  # msgd, nag
    accum: Optional[np.ndarray] = None  # adagrad G, rmsprop E[g^2], adam v
    first_moment: Optional[np.ndarray] = None  # adam m
    lr: Optional[np.ndarray] = None  # effective per-parameter step size, last step

    def copy(self) -> "BaselineState":
        def c(a):
            return None if a is None else a.copy()

        return dataclasses.replace(
            self,
            velocity=c(self.velocity),
            accum=c(self.accum),
            first_moment=c(self.first_moment),
            lr=c(self.lr),
        )


def baseline_init(config: BaselineConfig, dimension: int) -> BaselineState:
    d = _check_dimension(dimension)
    state = BaselineState(kind=config.kind)
    if config.kind in ("msgd", "nag"):
        state.velocity = np.zeros(d)
    elif config.kind in ("adagrad", "rmsprop"):
        state.accum = np.zeros(d)
    elif config.kind in ("adam", "adamw"):
        state.accum = np.zeros(d)
        state.first_moment = np.zeros(d)
    return state


def baseline_lookahead(state: BaselineState, params: np.ndarray, config: BaselineConfig):
    """Point where the next gradient should be evaluated (differs only for NAG)."""
    if config.kind == "nag":
        return params - config.momentum * state.velocity
    return params


def baseline_step(
    state: BaselineState,
    params: np.ndarray,
    gradient: np.ndarray,
    config: BaselineConfig,
) -> tuple[np.ndarray, BaselineState]:
    """Apply one baseline update.

    For NAG the caller must pass the gradient evaluated at
    :func:`baseline_lookahead`, not at ``params``.
    """
    if state.kind != config.kind:
        raise ValueError(f"state is for {state.kind!r}, config for {config.kind!r}")
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != params.shape:
        raise ValueError(f"shape mismatch: params {params.shape}, gradient {gradient.shape}")
    _require_finite(gradient)

    kind, lr = config.kind, config.lr
    t = state.step_count + 1
    new = BaselineState(kind=kind, step_count=t)

    if kind == "sgd":
        new.lr = np.full(params.shape, lr)
        return params - lr * gradient, new

    if kind in ("msgd", "nag"):
        new.velocity = config.momentum * state.velocity + lr * gradient
        new.lr = np.full(params.shape, lr)
        return params - new.velocity, new

    if kind == "adagrad":
        new.accum = state.accum + gradient * gradient
        new.lr = lr / np.sqrt(new.accum + config.epsilon)
        return params - new.lr * gradient, new

    if kind == "rmsprop":
        new.accum = config.rho * state.accum + (1 - config.rho) * gradient * gradient
        new.lr = lr / np.sqrt(new.accum + config.epsilon)
        return params - new.lr * gradient, new

    # adam / adamw
    b1, b2 = config.beta1, config.beta2
    new.first_moment = b1 * state.first_moment + (1 - b1) * gradient
    new.accum = b2 * state.accum + (1 - b2) * gradient * gradient
    m_hat = new.first_moment / (1 - b1**t)
    v_hat = new.accum / (1 - b2**t)
    new.lr = lr / (np.sqrt(v_hat) + config.epsilon)
    base = params
    if kind == "adamw":
        # decoupled decay, applied to the weights before the adaptive step
        base = params * (1 - lr * config.weight_decay)
    return base - new.lr * m_hat, new


# ---------------------------------------------------------------------------
# Uniform interface
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Optimizer:
    """Name + config bundle exposing ``init`` / ``step`` / ``lookahead_point``."""

    name: str
    config: object

    @property
    def base_lr(self) -> float:
        return self.config.alpha0 if self.name == "dwmgrad" else self.config.lr

    def init(self, dimension: int):
        if self.name == "dwmgrad":
            return dwmgrad_init(self.config, dimension)
        return baseline_init(self.config, dimension)

    def step(self, state, params, gradient, loss):
        if self.name == "dwmgrad":
            return dwmgrad_step(state, params, gradient, loss, self.config)
        if not np.isfinite(loss):
            raise NumericalError(f"non-finite loss {loss!r}")
        return baseline_step(state, params, gradient, self.config)

    def lookahead_point(self, state, params):
        if self.name == "dwmgrad":
            return params
        return baseline_lookahead(state, params, self.config)

    def momentum_of(self, state) -> np.ndarray | None:
        if self.name == "dwmgrad":
            return state.momentum
        if state.velocity is not None:
            return state.velocity
        return state.first_moment


OPTIMIZERS = ("dwmgrad",) + BASELINES


def make_optimizer(name: str, **hyperparams) -> Optimizer:
    if name == "dwmgrad":
        return Optimizer(name, DwmGradConfig(**_known(DwmGradConfig, name, hyperparams)))
    if name in BASELINES:
        return Optimizer(name, BaselineConfig(kind=name, **_known(BaselineConfig, name, hyperparams)))
    raise ConfigError(f"unknown optimizer {name!r}; expected one of {OPTIMIZERS}")


def hyperparameter_names(name: str) -> tuple[str, ...]:
    cls = DwmGradConfig if name == "dwmgrad" else BaselineConfig
    return tuple(f.name for f in dataclasses.fields(cls) if f.name != "kind")


def _known(cls, name, hyperparams):
    allowed = {f.name for f in dataclasses.fields(cls)} - {"kind"}
    unknown = set(hyperparams) - allowed
    if unknown:
        raise ConfigError(f"unknown hyperparameter(s) for {name}: {sorted(unknown)}")
    return hyperparams
