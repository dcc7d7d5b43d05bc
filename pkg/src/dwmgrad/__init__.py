"""DWMGrad: dynamic-window momentum with adaptive per-parameter step sizes."""
from .errors import ConfigError, InvariantError, MissingFieldError, NumericalError
from .optim import (
    BaselineConfig,
    BaselineState,
    DwmGradConfig,
    DwmGradState,
    Optimizer,
    adaptive_lr,
    baseline_step,
    dwmgrad_step,
    make_optimizer,
    momentum_update,
    update_second_moment,
    window_update,
)

__version__ = "0.1.0"
