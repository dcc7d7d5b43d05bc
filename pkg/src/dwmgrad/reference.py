"""Scalar reference updates for cross-checking the vectorised optimizers.

Everything here works on plain Python floats, one coordinate at a time, with
the formulas written out independently of :mod:`dwmgrad.optim`. Vectors are
handled by mapping the scalar rule over coordinates.
"""
from __future__ import annotations

import math


def ref_window(omega, beta, delta):
    if beta > 0:
        return omega + 1 if omega + 1 <= delta else delta
    return omega - 1 if omega - 1 >= 1 else 1


def ref_dwmgrad_coord(theta, g, v, gamma, omega_prev, omega_new, delta, alpha0, eps):
    """Returns (theta', v', gamma', lr) for one coordinate under the prose rule."""
    v_new = v * omega_prev / omega_new + g**2 / omega_new
    lr = alpha0 / (math.sqrt(v_new) + eps)
    gamma_new = gamma * omega_new / delta + lr * g
    return theta - gamma_new, v_new, gamma_new, lr


def ref_dwmgrad(theta, g, v, gamma, omega, beta, prev_loss, loss, delta, alpha0, eps,
                beta_mode="difference"):
    """Full step on lists. Returns (theta', v', gamma', omega', beta')."""
    if prev_loss is not None:
        diff = prev_loss - loss
        beta = diff if beta_mode == "difference" else beta + diff
    omega_new = ref_window(omega, beta, delta)
    out = [
        ref_dwmgrad_coord(t, gi, vi, ci, omega, omega_new, delta, alpha0, eps)
        for t, gi, vi, ci in zip(theta, g, v, gamma)
    ]
    return (
        [o[0] for o in out],
        [o[1] for o in out],
        [o[2] for o in out],
        omega_new,
        beta,
    )


def ref_sgd(theta, g, lr):
    return [t - lr * gi for t, gi in zip(theta, g)]


def ref_momentum(theta, g, vel, lr, mu):
    """MSGD / NAG share the same recurrence; NAG differs only in where g is taken."""
    vel_new = [mu * v + lr * gi for v, gi in zip(vel, g)]
    return [t - v for t, v in zip(theta, vel_new)], vel_new


def ref_adagrad(theta, g, acc, lr, eps):
    acc_new = [a + gi * gi for a, gi in zip(acc, g)]
    theta_new = [t - lr * gi / math.sqrt(a + eps) for t, gi, a in zip(theta, g, acc_new)]
    return theta_new, acc_new


def ref_rmsprop(theta, g, acc, lr, rho, eps):
    acc_new = [rho * a + (1 - rho) * gi * gi for a, gi in zip(acc, g)]
    theta_new = [t - lr * gi / math.sqrt(a + eps) for t, gi, a in zip(theta, g, acc_new)]
    return theta_new, acc_new


def ref_adam(theta, g, m, v, t, lr, b1, b2, eps, weight_decay=0.0):
    """``t`` is the 1-based index of the step being taken."""
    c1 = 1 - b1**t
    c2 = 1 - b2**t
    m_new, v_new, theta_new = [], [], []
    for th, gi, mi, vi in zip(theta, g, m, v):
        mi = b1 * mi + (1 - b1) * gi
        vi = b2 * vi + (1 - b2) * gi * gi
        step = lr * (mi / c1) / (math.sqrt(vi / c2) + eps)
        th = th - lr * weight_decay * th
        m_new.append(mi)
        v_new.append(vi)
        theta_new.append(th - step)
    return theta_new, m_new, v_new
