"""Generalized-momentum observer in operational space.

Discrete form::

    I_k = I_{k-1} + dt F_m - dt/2 (beta_{k-1} + beta_k) + dt/2 (F_{k-1} + F_k)
    F_k = K_o (M_x xdot - I_k)
    beta = g_x + F_fr_x - C_x^T xdot

``F_m`` is the command held over the last interval (zero-order hold), the
state-dependent terms use the trapezoidal rule. ``K_o`` is diagonal, so the
implicit ``F_k`` term is solved per axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# 1 / 50 ms
DEFAULT_GAIN = 20.0


@dataclass
class ObserverState:
    K_o: np.ndarray = field(default_factory=lambda: np.full(3, DEFAULT_GAIN))
    integral: np.ndarray = None
    F_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    last_beta: np.ndarray = None

    def __post_init__(self):
        self.K_o = np.broadcast_to(np.asarray(self.K_o, dtype=float), (3,)).copy()
        if np.any(self.K_o <= 0):
            raise ValueError("observer gains must be positive")

    @property
    def initialized(self):
        return self.integral is not None


def momentum(terms):
    return terms.M_x @ terms.xdot


def beta(terms):
    return terms.g_x + terms.F_fr_x - terms.C_x.T @ terms.xdot


def observer_init(state, terms):
    """Start the observer with a zero estimate and the integral equal to the momentum."""
    return ObserverState(state.K_o, momentum(terms).copy(), np.zeros(3), beta(terms))


def observer_step(state, terms, F_m, dt):
    """Advance by one sample.

    ``terms`` are the dynamics terms at the new sample, ``F_m`` the command
    applied since the previous one. The first call only initializes.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not state.initialized:
        return observer_init(state, terms)
    b = beta(terms)
    partial = (state.integral + dt * np.asarray(F_m, dtype=float)
               - 0.5 * dt * (state.last_beta + b) + 0.5 * dt * state.F_hat)
    k = state.K_o
    F = k * (momentum(terms) - partial) / (1.0 + 0.5 * dt * k)
    if not np.all(np.isfinite(F)):
        # keep the last finite estimate; a diverging plant is reported by the simulator
        F = state.F_hat.copy()
    return ObserverState(k, partial + 0.5 * dt * F, F, b)


def first_order_response(K_o, F_true, t):
    """Continuous error dynamics ``F_hat(t) = F (1 - exp(-k t))`` for a step at t=0."""
    return np.asarray(F_true) * (1.0 - np.exp(-np.asarray(K_o) * t))
