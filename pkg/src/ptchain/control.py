"""Smooth time-varying prescribed-time feedback laws.

Three loops are covered:

* state feedback for the drift-free plant, ``u0 = -3 x0/(T-t) - beta (T-t)/2``
  and ``u = -beta b^T P(gamma) L(1/(T-t)) x`` with ``gamma = 1/(T-t)``;
* the same with a known drift ``x0' = u0 + c0 x0`` (extra ``exp(c0 t)``
  factors and an ``exp(|c0| T)`` inflated gain);
* observer-based output feedback using only ``y = (x0, x1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BetaTooSmallError, DomainError, SingularityError
from .model import to_transformed
from .ple import PleBasis, feedback_gain_row, observer_gain_col, ple_basis

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class GainSchedule:
    """``gamma(t) = T/(T-t) gamma0 = 1/(T-t)`` on ``[0, T)``."""

    T: float

    def __post_init__(self):
        if not (self.T > 0 and np.isfinite(self.T)):
            raise DomainError(f"prescribed time must be positive and finite, got {self.T!r}")

    @property
    def gamma0(self) -> float:
        return 1.0 / self.T

    def horizon(self, t: float) -> float:
        if not (0 <= t < self.T):
            raise DomainError(f"laws are defined on [0, T); got t={t!r}, T={self.T!r}")
        return self.T - t

    def gamma(self, t: float) -> float:
        return 1.0 / self.horizon(t)


def beta_state_feedback(n: int, dp_bound: float, d: float, eig_max: float,
                        c0: float = 0.0, T: float = 0.0) -> float:
    """Minimum state-feedback gain ``((2n + dp_bound)/n + 2 d eig_max) exp(|c0| T)``."""
    return ((2 * n + dp_bound) / n + 2 * d * eig_max) * np.exp(abs(c0) * T)


def beta_output_components(n: int, dp_bound: float, d: float, eig_max: float,
                           observer_coupling: float) -> tuple[float, float]:
    b1 = 8 * _SQRT2 * n * d * eig_max * observer_coupling + 2 * (2 + dp_bound / n)
    b2 = 4 * _SQRT2 * d * eig_max + 2 * (2 * n + 2 - 1.0 / n)
    return b1, b2


def beta_output_feedback(n: int, dp_bound: float, d: float, eig_max: float,
                         observer_coupling: float) -> float:
    """Minimum output-feedback gain, the larger of the controller and observer requirements."""
    return max(beta_output_components(n, dp_bound, d, eig_max, observer_coupling))


def _resolve_beta(beta, beta_min, allow_below_formula):
    if beta is None:
        return beta_min
    beta = float(beta)
    if not np.isfinite(beta) or beta <= 0:
        raise DomainError(f"beta must be positive and finite, got {beta!r}")
    if beta < beta_min and not allow_below_formula:
        raise BetaTooSmallError(beta, beta_min)
    return beta


@dataclass(frozen=True)
class StateFeedbackLaw:
    """State feedback with optional x0-drift compensation.

    Build with :meth:`design`; ``beta_min`` records the formula value so that
    verification can tell whether the run is inside the guaranteed regime.
    """

    schedule: GainSchedule
    basis: PleBasis
    beta: float
    beta_min: float
    d: float
    c0: float = 0.0

    @classmethod
    def design(cls, n: int, T: float, d: float, c0: float = 0.0, beta: float | None = None,
               allow_below_formula: bool = False) -> "StateFeedbackLaw":
        basis = ple_basis(n)
        beta_min = beta_state_feedback(n, basis.dp_bound, d, basis.eig_max, c0, T)
        return cls(GainSchedule(T), basis, _resolve_beta(beta, beta_min, allow_below_formula),
                   beta_min, d, c0)

    @property
    def T(self) -> float:
        return self.schedule.T

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def certified(self) -> bool:
        return self.beta >= self.beta_min

    def gain(self, t: float) -> float:
        """Effective feedback gain ``beta exp(c0 t)``."""
        return self.beta * np.exp(self.c0 * t) if self.c0 else self.beta

    def stiffness(self, t: float) -> float:
        """Rough spectral radius of the closed loop, used to cap explicit steps."""
        return (self.gain(t) + self.n) * self.schedule.gamma(t)


@dataclass(frozen=True)
class ObserverLaw:
    """Observer-based output feedback; the observer state lives in the simulation loop."""

    schedule: GainSchedule
    basis: PleBasis
    beta: float
    beta_min: float
    d: float

    c0 = 0.0

    @classmethod
    def design(cls, n: int, T: float, d: float, beta: float | None = None,
               allow_below_formula: bool = False) -> "ObserverLaw":
        basis = ple_basis(n)
        beta_min = beta_output_feedback(n, basis.dp_bound, d, basis.eig_max,
                                        basis.observer_coupling)
        return cls(GainSchedule(T), basis, _resolve_beta(beta, beta_min, allow_below_formula),
                   beta_min, d)

    @property
    def T(self) -> float:
        return self.schedule.T

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def certified(self) -> bool:
        return self.beta >= self.beta_min

    def gain(self, t: float) -> float:
        return self.beta

    def stiffness(self, t: float) -> float:
        return (self.beta + self.n) * self.schedule.gamma(t)


def u0_law(law, t: float, x0: float) -> float:
    """``u0 = -3 x0/(T-t) - (beta/2) exp(c0 t) (T-t)``."""
    r = law.schedule.horizon(t)
    return -3.0 * x0 / r - 0.5 * law.gain(t) * r


def _checked(value, t, gamma, what):
    if not np.all(np.isfinite(value)):
        raise SingularityError(t, gamma, what)
    return value


def u_state_feedback(law: StateFeedbackLaw, t: float, x) -> float:
    """``u = -beta exp(c0 t) b^T P(gamma) L(1/(T-t)) x``."""
    gamma = law.schedule.gamma(t)
    row = _checked(feedback_gain_row(law.basis, gamma), t, gamma, "feedback gain")
    z = to_transformed(t, law.T, x)
    return float(_checked(-law.gain(t) * (row @ z), t, gamma, "control"))


def u_output_feedback(law: ObserverLaw, t: float, xi) -> float:
    """``u = -beta b^T P(gamma) xi``."""
    gamma = law.schedule.gamma(t)
    row = _checked(feedback_gain_row(law.basis, gamma), t, gamma, "feedback gain")
    return float(_checked(-law.beta * (row @ np.asarray(xi, dtype=float)), t, gamma, "control"))


def observer_step_derivative(law: ObserverLaw, t: float, xi, u: float, y) -> np.ndarray:
    """``xi' = beta A xi + b u + beta Q(gamma) c^T (gamma^(n-1) y2 - c xi)``.

    ``gamma^(n-1) y2`` is the first transformed state, so the innovation
    vanishes when the estimate of ``z1`` is exact.
    """
    gamma = law.schedule.gamma(t)
    n = law.n
    xi = np.asarray(xi, dtype=float)
    col = _checked(observer_gain_col(law.basis, gamma), t, gamma, "observer gain")
    innovation = gamma ** (n - 1) * y[1] - xi[0]
    out = np.empty(n)
    out[:-1] = law.beta * xi[1:]
    out[-1] = u
    out += law.beta * innovation * col
    return _checked(out, t, gamma, "observer derivative")


def closed_form_x0(t: float, x0_init: float, beta: float, T: float, c0: float = 0.0) -> float:
    """x0 under its own feedback: ``(T-t)^2 ((T-t) x0(0)/T^3 - beta t/(2T)) exp(c0 t)``; zero at ``t = T``."""
    if not (0 <= t <= T):
        raise DomainError(f"need 0 <= t <= T, got t={t!r}")
    r = T - t
    return r * r * (r * x0_init / T ** 3 - beta * t / (2 * T)) * np.exp(c0 * t)


def theta_open_loop(t: float, x0_init: float, beta: float, T: float, c0: float = 0.0) -> float:
    """Deviation of ``u0/(T-t)`` from the gain: ``-3 (T-t) exp(c0 t) (x0(0)/T^3 + beta/(2T))``."""
    return -3.0 * (T - t) * np.exp(c0 * t) * (x0_init / T ** 3 + beta / (2 * T))


def open_loop_u0(t: float, x0_init: float, beta: float, T: float, c0: float = 0.0) -> float:
    """``u0(t) = (T-t) (theta(t) + beta exp(c0 t))``, equal to the feedback value on the closed-form x0."""
    if not (0 <= t <= T):
        raise DomainError(f"need 0 <= t <= T, got t={t!r}")
    return (T - t) * (theta_open_loop(t, x0_init, beta, T, c0) + beta * np.exp(c0 * t))


def x0_envelope(t, x0_init: float, beta: float, T: float, c0: float = 0.0):
    """Explicit bound on ``|x0(t)|``."""
    r = T - np.asarray(t, dtype=float)
    return r ** 2 * np.exp(c0 * np.asarray(t)) * (r * abs(x0_init) / T ** 3 + beta * np.asarray(t) / (2 * T))


def u0_envelope(t, x0_init: float, beta: float, T: float, c0: float = 0.0):
    """Explicit bound on ``|u0(t)|``."""
    r = T - np.asarray(t, dtype=float)
    return r * np.exp(c0 * np.asarray(t)) * (3 * r * (abs(x0_init) / T ** 3 + beta / (2 * T)) + beta)
