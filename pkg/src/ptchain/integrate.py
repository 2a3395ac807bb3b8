"""Explicit Runge-Kutta integration up to a guard before a terminal singularity.

Every step is capped by ``step_cap_ratio * (T - t)`` so the ``1/(T-t)``
growth of the gains is resolved geometrically, and optionally by
``stability_factor / rho(t)`` where ``rho`` estimates the closed-loop
spectral radius.  The second cap keeps the explicit scheme inside its
stability region once the states have decayed below the absolute tolerance;
without it the error controller lets round-off grow until it reaches
``abs_tol``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, PtchainError, SimulationDiverged

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

METHODS = ("rk45", "rk4")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45"
    h0: float = 1e-3
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    terminal_guard: float = 1e-6
    step_cap_ratio: float = 0.1
    stability_factor: float = 2.0
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 1e-9 <= self.terminal_guard <= 1e-2:
            raise DomainError(f"terminal_guard must lie in [1e-9, 1e-2], got {self.terminal_guard!r}")
        if not 0 < self.step_cap_ratio <= 0.5:
            raise DomainError(f"step_cap_ratio must lie in (0, 0.5], got {self.step_cap_ratio!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.h0 > 0):
            raise DomainError("tolerances and h0 must be positive")
        if not self.stability_factor > 0:
            raise DomainError("stability_factor must be positive")

    def t_end(self, T: float) -> float:
        return T * (1.0 - self.terminal_guard)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    max_cap_ratio: float = 0.0  # largest h / (T - t) over accepted steps
    step_sizes: list = field(default_factory=list, repr=False)


def _norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, cfg: IntegratorConfig) -> float:
    sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / sc) ** 2)))


def _diverged(t, ts, ys, reason):
    return SimulationDiverged(float(t), float(ts[-1]), ys[-1].copy(), reason)


def integrate(rhs: Callable[[float, np.ndarray], np.ndarray], y0: Sequence[float], T: float,
              cfg: IntegratorConfig, checkpoints: Sequence[float] = (),
              stiffness: Callable[[float], float] | None = None,
              on_accept: Callable[[float, np.ndarray], None] | None = None,
              t0: float = 0.0):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``cfg.t_end(T)``.

    Every checkpoint in ``(t0, t_end]`` is hit exactly.  Returns
    ``(ts, ys, stats)`` with one row per accepted step, including ``t0``.
    """
    t_end = cfg.t_end(T)
    stops = sorted({float(c) for c in checkpoints if t0 < c < t_end} | {t_end})
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("initial state must be finite")
    t = float(t0)
    ts, ys = [t], [y.copy()]
    stats = StepStats()

    def cap(t):
        h = cfg.step_cap_ratio * (T - t)
        if stiffness is not None:
            h = min(h, cfg.stability_factor / stiffness(t))
        return h

    def f(t, y):
        stats.rhs_evals += 1
        if not np.all(np.isfinite(y)):
            # overflowed trial stage: poison the step so it is rejected
            return np.full_like(y, np.nan)
        try:
            d = rhs(t, y)
        except FloatingPointError as exc:
            raise _diverged(t, ts, ys, str(exc)) from exc
        except PtchainError:
            raise
        except ArithmeticError as exc:
            raise _diverged(t, ts, ys, str(exc)) from exc
        return d

    def accept(t_old, t_new, y_new, h):
        if not np.all(np.isfinite(y_new)):
            raise _diverged(t_new, ts, ys, "non-finite state")
        stats.accepted += 1
        stats.step_sizes.append(h)
        stats.max_cap_ratio = max(stats.max_cap_ratio, h / (T - t_old))
        ts.append(t_new)
        ys.append(y_new.copy())
        if on_accept is not None:
            on_accept(t_new, y_new)
        if stats.accepted >= cfg.max_steps:
            raise _diverged(t_new, ts, ys, f"step budget {cfg.max_steps} exhausted")

    with np.errstate(over="ignore", invalid="ignore"):
        return _run(cfg, stops, t, y, T, f, cap, accept, stats, ts, ys)


def _run(cfg, stops, t, y, T, f, cap, accept, stats, ts, ys):
    stop_idx = 0
    if cfg.method == "rk4":
        while stop_idx < len(stops):
            target = stops[stop_idx]
            h = min(cfg.h0, cap(t))
            if t + h >= target * (1 - 1e-15) or target - (t + h) < 1e-3 * h:
                h, t_new = target - t, target
                stop_idx += 1
            else:
                t_new = t + h
            k1 = f(t, y)
            k2 = f(t + h / 2, y + h / 2 * k1)
            k3 = f(t + h / 2, y + h / 2 * k2)
            k4 = f(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            accept(t, t_new, y, h)
            t = t_new
        return np.array(ts), np.array(ys), stats

    k = [None] * 7
    k[0] = f(t, y)
    h = min(cfg.h0, cap(t))
    while stop_idx < len(stops):
        target = stops[stop_idx]
        h = min(h, cap(t))
        hits = t + h >= target or target - (t + h) < 1e-3 * h
        if hits:
            h = target - t
        if h <= 1e-15 * max(abs(t), 1.0):
            raise _diverged(t, ts, ys, "step size underflow")
        for s in range(1, 7):
            ys_ = y + h * sum(a * k[j] for j, a in enumerate(_A[s]) if a != 0.0)
            k[s] = f(t + _C[s] * h, ys_)
        y_new = y + h * (_B5[0] * k[0] + _B5[2] * k[2] + _B5[3] * k[3] + _B5[4] * k[4] + _B5[5] * k[5])
        err_vec = h * sum(e * k[j] for j, e in enumerate(_E) if e != 0.0)
        if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(err_vec)):
            err = math.inf
        else:
            err = _norm(err_vec, y, y_new, cfg)
        if err <= 1.0:
            t_old, t = t, (target if hits else t + h)
            if hits:
                stop_idx += 1
            y = y_new
            k[0] = k[6]
            accept(t_old, t, y, h)
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = h * fac
        else:
            stats.rejected += 1
            fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h = h * fac
            if stats.rejected > cfg.max_steps:
                raise _diverged(t, ts, ys, "too many rejected steps")
    return np.array(ts), np.array(ys), stats
