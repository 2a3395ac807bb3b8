"""Closed-loop simulation on ``[0, T(1 - eps_T)]``.

Plant and observer are integrated as one coupled vector ``(x0, x, xi)``.
Controls, the gain ``gamma`` and the Lyapunov-like value
``V = gamma z^T P(gamma) z`` are recomputed from the stored states, so every
sample is self-consistent.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .control import (ObserverLaw, StateFeedbackLaw, closed_form_x0, observer_step_derivative,
                      open_loop_u0, theta_open_loop, u0_law, u_output_feedback, u_state_feedback)
from .errors import DomainError
from .integrate import IntegratorConfig, StepStats, integrate
from .model import (BilinearMaps, BilinearScenario, ChainedState, ChainedSystem, bilinear_rhs,
                    chain_rhs, from_transformed, psi_transformed, to_transformed)
from .ple import eval_P


@dataclass
class Trajectory:
    """Sampled closed-loop run.

    ``x`` has one row per sample.  For runs integrated in transformed
    coordinates ``coords == "z"`` and ``x`` holds ``z``.
    """

    t: np.ndarray
    x0: np.ndarray
    x: np.ndarray
    u0: np.ndarray
    u: np.ndarray
    gamma: np.ndarray
    V: np.ndarray
    xi: np.ndarray | None = None
    coords: str = "x"
    meta: dict = field(default_factory=dict)
    stats: StepStats | None = None

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def T(self) -> float:
        return self.meta["T"]

    def __len__(self) -> int:
        return len(self.t)

    def index_of(self, t: float) -> int:
        """Index of the sample taken exactly at ``t`` (a checkpoint)."""
        hits = np.flatnonzero(self.t == t)
        if hits.size == 0:
            raise KeyError(f"no sample at t={t!r}; pass it as a checkpoint")
        return int(hits[0])

    def z(self) -> np.ndarray:
        if self.coords == "z":
            return self.x
        r = self.T - self.t
        n = self.n
        return self.x * r[:, None] ** np.arange(1 - n, 1, dtype=float)

    def observer_error(self) -> np.ndarray:
        if self.xi is None:
            raise ValueError("trajectory has no observer state")
        return self.z() - self.xi

    def columns(self) -> tuple[list[str], np.ndarray]:
        """CSV header and data matrix ``t, x0, x1..xn, [xi1..xin,] u0, u, gamma, V``."""
        names = ["t", "x0"] + [f"x{i}" for i in range(1, self.n + 1)]
        cols = [self.t, self.x0, *self.x.T]
        if self.xi is not None:
            names += [f"xi{i}" for i in range(1, self.n + 1)]
            cols += [*self.xi.T]
        names += ["u0", "u", "gamma", "V"]
        cols += [self.u0, self.u, self.gamma, self.V]
        return names, np.column_stack(cols)

    def subset(self, idx) -> "Trajectory":
        idx = np.asarray(idx)
        return Trajectory(self.t[idx], self.x0[idx], self.x[idx], self.u0[idx], self.u[idx],
                          self.gamma[idx], self.V[idx],
                          None if self.xi is None else self.xi[idx], self.coords,
                          dict(self.meta), self.stats)

    def at_times(self, times) -> "Trajectory":
        return self.subset([self.index_of(t) for t in times])


def uniform_grid(T: float, cfg: IntegratorConfig, dt: float = 1e-3) -> np.ndarray:
    """Uniform sample grid ``0, dt, 2dt, ...`` strictly inside the terminal guard."""
    t_end = cfg.t_end(T)
    m = int(np.floor(t_end / dt + 1e-9))
    grid = np.arange(1, m + 1) * dt
    return grid[grid < t_end]


def _lyapunov_value(basis, gamma, z):
    return float(gamma * z @ eval_P(basis, gamma) @ z)


def _scenario_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _meta(sys, law, init, cfg, mode, extra=None):
    meta = {
        "T": law.T, "n": law.n, "beta": law.beta, "beta_min": law.beta_min, "c0": sys.c0,
        "mode": mode, "x0_init": float(init.x0), "x_init": [float(v) for v in init.x],
        "uncertainty": sys.uncertainty.name, "config": cfg.as_dict(),
    }
    if extra:
        meta.update(extra)
    meta["scenario_hash"] = _scenario_hash(meta)
    return meta


def _check_law(sys, law):
    if law.n != sys.n:
        raise DomainError(f"law is designed for n={law.n}, plant has n={sys.n}")
    if abs(getattr(law, "c0", 0.0) - sys.c0) > 0:
        raise DomainError(f"law drift c0={law.c0} does not match plant c0={sys.c0}")


def simulate_state_feedback(sys: ChainedSystem, law: StateFeedbackLaw, init: ChainedState,
                            cfg: IntegratorConfig | None = None, checkpoints=(),
                            check_assumption: bool = True) -> Trajectory:
    """Closed loop of the plant with the state-feedback law."""
    cfg = cfg or IntegratorConfig()
    _check_law(sys, law)
    n, spec, c0 = sys.n, sys.uncertainty, sys.c0

    def rhs(t, y):
        x0, x = y[0], y[1:]
        u0 = u0_law(law, t, x0)
        u = u_state_feedback(law, t, x)
        return chain_rhs(n, c0, spec(t, u, x), x0, x, u0, u)

    def on_accept(t, y):
        if check_assumption:
            spec.check(t, u_state_feedback(law, t, y[1:]), y[1:])

    if check_assumption:
        spec.check(0.0, u_state_feedback(law, 0.0, init.x), init.x)
    ts, ys, stats = integrate(rhs, init.as_vector(), law.T, cfg, checkpoints,
                              stiffness=law.stiffness, on_accept=on_accept)
    x0s, xs = ys[:, 0], ys[:, 1:]
    u0s = np.array([u0_law(law, t, a) for t, a in zip(ts, x0s)])
    us = np.array([u_state_feedback(law, t, x) for t, x in zip(ts, xs)])
    gam = 1.0 / (law.T - ts)
    V = np.array([_lyapunov_value(law.basis, g, to_transformed(t, law.T, x))
                  for t, g, x in zip(ts, gam, xs)])
    return Trajectory(ts, x0s, xs, u0s, us, gam, V, meta=_meta(sys, law, init, cfg, "state"),
                      stats=stats)


def simulate_output_feedback(sys: ChainedSystem, law: ObserverLaw, init: ChainedState, xi_init,
                             cfg: IntegratorConfig | None = None, checkpoints=(),
                             check_assumption: bool = True) -> Trajectory:
    """Closed loop with the observer-based law; ``x0`` uses its measured-state law.

    The observer lives in transformed coordinates, so ``xi`` estimates ``z``.
    """
    cfg = cfg or IntegratorConfig()
    if sys.c0 != 0:
        raise DomainError("output feedback is only designed for a drift-free x0 channel")
    _check_law(sys, law)
    n, spec = sys.n, sys.uncertainty
    xi_init = np.array(xi_init, dtype=float)
    if xi_init.shape != (n,) or not np.all(np.isfinite(xi_init)):
        raise DomainError("observer initial state must be a finite n-vector")

    def rhs(t, y):
        x0, x, xi = y[0], y[1:n + 1], y[n + 1:]
        u0 = u0_law(law, t, x0)
        u = u_output_feedback(law, t, xi)
        out = np.empty(2 * n + 1)
        chain_rhs(n, 0.0, spec(t, u, x), x0, x, u0, u, out=out[:n + 1])
        out[n + 1:] = observer_step_derivative(law, t, xi, u, (x0, x[0]))
        return out

    def on_accept(t, y):
        if check_assumption:
            spec.check(t, u_output_feedback(law, t, y[n + 1:]), y[1:n + 1])

    y0 = np.concatenate([init.as_vector(), xi_init])
    ts, ys, stats = integrate(rhs, y0, law.T, cfg, checkpoints, stiffness=law.stiffness,
                              on_accept=on_accept)
    x0s, xs, xis = ys[:, 0], ys[:, 1:n + 1], ys[:, n + 1:]
    u0s = np.array([u0_law(law, t, a) for t, a in zip(ts, x0s)])
    us = np.array([u_output_feedback(law, t, xi) for t, xi in zip(ts, xis)])
    gam = 1.0 / (law.T - ts)
    V = np.array([_lyapunov_value(law.basis, g, to_transformed(t, law.T, x))
                  for t, g, x in zip(ts, gam, xs)])
    meta = _meta(sys, law, init, cfg, "output", {"xi_init": [float(v) for v in xi_init]})
    return Trajectory(ts, x0s, xs, u0s, us, gam, V, xi=xis, meta=meta, stats=stats)


def simulate_transformed(sys: ChainedSystem, law: StateFeedbackLaw, z_init, x0_init: float = 0.0,
                         cfg: IntegratorConfig | None = None, checkpoints=()) -> Trajectory:
    """Integrate the state-feedback loop directly in ``z`` coordinates.

    ``z' = k(t) (A - b b^T P) z + theta(t) A z + psi`` with ``k = beta exp(c0 t)``
    and ``theta`` taken from the closed-form ``x0`` solution, so this path
    shares no integration with :func:`simulate_state_feedback`.
    """
    cfg = cfg or IntegratorConfig()
    _check_law(sys, law)
    n, spec, T, beta, c0 = sys.n, sys.uncertainty, law.T, law.beta, sys.c0
    basis = law.basis

    def rhs(t, z):
        gamma = 1.0 / (T - t)
        k = law.gain(t)
        row = basis.P_n[-1] * gamma ** np.arange(n, 0, -1, dtype=float)  # b^T P(gamma)
        u = -k * (row @ z)
        th = theta_open_loop(t, x0_init, beta, T, c0)
        out = np.empty(n)
        out[:-1] = (k + th) * z[1:]
        out[-1] = u
        return out + psi_transformed(spec, t, T, u, z)

    z_init = np.array(z_init, dtype=float)
    ts, zs, stats = integrate(rhs, z_init, T, cfg, checkpoints, stiffness=law.stiffness)
    gam = 1.0 / (T - ts)
    x0s = np.array([closed_form_x0(t, x0_init, beta, T, c0) for t in ts])
    u0s = np.array([open_loop_u0(t, x0_init, beta, T, c0) for t in ts])
    us = np.array([-law.gain(t) * (basis.P_n[-1] * g ** np.arange(n, 0, -1, dtype=float)) @ z
                   for t, g, z in zip(ts, gam, zs)])
    V = np.array([_lyapunov_value(basis, g, z) for g, z in zip(gam, zs)])
    init = ChainedState(x0_init, from_transformed(0.0, T, z_init))
    return Trajectory(ts, x0s, zs, u0s, us, gam, V, coords="z",
                      meta=_meta(sys, law, init, cfg, "transformed"), stats=stats)


@dataclass
class BilinearTrajectory:
    t: np.ndarray
    x0: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    v: np.ndarray
    u: np.ndarray


def simulate_bilinear_direct(sc: BilinearScenario, law: StateFeedbackLaw, init,
                             cfg: IntegratorConfig | None = None, checkpoints=()) -> BilinearTrajectory:
    """Integrate the bilinear model in its own coordinates.

    The controller sees the chained image of the state and its inputs are
    mapped back, so this is an independent check of the coordinate reduction.
    """
    cfg = cfg or IntegratorConfig()
    maps = BilinearMaps(sc.eps)

    def controls(t, s):
        x0, x1, x2 = maps.to_chained_state(*s)
        u0 = u0_law(law, t, x0)
        u1 = u_state_feedback(law, t, np.array([x1, x2]))
        return maps.from_chained_inputs(u0, u1)

    def rhs(t, s):
        v, u = controls(t, s)
        return bilinear_rhs(sc, t, s, v, u)

    ts, ys, stats = integrate(rhs, np.array(init, dtype=float), law.T, cfg, checkpoints,
                              stiffness=law.stiffness)
    vu = np.array([controls(t, s) for t, s in zip(ts, ys)])
    return BilinearTrajectory(ts, ys[:, 0], ys[:, 1], ys[:, 2], vu[:, 0], vu[:, 1])
