"""Uncertain chained plant, bound tables, and the time-varying coordinate change.

The plant is

    x0' = u0 + c0 x0
    xi' = u0 x_{i+1} + phi_i(t, u, x),   i < n
    xn' = u + phi_n(t, u, x)
    y   = (x0, x1)

with ``|phi_i| <= sum_{j<=i} c_ij |x_j|`` for a known lower-triangular table
``c``.  Transformed coordinates are ``z = L(1/(T-t)) x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AssumptionViolation, DomainError, UncertaintySpecError
from .ple import ln_scaling

PhiFn = Callable[[float, float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class UncertaintyBoundTable:
    """Lower-triangular table of nonnegative bound constants ``c_ij``."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DomainError(f"bound table must be square, got shape {c.shape}")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise DomainError("bound table entries must be finite and nonnegative")
        if np.any(np.triu(c, 1) != 0):
            raise DomainError("bound table must be lower triangular (c_ij = 0 for j > i)")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "UncertaintyBoundTable":
        return cls(np.zeros((n, n)))


@dataclass(eq=False)
class UncertaintySpec:
    """An uncertainty callable coupled with the bound table it must respect.

    ``phi`` must be pure: identical inputs give identical outputs.  Once any
    runtime check has seen the table violated, the spec is marked and
    :func:`derive_bounds` refuses to use it.
    """

    bound: UncertaintyBoundTable
    phi: PhiFn
    name: str = "custom"
    params: dict = field(default_factory=dict)
    violated: bool = field(default=False, init=False)

    @property
    def n(self) -> int:
        return self.bound.n

    def __call__(self, t: float, u: float, x: np.ndarray) -> np.ndarray:
        out = np.asarray(self.phi(t, u, x), dtype=float)
        if out.shape != (self.n,):
            raise UncertaintySpecError(
                f"{self.name}: phi returned shape {out.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(out)):
            raise UncertaintySpecError(f"{self.name}: non-finite phi at t={t!r}")
        return out

    def check(self, t: float, u: float, x: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
        """Return slacks; raise :class:`AssumptionViolation` and mark the spec if any is negative."""
        slack = assumption_residual(self, t, u, x)
        scale = 1.0 + self.bound.c @ np.abs(x)
        if np.any(slack < -rtol * scale):
            self.violated = True
            raise AssumptionViolation(t, slack)
        return slack


def assumption_residual(spec: UncertaintySpec, t: float, u: float, x) -> np.ndarray:
    """Per-component slack ``sum_j c_ij |x_j| - |phi_i|``; all >= 0 iff the bound holds."""
    x = np.asarray(x, dtype=float)
    return spec.bound.c @ np.abs(x) - np.abs(spec(t, u, x))


def zero_spec(n: int) -> UncertaintySpec:
    zeros = np.zeros(n)
    return UncertaintySpec(UncertaintyBoundTable.zeros(n), lambda t, u, x: zeros,
                           name="zero")


def linear_spec(a, c=None) -> UncertaintySpec:
    """``phi = a x`` with lower-triangular ``a``; the table defaults to ``|a|``."""
    a = np.array(a, dtype=float)
    if np.any(np.triu(a, 1) != 0):
        raise DomainError("linear uncertainty must be lower triangular")
    table = UncertaintyBoundTable(np.abs(a) if c is None else c)
    a.setflags(write=False)
    return UncertaintySpec(table, lambda t, u, x: a @ x, name="linear",
                           params={"a": a})


@dataclass(frozen=True)
class ChainedSystem:
    n: int
    uncertainty: UncertaintySpec
    c0: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"chain length must be >= 2, got {self.n}")
        if self.uncertainty.n != self.n:
            raise DomainError("uncertainty dimension does not match the chain")
        if not np.isfinite(self.c0):
            raise DomainError("drift coefficient c0 must be finite")


@dataclass(frozen=True)
class ChainedState:
    x0: float
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if not (np.isfinite(self.x0) and np.all(np.isfinite(x))):
            raise DomainError("state entries must be finite")

    @property
    def output(self) -> np.ndarray:
        return np.array([self.x0, self.x[0]])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.x0], self.x])


def chain_rhs(n: int, c0: float, phi: np.ndarray, x0: float, x: np.ndarray,
              u0: float, u: float, out: np.ndarray | None = None) -> np.ndarray:
    """Vector field of the plant as a flat array ``(x0', x1', ..., xn')``."""
    if out is None:
        out = np.empty(n + 1)
    out[0] = u0 + c0 * x0
    out[1:n] = u0 * x[1:] + phi[:-1]
    out[n] = u + phi[-1]
    return out


def dynamics(sys: ChainedSystem, t: float, s: ChainedState, u0: float, u: float) -> ChainedState:
    """Time derivative of the plant state, returned as a :class:`ChainedState`."""
    phi = sys.uncertainty(t, u, s.x)
    d = chain_rhs(sys.n, sys.c0, phi, s.x0, s.x, u0, u)
    return ChainedState(d[0], d[1:])


def _horizon(t: float, T: float) -> float:
    if not (0 <= t < T):
        raise DomainError(f"need 0 <= t < T, got t={t!r}, T={T!r}")
    return T - t


def to_transformed(t: float, T: float, x) -> np.ndarray:
    """``z_i = (T-t)^(i-n) x_i``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    r = _horizon(t, T)
    return x * r ** np.arange(1 - n, 1, dtype=float)


def from_transformed(t: float, T: float, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    r = _horizon(t, T)
    return z * r ** np.arange(n - 1, -1, -1, dtype=float)


def compute_g_table(bounds: UncertaintyBoundTable, T: float) -> np.ndarray:
    """``g_ij = c_ij T^(i+1-j)`` below the diagonal, ``g_ii = c_ii T + n - i``."""
    if not T > 0:
        raise DomainError(f"T must be positive, got {T!r}")
    n = bounds.n
    i, j = np.indices((n, n))
    g = np.where(i > j, bounds.c * float(T) ** (i + 1 - j), 0.0)
    g[np.diag_indices(n)] = np.diag(bounds.c) * T + (n - 1 - np.arange(n))
    return g


def compute_d(g: np.ndarray, gamma0: float, n: int) -> float:
    """Square root of ``max_j sum_{i>=j} g_ij^2 i / gamma0^(2(i-j))``."""
    if not gamma0 > 0:
        raise DomainError(f"gamma0 must be positive, got {gamma0!r}")
    g = np.asarray(g, dtype=float)
    i, j = np.indices((n, n))
    w = np.where(i >= j, (i + 1) * gamma0 ** (-2.0 * (i - j)), 0.0)
    return float(np.sqrt(np.max(np.sum(g ** 2 * w, axis=0))))


def decay_excess_rate(x0_init: float, beta: float, T: float, n: int) -> float:
    """Exponential excess rate ``6 (|x0(0)|/T^3 + beta/(2T)) sqrt(3) n`` of the state-feedback Lyapunov bound."""
    return 6.0 * (abs(x0_init) / T ** 3 + beta / (2 * T)) * np.sqrt(3.0) * n


@dataclass(frozen=True)
class DerivedBounds:
    g: np.ndarray
    d: float
    T: float
    decay_rate: float | None = None


def derive_bounds(spec: UncertaintySpec, T: float, x0_init: float | None = None,
                  beta: float | None = None) -> DerivedBounds:
    if spec.violated:
        raise AssumptionViolation(None, "table previously observed violated")
    g = compute_g_table(spec.bound, T)
    d = compute_d(g, 1.0 / T, spec.n)
    rate = None
    if x0_init is not None and beta is not None:
        rate = decay_excess_rate(x0_init, beta, T, spec.n)
    return DerivedBounds(g=g, d=d, T=T, decay_rate=rate)


def psi_transformed(spec: UncertaintySpec, t: float, T: float, u: float, z: np.ndarray) -> np.ndarray:
    """``psi_i = (T-t)^(i-n) phi_i + (n-i) z_i / (T-t)`` at ``x = L(T-t) z``."""
    n = spec.n
    r = _horizon(t, T)
    x = from_transformed(t, T, z)
    phi = spec(t, u, x)
    return phi * r ** np.arange(1 - n, 1, dtype=float) + (n - 1 - np.arange(n)) * z / r


# --- bilinear example -------------------------------------------------------

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class BilinearScenario:
    """Uncertain bilinear model ``x0' = (1-eps^2/2) v, z1' = z2 v, z2' = u + z1 (1 + theta1^2)``.

    The nonlinearity is read as a function of ``z1``.  ``theta1`` must be a
    pure function of time with ``|theta1| <= 1`` for the default table.
    """

    eps: float = 0.1
    theta1: Callable[[float], float] = np.sin
    T: float = 2.5
    beta: float | None = 100.0

    def __post_init__(self):
        if not abs(self.eps) < _SQRT2:
            raise DomainError(f"|eps| must be below sqrt(2), got {self.eps!r}")

    @property
    def scale(self) -> float:
        """``2 / (2 - eps^2)``."""
        return 2.0 / (2.0 - self.eps ** 2)


def bilinear_example_spec(eps: float = 0.1, theta1=np.sin) -> UncertaintySpec:
    """Chained image of the bilinear nonlinearity: ``phi_2 = k x1 (1 + theta1(t)^2)``, ``k = 2/(2-eps^2)``.

    With ``|theta1| <= 1`` the table entry multiplying ``|x1|`` in the second
    row is ``2k = 4 / (2 - eps^2)``.
    """
    if not abs(eps) < _SQRT2:
        raise DomainError(f"|eps| must be below sqrt(2), got {eps!r}")
    k = 2.0 / (2.0 - eps ** 2)
    c = np.array([[0.0, 0.0], [2.0 * k, 0.0]])

    def phi(t, u, x):
        th = theta1(t)
        return np.array([0.0, k * x[0] * (1.0 + th * th)])

    return UncertaintySpec(UncertaintyBoundTable(c), phi, name="bilinear_example",
                           params={"eps": eps})


@dataclass(frozen=True)
class BilinearMaps:
    """Invertible maps between bilinear coordinates ``(x0, z1, z2; v, u)`` and chained ones."""

    eps: float

    @property
    def k(self) -> float:
        return 2.0 / (2.0 - self.eps ** 2)

    def to_chained_state(self, x0, z1, z2):
        return x0, z1, self.k * z2

    def from_chained_state(self, x0, x1, x2):
        return x0, x1, x2 / self.k

    def to_chained_inputs(self, v, u):
        return v / self.k, self.k * u

    def from_chained_inputs(self, u0, u1):
        return self.k * u0, u1 / self.k


def bilinear_to_chained(sc: BilinearScenario) -> tuple[ChainedSystem, BilinearMaps]:
    spec = bilinear_example_spec(sc.eps, sc.theta1)
    return ChainedSystem(n=2, uncertainty=spec, c0=0.0), BilinearMaps(sc.eps)


def bilinear_rhs(sc: BilinearScenario, t: float, state, v: float, u: float) -> np.ndarray:
    """Vector field of the bilinear model in its own coordinates."""
    x0, z1, z2 = state
    th = sc.theta1(t)
    return np.array([(1.0 - sc.eps ** 2 / 2.0) * v, z2 * v, u + z1 * (1.0 + th * th)])


def scaling_matrix(t: float, T: float, n: int) -> np.ndarray:
    """``L(1/(T-t))`` as a dense matrix."""
    return ln_scaling(1.0 / _horizon(t, T), n)
