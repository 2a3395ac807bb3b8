"""Parametric Lyapunov equation (PLE) machinery for the integrator chain.

For the chain ``A`` (ones on the superdiagonal), ``b = e_n`` and ``c = e_1^T``
the equations

    A^T P + P A - P b b^T P = -gamma P          (controller form)
    A Q + Q A^T - Q c^T c Q = -gamma Q          (observer form)

have closed-form positive definite solutions that scale self-similarly in
``gamma``:

    P(gamma) = gamma L(gamma) P_n L(gamma)
    Q(gamma) = gamma^(2n-1) L(gamma)^-1 Q_n L(gamma)^-1

with ``L(gamma) = diag(gamma^(n-1), ..., gamma, 1)``.  The unit solutions are
built exactly from the inverse Gramians of the shifted chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import DomainError, GainOverflowError

MAX_CHAIN = 12
GAMMA_POWER_LIMIT = 1e300


@dataclass(frozen=True)
class ChainMatrices:
    """Canonical chain triple ``(A, b, c)`` of length ``n``."""

    n: int
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray


def _check_n(n: int) -> int:
    if int(n) != n or n < 2 or n > MAX_CHAIN:
        raise DomainError(f"chain length must be an integer in [2, {MAX_CHAIN}], got {n!r}")
    return int(n)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def chain_matrices(n: int) -> ChainMatrices:
    n = _check_n(n)
    A = np.eye(n, k=1)
    b = np.zeros(n)
    b[-1] = 1.0
    c = np.zeros(n)
    c[0] = 1.0
    return ChainMatrices(n, _frozen(A), _frozen(b), _frozen(c))


def ln_scaling(gamma: float, n: int) -> np.ndarray:
    """Return ``diag(gamma^(n-1), ..., gamma, 1)``."""
    if not gamma > 0:
        raise DomainError(f"scaling parameter must be positive, got {gamma!r}")
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n!r}")
    return np.diag(_powers(gamma, n))


def _powers(gamma: float, n: int) -> np.ndarray:
    # gamma^(n-1), ..., gamma^0
    return float(gamma) ** np.arange(n - 1, -1, -1, dtype=float)


def _exact_inverse(M: list[list[int]]) -> list[list[Fraction]]:
    """Gauss-Jordan inverse over the rationals."""
    n = len(M)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(M)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def controller_gramian(n: int) -> list[list[int]]:
    """Integer inverse of ``P_n``.

    Entry ``(i, j)`` (1-based) is ``(-1)^(i+j) (2n-i-j)! / ((n-i)! (n-j)!)``,
    the Gramian of ``exp(-(A + I/2) s) b`` over ``[0, inf)``.
    """
    n = _check_n(n)
    return [[(-1) ** (i + j) * factorial(2 * n - i - j) // (factorial(n - i) * factorial(n - j))
             for j in range(1, n + 1)] for i in range(1, n + 1)]


def observer_gramian(n: int) -> list[list[int]]:
    """Integer inverse of ``Q_n``: ``(-1)^(i+j) (i+j-2)! / ((i-1)! (j-1)!)``."""
    n = _check_n(n)
    return [[(-1) ** (i + j) * factorial(i + j - 2) // (factorial(i - 1) * factorial(j - 1))
             for j in range(1, n + 1)] for i in range(1, n + 1)]


def _to_float(M: list[list[Fraction]]) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in M])


def ple_residual(P: np.ndarray, gamma: float = 1.0) -> float:
    """Frobenius norm of ``A^T P + P A - P b b^T P + gamma P``."""
    ch = chain_matrices(P.shape[0])
    Pb = P @ ch.b
    R = ch.A.T @ P + P @ ch.A - np.outer(Pb, Pb) + gamma * P
    return float(np.linalg.norm(R))


def dual_ple_residual(Q: np.ndarray, gamma: float = 1.0) -> float:
    """Frobenius norm of ``A Q + Q A^T - Q c^T c Q + gamma Q``."""
    ch = chain_matrices(Q.shape[0])
    Qc = Q @ ch.c
    R = ch.A @ Q + Q @ ch.A.T - np.outer(Qc, Qc) + gamma * Q
    return float(np.linalg.norm(R))


_UNIT_RTOL = 1e-9


def solve_unit_ple(n: int) -> np.ndarray:
    """Unit (``gamma = 1``) solution ``P_n`` of the controller PLE.

    Raises
    ------
    ArithmeticError
        If the rounded solution misses the equation by more than 1e-9 relative.
    """
    P = _to_float(_exact_inverse(controller_gramian(n)))
    res = ple_residual(P)
    if res > _UNIT_RTOL * np.linalg.norm(P):
        raise ArithmeticError(f"unit PLE residual {res:.3e} too large for n={n}")
    return P


def solve_unit_dual_ple(n: int) -> np.ndarray:
    """Unit solution ``Q_n`` of the observer PLE."""
    Q = _to_float(_exact_inverse(observer_gramian(n)))
    res = dual_ple_residual(Q)
    if res > _UNIT_RTOL * np.linalg.norm(Q):
        raise ArithmeticError(f"unit dual PLE residual {res:.3e} too large for n={n}")
    return Q


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _sqrtm_pd(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, V = np.linalg.eigh(_sym(M))
    s = np.sqrt(w)
    return (V * s) @ V.T, (V / s) @ V.T


def shift_weights(n: int) -> np.ndarray:
    """``diag(n-1, ..., 1, 0)``, the derivative of ``log L(gamma)`` times ``gamma``."""
    return np.diag(np.arange(n - 1, -1, -1, dtype=float))


def compute_dp_bound(P_n: np.ndarray, E: np.ndarray | None = None) -> float:
    """``n (1 + lambda_max(E + P_n E P_n^-1))``.

    ``E + P E P^-1`` is similar to the symmetric ``M + M^T`` with
    ``M = P^-1/2 E P^1/2``, so the symmetric eigensolver applies.
    """
    n = P_n.shape[0]
    if E is None:
        E = shift_weights(n)
    root, inv_root = _sqrtm_pd(P_n)
    M = inv_root @ E @ root
    return float(n * (1.0 + np.linalg.eigvalsh(_sym(M + M.T))[-1]))


@dataclass(frozen=True)
class PleBasis:
    """Unit PLE solutions and the scalar constants derived from them.

    Attributes
    ----------
    n : int
        Chain length.
    P_n, Q_n : ndarray
        Unit controller / observer solutions.
    eig_max : float
        Shared extreme eigenvalue ``lambda_max(P_n) = 1 / lambda_min(P_n)``.
    dp_bound : float
        Constant bounding ``n gamma dP/dgamma`` above by a multiple of ``P``.
    observer_coupling : float
        ``c Q_n P_n Q_n c^T``, which enters the output-feedback gain.
    E_n : ndarray
        ``diag(n-1, ..., 1, 0)``.
    """

    n: int
    P_n: np.ndarray
    Q_n: np.ndarray
    eig_max: float
    dp_bound: float
    observer_coupling: float
    E_n: np.ndarray

    def P(self, gamma: float) -> np.ndarray:
        return eval_P(self, gamma)

    def Q(self, gamma: float) -> np.ndarray:
        return eval_Q(self, gamma)


@lru_cache(maxsize=None)
def ple_basis(n: int) -> PleBasis:
    n = _check_n(n)
    P = solve_unit_ple(n)
    Q = solve_unit_dual_ple(n)
    q1 = Q[:, 0]
    return PleBasis(
        n=n,
        P_n=_frozen(P),
        Q_n=_frozen(Q),
        eig_max=float(np.linalg.eigvalsh(_sym(P))[-1]),
        dp_bound=compute_dp_bound(P),
        observer_coupling=float(q1 @ P @ q1),
        E_n=_frozen(shift_weights(n)),
    )


def _guard_gamma(gamma: float, n: int) -> float:
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    gamma = float(gamma)
    if not np.isfinite(gamma) or (2 * n - 1) * np.log10(gamma) > np.log10(GAMMA_POWER_LIMIT):
        raise GainOverflowError(gamma, n, GAMMA_POWER_LIMIT)
    return gamma


def eval_P(basis: PleBasis, gamma: float) -> np.ndarray:
    """``P(gamma) = gamma L P_n L``; entry ``(i, j)`` is ``gamma^(2n-i-j+1) P_n[i, j]``."""
    gamma = _guard_gamma(gamma, basis.n)
    s = _powers(gamma, basis.n)
    return gamma * basis.P_n * np.outer(s, s)


def eval_Q(basis: PleBasis, gamma: float) -> np.ndarray:
    """``Q(gamma) = gamma^(2n-1) L^-1 Q_n L^-1``; entry ``(i, j)`` is ``gamma^(i+j-1) Q_n[i, j]``."""
    gamma = _guard_gamma(gamma, basis.n)
    s = gamma ** np.arange(basis.n, dtype=float)
    return basis.Q_n * np.outer(s, s) * gamma


def feedback_gain_row(basis: PleBasis, gamma: float) -> np.ndarray:
    """``b^T P(gamma)``, the last row of ``P(gamma)``; its last entry is ``n gamma``."""
    gamma = _guard_gamma(gamma, basis.n)
    s = _powers(gamma, basis.n)
    return gamma * basis.P_n[-1] * s


def observer_gain_col(basis: PleBasis, gamma: float) -> np.ndarray:
    """``Q(gamma) c^T``, the first column of ``Q(gamma)``; its first entry is ``n gamma``."""
    gamma = _guard_gamma(gamma, basis.n)
    return basis.Q_n[:, 0] * gamma ** np.arange(1, basis.n + 1, dtype=float)


def generalized_eigvals(M: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Eigenvalues of the symmetric pencil ``M - lambda S`` with ``S`` positive definite."""
    C = np.linalg.cholesky(_sym(S))
    Ci = np.linalg.inv(C)
    return np.linalg.eigvalsh(_sym(Ci @ _sym(M) @ Ci.T))


def dP_dgamma_fd(basis: PleBasis, gamma: float, rel_step: float = 1e-6) -> np.ndarray:
    """Central finite difference of ``P`` in ``gamma``."""
    h = rel_step * gamma
    return (eval_P(basis, gamma + h) - eval_P(basis, gamma - h)) / (2 * h)


def dQ_dgamma_fd(basis: PleBasis, gamma: float, rel_step: float = 1e-6) -> np.ndarray:
    h = rel_step * gamma
    return (eval_Q(basis, gamma + h) - eval_Q(basis, gamma - h)) / (2 * h)


def relative_derivative_spectrum(basis: PleBasis, gamma: float, which: str = "P",
                                 rel_step: float = 1e-6) -> np.ndarray:
    """Spectrum of ``n gamma dX/dgamma`` relative to ``X(gamma)``, ``X`` in ``{P, Q}``.

    Both matrices are congruence-scaled by ``L(gamma)`` first; generalized
    eigenvalues are invariant under congruence and the scaled pencil is as
    well conditioned as ``P_n``.
    """
    n = basis.n
    if which == "P":
        D, X = dP_dgamma_fd(basis, gamma, rel_step), eval_P(basis, gamma)
        s = 1.0 / _powers(gamma, n)
    elif which == "Q":
        D, X = dQ_dgamma_fd(basis, gamma, rel_step), eval_Q(basis, gamma)
        s = _powers(gamma, n)
    else:
        raise ValueError(f"which must be 'P' or 'Q', got {which!r}")
    S = np.outer(s, s)
    return generalized_eigvals(n * gamma * D * S, X * S)
