"""Executable checks for the identities, inequalities and convergence claims.

Every check returns a :class:`VerificationReport`.  Entries carry a stable
anchor id (see :data:`COVERAGE`) so the test suite can lock the set of
claims that is exercised.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .control import (ObserverLaw, StateFeedbackLaw, closed_form_x0, u0_envelope,
                      x0_envelope)
from .errors import DomainError
from .model import (UncertaintyBoundTable, UncertaintySpec, assumption_residual, compute_d,
                    compute_g_table, decay_excess_rate, from_transformed, psi_transformed)
from .ple import (PleBasis, chain_matrices, compute_dp_bound, dual_ple_residual, eval_P, eval_Q,
                  ple_residual, relative_derivative_spectrum)

COVERAGE = (
    "ple.residual",
    "ple.dual_residual",
    "ple.gain_trace",
    "ple.dual_gain_trace",
    "ple.monotone",
    "ple.sandwich",
    "ple.dual_sandwich",
    "ple.curvature",
    "ple.similarity",
    "ple.dual_rate",
    "growth.bound",
    "growth.component",
    "sf.x0_closed_form",
    "sf.x0_bound",
    "sf.u0_bound",
    "sf.state_envelope",
    "sf.control_envelope",
    "sf.lyapunov",
    "sf.lyapunov_literal",
    "of.state_ratio",
    "of.estimate_ratio",
    "of.control_ratio",
    "of.terminal_trend",
    "of.observer_terminal",
    "of.observer_exact_start",
)

RESIDUAL_RTOL = 1e-8
SANDWICH_SLACK = 1e-5
GROWTH_SLACK = 1e-12
RATIO_SLACK = 1e-6
HOLDOUT_SLACK = 0.1
TREND_FACTOR = 2.0
TREND_FLOOR = 1e-12
TERMINAL_FRACTION = 1e-2
EXACT_START_TOL = 1e-6

OUTPUT_LYAPUNOV_NOTE = ("output-feedback Lyapunov decay is not certified: its rate depends on "
                        "a free proof parameter; only envelope checks are run")


@dataclass
class CheckEntry:
    check: str
    anchor: str
    residual: float
    threshold: float
    passed: bool
    samples: int = 1
    note: str = ""
    expected_fail: bool = False

    @property
    def ok(self) -> bool:
        """Clean checks must pass; negative controls must fail."""
        return self.passed != self.expected_fail


@dataclass
class VerificationReport:
    entries: list[CheckEntry] = field(default_factory=list)
    limitations: list[str] = field(default_factory=list)

    def add(self, check, anchor, residual, threshold, passed, samples=1, note="",
            expected_fail=False) -> CheckEntry:
        if anchor not in COVERAGE:
            raise ValueError(f"unknown anchor {anchor!r}")
        e = CheckEntry(check, anchor, float(residual), float(threshold), bool(passed),
                       int(samples), note, expected_fail)
        self.entries.append(e)
        return e

    def le(self, check, anchor, residual, threshold, samples=1, note="", expected_fail=False):
        """Record ``residual <= threshold``; NaN counts as a failure."""
        residual = float(residual)
        return self.add(check, anchor, residual, threshold,
                        bool(np.isfinite(residual) and residual <= threshold),
                        samples, note, expected_fail)

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.entries.extend(other.entries)
        self.limitations.extend(x for x in other.limitations if x not in self.limitations)
        return self

    def mark_expected_fail(self) -> "VerificationReport":
        for e in self.entries:
            e.expected_fail = True
        return self

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    @property
    def anchors(self) -> set[str]:
        return {e.anchor for e in self.entries}

    def failures(self) -> list[CheckEntry]:
        return [e for e in self.entries if not e.ok]

    def find(self, anchor: str) -> list[CheckEntry]:
        return [e for e in self.entries if e.anchor == anchor]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "anchor", "residual", "threshold", "pass"])
        for e in self.entries:
            w.writerow([e.check, e.anchor, f"{e.residual:.9g}", f"{e.threshold:.9g}",
                        "expected-fail" if e.expected_fail and not e.passed
                        else ("pass" if e.passed else "FAIL")])
        return buf.getvalue()

    def to_text(self) -> str:
        width = max([len(e.check) for e in self.entries] + [5])
        lines = []
        for e in self.entries:
            status = "ok  " if e.ok else "FAIL"
            tag = " (negative control)" if e.expected_fail else ""
            note = f"  # {e.note}" if e.note else ""
            lines.append(f"{status} {e.check:<{width}}  {e.anchor:<22} "
                         f"residual={e.residual:.3e} threshold={e.threshold:.3e} "
                         f"n={e.samples}{tag}{note}")
        for lim in self.limitations:
            lines.append(f"note {lim}")
        bad = len(self.failures())
        lines.append(f"{len(self.entries)} checks, {bad} failing")
        return "\n".join(lines) + "\n"


# --- algebraic suite ----------------------------------------------------------

def _rel_sym_min_eig(M: np.ndarray, scale: float) -> float:
    return float(np.linalg.eigvalsh((M + M.T) / 2)[0] / scale)


def check_ple_suite(basis: PleBasis, gamma_grid) -> VerificationReport:
    """Residuals, gain traces, monotonicity, derivative sandwich, curvature and similarity."""
    grid = sorted(float(g) for g in gamma_grid)
    if not grid or grid[0] <= 0:
        raise DomainError("gamma grid must be nonempty and positive")
    n = basis.n
    ch = chain_matrices(n)
    rep = VerificationReport()
    tag = f"n={n}"

    res = dres = tr = dtr = curv = 0.0
    lo = dlo = np.inf
    hi = -np.inf
    for g in grid:
        P, Q = eval_P(basis, g), eval_Q(basis, g)
        res = max(res, ple_residual(P, g) / np.linalg.norm(P))
        dres = max(dres, dual_ple_residual(Q, g) / np.linalg.norm(Q))
        tr = max(tr, abs(ch.b @ P @ ch.b - n * g) / (n * g))
        dtr = max(dtr, abs(ch.c @ Q @ ch.c - n * g) / (n * g))
        C = 3 * n * n * g * g * P - ch.A.T @ P @ ch.A
        curv = min(curv, _rel_sym_min_eig(C, np.linalg.norm(P, 2)))
        sp = relative_derivative_spectrum(basis, g, "P")
        lo, hi = min(lo, sp[0]), max(hi, sp[-1])
        dlo = min(dlo, relative_derivative_spectrum(basis, g, "Q")[0])
    m = len(grid)
    rep.le(f"{tag} PLE residual", "ple.residual", res, RESIDUAL_RTOL, m)
    rep.le(f"{tag} dual PLE residual", "ple.dual_residual", dres, RESIDUAL_RTOL, m)
    rep.le(f"{tag} b'P(g)b = n g", "ple.gain_trace", tr, RESIDUAL_RTOL, m)
    rep.le(f"{tag} cQ(g)c' = n g", "ple.dual_gain_trace", dtr, RESIDUAL_RTOL, m)
    rep.le(f"{tag} 3n^2g^2 P - A'PA >= 0", "ple.curvature", -curv, RESIDUAL_RTOL, m)
    rep.le(f"{tag} dP/dg lower sandwich", "ple.sandwich", 1.0 - lo, SANDWICH_SLACK, m,
           note=f"min relative rate {lo:.6g}")
    rep.le(f"{tag} dP/dg upper sandwich", "ple.sandwich", hi - basis.dp_bound, SANDWICH_SLACK, m,
           note=f"max relative rate {hi:.6g} vs bound {basis.dp_bound:.6g}")
    rep.le(f"{tag} dQ/dg lower sandwich", "ple.dual_sandwich", 1.0 - dlo, SANDWICH_SLACK, m,
           note=f"min relative rate {dlo:.6g}")

    mono = 0.0
    for g1, g2 in zip(grid, grid[1:]):
        D = eval_P(basis, g2) - eval_P(basis, g1)
        mono = min(mono, _rel_sym_min_eig(D, np.linalg.norm(eval_P(basis, g2), 2)))
    rep.le(f"{tag} P(g) increasing in g", "ple.monotone", -mono, RESIDUAL_RTOL, max(m - 1, 1))

    spectra = [np.sort(np.linalg.eigvalsh(M)) for M in
               (basis.P_n, basis.Q_n, np.linalg.inv(basis.P_n), np.linalg.inv(basis.Q_n))]
    ref = spectra[0]
    sim = max(float(np.max(np.abs(s - ref) / np.abs(ref))) for s in spectra[1:])
    rep.le(f"{tag} P, Q and inverses share a spectrum", "ple.similarity", sim, RESIDUAL_RTOL, 4)
    return rep


def estimate_dual_rate(basis: PleBasis, gamma_grid) -> float:
    """Largest relative rate ``n gamma dQ/dgamma`` against ``Q`` over the grid (finite differences)."""
    grid = [float(g) for g in gamma_grid]
    if not grid:
        raise DomainError("gamma grid must be nonempty")
    return max(float(relative_derivative_spectrum(basis, g, "Q")[-1]) for g in grid)


def dual_rate_reference(basis: PleBasis) -> float:
    """Closed-form value of the dual rate, ``n (1 + lambda_max(F + Q F Q^-1))``, ``F = diag(0..n-1)``."""
    return compute_dp_bound(basis.Q_n, np.diag(np.arange(basis.n, dtype=float)))


def check_dual_rate(basis: PleBasis, gamma_grid) -> VerificationReport:
    grid = sorted(float(g) for g in gamma_grid)
    if len(grid) < 2 or grid[-1] / grid[0] < 100:
        raise DomainError("dual-rate grid must span at least two decades")
    rep = VerificationReport()
    tag = f"n={basis.n}"
    est = estimate_dual_rate(basis, grid)
    fine = np.sqrt(np.multiply(grid[:-1], grid[1:]))
    refined = estimate_dual_rate(basis, list(grid) + list(fine))
    low = min(float(relative_derivative_spectrum(basis, g, "Q")[0]) for g in grid)
    at1 = estimate_dual_rate(basis, [1.0])
    at10 = estimate_dual_rate(basis, [10.0])
    ref = dual_rate_reference(basis)
    rep.le(f"{tag} dual rate lower bound", "ple.dual_rate", 1.0 - low, 1e-6,
           len(grid), note=f"estimate {est:.9g}")
    rep.le(f"{tag} dual rate stable under refinement", "ple.dual_rate",
           abs(refined - est) / est, 1e-2, 2 * len(grid) - 1)
    rep.le(f"{tag} dual rate gamma invariance", "ple.dual_rate", abs(at10 - at1) / at1, 1e-2, 2)
    rep.le(f"{tag} dual rate matches closed form", "ple.dual_rate", abs(est - ref) / ref, 1e-6,
           len(grid), note=f"closed form {ref:.9g}")
    return rep


# --- growth bound ---------------------------------------------------------------

def check_growth_bound(spec: UncertaintySpec, T: float, n: int | None = None, samples: int = 1000,
                       seed: int = 0, z_range: float = 10.0, u_range: float = 10.0
                       ) -> VerificationReport:
    """Randomized check of ``|L psi|^2 <= d^2 gamma^2 |L z|^2`` with ``L = L(1/T)``.

    ``d`` is computed from the spec's table directly, so a spec whose table
    is wrong shows up here as a violation rather than being refused.
    """
    n = spec.n if n is None else n
    if n != spec.n:
        raise DomainError(f"spec has n={spec.n}, asked for n={n}")
    rng = np.random.default_rng(seed)
    g = compute_g_table(spec.bound, T)
    d = compute_d(g, 1.0 / T, n)
    s = (1.0 / T) ** np.arange(n - 1, -1, -1, dtype=float)
    worst = comp = -np.inf
    violations = comp_viol = table_viol = 0
    for _ in range(samples):
        t = rng.uniform(0.0, 0.99 * T)
        z = rng.uniform(-z_range, z_range, n)
        u = rng.uniform(-u_range, u_range)
        gamma = 1.0 / (T - t)
        psi = psi_transformed(spec, t, T, u, z)
        lhs = float(np.sum((s * psi) ** 2))
        rhs = d * d * gamma * gamma * float(np.sum((s * z) ** 2))
        excess = lhs - rhs
        worst = max(worst, excess)
        violations += excess > GROWTH_SLACK
        bound = gamma * (np.tril(g) @ np.abs(z))
        ce = float(np.max((np.abs(psi) - bound) / np.maximum(bound, 1.0)))
        comp = max(comp, ce)
        comp_viol += ce > 1e-12
        table_viol += bool(np.any(assumption_residual(spec, t, u, from_transformed(t, T, z)) < 0))
    rep = VerificationReport()
    tag = f"{spec.name} n={n} T={T:g}"
    rep.le(f"{tag} growth bound", "growth.bound", worst, GROWTH_SLACK, samples,
           note=f"d={d:.6g}, {violations} violations")
    rep.le(f"{tag} componentwise bound", "growth.component", comp, 1e-12, samples,
           note=f"{comp_viol} violations, table violated at {table_viol} samples")
    return rep


# --- trajectory checks ------------------------------------------------------------

def _check_meta(traj, law, modes):
    meta = traj.meta
    if meta.get("mode") not in modes:
        raise DomainError(f"trajectory mode {meta.get('mode')!r} is not one of {modes}")
    if meta.get("T") != law.T or meta.get("beta") != law.beta or meta.get("n") != law.n:
        raise DomainError("trajectory metadata does not match the law")


def _safe_ratio(num, den):
    num, den = np.abs(num), np.asarray(den, dtype=float)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))


def fit_envelope(t, ratio):
    """Fit ``ratio(t) <= C exp(rate t)`` on even samples; return ``(C, rate, worst holdout)``.

    ``rate`` is the least-squares slope of ``log ratio`` clipped at zero and
    ``C`` the tightest constant on the fit set.  The holdout value is the
    largest ratio to the envelope on the odd samples.
    """
    t, ratio = np.asarray(t, float), np.asarray(ratio, float)
    if not np.all(np.isfinite(ratio)):
        return np.inf, np.nan, np.inf
    pos = ratio > 0
    if pos.sum() < 2:
        return float(ratio.max(initial=0.0)), 0.0, 0.0
    fit = np.zeros(len(t), bool)
    fit[::2] = True
    sel = fit & pos
    if sel.sum() >= 2:
        rate = max(0.0, float(np.polyfit(t[sel], np.log(ratio[sel]), 1)[0]))
    else:
        rate = 0.0
    C = float(np.max(ratio[fit] * np.exp(-rate * t[fit])))
    hold = ~fit
    if C == 0.0:
        worst = 0.0 if not np.any(ratio[hold] > 0) else np.inf
    else:
        worst = float(np.max(ratio[hold] * np.exp(-rate * t[hold]) / C, initial=0.0))
    return C, rate, worst


def check_state_feedback_bounds(traj, law: StateFeedbackLaw, x0_init: float | None = None,
                                tag: str = "") -> VerificationReport:
    """Explicit x0/u0 bounds, fitted state/control envelopes and the Lyapunov decay bound."""
    _check_meta(traj, law, ("state", "transformed"))
    if x0_init is None:
        x0_init = traj.meta["x0_init"]
    T, beta, c0, n = law.T, law.beta, law.c0, law.n
    t = traj.t
    r = T - t
    rep = VerificationReport()
    tag = tag or traj.meta.get("label", f"n={n} beta={beta:.6g}")
    m = len(t)

    exact = np.array([closed_form_x0(s, x0_init, beta, T, c0) for s in t])
    scale = np.max(np.abs(exact))
    err = np.max(np.abs(traj.x0 - exact)) / scale if scale > 0 else np.max(np.abs(traj.x0))
    rep.le(f"{tag} x0 vs closed form", "sf.x0_closed_form", err, 1e-6, m)

    rx0 = _safe_ratio(traj.x0, x0_envelope(t, x0_init, beta, T, c0))
    ru0 = _safe_ratio(traj.u0, u0_envelope(t, x0_init, beta, T, c0))
    rep.le(f"{tag} |x0| / explicit bound", "sf.x0_bound", np.max(rx0), 1 + RATIO_SLACK, m)
    rep.le(f"{tag} |u0| / explicit bound", "sf.u0_bound", np.max(ru0), 1 + RATIO_SLACK, m)

    x = traj.x if traj.coords == "x" else np.array([from_transformed(s, T, z)
                                                    for s, z in zip(t, traj.x)])
    for anchor, name, num, p in (("sf.state_envelope", "|x|", np.linalg.norm(x, axis=1), 1.5),
                                 ("sf.control_envelope", "|u|", np.abs(traj.u), 0.5)):
        C, rate, worst = fit_envelope(t, num / r ** p)
        rep.le(f"{tag} {name}/(T-t)^{p:g} holdout", anchor, worst, 1 + HOLDOUT_SLACK, m,
               note=f"C={C:.6g}, rate={rate:.6g}")

    theta0 = decay_excess_rate(x0_init, beta, T, n)
    V0 = traj.V[0]
    if V0 <= 0:
        # zero start: the bound is zero, so V must stay zero
        excess = excess_lit = 0.0 if np.max(traj.V) <= 0 else np.inf
    else:
        with np.errstate(divide="ignore"):
            logV = np.log(traj.V)
        base = theta0 * t + np.log(V0)
        excess = float(np.max(logV - base - np.log(r / T)))
        excess_lit = float(np.max(logV - base - np.log(r)))
    rep.le(f"{tag} V <= (T-t)/T exp(rate t) V(0)", "sf.lyapunov", excess, np.log1p(RATIO_SLACK),
           m, note=f"rate={theta0:.6g}, log-space margin")
    rep.le(f"{tag} V <= (T-t) exp(rate t) V(0)", "sf.lyapunov_literal", excess_lit,
           np.log1p(RATIO_SLACK), m, note="stated form; coincides with the above only when T=1")
    return rep


def _at_fraction(traj, frac):
    """Index of the sample at ``T (1 - frac)``, or the last sample if that lies past the guard."""
    target = traj.T * (1 - frac)
    if target >= traj.t[-1]:
        return len(traj.t) - 1
    return traj.index_of(target)


def check_output_feedback_bounds(traj, law: ObserverLaw, inits=None, perfect_start: bool = False,
                                 tag: str = "") -> VerificationReport:
    """Boundedness of normalized state/estimate/control ratios and observer convergence.

    ``inits`` is ``(x_init, xi_init)``; it only enters the normalization
    reported in the notes.  Needs a sample at ``T (1 - 1e-3)``.
    """
    _check_meta(traj, law, ("output",))
    if inits is None:
        inits = (traj.meta["x_init"], traj.meta["xi_init"])
    norm0 = float(np.linalg.norm(inits[0]) + np.linalg.norm(inits[1])) or 1.0
    T = law.T
    t, r = traj.t, law.T - traj.t
    m = len(t)
    rep = VerificationReport(limitations=[OUTPUT_LYAPUNOV_NOTE])
    tag = tag or traj.meta.get("label", f"n={law.n} beta={law.beta:.6g}")
    i_mid, i_end = _at_fraction(traj, 1e-3), len(t) - 1

    ratios = {
        ("of.state_ratio", "|x|/(T-t)^1.5"): np.linalg.norm(traj.x, axis=1) / r ** 1.5,
        ("of.estimate_ratio", "|xi|/(T-t)^1.5"): np.linalg.norm(traj.xi, axis=1) / r ** 1.5,
        ("of.control_ratio", "|u|/(T-t)^0.5"): np.abs(traj.u) / r ** 0.5,
    }
    for (anchor, name), q in ratios.items():
        finite = bool(np.all(np.isfinite(q)))
        sup = float(np.max(q)) if finite else np.inf
        rep.add(f"{tag} {name} bounded", anchor, sup, np.inf, finite, m,
                note=f"sup/(|x(0)|+|xi(0)|) = {sup / norm0:.6g}")
        if anchor != "of.estimate_ratio":
            # a ratio already at round-off relative to its own peak has converged;
            # comparing two subnormal values says nothing about growth
            lhs, ref = q[i_end], max(q[i_mid], TREND_FLOOR * sup)
            trend = lhs / ref if ref > 0 else 0.0
            rep.le(f"{tag} {name} terminal trend", "of.terminal_trend", trend, TREND_FACTOR, 2,
                   note=f"at t={t[i_end]:.9g} vs t={t[i_mid]:.9g}")

    e = np.linalg.norm(traj.observer_error(), axis=1)
    peak = float(np.max(e))
    frac = e[i_mid] / peak if peak > 0 else 0.0
    rep.le(f"{tag} observer error at T(1-1e-3) / peak", "of.observer_terminal", frac,
           TERMINAL_FRACTION, m, note=f"peak {peak:.6g}")
    if perfect_start:
        rep.le(f"{tag} observer error with exact start", "of.observer_exact_start", peak,
               EXACT_START_TOL, m)
    return rep


# --- negative controls -------------------------------------------------------------

def corrupted_basis(basis: PleBasis, shift: float = 0.01) -> PleBasis:
    return replace(basis, P_n=basis.P_n + shift * np.eye(basis.n))


def violating_spec() -> UncertaintySpec:
    """``phi_1 = 2 x_1`` declared with ``c_11 = 1``; breaks its own table."""
    def phi(t, u, x):
        out = np.zeros(2)
        out[0] = 2.0 * x[0]
        return out
    return UncertaintySpec(UncertaintyBoundTable([[1.0, 0.0], [0.0, 0.0]]), phi, name="violating")


def negative_controls(seed: int = 0, samples: int = 200) -> VerificationReport:
    from .ple import ple_basis
    rep = VerificationReport()
    bad = check_ple_suite(corrupted_basis(ple_basis(2)), [1.0])
    rep.extend(VerificationReport(bad.find("ple.residual")).mark_expected_fail())
    viol = check_growth_bound(violating_spec(), 1.0, samples=samples, seed=seed)
    rep.extend(VerificationReport(viol.find("growth.component")).mark_expected_fail())
    for e in rep.entries:
        e.check = "negative control: " + e.check
    return rep


# --- full suite --------------------------------------------------------------------

PLE_GRID = (0.5, 1.0, 2.0, 10.0)
DUAL_RATE_GRID = (0.1, 1.0, 10.0, 100.0)


def _random_linear(n: int, rng) -> UncertaintySpec:
    from .model import linear_spec
    return linear_spec(np.tril(rng.uniform(-1.0, 1.0, (n, n))))


def run_suite(ns=range(2, 7), seed: int = 0, samples: int = 1000, full: bool = False,
              include_negative: bool = False) -> VerificationReport:
    """Algebraic checks for every ``n``, randomized growth checks and the trajectory checks.

    ``full`` adds formula-gain state-feedback runs for every ``n`` and the
    exact-start observer run.
    """
    from . import config as cf
    from .model import bilinear_example_spec, zero_spec
    from .ple import ple_basis

    rep = VerificationReport()
    rng = np.random.default_rng(seed)
    for n in ns:
        basis = ple_basis(n)
        rep.extend(check_ple_suite(basis, PLE_GRID))
        rep.extend(check_dual_rate(basis, DUAL_RATE_GRID))
    for i, n in enumerate(ns):
        sub = int(rng.integers(2**31))
        rep.extend(check_growth_bound(zero_spec(n), 1.0, samples=samples, seed=sub))
        rep.extend(check_growth_bound(_random_linear(n, rng), 1.5, samples=samples, seed=sub + 1))
    rep.extend(check_growth_bound(bilinear_example_spec(0.1), 2.5, samples=samples,
                                  seed=int(rng.integers(2**31))))

    state_runs = cf.x0_oracle_cases() + [cf.bilinear_example("state", None)]
    if full:
        for n in ns:
            if n > 2:
                state_runs.append(cf.ScenarioConfig(n=n, T=1.0, x0=0.5,
                                                    x=tuple(np.linspace(1.0, -1.0, n)),
                                                    uncertainty="zero", integrator=cf.TIGHT,
                                                    name=f"chain-n{n}-formula"))
    for c in state_runs:
        sc = c.build()
        tr = sc.run()
        rep.extend(check_state_feedback_bounds(tr, sc.law, tag=c.name))

    out = cf.bilinear_example("output", 100.0, integrator=cf.IntegratorConfig()).build()
    T = out.law.T
    tr = out.run(checkpoints=[T * (1 - 1e-3)])
    rep.extend(check_output_feedback_bounds(tr, out.law, tag=out.config.name))
    if full:
        ex = cf.exact_start_observer().build()
        tr = ex.run(checkpoints=[ex.law.T * (1 - 1e-3)])
        rep.extend(check_output_feedback_bounds(tr, ex.law, perfect_start=True,
                                                tag=ex.config.name))
    if include_negative:
        rep.extend(negative_controls(seed=seed))
    return rep
