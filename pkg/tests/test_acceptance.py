"""End-to-end acceptance criteria.

Every test prints one ``CRITERION k PASS|FAIL`` line; the lines are repeated
in the terminal summary.  Tolerances are the fixed values listed in each test.
"""
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import CRITERIA_LINES
from ptchain import cli
from ptchain import config as cf
from ptchain.control import closed_form_x0
from ptchain.model import bilinear_example_spec, linear_spec, zero_spec
from ptchain.ple import ple_basis
from ptchain.sim import simulate_transformed
from ptchain.verify import (check_growth_bound, check_output_feedback_bounds, check_ple_suite,
                            check_state_feedback_bounds)

NS = range(2, 7)
GAMMAS = (0.5, 1.0, 2.0, 10.0)
DATA = Path(__file__).parent / "data"


def verdict(k, ok, detail):
    line = f"CRITERION {k} {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    CRITERIA_LINES.append(line)
    return ok


def state_runs():
    """Every state-feedback acceptance run: the three x0 cases, the bilinear
    example at formula gain, and formula-gain chains of length 3..6."""
    runs = cf.x0_oracle_cases() + [cf.bilinear_example("state", None)]
    for n in range(3, 7):
        runs.append(cf.ScenarioConfig(n=n, T=1.0, x0=0.5, x=tuple(np.linspace(1.0, -1.0, n)),
                                      integrator=cf.TIGHT, name=f"chain-n{n}-formula"))
    return runs


@pytest.fixture(scope="module")
def state_trajectories():
    out = []
    for c in state_runs():
        sc = c.build()
        out.append((c, sc, sc.run()))
    return out


def test_criterion_1_ple_identities():
    start = time.perf_counter()
    worst = {"ple.residual": 0.0, "ple.dual_residual": 0.0, "ple.gain_trace": 0.0,
             "ple.dual_gain_trace": 0.0}
    for n in NS:
        basis = ple_basis(n)
        rep = check_ple_suite(basis, GAMMAS)
        for anchor in worst:
            worst[anchor] = max(worst[anchor], max(e.residual for e in rep.find(anchor)))
    elapsed = time.perf_counter() - start
    ok = all(v <= 1e-8 for v in worst.values()) and elapsed < 1.0
    detail = " ".join(f"{k}={v:.2e}" for k, v in worst.items())
    assert verdict(1, ok, f"{detail} (tol 1e-8) runtime={elapsed:.3f}s (limit 1s)")


def test_criterion_2_spectrum_similarity():
    worst = 0.0
    for n in NS:
        rep = check_ple_suite(ple_basis(n), [1.0])
        worst = max(worst, rep.find("ple.similarity")[0].residual)
    assert verdict(2, worst <= 1e-8, f"max relative eigenvalue mismatch {worst:.2e} (tol 1e-8)")


def test_criterion_3_psd_inequalities():
    curv, sandwich, ok = 0.0, -np.inf, True
    for n in NS:
        rep = check_ple_suite(ple_basis(n), GAMMAS)
        for e in rep.find("ple.curvature"):
            curv = max(curv, e.residual)
            ok &= e.residual <= 1e-8
        for e in rep.find("ple.sandwich") + rep.find("ple.dual_sandwich"):
            sandwich = max(sandwich, e.residual)
            ok &= e.residual <= 1e-5
    assert verdict(3, ok, f"curvature deficit/|P| {curv:.2e} (tol 1e-8), "
                          f"sandwich excess {sandwich:.2e} (slack 1e-5)")


def test_criterion_4_closed_form_x0(state_trajectories):
    errs = []
    for c, sc, tr in state_trajectories[:3]:
        T = sc.law.T
        keep = tr.t <= 0.999 * T
        t = tr.t[keep]
        exact = np.array([closed_form_x0(s, tr.meta["x0_init"], sc.law.beta, T, sc.law.c0)
                          for s in t])
        scale = np.max(np.abs(exact))
        errs.append((c.name, float(np.max(np.abs(tr.x0[keep] - exact)) / scale)))
    ok = all(e <= 1e-6 for _, e in errs)
    detail = ", ".join(f"{name}: {e:.2e}" for name, e in errs)
    assert verdict(4, ok, f"max error / sup|x0| on [0, 0.999T]: {detail} (tol 1e-6)")


def test_criterion_5_bilinear_example_output_feedback():
    start = time.perf_counter()
    sc = cf.ScenarioConfig.from_ini(cli.example_config_text()).build()
    T = sc.law.T
    tr = sc.run(checkpoints=[T * (1 - 1e-3)])
    elapsed = time.perf_counter() - start
    i = tr.index_of(T * (1 - 1e-3))
    signals = {
        "|x0|": np.abs(tr.x0),
        "|x|": np.linalg.norm(tr.x, axis=1),
        "|xi|": np.linalg.norm(tr.xi, axis=1),
        "|u0|": np.abs(tr.u0),
        "|u|": np.abs(tr.u),
    }
    fractions = {k: float(v[i] / np.max(v)) for k, v in signals.items()}
    r = T - tr.t
    end = len(tr.t) - 1
    trends = {}
    for name, q in (("|x|/(T-t)^1.5", signals["|x|"] / r ** 1.5),
                    ("|u|/(T-t)^0.5", signals["|u|"] / r ** 0.5)):
        trends[name] = float(q[end] / q[i]) if q[i] > 0 else 0.0
    ok = (all(f <= 1e-2 for f in fractions.values()) and all(v <= 2 for v in trends.values())
          and elapsed < 5.0 and tr.t[end] == pytest.approx(T * (1 - 1e-6), rel=1e-12))
    detail = (" ".join(f"{k}={v:.2e}" for k, v in fractions.items()) + " (tol 1e-2 of peak); "
              + " ".join(f"{k} trend={v:.3g}" for k, v in trends.items()) + " (limit 2); "
              + f"runtime={elapsed:.2f}s (limit 5s)")
    assert verdict(5, ok, detail)


def test_criterion_6_explicit_bounds(state_trajectories):
    worst_x0 = worst_u0 = 0.0
    for c, sc, tr in state_trajectories:
        rep = check_state_feedback_bounds(tr, sc.law, tag=c.name)
        worst_x0 = max(worst_x0, rep.find("sf.x0_bound")[0].residual)
        worst_u0 = max(worst_u0, rep.find("sf.u0_bound")[0].residual)
    ok = worst_x0 <= 1 + 1e-6 and worst_u0 <= 1 + 1e-6
    assert verdict(6, ok, f"{len(state_trajectories)} runs, max |x0|/bound - 1 = "
                          f"{worst_x0 - 1:.2e}, max |u0|/bound - 1 = {worst_u0 - 1:.2e} "
                          f"(limit 1e-6)")


def test_criterion_7_lyapunov_decay(state_trajectories):
    picked = [(c, sc, tr) for c, sc, tr in state_trajectories
              if sc.law.certified or sc.law.beta == 100.0]
    assert any(sc.law.beta == 100.0 for _, sc, _ in picked)
    assert any(sc.law.certified for _, sc, _ in picked)
    worst, worst_scaled = -np.inf, -np.inf
    for c, sc, tr in picked:
        rep = check_state_feedback_bounds(tr, sc.law, tag=c.name)
        worst = max(worst, rep.find("sf.lyapunov_literal")[0].residual)
        worst_scaled = max(worst_scaled, rep.find("sf.lyapunov")[0].residual)
    ok = worst <= np.log1p(1e-6) and worst_scaled <= np.log1p(1e-6)
    assert verdict(7, ok, f"{len(picked)} runs, max log(V / ((T-t) e^(rate t) V(0))) = "
                          f"{worst:.3g}, with (T-t)/T: {worst_scaled:.3g} "
                          f"(limit log(1+1e-6))")


def test_criterion_8_transformed_equivalence():
    sc = cf.bilinear_example("state", 100.0).build()
    T = sc.law.T
    grid = np.linspace(0, 0.99 * T, 200)[1:]
    phys = sc.run(checkpoints=grid).at_times(grid).z()
    direct = simulate_transformed(sc.system, sc.law, sc.z_init, sc.init.x0, cf.TIGHT,
                                  grid).at_times(grid).x
    err = float(np.max(np.abs(phys - direct)) / np.max(np.abs(direct)))
    assert verdict(8, err <= 1e-4, f"sup-norm relative difference on [0, 0.99T] {err:.2e} "
                                   f"(tol 1e-4)")


def test_criterion_9_growth_bound_sampling():
    specs = [("zero", zero_spec(2), 1.0), ("linear", linear_spec([[0.5, 0.0], [-1.0, 0.3]]), 1.5),
             ("bilinear_example", bilinear_example_spec(0.1), 2.5)]
    parts, ok = [], True
    for i, (name, spec, T) in enumerate(specs):
        rep = check_growth_bound(spec, T, samples=1000, seed=100 + i)
        e = rep.find("growth.bound")[0]
        ok &= e.passed and e.samples == 1000
        parts.append(f"{name}: worst excess {e.residual:.2e}")
    assert verdict(9, ok, "; ".join(parts) + " (slack 1e-12, 1000 samples each)")


def test_criterion_10a_observer_exact_start():
    sc = cf.exact_start_observer().build()
    T = sc.law.T
    tr = sc.run(checkpoints=[T * (1 - 1e-3)])
    rep = check_output_feedback_bounds(tr, sc.law, perfect_start=True)
    peak = rep.find("of.observer_exact_start")[0].residual
    assert verdict("10a", peak <= 1e-6, f"exact-start observer error peak {peak:.3e} (tol 1e-6)")


def test_criterion_10b_observer_terminal_fraction():
    sc = cf.ScenarioConfig.from_ini(cli.example_config_text()).build()
    T = sc.law.T
    tr = sc.run(checkpoints=[T * (1 - 1e-3)])
    rep = check_output_feedback_bounds(tr, sc.law)
    e = rep.find("of.observer_terminal")[0]
    assert verdict("10b", e.passed, f"observer error at T(1-1e-3) / peak {e.residual:.2e} "
                                    f"(tol 1e-2)")


def test_criterion_11_determinism(tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert cli.main(["verify", "--seed", "7", "--out", str(d / "v")]) == 0
        assert cli.main(["simulate", "--config", str(DATA / "golden_rk4_example.ini"),
                         "--out", str(d / "s")]) == 0
        outs.append(((d / "v" / "report.csv").read_bytes(),
                     (d / "s" / "golden_rk4_example.csv").read_bytes()))
    same_verify = outs[0][0] == outs[1][0]
    same_sim = outs[0][1] == outs[1][1]
    golden = outs[0][1] == (DATA / "golden_rk4_example.csv").read_bytes()
    assert verdict(11, same_verify and same_sim and golden,
                   f"verify report identical={same_verify}, fixed-step CSV identical={same_sim}, "
                   f"matches stored golden file={golden}")
