"""Command-line front end.

Exit codes: 0 ok, 1 configuration or usage error, 2 simulation diverged,
3 uncertainty bound violated.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import artifacts
from .config import TIGHT, ScenarioConfig, parse_uncertainty
from .control import beta_output_feedback, beta_state_feedback
from .errors import AssumptionViolation, ConfigError, DomainError, PtchainError, SimulationDiverged
from .model import derive_bounds
from .ple import MAX_CHAIN, chain_matrices, ple_basis
from .sim import uniform_grid
from .verify import (DUAL_RATE_GRID, PLE_GRID, VerificationReport, check_output_feedback_bounds,
                     check_ple_suite, check_state_feedback_bounds, estimate_dual_rate,
                     negative_controls, run_suite)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_ASSUMPTION = 0, 1, 2, 3
EXAMPLE_CONFIG = "example_sec4.ini"


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"ptchain: {msg}", file=sys.stderr)


def example_config_text() -> str:
    return resources.files("ptchain").joinpath("data", EXAMPLE_CONFIG).read_text(encoding="utf-8")


def _load(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        cfg = ScenarioConfig.from_file(args.config)
    else:
        raise UsageError("--config is required")
    return _apply_flags(cfg, args)


def _apply_flags(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if getattr(args, "out", None):
        changes["out_dir"] = args.out
    if getattr(args, "svg", False):
        changes["svg"] = True
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    return cfg.with_(**changes) if changes else cfg


# --- constants -----------------------------------------------------------------

def _matrix_rows(M) -> list[str]:
    return ["  [" + ", ".join(f"{v:.9g}" for v in row) + "]" for row in M]


def cmd_constants(args) -> int:
    if args.config:
        cfg = ScenarioConfig.from_file(args.config)
        n, T, unc, c0 = cfg.n, cfg.T, cfg.uncertainty, cfg.c0
    else:
        n, T, unc, c0 = args.n, args.T, args.uncertainty, 0.0
    if not 2 <= n <= MAX_CHAIN:
        raise ConfigError(f"n must lie in [2, {MAX_CHAIN}], got {n}")
    if not T > 0:
        raise ConfigError(f"T must be positive, got {T}")
    basis = ple_basis(n)
    spec = parse_uncertainty(unc, n)
    d = derive_bounds(spec, T).d
    b = chain_matrices(n).b
    values = [
        ("n", n), ("T", T), ("eig_max", basis.eig_max), ("dp_bound", basis.dp_bound),
        ("observer_coupling", basis.observer_coupling), ("d", d),
        ("beta_state", beta_state_feedback(n, basis.dp_bound, d, basis.eig_max, c0, T)),
        ("beta_output", beta_output_feedback(n, basis.dp_bound, d, basis.eig_max,
                                             basis.observer_coupling)),
        ("dual_rate", estimate_dual_rate(basis, DUAL_RATE_GRID)),
    ]
    print(f"uncertainty: {unc}")
    print("P_n =")
    print("\n".join(_matrix_rows(basis.P_n)))
    print("Q_n =")
    print("\n".join(_matrix_rows(basis.Q_n)))
    for k, v in values[2:]:
        print(f"{k} = {v:.12g}")
    print(f"self-check: b'P_n b = {b @ basis.P_n @ b:.12g} (expected {n})")
    if args.out:
        text = "name,value\n" + "".join(f"{k},{v:.12g}\n" for k, v in values)
        path = artifacts.atomic_write(Path(args.out) / "constants.csv", text)
        print(f"wrote {path}")
    return EXIT_OK


# --- simulate ----------------------------------------------------------------------

def run_and_write(cfg: ScenarioConfig, native: bool | None = None) -> list[Path]:
    """Run a scenario and write its CSV (1 ms grid), optional native-point CSV and SVG charts."""
    scenario = cfg.build()
    grid = uniform_grid(cfg.T, cfg.integrator)
    traj = scenario.run(checkpoints=grid)
    out = Path(cfg.out_dir)
    written = [artifacts.atomic_write(out / f"{cfg.name}.csv",
                                      artifacts.trajectory_csv(traj, artifacts.resample_times(traj, grid)))]
    if cfg.native if native is None else native:
        written.append(artifacts.atomic_write(out / f"{cfg.name}_native.csv",
                                              artifacts.trajectory_csv(traj)))
    if cfg.svg:
        for kind, svg in artifacts.trajectory_charts(traj, cfg.name).items():
            written.append(artifacts.atomic_write(out / f"{cfg.name}_{kind}.svg", svg))
    return written


def cmd_simulate(args) -> int:
    cfg = _load(args)
    for p in run_and_write(cfg):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_example(args) -> int:
    cfg = _apply_flags(ScenarioConfig.from_ini(example_config_text()), args)
    if args.mode:
        cfg = cfg.with_(mode=args.mode)
    for p in run_and_write(cfg):
        print(f"wrote {p}")
    return EXIT_OK


# --- verify --------------------------------------------------------------------------

def _scenario_report(cfg: ScenarioConfig) -> VerificationReport:
    rep = check_ple_suite(ple_basis(cfg.n), PLE_GRID)
    # the bound checks are relative all the way to T, where the state is far
    # below a typical absolute tolerance
    if cfg.integrator.abs_tol > TIGHT.abs_tol:
        cfg = cfg.with_(integrator=replace(cfg.integrator, abs_tol=TIGHT.abs_tol))
    sc = cfg.build()
    T = sc.law.T
    traj = sc.run(checkpoints=[T * (1 - 1e-3)] if T * (1 - 1e-3) < cfg.integrator.t_end(T) else ())
    if cfg.mode == "state":
        rep.extend(check_state_feedback_bounds(traj, sc.law, tag=cfg.name))
    else:
        rep.extend(check_output_feedback_bounds(traj, sc.law, tag=cfg.name))
    return rep


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.config:
        rep = _scenario_report(_load(args))
        if args.negative_controls:
            rep.extend(negative_controls(seed=seed))
    else:
        rep = run_suite(seed=seed, full=args.full, include_negative=args.negative_controls)
    out = Path(args.out or "out")
    text = rep.to_text()
    print(text, end="")
    artifacts.atomic_write(out / "report.txt", text)
    artifacts.atomic_write(out / "report.csv", rep.to_csv())
    print(f"wrote {out / 'report.csv'}")
    return EXIT_OK if rep.ok else EXIT_CONFIG


# --- sweep -------------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    initials: int = 0
    betas: tuple = ()
    spread: float = 2.0
    mode: str | None = None

    @classmethod
    def parse(cls, text: str) -> "SweepSpec":
        """``initials=<count>; beta=formula,2x,100; spread=<half-width>; mode=state|output``."""
        kw = {}
        for part in (p.strip() for p in (text or "").split(";")):
            if not part:
                continue
            key, sep, val = part.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"sweep entry {part!r} is not key=value")
            if key == "initials":
                try:
                    kw["initials"] = int(val)
                except ValueError:
                    raise ConfigError(f"initials must be an integer, got {val!r}") from None
                if kw["initials"] < 0:
                    raise ConfigError("initials must be nonnegative")
            elif key == "beta":
                kw["betas"] = tuple(v.strip() for v in val.split(",") if v.strip())
            elif key == "spread":
                kw["spread"] = float(val)
            elif key == "mode":
                kw["mode"] = val.strip()
            else:
                raise ConfigError(f"unknown sweep key {key!r}")
        spec = cls(**kw)
        if spec.initials == 0 and not spec.betas:
            raise ConfigError("empty sweep: give initials=<count> and/or beta=<list>")
        return spec

    def runs(self, base: ScenarioConfig) -> list[ScenarioConfig]:
        if self.mode:
            base = base.with_(mode=self.mode)
        rng = np.random.default_rng(base.seed)
        if self.initials:
            inits = [(float(v[0]), tuple(float(a) for a in v[1:]))
                     for v in rng.uniform(-self.spread, self.spread, (self.initials, base.n + 1))]
        else:
            inits = [(base.x0, base.x)]
        betas = self.betas or ("config",)
        out = []
        for bi, b in enumerate(betas):
            beta, allow = _sweep_beta(base, b)
            for ii, (x0, x) in enumerate(inits):
                out.append(base.with_(x0=x0, x=x, beta=beta, allow_low_beta=allow,
                                      name=f"{base.name}-b{bi}-i{ii}"))
        return out


def _sweep_beta(base: ScenarioConfig, token: str):
    if token == "config":
        return base.beta, base.allow_low_beta
    if token == "formula":
        return None, False
    if token.endswith("x"):
        k = float(token[:-1])
        beta_min = base.with_(beta=None).build().law.beta_min
        return k * beta_min, base.allow_low_beta or k < 1
    return float(token), True


SWEEP_COLUMNS = ("run", "beta", "x0_init", "x_init", "status", "peak_x", "terminal_x",
                 "terminal_fraction", "state_ratio_sup", "control_ratio_sup", "pass")


def _sweep_one(cfg: ScenarioConfig) -> dict:
    row = {"run": cfg.name, "x0_init": cfg.x0, "x_init": " ".join(f"{v:.9g}" for v in cfg.x)}
    try:
        sc = cfg.build()
        row["beta"] = sc.law.beta
        T = sc.law.T
        mark = T * (1 - 1e-3)
        traj = sc.run(checkpoints=[mark])
    except AssumptionViolation as exc:
        return {**row, "status": "assumption", "error": str(exc)}
    except SimulationDiverged as exc:
        return {**row, "status": "diverged", "error": str(exc)}
    except PtchainError as exc:
        return {**row, "status": "error", "error": str(exc)}
    nx = np.linalg.norm(traj.x, axis=1)
    r = T - traj.t
    peak = float(nx.max())
    term = float(nx[traj.index_of(mark)])
    frac = term / peak if peak > 0 else 0.0
    return {**row, "status": "ok", "peak_x": peak, "terminal_x": term, "terminal_fraction": frac,
            "state_ratio_sup": float(np.max(nx / r ** 1.5)),
            "control_ratio_sup": float(np.max(np.abs(traj.u) / r ** 0.5)),
            "pass": frac <= 1e-2}


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (float, np.floating)):
        return f"{v:.9g}"
    return "" if v is None else str(v)


def sweep_csv(rows: list[dict]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt_cell(row.get(c)) for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def run_sweep(base: ScenarioConfig, spec: SweepSpec, workers: int | None = None) -> list[dict]:
    runs = spec.runs(base)
    if workers == 1 or len(runs) == 1:
        return [_sweep_one(c) for c in runs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, runs))


def cmd_sweep(args) -> int:
    base = _load(args)
    spec = SweepSpec.parse(args.sweep)
    rows = run_sweep(base, spec, args.workers)
    path = artifacts.atomic_write(Path(base.out_dir) / f"{base.name}_sweep.csv", sweep_csv(rows))
    for row in rows:
        print(f"{row['run']}: {row['status']}"
              + (f" terminal fraction {row['terminal_fraction']:.3e}" if row["status"] == "ok" else
                 f" ({row.get('error', '')})"))
    print(f"wrote {path}")
    return EXIT_OK


# --- entry point -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptchain",
                                description="Prescribed-time feedback for uncertain chained systems")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constants", help="print design constants and gain values")
    c.add_argument("--n", type=int, default=2)
    c.add_argument("--T", type=float, default=1.0)
    c.add_argument("--uncertainty", default="zero")
    c.add_argument("--config")
    c.add_argument("--out")
    c.set_defaults(func=cmd_constants)

    s = sub.add_parser("simulate", help="run a configured scenario and write CSV/SVG")
    s.add_argument("--config", required=True)
    s.add_argument("--svg", action="store_true")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run the verification suite")
    v.add_argument("--config")
    v.add_argument("--full", action="store_true")
    v.add_argument("--seed", type=int)
    v.add_argument("--out")
    v.add_argument("--negative-controls", action="store_true")
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="run many scenarios concurrently")
    w.add_argument("--config", required=True)
    w.add_argument("--sweep", default="", help="e.g. 'initials=10; beta=formula,2x,100'")
    w.add_argument("--out")
    w.add_argument("--seed", type=int)
    w.add_argument("--workers", type=int)
    w.set_defaults(func=cmd_sweep)

    e = sub.add_parser("example", help="run the bundled bilinear example")
    e.add_argument("--svg", action="store_true")
    e.add_argument("--out")
    e.add_argument("--mode", choices=("state", "output"))
    e.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, UsageError, DomainError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        _err(str(exc))
        return EXIT_DIVERGED
    except AssumptionViolation as exc:
        _err(str(exc))
        return EXIT_ASSUMPTION
    except PtchainError as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
