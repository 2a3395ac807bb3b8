"""Scenario configuration: INI parsing, validation, and construction of runnable loops.

Layout::

    [scenario]
    n = 2
    T = 2.5
    c0 = 0
    mode = state | output
    beta = formula | <number>
    allow_low_beta = no
    uncertainty = zero | linear:<row>;<row>... | bilinear_example:<eps>
    frame = chained | bilinear
    x0 = 0
    x = -1, 1
    xi = 0, 0
    seed = 0

    [integrator]
    method = rk45
    ...

    [output]
    dir = out
    name = run
    svg = no
    native = no

``frame = bilinear`` means ``x0, x`` are given as ``(x0, z1, z2)`` of the
bilinear model and are mapped to chained coordinates before the run.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .control import ObserverLaw, StateFeedbackLaw
from .errors import ConfigError, DomainError
from .integrate import IntegratorConfig
from .model import (BilinearMaps, ChainedState, ChainedSystem, UncertaintySpec,
                    bilinear_example_spec, derive_bounds, linear_spec, to_transformed, zero_spec)
from .ple import MAX_CHAIN
from .sim import Trajectory, simulate_output_feedback, simulate_state_feedback

MODES = ("state", "output")
FRAMES = ("chained", "bilinear")
_TRUE = {"1", "yes", "true", "on"}
_FALSE = {"0", "no", "false", "off"}


def _bool(key, s):
    v = s.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ConfigError(f"{key}: expected yes/no, got {s!r}")


def _float(key, s):
    try:
        v = float(s)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {s!r}") from None
    if not np.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return v


def _vector(key, s):
    s = s.strip()
    if not s:
        return ()
    return tuple(_float(key, p) for p in s.split(","))


def _fmt(v: float) -> str:
    return repr(float(v))


def parse_uncertainty(text: str, n: int) -> UncertaintySpec:
    """``zero``, ``linear:a11;a21,a22;...`` (lower-triangular rows) or ``bilinear_example:<eps>``."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.strip()
    if kind == "zero":
        if arg.strip():
            raise ConfigError("uncertainty 'zero' takes no argument")
        return zero_spec(n)
    if kind == "linear":
        rows = [r for r in arg.split(";") if r.strip()]
        if len(rows) != n:
            raise ConfigError(f"linear uncertainty needs {n} rows, got {len(rows)}")
        a = np.zeros((n, n))
        for i, r in enumerate(rows):
            vals = _vector("uncertainty", r)
            if len(vals) != i + 1:
                raise ConfigError(f"linear uncertainty row {i + 1} needs {i + 1} entries")
            a[i, :i + 1] = vals
        return linear_spec(a)
    if kind == "bilinear_example":
        if n != 2:
            raise ConfigError("bilinear_example requires n = 2")
        eps = _float("uncertainty", arg) if arg.strip() else 0.1
        try:
            return bilinear_example_spec(eps)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown uncertainty {text!r}; use zero, linear:<rows> or "
                      "bilinear_example:<eps>")


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 2
    T: float = 1.0
    c0: float = 0.0
    mode: str = "state"
    beta: float | None = None
    allow_low_beta: bool = False
    uncertainty: str = "zero"
    frame: str = "chained"
    x0: float = 0.0
    x: tuple = ()
    xi: tuple = ()
    seed: int = 0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    out_dir: str = "out"
    name: str = "run"
    svg: bool = False
    native: bool = False

    def __post_init__(self):
        if not 2 <= self.n <= MAX_CHAIN:
            raise ConfigError(f"n must lie in [2, {MAX_CHAIN}], got {self.n}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.frame not in FRAMES:
            raise ConfigError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        if self.frame == "bilinear" and not self.uncertainty.startswith("bilinear_example"):
            raise ConfigError("frame = bilinear needs uncertainty = bilinear_example:<eps>")
        x = tuple(float(v) for v in (self.x or (0.0,) * self.n))
        if len(x) != self.n:
            raise ConfigError(f"x needs {self.n} entries, got {len(x)}")
        object.__setattr__(self, "x", x)
        xi = tuple(float(v) for v in (self.xi or (0.0,) * self.n))
        if len(xi) != self.n:
            raise ConfigError(f"xi needs {self.n} entries, got {len(xi)}")
        object.__setattr__(self, "xi", xi)
        if self.mode == "output" and self.c0 != 0:
            raise ConfigError("output feedback requires c0 = 0")
        if self.beta is not None and not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        parse_uncertainty(self.uncertainty, self.n)

    # --- INI round trip -------------------------------------------------------

    @classmethod
    def from_ini(cls, text: str) -> "ScenarioConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"unreadable config: {exc}") from None
        known = {"scenario", "integrator", "output"}
        extra = set(cp.sections()) - known
        if extra:
            raise ConfigError(f"unknown section(s): {sorted(extra)}")
        kw = {}
        sc = cp["scenario"] if cp.has_section("scenario") else {}
        parsers = {
            "n": lambda k, s: int(_float(k, s)), "T": _float, "c0": _float,
            "mode": lambda k, s: s.strip(), "uncertainty": lambda k, s: s.strip(),
            "frame": lambda k, s: s.strip(), "x0": _float, "x": _vector, "xi": _vector,
            "beta": lambda k, s: None if s.strip().lower() == "formula" else _float(k, s),
            "allow_low_beta": _bool, "seed": lambda k, s: int(_float(k, s)),
        }
        for k, v in sc.items():
            if k not in parsers:
                raise ConfigError(f"unknown key [scenario] {k}")
            kw[k] = parsers[k](k, v)
        if cp.has_section("integrator"):
            ikw = {}
            types = {f.name: f.type for f in fields(IntegratorConfig)}
            for k, v in cp["integrator"].items():
                if k not in types:
                    raise ConfigError(f"unknown key [integrator] {k}")
                if k == "method":
                    ikw[k] = v.strip()
                elif k == "max_steps":
                    ikw[k] = int(_float(k, v))
                else:
                    ikw[k] = _float(k, v)
            try:
                kw["integrator"] = IntegratorConfig(**ikw)
            except DomainError as exc:
                raise ConfigError(str(exc)) from None
        if cp.has_section("output"):
            okeys = {"dir": ("out_dir", str), "name": ("name", str), "svg": ("svg", _bool),
                     "native": ("native", _bool)}
            for k, v in cp["output"].items():
                if k not in okeys:
                    raise ConfigError(f"unknown key [output] {k}")
                dest, conv = okeys[k]
                kw[dest] = v.strip() if conv is str else conv(k, v)
        try:
            return cls(**kw)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_ini(text)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["scenario"] = {
            "n": str(self.n), "T": _fmt(self.T), "c0": _fmt(self.c0), "mode": self.mode,
            "beta": "formula" if self.beta is None else _fmt(self.beta),
            "allow_low_beta": "yes" if self.allow_low_beta else "no",
            "uncertainty": self.uncertainty, "frame": self.frame, "x0": _fmt(self.x0),
            "x": ", ".join(_fmt(v) for v in self.x), "xi": ", ".join(_fmt(v) for v in self.xi),
            "seed": str(self.seed),
        }
        cp["integrator"] = {k: (v if isinstance(v, str) else repr(v))
                            for k, v in self.integrator.as_dict().items()}
        cp["output"] = {"dir": self.out_dir, "name": self.name,
                        "svg": "yes" if self.svg else "no",
                        "native": "yes" if self.native else "no"}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["integrator"] = self.integrator.as_dict()
        return d

    # --- construction ------------------------------------------------------------

    def spec(self) -> UncertaintySpec:
        return parse_uncertainty(self.uncertainty, self.n)

    def build(self) -> "Scenario":
        """Validated plant, law and initial conditions (raises :class:`BetaTooSmallError`)."""
        spec = self.spec()
        sys = ChainedSystem(self.n, spec, self.c0)
        d = derive_bounds(spec, self.T).d
        if self.mode == "state":
            law = StateFeedbackLaw.design(self.n, self.T, d, self.c0, self.beta,
                                          allow_below_formula=self.allow_low_beta)
        else:
            law = ObserverLaw.design(self.n, self.T, d, self.beta,
                                     allow_below_formula=self.allow_low_beta)
        x0, x = self.x0, np.array(self.x)
        if self.frame == "bilinear":
            maps = BilinearMaps(spec.params["eps"])
            x0, x1, x2 = maps.to_chained_state(x0, *x)
            x = np.array([x1, x2])
        return Scenario(self, sys, law, ChainedState(x0, x), np.array(self.xi))


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    system: ChainedSystem
    law: StateFeedbackLaw | ObserverLaw
    init: ChainedState
    xi_init: np.ndarray

    def run(self, checkpoints=(), check_assumption: bool = True) -> Trajectory:
        cfg = self.config.integrator
        if self.config.mode == "state":
            tr = simulate_state_feedback(self.system, self.law, self.init, cfg, checkpoints,
                                         check_assumption)
        else:
            tr = simulate_output_feedback(self.system, self.law, self.init, self.xi_init, cfg,
                                          checkpoints, check_assumption)
        tr.meta["label"] = self.config.name
        return tr

    @property
    def z_init(self) -> np.ndarray:
        return to_transformed(0.0, self.law.T, self.init.x)


# --- canonical scenarios -------------------------------------------------------------

# Verification runs need pointwise relative accuracy on states that shrink to
# ~1e-11 before the guard; a near-zero absolute tolerance makes the error
# control purely relative.
TIGHT = IntegratorConfig(abs_tol=1e-20)


def bilinear_example(mode: str = "state", beta: float | None = 100.0, eps: float = 0.1,
                     integrator: IntegratorConfig = TIGHT, name: str | None = None
                     ) -> ScenarioConfig:
    """Bilinear example: ``T = 2.5``, bilinear start ``(0, -1, 1)``, observer start ``(0, 0)``."""
    label = name or f"bilinear-{mode}-" + ("formula" if beta is None else f"{beta:g}")
    return ScenarioConfig(n=2, T=2.5, mode=mode, beta=beta, allow_low_beta=beta is not None,
                          uncertainty=f"bilinear_example:{eps!r}", frame="bilinear",
                          x0=0.0, x=(-1.0, 1.0), xi=(0.0, 0.0), integrator=integrator,
                          name=label, out_dir="out")


def x0_oracle_cases(integrator: IntegratorConfig = TIGHT) -> list[ScenarioConfig]:
    """State-feedback runs covering the three ``(T, beta, x0(0))`` closed-form cases."""
    return [
        bilinear_example("state", 100.0, integrator=integrator, name="x0-oracle-T2.5-b100"),
        ScenarioConfig(n=2, T=1.0, x0=1.0, x=(1.0, -2.0), integrator=integrator,
                       name="x0-oracle-T1-formula"),
        ScenarioConfig(n=2, T=2.0, x0=-3.0, x=(1.0, -2.0), integrator=integrator,
                       name="x0-oracle-T2-formula"),
    ]


def exact_start_observer(T: float = 2.5, x=(-1.0, 1.0),
                         integrator: IntegratorConfig = TIGHT) -> ScenarioConfig:
    """Output feedback on the uncertainty-free chain with the observer started at the true state.

    ``x0(0) = -beta T^2 / 2`` makes the open-loop x0 term vanish identically.
    """
    n = len(x)
    spec = zero_spec(n)
    d = derive_bounds(spec, T).d
    beta = ObserverLaw.design(n, T, d).beta
    xi = tuple(to_transformed(0.0, T, np.array(x, dtype=float)))
    return ScenarioConfig(n=n, T=T, mode="output", beta=None, uncertainty="zero",
                          x0=-beta * T * T / 2.0, x=tuple(x), xi=xi, integrator=integrator,
                          name="observer-exact-start")
