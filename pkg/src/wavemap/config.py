"""JSON run configuration: one document, unknown keys rejected, all problems reported together."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import GridSpec
from .pulse import PulseConfig, resolution_problems

DIAGNOSTICS = ("energy", "flux", "lb_phi", "snapshots", "sobolev", "identities")


@dataclass
class GridSection:
    """Grid used at ``pulse.delta``; sweep members scale ``n`` by delta_ref / delta."""

    n: int = 512
    L_box: float = 4.4
    cfl: float = 0.4
    stencil_order: int = 2
    boundary: str = "dirichlet"
    band: bool = False
    min_points: float = 10.0
    sample_width: int = 10


@dataclass
class LatticeSection:
    K: int = 32
    theta_count: int = 64
    du: float = 0.02
    u_probe: float = -2.0


@dataclass
class Tolerances:
    data_slope: float = 0.1
    interior_slope: float = 0.15
    energy2_slope: float = 0.2
    lb_slope: tuple = (0.85, 1.15)
    aggregate_factor: float = 2.0
    flux_residual: float = 0.05
    flux_ratio: float = 1.7
    constraint_drift: float = 1e-8


@dataclass
class RunConfig:
    pulse: PulseConfig = field(default_factory=PulseConfig)
    grid: GridSection = field(default_factory=GridSection)
    lattice: LatticeSection = field(default_factory=LatticeSection)
    tolerances: Tolerances = field(default_factory=Tolerances)
    t_final: float = -1.0
    sweep: list = field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])
    diagnostics: list = field(default_factory=lambda: ["energy", "flux", "lb_phi"])
    output_dir: str = "out"
    seed: int = 0
    save_stride: int = 0

    def grid_for(self, delta: float, cfl: float | None = None) -> GridSpec:
        """GridSpec for one sweep member: n grows like 1/delta, rounded up to a multiple of 32."""
        g = self.grid
        n = g.n if delta == self.pulse.delta else int(np.ceil(g.n * self.pulse.delta / delta / 32) * 32)
        return GridSpec(n=n, L_box=g.L_box, cfl=g.cfl if cfl is None else cfl,
                        stencil_order=g.stencil_order, boundary=g.boundary)

    def pulse_for(self, delta: float) -> PulseConfig:
        p = self.pulse
        return PulseConfig(delta=delta, u0=p.u0, profile_amp=p.profile_amp,
                           angular_modes=p.angular_modes, delta_max=p.delta_max)

    def problems(self, sweep: bool = False) -> list[str]:
        out = []
        if self.t_final > -1.0 + 1e-9:
            out.append(f"t_final={self.t_final} lies beyond the existence window t <= -1")
        if self.t_final <= self.pulse.t_init:
            out.append(f"t_final={self.t_final} precedes the initial time {self.pulse.t_init}")
        bad = [d for d in self.diagnostics if d not in DIAGNOSTICS]
        if bad:
            out.append(f"unknown diagnostics {bad}; choose from {DIAGNOSTICS}")
        s = list(self.sweep)
        if any(not b < a for a, b in zip(s, s[1:])):
            out.append(f"sweep must be strictly decreasing, got {s}")
        if sweep and len(s) < 4:
            out.append(f"sweep needs >= 4 delta values for slope fits, got {len(s)}")
        members = s if sweep else []
        for delta in [self.pulse.delta] + members:
            try:
                pc = self.pulse_for(delta)
                g = self.grid_for(delta)
            except ConfigError as exc:
                out.extend(f"delta={delta}: {p}" for p in exc.problems)
                continue
            out.extend(f"delta={delta}: {p}" for p in resolution_problems(g, pc, self.grid.min_points))
        sw = self.grid.sample_width
        if not isinstance(sw, int) or sw % 2 or not 4 <= sw <= 16:
            out.append(f"grid.sample_width must be an even integer in [4, 16], got {sw}")
        if self.lattice.K < 16:
            out.append(f"lattice.K must be >= 16, got {self.lattice.K}")
        if not self.pulse.t_init < self.lattice.u_probe <= self.t_final:
            out.append(f"lattice.u_probe={self.lattice.u_probe} must lie in (t_init, t_final]")
        return list(dict.fromkeys(out))

    def validate(self, sweep: bool = False) -> "RunConfig":
        problems = self.problems(sweep)
        if problems:
            raise ConfigError(problems)
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pulse"]["angular_modes"] = [list(m) for m in self.pulse.angular_modes]
        d["pulse"]["profile_support"] = list(self.pulse.profile_support)
        d["tolerances"]["lb_slope"] = list(self.tolerances.lb_slope)
        return d


_SECTIONS = {"pulse": PulseConfig, "grid": GridSection, "lattice": LatticeSection, "tolerances": Tolerances}


def _build(cls, raw, where: str, problems: list):
    if not isinstance(raw, dict):
        problems.append(f"{where} must be a JSON object")
        return None
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        problems.append(f"unknown keys in {where}: {unknown}")
    kwargs = {k: v for k, v in raw.items() if k in known}
    for k in ("angular_modes", "lb_slope", "profile_support"):
        if k in kwargs:
            kwargs[k] = tuple(tuple(x) if isinstance(x, list) else x for x in kwargs[k])
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        problems.extend(exc.problems)
    except (TypeError, ValueError) as exc:
        problems.append(f"{where}: {exc}")
    return None


def from_dict(raw: dict) -> RunConfig:
    """Build a RunConfig; every problem found (unknown keys, bad values) is raised at once."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    top = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - top)
    if unknown:
        problems.append(f"unknown top-level keys: {unknown}")
    kwargs = {}
    for name, value in raw.items():
        if name in _SECTIONS:
            kwargs[name] = _build(_SECTIONS[name], value, name, problems)
        elif name in top:
            kwargs[name] = value
    if problems:
        raise ConfigError(problems)
    cfg = RunConfig(**kwargs)
    cfg.sweep = [float(d) for d in cfg.sweep]
    return cfg


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return from_dict(raw)
