"""Run configuration: typed blocks read from a YAML file.

Every block is a dataclass whose fields carry a one-line description in
their metadata; :func:`defaults_yaml` renders those descriptions as inline
comments. Unknown blocks or keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .domain import BC, Domain

MODES = ("picard", "etd")
GENERATORS = ("taylor_green", "z_profile", "rough_split", "random_solenoidal", "checkpoint")
FORMS = ("min", "max")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _f(default, doc: str, factory=None):
    if factory is not None:
        return field(default_factory=factory, metadata={"doc": doc})
    return field(default=default, metadata={"doc": doc})


@dataclass
class DomainBlock:
    Lx: float = _f(6.283185307179586, "horizontal period in x")
    Ly: float = _f(6.283185307179586, "horizontal period in y")
    z0: float = _f(0.0, "bottom of the layer")
    z1: float = _f(1.0, "top of the layer")
    Nx: int = _f(16, "grid points in x (even, >= 4)")
    Ny: int = _f(16, "grid points in y (even, >= 4)")
    Nz: int = _f(17, "vertical grid points including both ends (>= 4)")
    bc: str = _f("Neumann", "vertical boundary condition: Neumann | DirichletNeumann")

    def validate(self) -> None:
        try:
            BC.parse(self.bc)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if min(self.Nx, self.Ny, self.Nz) < 4:
            raise ConfigError("all resolutions must be at least 4")

    def build(self) -> Domain:
        try:
            return Domain(**dataclasses.asdict(self))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class SolverBlock:
    mode: str = _f("picard", "picard | etd")
    T: float = _f(0.5, "final time")
    dt: float = _f(0.05, "time step")
    n_steps: int | None = _f(None, "number of steps; overrides dt when set")
    n_quad: int = _f(3, "Gauss-Legendre nodes per step in the Duhamel integral")
    M_sweeps: int = _f(50, "maximal number of Picard sweeps")
    mu: float = _f(0.25, "weight exponent of the L_m monitor, in [0, 1/2)")
    atol: float = _f(1e-8, "absolute Picard stopping tolerance")
    rtol: float = _f(1e-6, "relative Picard stopping tolerance")
    dealias: bool = _f(True, "2/3-rule dealiasing of the nonlinearity")
    save_every: int = _f(1, "etd mode: keep every n-th step as a snapshot")

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"solver.mode must be one of {MODES}")
        if not self.T > 0:
            raise ConfigError("solver.T must be positive")
        if not self.dt > 0:
            raise ConfigError("solver.dt must be positive")
        if self.n_steps is not None and self.n_steps < 1:
            raise ConfigError("solver.n_steps must be at least 1")
        if not 0.0 <= self.mu < 0.5:
            raise ConfigError("solver.mu must lie in [0, 1/2)")
        if self.n_quad < 1 or self.M_sweeps < 1 or self.save_every < 1:
            raise ConfigError("solver.n_quad, M_sweeps and save_every must be positive")


@dataclass
class DataBlock:
    generator: str = _f("taylor_green", " | ".join(GENERATORS))
    amplitude: float = _f(1.0, "taylor_green amplitude; random_solenoidal ||a||_{inf,1}")
    a1_bandlimit: int = _f(2, "rough_split: horizontal band limit of the smooth part")
    a1_amplitude: float = _f(0.1, "rough_split: ||a1||_{inf,1}")
    a2_amplitude: float = _f(0.0, "rough_split: ||a2||_{inf,1} of the noise part")
    bandlimit: int = _f(4, "random_solenoidal: horizontal band limit")
    seed: int = _f(0, "seed of the random generators")
    checkpoint: str | None = _f(None, "checkpoint: path of the file to load")

    def validate(self) -> None:
        if self.generator not in GENERATORS:
            raise ConfigError(f"data.generator must be one of {GENERATORS}")
        if min(self.amplitude, self.a1_amplitude, self.a2_amplitude) < 0:
            raise ConfigError("amplitudes must be nonnegative")
        if self.generator == "checkpoint" and not self.checkpoint:
            raise ConfigError("data.checkpoint is required for the checkpoint generator")
        if self.seed < 0:
            raise ConfigError("data.seed must be nonnegative")


@dataclass
class VerifyBlock:
    suite: list | None = _f(None, "estimate ids to run; null runs the default 14")
    seed: int = _f(0, "master seed of the suite")
    tolerance: float = _f(0.05, "allowed |fitted - predicted| exponent deviation")
    r2_min: float = _f(0.98, "fits below this R^2 are inconclusive")
    t_min: float = _f(1e-4, "smallest fit time")
    t_max: float = _f(1e-2, "largest fit time")
    n_t: int = _f(9, "fit times (log-spaced)")
    n_samples: int = _f(3, "data samples per fit")
    interpolation_trials: int = _f(500, "random profiles for the Caputo inequality")
    frac_gradient_trials: int = _f(200, "random fields per batch for the fractional gradient ratio")
    bilinear_pairs: int = _f(100, "random solenoidal pairs for the bilinear ratio")
    inject: dict = _f(None, "estimate id -> wrong predicted exponent (harness self-test)", factory=dict)

    def validate(self) -> None:
        from .verify import EXTRA_IDS, SUITE_IDS

        known = set(SUITE_IDS) | set(EXTRA_IDS)
        for name in (self.suite or []) + list(self.inject):
            if name not in known:
                raise ConfigError(f"unknown estimate id {name!r}")
        if not 0 < self.t_min < self.t_max <= 1:
            raise ConfigError("verify requires 0 < t_min < t_max <= 1")
        if self.tolerance <= 0 or self.n_t < 3 or self.n_samples < 1:
            raise ConfigError("verify.tolerance, n_t (>= 3) and n_samples must be positive")


@dataclass
class OutputBlock:
    directory: str = _f("out", "output directory (overridden by --out)")
    formats: list = _f(None, "report formats: csv, jsonl", factory=lambda: ["csv", "jsonl"])
    checkpoints: bool = _f(True, "solve: write a checkpoint per snapshot")
    seminorm_points: int = _f(16, "t samples for the [a]_mu seminorm in norm reports")

    def validate(self) -> None:
        bad = set(self.formats) - {"csv", "jsonl"}
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        if self.seminorm_points < 1:
            raise ConfigError("output.seminorm_points must be positive")


@dataclass
class LifespanBlock:
    mu: float = _f(0.25, "exponent in [0, 1/2)")
    c_star: float | None = _f(None, "constant c_*; null calibrates it at the first scale")
    form: str = _f("max", "bound form: min (as stated) | max")
    scales: list = _f(None, "scale factors lambda of the data family lambda * a",
                      factory=lambda: [1.0, 2.0, 4.0, 8.0])
    T_max: float = _f(1.0, "largest time probed for the empirical existence time")
    n_halvings: int = _f(14, "probe times T_max * 2^-k for k = 0..n_halvings")
    n_steps: int = _f(8, "time steps per Picard run")
    M_sweeps: int = _f(30, "sweeps per Picard run")

    def validate(self) -> None:
        if not 0.0 <= self.mu < 0.5:
            raise ConfigError("lifespan.mu must lie in [0, 1/2)")
        if self.form not in FORMS:
            raise ConfigError(f"lifespan.form must be one of {FORMS}")
        if self.c_star is not None and not self.c_star > 0:
            raise ConfigError("lifespan.c_star must be positive")
        if not self.scales or min(self.scales) <= 0:
            raise ConfigError("lifespan.scales must be a nonempty list of positive numbers")
        if not self.T_max > 0 or self.n_halvings < 0:
            raise ConfigError("lifespan.T_max must be positive")


@dataclass
class RecursionBlock:
    A: float = _f(1.0, "H_0 and the constant term of the H recursion")
    eps: float = _f(0.01, "K_0 and the constant term of the K recursion")
    C1: float = _f(1.0, "constant of the H recursion")
    C2: float = _f(1.0, "constant of the K recursion")
    m_max: int = _f(10000, "number of iterations")

    def validate(self) -> None:
        if not (self.A > 0 and self.C1 > 0 and self.C2 > 0):
            raise ConfigError("recursion.A, C1 and C2 must be positive")
        if self.eps < 0:
            raise ConfigError("recursion.eps must be nonnegative")


BLOCKS = {
    "domain": DomainBlock,
    "solver": SolverBlock,
    "data": DataBlock,
    "verify": VerifyBlock,
    "output": OutputBlock,
    "lifespan": LifespanBlock,
    "recursion": RecursionBlock,
}


@dataclass
class RunConfig:
    domain: DomainBlock = field(default_factory=DomainBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    data: DataBlock = field(default_factory=DataBlock)
    verify: VerifyBlock = field(default_factory=VerifyBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    lifespan: LifespanBlock = field(default_factory=LifespanBlock)
    recursion: RecursionBlock = field(default_factory=RecursionBlock)

    def validate(self) -> "RunConfig":
        for name in BLOCKS:
            getattr(self, name).validate()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(block: str, name: str, value, default, annotation: str):
    """Check a YAML scalar against the annotated type of the field."""
    where = f"{block}.{name}"
    nullable = "None" in annotation
    if value is None:
        if nullable:
            return None
        raise ConfigError(f"{where} may not be null")
    base = annotation.split("|")[0].strip()
    if base == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean")
        return value
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    if base == "list":
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        return list(value)
    if base == "dict":
        if not isinstance(value, dict):
            raise ConfigError(f"{where} must be a mapping")
        return dict(value)
    return value


def config_from_dict(raw: dict | None) -> RunConfig:
    """Build and validate a :class:`RunConfig`; unknown blocks or keys raise :class:`ConfigError`."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping of blocks")
    unknown = set(raw) - set(BLOCKS)
    if unknown:
        raise ConfigError(f"unknown configuration blocks: {sorted(unknown)}")
    blocks = {}
    for name, cls in BLOCKS.items():
        values = raw.get(name) or {}
        if not isinstance(values, dict):
            raise ConfigError(f"block {name!r} must be a mapping")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        bad = set(values) - set(fields)
        if bad:
            raise ConfigError(f"unknown keys in block {name!r}: {sorted(bad)}")
        inst = cls()
        for key, val in values.items():
            f = fields[key]
            setattr(inst, key, _coerce(name, key, val, getattr(inst, key), str(f.type)))
        blocks[name] = inst
    return RunConfig(**blocks).validate()


def load_config(path) -> RunConfig:
    """Read a YAML configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed configuration {path}: {exc}") from None
    return config_from_dict(raw)


def defaults_yaml() -> str:
    """Default configuration as YAML, one commented line per key."""
    lines = []
    cfg = RunConfig()
    for name, cls in BLOCKS.items():
        lines.append(f"{name}:")
        block = getattr(cfg, name)
        for f in dataclasses.fields(cls):
            # flow-style dump of a scalar ends in a "..." document marker line
            value = yaml.safe_dump(getattr(block, f.name), default_flow_style=True).split("\n")[0]
            lines.append(f"  {f.name}: {value}  # {f.metadata['doc']}")
    return "\n".join(lines) + "\n"
