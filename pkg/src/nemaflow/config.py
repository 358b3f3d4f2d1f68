"""Run configuration: key=value files, named presets, and state builders.

Config files are plain ``key = value`` lines ('#' starts a comment); the
same keys can be overridden on the command line as ``key=value`` tokens.
String-valued specs pick presets by name:

* potential: ``double_well`` | ``quadratic`` | ``zero`` |
  ``quartic(p[,a[,b]])`` | ``custom:0=1,1=-2,2=1``
* bc: ``neumann`` | ``dirichlet(gx,gy,gz)`` | ``rotating(omega)``
* forcing: ``zero`` | ``constant(cx,cy[,cz])`` |
  ``periodic(omega,cx,cy[,cz])`` | ``vortex(amp[,omega[,phase]])``
* initial: ``minimizer`` | ``zero`` | ``smooth`` (seeded random bounded
  data: low-mode streamfunction velocity, low-mode director around a well
  minimum)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields as dc_fields, replace

import numpy as np

from .errors import ConfigError
from .fields import (
    NEUMANN,
    BoundarySpec,
    DirectorField,
    DirichletTrace,
    Grid,
    State,
    VelocityField,
)
from .dynamics import (
    ForcingSignal,
    ModelParams,
    constant_forcing,
    periodic_forcing,
    vortex_forcing,
    zero_forcing,
)
from .potential import parse_potential


_CALL_RE = re.compile(r"^([a-z_]+)\(([^)]*)\)$")


def _call_args(spec: str):
    """Split 'name(a,b,...)' into (name, [floats]); None when not a call."""
    m = _CALL_RE.match(spec.strip())
    if not m:
        return None
    name = m.group(1)
    raw = m.group(2).strip()
    if not raw:
        return name, []
    try:
        return name, [float(v) for v in raw.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad numeric arguments in {spec!r}") from exc


def parse_forcing(spec: str) -> ForcingSignal:
    spec = spec.strip()
    if spec == "zero":
        return zero_forcing()
    call = _call_args(spec)
    if call is None:
        raise ConfigError(f"unknown forcing {spec!r}")
    name, args = call
    if name == "constant" and len(args) in (2, 3):
        return constant_forcing(args)
    if name == "periodic" and len(args) in (3, 4):
        return periodic_forcing(args[1:], omega=args[0])
    if name == "vortex" and len(args) in (1, 2, 3):
        return vortex_forcing(*args)
    raise ConfigError(f"unknown forcing {spec!r}")


def parse_bc(spec: str) -> BoundarySpec:
    spec = spec.strip()
    if spec == "neumann":
        return NEUMANN
    call = _call_args(spec)
    if call is None:
        raise ConfigError(f"unknown boundary condition {spec!r}")
    name, args = call
    if name == "dirichlet" and len(args) == 3:
        return BoundarySpec("dirichlet", DirichletTrace.constant(args))
    if name == "rotating" and len(args) == 1:
        return BoundarySpec("dirichlet", DirichletTrace.rotating(args[0]))
    raise ConfigError(f"unknown boundary condition {spec!r}")


def parse_kv_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def parse_kv_pairs(tokens) -> dict[str, str]:
    out: dict[str, str] = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"expected key=value override, got {tok!r}")
        key, value = tok.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation run needs, in plain scalar form."""

    dim: int = 2
    n: int = 32
    length: float = 1.0
    nu: float = 1.0
    alpha: float = 0.5
    potential: str = "double_well"
    bc: str = "neumann"
    forcing: str = "zero"
    stabilization: float = 0.0
    initial: str = "smooth"
    dt: float = 5e-4
    t_final: float = 1.0
    sample_every: int = 25
    seed: int = 1

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RunConfig":
        base = cls()
        known = {f.name: f.type for f in dc_fields(cls)}
        updates = {}
        for key, value in mapping.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            current = getattr(base, key)
            try:
                if isinstance(current, bool):
                    updates[key] = value.lower() in ("1", "true", "yes")
                elif isinstance(current, int):
                    updates[key] = int(value)
                elif isinstance(current, float):
                    updates[key] = float(value)
                else:
                    updates[key] = value
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
        cfg = replace(base, **updates)
        # t_final = 0 is allowed: it means "write the initial state and stop"
        if cfg.dt <= 0 or cfg.t_final < 0:
            raise ConfigError("dt must be positive and t_final nonnegative")
        if cfg.sample_every < 1:
            raise ConfigError("sample_every must be at least 1")
        return cfg

    def n_steps(self) -> int:
        if self.t_final == 0:
            return 0
        steps = round(self.t_final / self.dt)
        if steps < 1 or abs(steps * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ConfigError(
                f"t_final {self.t_final} is not a multiple of dt {self.dt}"
            )
        return int(steps)


def build_grid(cfg: RunConfig) -> Grid:
    if cfg.dim == 2:
        return Grid.square(cfg.n, cfg.length)
    if cfg.dim == 3:
        return Grid.cube(cfg.n, cfg.length)
    raise ConfigError(f"dim must be 2 or 3, got {cfg.dim}")


def build_model(cfg: RunConfig) -> ModelParams:
    return ModelParams(
        nu=cfg.nu,
        alpha=cfg.alpha,
        potential=parse_potential(cfg.potential),
        bc=parse_bc(cfg.bc),
        forcing=parse_forcing(cfg.forcing),
        stabilization=cfg.stabilization,
    )


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def random_smooth_state(
    grid: Grid,
    rng: np.random.Generator,
    u_scale: float = 0.2,
    d_scale: float = 0.4,
) -> State:
    """Bounded random smooth data compatible with the wall conditions.

    Velocity comes from a low-mode streamfunction vanishing on the walls
    (three-dimensional grids start at rest), the director from a well
    minimizer plus low Neumann cosine modes, so amplitudes stay O(scale)
    uniformly in the grid.
    """
    if grid.dim == 2:
        fx = grid.faces(0) / grid.length[0]
        fy = grid.faces(1) / grid.length[1]
        psi = np.zeros((grid.n[0] + 1, grid.n[1] + 1))
        for i in range(1, 4):
            for j in range(1, 4):
                amp = rng.uniform(-1.0, 1.0) / (i * i + j * j)
                psi += amp * np.sin(np.pi * i * fx)[:, None] * np.sin(np.pi * j * fy)[None, :]
        u = VelocityField.from_streamfunction(grid, u_scale * psi)
    else:
        u = VelocityField.zeros(grid)

    mesh = grid.center_mesh()
    stack = np.zeros(grid.shape + (3,))
    axis_count = rng.integers(1, 3)
    base = np.zeros(3)
    base[0] = 1.0
    stack += base
    for c in range(3):
        for _ in range(int(axis_count) + 1):
            amp = d_scale * rng.uniform(-1.0, 1.0)
            term = np.ones(grid.shape)
            for a in range(grid.dim):
                ka = int(rng.integers(0, 3))
                term = term * np.cos(np.pi * ka * mesh[a] / grid.length[a])
            stack[..., c] += amp * term
    return State(u, DirectorField.from_stack(grid, stack), 0.0)


def initial_state(name: str, grid: Grid, rng: np.random.Generator | None = None) -> State:
    name = name.strip()
    if name == "minimizer":
        return State(VelocityField.zeros(grid), DirectorField.constant(grid, (1.0, 0.0, 0.0)), 0.0)
    if name == "zero":
        return State(VelocityField.zeros(grid), DirectorField.zeros(grid), 0.0)
    if name == "smooth":
        if rng is None:
            rng = np.random.default_rng(0)
        return random_smooth_state(grid, rng)
    raise ConfigError(f"unknown initial data program {name!r}")
