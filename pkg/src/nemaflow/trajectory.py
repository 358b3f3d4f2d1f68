"""Trajectory-space analytics: translation, windowed norms, metrics, hulls.

A trajectory is a uniformly sampled run together with the parameters that
produced it, so time translation can shift the forcing and boundary data
along with the states.  All infinite-horizon quantities (sup in time,
translation-bounded norms) are evaluated over the recorded horizon; the
horizon rides along in every trajectory, so the truncation is explicit.

Time derivatives are realized as forward differences of samples.  Two
norms of the continuous theory are replaced by computable grid
counterparts and documented here once: the negative-order dual norm of the
velocity derivative uses the divergence-free dual norm, and the director
derivative uses the 3/2-power quadrature norm; smoothness scales come from
the transform-basis weights.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, LatticeError, ShapeError, WindowError
from .fields import (
    Grid,
    State,
    VelocityField,
    l2_norm,
    lp_norm,
    integrate_scalar,
    read_snapshot,
    write_snapshot,
)
from .operators import dual_norm_vdiv, sobolev_norm, velocity_grad_energy
from .dynamics import ForcingSignal, ModelParams
from .potential import Potential, parse_potential
from .config import parse_bc, parse_forcing

_LATTICE_RTOL = 1e-9


@dataclass
class Trajectory:
    """Uniformly sampled states plus the generating parameters.

    ``dt`` records the integrator step that produced the samples when
    known; the sample spacing ``delta`` is usually a multiple of it.
    """

    samples: list[State]
    params: ModelParams
    dt: float | None = None

    def __post_init__(self):
        if len(self.samples) < 2:
            raise ConfigError("a trajectory needs at least two samples")
        grid = self.samples[0].grid
        times = np.array([s.t for s in self.samples])
        steps = np.diff(times)
        delta = steps[0]
        if delta <= 0 or np.any(np.abs(steps - delta) > 1e-12 * max(1.0, abs(delta))):
            raise ConfigError("samples must sit on a uniform increasing time lattice")
        for s in self.samples[1:]:
            if s.grid != grid:
                raise ShapeError("all samples must share one grid")

    @property
    def grid(self) -> Grid:
        return self.samples[0].grid

    @property
    def delta(self) -> float:
        return self.samples[1].t - self.samples[0].t

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def duration(self) -> float:
        return self.samples[-1].t - self.samples[0].t

    def __len__(self) -> int:
        return len(self.samples)

    def copy(self) -> "Trajectory":
        return Trajectory([s.copy() for s in self.samples], self.params, self.dt)


def _lattice_index(value: float, delta: float, what: str) -> int:
    steps = value / delta
    k = round(steps)
    if abs(steps - k) > _LATTICE_RTOL * max(1.0, abs(steps)):
        raise LatticeError(f"{what} is not a lattice multiple", value, delta)
    return int(k)


def translate(traj: Trajectory, shift: float) -> Trajectory:
    """Drop the first shift/delta samples and rebase time to the start.

    The forcing and boundary records shift identically, so the translated
    trajectory solves the translated problem.  Off-lattice shifts raise;
    there is no resampling.
    """
    m = _lattice_index(shift, traj.delta, "translation shift")
    if m < 0:
        raise LatticeError("translation shift must be nonnegative", shift, traj.delta)
    if m >= len(traj.samples):
        raise LatticeError("translation shift exceeds the horizon", shift, traj.delta)
    if m == 0:
        return traj.copy()
    shifted = [State(s.u.copy(), s.d.copy(), s.t - shift) for s in traj.samples[m:]]
    return Trajectory(shifted, traj.params.shifted(shift), traj.dt)


# ---------------------------------------------------------------------------
# translation-bounded norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TbNormSpec:
    """Window length, time exponent, and spatial-norm tag for tb norms."""

    p: float = 2.0
    norm: str = "l2"
    window: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ConfigError(f"tb exponent must be >= 1, got {self.p}")
        if self.window <= 0:
            raise ConfigError("tb window must be positive")


def tb_norm(series, spec: TbNormSpec, delta: float) -> float:
    """sup over lattice window starts of the windowed p-integral, ^(1/p).

    ``series`` holds per-sample spatial norms at spacing ``delta``; the
    window must be a lattice multiple and fit inside the horizon.
    """
    values = np.asarray(series, dtype=float)
    if values.ndim != 1 or len(values) < 2:
        raise WindowError("need a one-dimensional series of at least two samples")
    if delta <= 0:
        raise ConfigError("sample spacing must be positive")
    w = _lattice_index(spec.window, delta, "tb window")
    if w < 1:
        raise WindowError(f"window {spec.window} shorter than the sample spacing")
    if w > len(values) - 1:
        raise WindowError(
            f"series spans {(len(values) - 1) * delta:g}, shorter than window {spec.window:g}"
        )
    powered = np.abs(values) ** spec.p
    seg = 0.5 * delta * (powered[1:] + powered[:-1])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    best = np.max(cum[w:] - cum[: len(cum) - w])
    return float(best ** (1.0 / spec.p))


def forcing_series(h: ForcingSignal, grid: Grid, times) -> np.ndarray:
    """Dual-norm samples of a forcing signal on a time lattice."""
    return np.array([dual_norm_vdiv(h(grid, float(t))) for t in times])


def hull_sample(h0: ForcingSignal, shifts) -> list[ForcingSignal]:
    """Finite stand-in for the translation hull: the shifted signals."""
    out = []
    for t in shifts:
        if t < 0:
            raise ConfigError("hull shifts must be nonnegative")
        out.append(h0.shifted(float(t)))
    return out


# ---------------------------------------------------------------------------
# the trajectory metric
# ---------------------------------------------------------------------------


def _pair_series(w1: Trajectory, w2: Trajectory):
    if w1.grid != w2.grid:
        raise ShapeError("trajectories live on different grids")
    if len(w1) != len(w2):
        raise ShapeError("trajectories cover different horizons")
    if abs(w1.delta - w2.delta) > 1e-12 * max(1.0, w1.delta):
        raise ConfigError("trajectories have different sample spacings")
    return list(zip(w1.samples, w2.samples))


def _diff_u(a: State, b: State) -> VelocityField:
    return a.u.plus(b.u, -1.0)

def _diff_d(a: State, b: State) -> np.ndarray:
    return a.d.stack() - b.d.stack()


def rho_terms(w1: Trajectory, w2: Trajectory, p: Potential) -> dict[str, float]:
    """The five contributions to the trajectory metric, separately.

    sup_state: sup in time of the product norm (velocity in L2, director
    in the first smoothness scale); tb_smooth: windowed product norm with
    the velocity gradient and the second smoothness scale; tb_ut / tb_dt:
    windowed norms of the forward-difference time derivatives (dual and
    3/2-quadrature norms); potential_gap: square root of the sup of the
    potential-integral gap.
    """
    grid = w1.grid
    pairs = _pair_series(w1, w2)
    delta = w1.delta
    spec2 = TbNormSpec(p=2.0)

    sup_state = 0.0
    smooth = np.empty(len(pairs))
    gap = 0.0
    for k, (a, b) in enumerate(pairs):
        du = _diff_u(a, b)
        dd = _diff_d(a, b)
        low = np.hypot(l2_norm(du), sobolev_norm(dd, 1.0, grid))
        sup_state = max(sup_state, low)
        smooth[k] = np.hypot(
            np.sqrt(velocity_grad_energy(du)), sobolev_norm(dd, 2.0, grid)
        )
        gap = max(
            gap,
            abs(
                integrate_scalar(p.value(a.d.stack()), grid)
                - integrate_scalar(p.value(b.d.stack()), grid)
            ),
        )

    ut = np.empty(len(pairs) - 1)
    dt_ = np.empty(len(pairs) - 1)
    for k in range(len(pairs) - 1):
        a0, b0 = pairs[k]
        a1, b1 = pairs[k + 1]
        du_dot = _diff_u(a1, b1).plus(_diff_u(a0, b0), -1.0).scaled(1.0 / delta)
        ut[k] = dual_norm_vdiv(du_dot)
        dd_dot = (_diff_d(a1, b1) - _diff_d(a0, b0)) / delta
        dt_[k] = lp_norm(dd_dot, grid, 1.5)

    return {
        "sup_state": float(sup_state),
        "tb_smooth": tb_norm(smooth, spec2, delta),
        "tb_ut": tb_norm(ut, spec2, delta),
        "tb_dt": tb_norm(dt_, spec2, delta),
        "potential_gap": float(np.sqrt(gap)),
    }


def rho_metric(w1: Trajectory, w2: Trajectory, p: Potential) -> float:
    """Sum of the five metric terms; see ``rho_terms``."""
    return float(sum(rho_terms(w1, w2, p).values()))


class _ZeroPotentialStub:
    """Potential stand-in whose value integral is identically zero."""

    @staticmethod
    def value(d):
        return np.zeros(np.asarray(d).shape[:-1])


_ZERO_POTENTIAL = _ZeroPotentialStub()


def rho_p_norm(w1: Trajectory, w2: Trajectory, p_exponent: float) -> float:
    """Metric variant with a sup-in-time p-quadrature director term
    replacing the potential gap; homogeneous of degree one."""
    if p_exponent < 2:
        raise ConfigError(f"exponent must be >= 2, got {p_exponent}")
    grid = w1.grid
    pairs = _pair_series(w1, w2)
    sup_lp = max(lp_norm(_diff_d(a, b), grid, p_exponent) for a, b in pairs)
    terms = rho_terms(w1, w2, _ZERO_POTENTIAL)
    del terms["potential_gap"]
    return float(sum(terms.values()) + sup_lp)


# ---------------------------------------------------------------------------
# sections and attraction
# ---------------------------------------------------------------------------


def section(trajs: list[Trajectory], t: float):
    """States of every trajectory at one lattice time."""
    out = []
    for traj in trajs:
        k = _lattice_index(t - traj.samples[0].t, traj.delta, "section time")
        if k < 0 or k >= len(traj.samples):
            raise LatticeError("section time outside the horizon", t, traj.delta)
        s = traj.samples[k]
        out.append((s.u, s.d))
    return out


def _as_pair(x):
    if isinstance(x, State):
        return x.u, x.d
    u, d = x
    return u, d


def y_distance(a, b, delta1: float, delta2: float, s: float | None = None) -> float:
    """Distance in the mixed scale: velocity at order -delta1, director at
    order +delta2, optionally an extra p-quadrature director term; the
    components combine by max."""
    ua, da = _as_pair(a)
    ub, db = _as_pair(b)
    grid = ua.grid
    du = ua.plus(ub, -1.0)
    dd = da.stack() - db.stack()
    parts = [sobolev_norm(du, -delta1, grid), sobolev_norm(dd, delta2, grid)]
    if s is not None:
        parts.append(lp_norm(dd, grid, s))
    return float(max(parts))


def hausdorff_semidist(
    A, B, delta1: float = 0.25, delta2: float = 0.25, s: float | None = None
) -> float:
    """max over a of min over b of the mixed-scale distance."""
    if not (0.0 <= delta1 < 1.0 and 0.0 <= delta2 < 1.0):
        raise ConfigError("smoothness offsets must sit in [0, 1)")
    if not A or not B:
        raise ConfigError("semidistance needs nonempty state sets")
    worst = 0.0
    for a in A:
        best = min(y_distance(a, b, delta1, delta2, s) for b in B)
        worst = max(worst, best)
    return worst


def _window_states(traj: Trajectory, w_steps: int) -> list[State]:
    if w_steps >= len(traj.samples):
        raise WindowError(
            f"window of {w_steps} steps exceeds trajectory of {len(traj.samples)} samples"
        )
    return traj.samples[: w_steps + 1]


def attraction_curve(
    B: list[Trajectory],
    reference: list[Trajectory],
    times,
    window: float = 1.0,
    delta1: float = 0.25,
    delta2: float = 0.25,
    s: float | None = None,
) -> np.ndarray:
    """Approach of a trajectory family toward a reference family.

    For each start time, every member of B is translated there and its
    first window compared, sample by sample in the mixed scale with the
    components combined by sup over the window, against the nearest
    reference window; the curve is the worst member's distance.  The
    reference plays the role of the limit set, typically late tails of
    long runs.
    """
    if not reference:
        raise ConfigError("reference family must be nonempty")
    if not B:
        raise ConfigError("trajectory family must be nonempty")
    w_steps = _lattice_index(window, B[0].delta, "attraction window")
    if w_steps < 1:
        raise WindowError("attraction window shorter than the sample spacing")
    ref_windows = [_window_states(r, w_steps) for r in reference]
    curve = np.empty(len(list(times)))
    for idx, t in enumerate(times):
        worst = 0.0
        for member in B:
            seg = _window_states(translate(member, float(t)), w_steps)
            best = np.inf
            for ref in ref_windows:
                d = 0.0
                for a, b in zip(seg, ref):
                    d = max(d, y_distance(a, b, delta1, delta2, s))
                    if d >= best:
                        break
                best = min(best, d)
            worst = max(worst, best)
        curve[idx] = worst
    return curve


# ---------------------------------------------------------------------------
# archives
# ---------------------------------------------------------------------------


def save_archive(
    samples,
    params: ModelParams,
    delta: float,
    dirpath,
    dt: float | None = None,
    forcing_spec: str | None = None,
    bc_spec: str | None = None,
) -> None:
    """Write a sample list plus a key=value manifest into a directory.

    Unlike save_trajectory this accepts any nonempty sample list, so a
    zero-horizon run can still archive its single initial snapshot.
    """
    if not samples:
        raise ConfigError("cannot archive an empty sample list")
    os.makedirs(dirpath, exist_ok=True)
    if forcing_spec is None:
        forcing_spec = params.forcing.label
    if bc_spec is None:
        if params.bc.kind == "neumann":
            bc_spec = "neumann"
        else:
            raise ConfigError("pass bc_spec to archive a Dirichlet trajectory")
    lines = [
        f"count={len(samples)}",
        f"delta={delta!r}",
        f"dt={dt!r}",
        f"t0={samples[0].t!r}",
        f"nu={params.nu!r}",
        f"alpha={params.alpha!r}",
        f"stabilization={params.stabilization!r}",
        f"potential={params.potential.name}",
        f"forcing={forcing_spec}",
        f"bc={bc_spec}",
    ]
    with open(os.path.join(dirpath, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    for k, s in enumerate(samples):
        write_snapshot(os.path.join(dirpath, f"snap_{k:05d}.bin"), s, params.bc)


def save_trajectory(traj: Trajectory, dirpath, forcing_spec: str | None = None, bc_spec: str | None = None) -> None:
    """Write snapshots plus a key=value manifest into a directory.

    Parameters are stored by their config spec strings so archives round
    trip through the same parsers the command line uses; pass the specs
    explicitly when the in-memory labels are not parseable.
    """
    save_archive(
        traj.samples,
        traj.params,
        traj.delta,
        dirpath,
        dt=traj.dt,
        forcing_spec=forcing_spec,
        bc_spec=bc_spec,
    )


def load_trajectory(dirpath) -> Trajectory:
    """Rebuild a trajectory from an archive directory."""
    manifest_path = os.path.join(dirpath, "manifest.txt")
    if not os.path.exists(manifest_path):
        raise ConfigError(f"no manifest in {dirpath}")
    meta: dict[str, str] = {}
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, value = line.split("=", 1)
                meta[key] = value
    count = int(meta["count"])
    samples = []
    for k in range(count):
        state, _ = read_snapshot(os.path.join(dirpath, f"snap_{k:05d}.bin"))
        samples.append(state)
    dt_raw = meta.get("dt", "None")
    params = ModelParams(
        nu=float(meta["nu"]),
        alpha=float(meta["alpha"]),
        potential=parse_potential(meta["potential"]),
        bc=parse_bc(meta["bc"]),
        forcing=parse_forcing(meta["forcing"]),
        stabilization=float(meta.get("stabilization", "0.0")),
    )
    return Trajectory(samples, params, dt=None if dt_raw == "None" else float(dt_raw))
