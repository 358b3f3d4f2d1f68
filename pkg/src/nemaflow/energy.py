"""Energy bookkeeping: the functional, inequality audits, and envelopes.

The quantity tracked everywhere is

    E = 1/2 ||u||^2 + 1/2 ||grad d||^2 + int W(d),

and the inequality audited over any sampled window [s, t] is

    E(t) + int_s^t (||q||^2 + nu ||grad u||^2)
        <= E(s) + int_s^t <h, u> (+ int_s^t <g_t, dn d> when the wall
                                    value moves),

with q = lap d - grad W(d).  All time integrals use one trapezoid rule on
the sample lattice and are stored cumulatively, so window values are
differences of cumulants and the audit is additive across windows by
construction.  The residual of a window is LHS - RHS; positive residual
beyond the scheme's consistency error flags a violation.

The dissipative envelope bounds E(t) by

    E(s) e^{-k (t-s)} + (l/k)(1 - e^{-k (t-s)})
        + (1/2 nu) int_s^t e^{-k (t-tau)} ||h(tau)||_*^2 dtau,

where ||.||_* is the dual norm on divergence-free fields and (k, l) come
from the certified coercivity constants and the first Stokes eigenvalue
through k = min(eta, 2 kappa, nu lambda1).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InfeasibleError
from .fields import (
    NEUMANN,
    BoundarySpec,
    State,
    integrate_scalar,
    velocity_inner,
)
from .operators import (
    director_grad_energy,
    director_laplacian,
    dual_norm_vdiv,
    velocity_grad_energy,
)
from .potential import Potential
from .trajectory import Trajectory


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    elastic: float
    potential: float

    @property
    def total(self) -> float:
        return self.kinetic + self.elastic + self.potential


def energy(state: State, p: Potential, bc: BoundarySpec = NEUMANN) -> EnergyBreakdown:
    """Kinetic, elastic, and potential parts at the state's own time."""
    return EnergyBreakdown(
        kinetic=0.5 * velocity_inner(state.u, state.u),
        elastic=0.5 * director_grad_energy(state.d, bc, state.t),
        potential=integrate_scalar(p.value(state.d.stack()), state.grid),
    )


def dissipation(state: State, p: Potential, nu: float, bc: BoundarySpec = NEUMANN) -> float:
    """||q||^2 + nu ||grad u||^2 at one instant."""
    q = director_laplacian(state.d, bc, state.t) - p.grad(state.d.stack())
    return integrate_scalar(np.sum(q * q, axis=-1), state.grid) + nu * velocity_grad_energy(state.u)


def boundary_rate(state: State, bc: BoundarySpec) -> float:
    """Discrete surface pairing of the wall-value rate with the outward
    normal derivative; zero for no-flux walls or a frozen wall value."""
    if bc.kind == "neumann":
        return 0.0
    g = bc.g(state.t)
    g_rate = bc.g_rate(state.t)
    if not np.any(g_rate):
        return 0.0
    grid = state.grid
    stack = state.d.stack()
    total = 0.0
    nd = stack.ndim
    for axis in range(grid.dim):
        area = grid.cell_volume / grid.h[axis]
        for side in (0, -1):
            idx = [slice(None)] * nd
            idx[axis] = side
            edge = stack[tuple(idx)]
            # exact g-sensitivity of the half-weighted wall term in the
            # discrete elastic energy; also the midpoint surface quadrature
            # of the continuum pairing with the outward normal derivative
            normal_deriv = 2.0 * (g - edge) / grid.h[axis]
            total += float(np.sum(normal_deriv @ g_rate)) * area
    return total


@dataclass
class EnergyAudit:
    """Per-sample energy ledger with cumulative window integrals.

    ``residual[k]`` audits the window from the first sample to sample k;
    any window [i, j] is audited by ``residual[j] - residual[i]``, and the
    worst window over the whole run is ``max_window_residual``.
    """

    times: np.ndarray
    kinetic: np.ndarray
    elastic: np.ndarray
    potential: np.ndarray
    total: np.ndarray
    dissipation_cum: np.ndarray
    work_cum: np.ndarray
    boundary_cum: np.ndarray
    residual: np.ndarray

    def window_residual(self, i: int, j: int) -> float:
        if not 0 <= i <= j < len(self.times):
            raise ConfigError(f"bad window indices ({i}, {j})")
        return float(self.residual[j] - self.residual[i])

    @property
    def max_window_residual(self) -> float:
        running_min = np.minimum.accumulate(self.residual)
        return float(np.max(self.residual - running_min))

    @property
    def max_energy_increase(self) -> float:
        return float(np.max(np.concatenate([[0.0], np.diff(self.total)])))


def _cumtrap(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    seg = 0.5 * np.diff(times) * (values[1:] + values[:-1])
    return np.concatenate([[0.0], np.cumsum(seg)])


def audit_energy(traj: Trajectory, params=None) -> EnergyAudit:
    """Evaluate the energy ledger along a trajectory.

    ``params`` defaults to the trajectory's own; passing different
    parameters audits the samples against another model configuration.
    """
    if params is None:
        params = traj.params
    p = params.potential
    bc = params.bc
    grid = traj.grid
    times = traj.times
    n = len(times)
    kin = np.empty(n)
    ela = np.empty(n)
    pot = np.empty(n)
    dis = np.empty(n)
    wrk = np.empty(n)
    bnd = np.empty(n)
    for k, s in enumerate(traj.samples):
        br = energy(s, p, bc)
        kin[k], ela[k], pot[k] = br.kinetic, br.elastic, br.potential
        dis[k] = dissipation(s, p, params.nu, bc)
        wrk[k] = velocity_inner(params.forcing(grid, s.t), s.u)
        bnd[k] = boundary_rate(s, bc)
    total = kin + ela + pot
    dis_cum = _cumtrap(times, dis)
    wrk_cum = _cumtrap(times, wrk)
    bnd_cum = _cumtrap(times, bnd)
    residual = (total + dis_cum) - (total[0] + wrk_cum + bnd_cum)
    return EnergyAudit(
        times=times,
        kinetic=kin,
        elastic=ela,
        potential=pot,
        total=total,
        dissipation_cum=dis_cum,
        work_cum=wrk_cum,
        boundary_cum=bnd_cum,
        residual=residual,
    )


@dataclass
class EnvelopeCheck:
    """Pointwise comparison of E(t) against the dissipative bound."""

    times: np.ndarray
    total: np.ndarray
    rhs: np.ndarray
    k: float
    l: float

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.total

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin))


def decay_rate(kappa: float, eta: float, nu: float, lambda1: float) -> float:
    """The certified exponential rate min(eta, 2 kappa, nu lambda1)."""
    if min(kappa, eta, nu, lambda1) <= 0:
        raise ConfigError("decay rate needs positive constants")
    return min(eta, 2.0 * kappa, nu * lambda1)


def dissipative_envelope(traj: Trajectory, k: float, l: float, hvec=None) -> EnvelopeCheck:
    """Evaluate the exponential envelope along the trajectory.

    ``hvec`` holds per-sample dual norms of the forcing; omitted, it is
    computed from the trajectory's own forcing record (the zero signal
    short-circuits).  The convolution integral uses an exponentially
    weighted trapezoid recursion, stable for any k dt.
    """
    if k <= 0:
        raise ConfigError(f"envelope rate must be positive, got {k}")
    if l < 0:
        raise ConfigError(f"envelope offset cannot be negative, got {l}")
    params = traj.params
    times = traj.times
    if hvec is None:
        hvec = np.array(
            [dual_norm_vdiv(params.forcing(traj.grid, s.t)) for s in traj.samples]
        )
    else:
        hvec = np.asarray(hvec, dtype=float)
        if hvec.shape != times.shape:
            raise ConfigError("forcing norm series does not match the sample count")
    total = np.array([energy(s, params.potential, params.bc).total for s in traj.samples])
    elapsed = times - times[0]
    h_sq = hvec**2
    conv = np.empty_like(h_sq)
    conv[0] = 0.0
    for i in range(1, len(h_sq)):
        step = times[i] - times[i - 1]
        damp = np.exp(-k * step)
        conv[i] = conv[i - 1] * damp + 0.5 * step * (h_sq[i] + damp * h_sq[i - 1])
    rhs = (
        total[0] * np.exp(-k * elapsed)
        + (l / k) * (1.0 - np.exp(-k * elapsed))
        + conv / (2.0 * params.nu)
    )
    return EnvelopeCheck(times=times, total=total, rhs=rhs, k=k, l=l)


def fit_decay_rate(traj_or_times, energies=None, e_inf=None, t_start=None) -> float:
    """Least-squares exponential rate of the energy excess.

    Accepts a trajectory or a plain (times, values) series.  The excess is
    measured against ``e_inf`` (default: the final sample); samples at or
    below the floor of resolvable excess are dropped.
    """
    if isinstance(traj_or_times, Trajectory):
        traj = traj_or_times
        times = traj.times
        values = np.array(
            [energy(s, traj.params.potential, traj.params.bc).total for s in traj.samples]
        )
    else:
        times = np.asarray(traj_or_times, dtype=float)
        values = np.asarray(energies, dtype=float)
        if times.shape != values.shape:
            raise ConfigError("times and values must align")
    if e_inf is None:
        e_inf = float(values[-1])
    excess = values - e_inf
    mask = excess > 1e-14 * max(1.0, float(np.max(np.abs(values))))
    if t_start is not None:
        mask &= times >= t_start
    if int(np.count_nonzero(mask)) < 2:
        raise InfeasibleError("no window of positive excess energy to fit")
    x = times[mask]
    y = np.log(excess[mask])
    x = x - x.mean()
    slope = float(x @ (y - y.mean()) / (x @ x))
    return -slope


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

AUDIT_COLUMNS = (
    "t",
    "E",
    "kinetic",
    "elastic",
    "potential",
    "dissipation_cum",
    "work_cum",
    "boundary_cum",
    "residual",
    "envelope_rhs",
    "envelope_margin",
)


def write_audit_csv(path, audit: EnergyAudit, envelope: EnvelopeCheck | None = None) -> None:
    """Write the audit table with the fixed column set.

    Floats are rendered with repr, so identical runs produce byte-identical
    files.  Without an envelope the last two columns hold nan.
    """
    n = len(audit.times)
    if envelope is None:
        env_rhs = np.full(n, np.nan)
        env_margin = np.full(n, np.nan)
    else:
        if len(envelope.times) != n:
            raise ConfigError("envelope and audit cover different samples")
        env_rhs = envelope.rhs
        env_margin = envelope.margin
    cols = (
        audit.times,
        audit.total,
        audit.kinetic,
        audit.elastic,
        audit.potential,
        audit.dissipation_cum,
        audit.work_cum,
        audit.boundary_cum,
        audit.residual,
        env_rhs,
        env_margin,
    )
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(AUDIT_COLUMNS) + "\n")
        for i in range(n):
            fh.write(",".join(repr(float(c[i])) for c in cols) + "\n")
