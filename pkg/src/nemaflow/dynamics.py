"""Semi-implicit time stepping for the coupled flow-director system.

The model couples an incompressible velocity u with a three-component
director d on a no-slip box:

    u_t + div(u x u) = div(nu (grad u + grad u^T)) - div(grad d . grad d)
                       - div(alpha q x d - (1 - alpha) d x q) + h,
    d_t + (u . grad) d - alpha (d . grad) u + (1 - alpha) (d . grad^T) u = q,
    q = lap d - grad W(d),      div u = 0,

with the shape parameter alpha in [0, 1]; alpha = 1/2 makes the director
transport purely co-rotational.  In two dimensions the director keeps all
three components while u has two ("2.5D"): the out-of-plane director sees
no stretching but still stores elastic and potential energy.

One step advances in three stages:

1. director: explicit transport, stretching, and potential force, implicit
   elastic diffusion.  With a Dirichlet boundary the wall value at the new
   time is lifted into the right-hand side, so the implicit operator stays
   the homogeneous transform solve.  An optional stabilization shift
   ``s (d_new - d_old)`` allows larger potential forces per step.
2. velocity: explicit advection and elastic/stretching stress divergence
   using the fresh director, implicit viscosity.  Since div u = 0, the
   symmetric viscous stress reduces to nu lap u.
3. forcing and pressure: add dt h and project onto discrete divergence-free
   fields.

The explicit terms demand the usual step bounds dt <= 0.5 h / max|u| and
dt <= 0.25 h^2 (the coupling stresses carry second differences of d);
violations raise instead of silently corrupting the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CflViolationError,
    ConfigError,
    NonFiniteError,
    ShapeError,
    StepAborted,
)
from .fields import (
    NEUMANN,
    BoundarySpec,
    DirectorField,
    Grid,
    State,
    VelocityField,
    interp_face_to_center,
)
from .operators import director_laplacian, grad_director, laplacian_spec, leray_project, velocity_helmholtz
from .potential import Potential, double_well

ADVECTIVE_CFL = 0.5
DIFFUSIVE_CFL = 0.25


def _sl(nd: int, axis: int, s: slice) -> tuple:
    idx = [slice(None)] * nd
    idx[axis] = s
    return tuple(idx)


# ---------------------------------------------------------------------------
# forcing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForcingSignal:
    """Time-dependent body force sampled as a face field.

    Samples are restricted to the no-penetration class (wall-normal faces
    zero); a normal component at the wall would be annihilated by the
    projection anyway.  ``shifted`` composes time translations, which is
    how translated trajectories carry their forcing with them.
    """

    fn: callable
    label: str = "custom"

    def __call__(self, grid: Grid, t: float) -> VelocityField:
        out = self.fn(grid, t)
        if out.grid is not grid and out.grid != grid:
            raise ShapeError("forcing sampled on a different grid")
        return out.zero_wall_normal()

    def shifted(self, tau: float) -> "ForcingSignal":
        if tau == 0.0:
            return self
        fn = self.fn
        return ForcingSignal(lambda grid, t: fn(grid, t + tau), f"{self.label}@+{tau:g}")


def zero_forcing() -> ForcingSignal:
    return ForcingSignal(lambda grid, t: VelocityField.zeros(grid), "zero")


def constant_forcing(vec) -> ForcingSignal:
    vec = tuple(float(v) for v in vec)

    def fn(grid: Grid, t: float) -> VelocityField:
        if len(vec) != grid.dim:
            raise ShapeError(f"forcing vector has {len(vec)} comps on a {grid.dim}d grid")
        return VelocityField(
            grid, [np.full(grid.face_shape(a), vec[a]) for a in range(grid.dim)]
        )

    return ForcingSignal(fn, "constant(" + ",".join(f"{v:g}" for v in vec) + ")")


def periodic_forcing(vec, omega: float, phase: float = 0.0) -> ForcingSignal:
    base = constant_forcing(vec)
    omega, phase = float(omega), float(phase)

    def fn(grid: Grid, t: float) -> VelocityField:
        return base.fn(grid, t).scaled(np.cos(omega * t + phase))

    label = "periodic(" + ",".join(f"{v:g}" for v in (omega, *vec)) + ")"
    if phase != 0.0:
        label += f"@phase={phase:g}"
    return ForcingSignal(fn, label)


def vortex_forcing(amplitude: float, omega: float = 0.0, phase: float = 0.0) -> ForcingSignal:
    """Single-cell rotational force amp cos(omega t + phase) curl psi.

    The streamfunction profile sin(pi x / L0) sin(pi y / L1) vanishes on the
    walls, so the sample is discretely divergence-free with zero normal
    flux; the projection leaves it untouched and all of it does work.
    Two-dimensional grids only.
    """
    amplitude, omega, phase = float(amplitude), float(omega), float(phase)

    def fn(grid: Grid, t: float) -> VelocityField:
        if grid.dim != 2:
            raise ConfigError("vortex forcing needs a two-dimensional grid")
        fx = grid.faces(0) / grid.length[0]
        fy = grid.faces(1) / grid.length[1]
        psi = amplitude * np.sin(np.pi * fx)[:, None] * np.sin(np.pi * fy)[None, :]
        u = VelocityField.from_streamfunction(grid, psi)
        if omega == 0.0 and phase == 0.0:
            return u
        return u.scaled(np.cos(omega * t + phase))

    return ForcingSignal(fn, f"vortex({amplitude:g},{omega:g},{phase:g})")


def tabulated_forcing(times, fields: list[VelocityField]) -> ForcingSignal:
    """Piecewise-linear interpolation through sampled force fields,
    clamped outside the table."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) != len(fields) or len(times) == 0:
        raise ConfigError("need matching nonempty times and fields")
    if len(times) > 1 and np.any(np.diff(times) <= 0):
        raise ConfigError("forcing times must increase strictly")

    def fn(grid: Grid, t: float) -> VelocityField:
        if fields[0].grid != grid:
            raise ShapeError("tabulated forcing lives on a different grid")
        if t <= times[0] or len(times) == 1:
            return fields[0].copy()
        if t >= times[-1]:
            return fields[-1].copy()
        k = int(np.searchsorted(times, t, side="right")) - 1
        th = (t - times[k]) / (times[k + 1] - times[k])
        return fields[k].scaled(1.0 - th).plus(fields[k + 1], th)

    return ForcingSignal(fn, f"tabulated[{len(times)}]")


# ---------------------------------------------------------------------------
# model parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical parameters of one model configuration.

    ``director_source`` is a manufactured-solution hook: a callable
    ``(grid, t) -> (*shape, 3)`` added to the director equation.  The
    physical model has no such term; it exists so convergence studies can
    impose an exact solution.
    """

    nu: float = 1.0
    alpha: float = 0.5
    potential: Potential = field(default_factory=double_well)
    bc: BoundarySpec = NEUMANN
    forcing: ForcingSignal = field(default_factory=zero_forcing)
    stabilization: float = 0.0
    director_source: callable | None = None

    def __post_init__(self):
        if self.nu <= 0:
            raise ConfigError(f"viscosity must be positive, got {self.nu}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigError(f"shape parameter must sit in [0, 1], got {self.alpha}")
        if self.stabilization < 0:
            raise ConfigError("stabilization shift cannot be negative")

    def shifted(self, tau: float) -> "ModelParams":
        """Parameters seen by the time-translated trajectory."""
        return replace(self, bc=self.bc.shifted(tau), forcing=self.forcing.shifted(tau))


# ---------------------------------------------------------------------------
# spatial terms
# ---------------------------------------------------------------------------


def _center_derivative_zero_wall(c: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Central derivative of cell data that vanishes at the walls.

    The ghost value -2 c0 + c1 / 3 is the quadratic extrapolation through a
    zero wall value, keeping the boundary derivative second order.
    """
    nd = c.ndim
    first = c[_sl(nd, axis, slice(0, 1))]
    second = c[_sl(nd, axis, slice(1, 2))]
    last = c[_sl(nd, axis, slice(-1, None))]
    prev = c[_sl(nd, axis, slice(-2, -1))]
    pad = np.concatenate(
        [-2.0 * first + second / 3.0, c, -2.0 * last + prev / 3.0], axis=axis
    )
    return (pad[_sl(nd, axis, slice(2, None))] - pad[_sl(nd, axis, slice(None, -2))]) / (2.0 * h)


def _cell_derivative(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order derivative along a cell axis, one-sided at the ends."""
    nd = a.ndim
    out = np.empty_like(a)
    out[_sl(nd, axis, slice(1, -1))] = (
        a[_sl(nd, axis, slice(2, None))] - a[_sl(nd, axis, slice(None, -2))]
    ) / (2.0 * h)
    out[_sl(nd, axis, slice(0, 1))] = (
        -3.0 * a[_sl(nd, axis, slice(0, 1))]
        + 4.0 * a[_sl(nd, axis, slice(1, 2))]
        - a[_sl(nd, axis, slice(2, 3))]
    ) / (2.0 * h)
    out[_sl(nd, axis, slice(-1, None))] = (
        3.0 * a[_sl(nd, axis, slice(-1, None))]
        - 4.0 * a[_sl(nd, axis, slice(-2, -1))]
        + a[_sl(nd, axis, slice(-3, -2))]
    ) / (2.0 * h)
    return out


def center_velocity_gradient(u: VelocityField) -> np.ndarray:
    """Velocity gradient G[..., i, j] = d_j u_i at cell centers.

    Diagonal entries are exact face differences; off-diagonal entries
    interpolate the component to centers and differentiate with the no-slip
    quadratic ghost, all second order including the wall cells.
    """
    grid = u.grid
    dim = grid.dim
    G = np.zeros(grid.shape + (dim, dim))
    for i in range(dim):
        ui = u.comps[i]
        nd = ui.ndim
        G[..., i, i] = (
            ui[_sl(nd, i, slice(1, None))] - ui[_sl(nd, i, slice(None, -1))]
        ) / grid.h[i]
        uc = 0.5 * (ui[_sl(nd, i, slice(1, None))] + ui[_sl(nd, i, slice(None, -1))])
        for j in range(dim):
            if j != i:
                G[..., i, j] = _center_derivative_zero_wall(uc, grid.h[j], j)
    return G


def director_stretch(d_center: np.ndarray, G: np.ndarray, alpha: float) -> np.ndarray:
    """alpha (d . grad) u - (1 - alpha) (d . grad^T) u as 3-component data."""
    dim = G.shape[-1]
    ds = d_center[..., :dim]
    out = np.zeros(d_center.shape)
    out[..., :dim] = alpha * np.einsum("...ij,...j->...i", G, ds) - (
        1.0 - alpha
    ) * np.einsum("...ji,...j->...i", G, ds)
    return out


def chemical_force(d: DirectorField, potential: Potential, bc: BoundarySpec = NEUMANN, t: float = 0.0) -> np.ndarray:
    """q = lap d - grad W(d) as stacked cell data."""
    return director_laplacian(d, bc, t) - potential.grad(d.stack())


def director_rhs(state: State, params: ModelParams) -> np.ndarray:
    """Full director tendency q - transport + stretching at the state's time."""
    grad_d = grad_director(state.d, params.bc, state.t)
    uc = interp_face_to_center(state.u)
    advection = np.einsum("...k,...ik->...i", uc, grad_d)
    G = center_velocity_gradient(state.u)
    stretch = director_stretch(state.d.stack(), G, params.alpha)
    q = chemical_force(state.d, params.potential, params.bc, state.t)
    out = q - advection + stretch
    if params.director_source is not None:
        out = out + params.director_source(state.grid, state.t)
    return out


def mac_advection(u: VelocityField) -> VelocityField:
    """div(u x u) on faces in conservative form.

    Same-axis fluxes live at cell centers, cross fluxes at cell corners
    where the no-slip wall value closes the stencil; wall-normal entries of
    the result are pinned to zero like the velocity itself.
    """
    grid = u.grid
    dim = grid.dim
    comps = []
    for i in range(dim):
        ui = u.comps[i]
        nd = ui.ndim
        acc = np.zeros_like(ui)
        ci = 0.5 * (ui[_sl(nd, i, slice(1, None))] + ui[_sl(nd, i, slice(None, -1))])
        flux = ci * ci
        acc[_sl(nd, i, slice(1, -1))] += (
            flux[_sl(nd, i, slice(1, None))] - flux[_sl(nd, i, slice(None, -1))]
        ) / grid.h[i]
        for j in range(dim):
            if j == i:
                continue
            uj = u.comps[j]
            corner_shape = list(ui.shape)
            corner_shape[j] += 1
            ui_c = np.zeros(corner_shape)
            ui_c[_sl(nd, j, slice(1, -1))] = 0.5 * (
                ui[_sl(nd, j, slice(1, None))] + ui[_sl(nd, j, slice(None, -1))]
            )
            uj_c = np.zeros(corner_shape)
            uj_c[_sl(nd, i, slice(1, -1))] = 0.5 * (
                uj[_sl(nd, i, slice(1, None))] + uj[_sl(nd, i, slice(None, -1))]
            )
            flux = ui_c * uj_c
            acc += (
                flux[_sl(nd, j, slice(1, None))] - flux[_sl(nd, j, slice(None, -1))]
            ) / grid.h[j]
        comps.append(acc)
    return VelocityField(grid, comps).zero_wall_normal()


def elastic_stress(d: DirectorField, q: np.ndarray, alpha: float, bc: BoundarySpec = NEUMANN, t: float = 0.0) -> np.ndarray:
    """Cell tensor grad d . grad d + alpha q x d - (1 - alpha) d x q.

    Only the spatial block enters the velocity equation; the out-of-plane
    director component contributes through the elastic part alone.
    """
    grid = d.grid
    dim = grid.dim
    grad_d = grad_director(d, bc, t)
    sig = np.einsum("...ci,...cj->...ij", grad_d, grad_d)
    ds = d.stack()[..., :dim]
    qs = q[..., :dim]
    sig += alpha * np.einsum("...i,...j->...ij", qs, ds)
    sig -= (1.0 - alpha) * np.einsum("...i,...j->...ij", ds, qs)
    return sig


def stress_divergence(sigma: np.ndarray, grid: Grid) -> VelocityField:
    """Face-valued divergence of a cell tensor; row i lands on i-faces.

    Same-axis entries difference across the face; cross entries average to
    the face and differentiate along the cell axis, one-sided at the walls.
    Wall faces stay zero, matching the pinned velocity layers.
    """
    if sigma.shape != grid.shape + (grid.dim, grid.dim):
        raise ShapeError(f"stress shape {sigma.shape} does not match grid {grid.shape}")
    comps = []
    for i in range(grid.dim):
        out = np.zeros(grid.face_shape(i))
        nd = out.ndim
        s_ii = sigma[..., i, i]
        out[_sl(nd, i, slice(1, -1))] += (
            s_ii[_sl(nd, i, slice(1, None))] - s_ii[_sl(nd, i, slice(None, -1))]
        ) / grid.h[i]
        for j in range(grid.dim):
            if j == i:
                continue
            s_ij = sigma[..., i, j]
            face = 0.5 * (
                s_ij[_sl(nd, i, slice(1, None))] + s_ij[_sl(nd, i, slice(None, -1))]
            )
            out[_sl(nd, i, slice(1, -1))] += _cell_derivative(face, grid.h[j], j)
        comps.append(out)
    return VelocityField(grid, comps)


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepReport:
    """Diagnostics of one accepted step."""

    t: float
    dt: float
    max_u: float
    max_d: float
    cfl_advective: float
    cfl_diffusive: float


def cfl_limits(u: VelocityField) -> tuple[float, float]:
    """(advective, diffusive) step bounds for the current velocity."""
    h = u.grid.h_min
    vmax = u.max_abs()
    adv = ADVECTIVE_CFL * h / vmax if vmax > 0 else np.inf
    return adv, DIFFUSIVE_CFL * h * h


def _implicit_director_solve(
    rhs: np.ndarray, dt: float, grid: Grid, bc: BoundarySpec, t_new: float, shift: float
) -> np.ndarray:
    if bc.kind == "neumann":
        spec = laplacian_spec(grid, "neumann")
    else:
        spec = laplacian_spec(grid, "dirichlet0")
        rhs = rhs.copy()
        g = bc.g(t_new)
        nd = rhs.ndim
        for axis in range(grid.dim):
            lift = dt * 2.0 * g / grid.h[axis] ** 2
            rhs[_sl(nd, axis, slice(0, 1))] += lift
            rhs[_sl(nd, axis, slice(-1, None))] += lift
    out = np.empty_like(rhs)
    for c in range(3):
        out[..., c] = spec.shifted_helmholtz(rhs[..., c], dt, shift)
    return out


def step(state: State, params: ModelParams, dt: float, check_cfl: bool = True) -> tuple[State, StepReport]:
    """Advance one step of size dt; see the module docstring for the scheme."""
    if dt <= 0:
        raise ConfigError(f"step size must be positive, got {dt}")
    grid = state.grid
    adv_limit, diff_limit = cfl_limits(state.u)
    if check_cfl:
        if dt > diff_limit:
            raise CflViolationError("diffusive", dt, diff_limit)
        if dt > adv_limit:
            raise CflViolationError("advective", dt, adv_limit)

    t_new = state.t + dt
    d_old = state.d.stack()
    tendency = director_rhs(state, params)
    # the implicit solve replaces the explicit lap d inside the tendency
    explicit = tendency - director_laplacian(state.d, params.bc, state.t)
    rhs = d_old + dt * explicit + params.stabilization * dt * d_old
    d_new_stack = _implicit_director_solve(
        rhs, dt, grid, params.bc, t_new, params.stabilization * dt
    )
    d_new = DirectorField.from_stack(grid, d_new_stack)

    q_new = director_laplacian(d_new, params.bc, t_new) - params.potential.grad(d_old)
    sigma = elastic_stress(d_new, q_new, params.alpha, params.bc, t_new)
    force = stress_divergence(sigma, grid)
    rhs_u = state.u.plus(mac_advection(state.u), -dt).plus(force, -dt)
    u_star = velocity_helmholtz(rhs_u, params.nu * dt)
    h_field = params.forcing(grid, t_new)
    u_new = leray_project(u_star.plus(h_field, dt))

    max_u = u_new.max_abs()
    max_d = d_new.max_abs()
    if not (np.isfinite(max_u) and np.isfinite(max_d)):
        raise NonFiniteError("state lost finiteness", "step", t_new)
    report = StepReport(
        t=t_new,
        dt=dt,
        max_u=max_u,
        max_d=max_d,
        cfl_advective=dt / adv_limit if np.isfinite(adv_limit) else 0.0,
        cfl_diffusive=dt / diff_limit,
    )
    return State(u_new, d_new, t_new), report


def run(
    state: State,
    params: ModelParams,
    dt: float,
    n_steps: int,
    sample_every: int = 1,
    check_cfl: bool = True,
    callback=None,
) -> list[State]:
    """March n_steps, collecting every sample_every-th state.

    The returned list starts with the initial state and always contains the
    final one.  Sample times are reconstructed as t0 + k dt so they sit on
    an exact arithmetic lattice.  On failure the partial sample list rides
    along in the raised error.
    """
    if n_steps < 0:
        raise ConfigError("step count cannot be negative")
    if sample_every < 1:
        raise ConfigError("sampling stride must be at least 1")
    t0 = state.t
    samples = [state.copy()]
    current = state
    for k in range(1, n_steps + 1):
        try:
            current, report = step(current, params, dt, check_cfl=check_cfl)
        except Exception as exc:
            raise StepAborted(exc, samples, k) from exc
        current = State(current.u, current.d, t0 + k * dt)
        if callback is not None:
            callback(current, report)
        if k % sample_every == 0 or k == n_steps:
            samples.append(current.copy())
    return samples
