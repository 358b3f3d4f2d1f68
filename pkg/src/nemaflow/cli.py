"""Batch front end: configure runs, execute experiments, emit CSV diagnostics.

Subcommands
-----------
simulate         march the model, write a snapshot archive and energy-audit CSV
check-potential  evaluate the W1 / W2 / W3 / W1* assumptions for a named potential
audit            recompute the energy audit for an existing archive
decay-fit        fit an exponential decay rate to an archived energy history
attract          run an ensemble and chart its distance to a late-tail reference
convergence      repeat a run under time step refinement, tabulate audit residuals

Configuration is plain ``key=value`` text (one per line, ``#`` comments),
optionally overridden by ``key=value`` tokens on the command line.  All CSV
output writes floats through ``repr`` so identical configs produce
byte-identical files.

Exit codes: 0 success, 1 configuration error, 2 solver failure,
3 assumption or criterion failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import (
    RunConfig,
    build_grid,
    build_model,
    initial_state,
    parse_kv_file,
    parse_kv_pairs,
)
from .dynamics import run
from .energy import (
    audit_energy,
    decay_rate,
    dissipative_envelope,
    energy,
    fit_decay_rate,
    write_audit_csv,
)
from .errors import (
    CflViolationError,
    ConfigError,
    InfeasibleError,
    NonFiniteError,
    SolverConvergenceError,
    StepAborted,
)
from .operators import stokes_lambda1
from .potential import check_assumption, estimate_prelim_constants, parse_potential
from .trajectory import (
    Trajectory,
    attraction_curve,
    load_trajectory,
    save_archive,
    translate,
)

_ASSUMPTIONS = ("W1", "W2", "W3", "W1*")


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------


def _gather_mapping(args) -> dict[str, str]:
    mapping: dict[str, str] = {}
    if args.config:
        mapping.update(parse_kv_file(args.config))
    mapping.update(parse_kv_pairs(args.overrides))
    if args.seed is not None:
        mapping["seed"] = str(args.seed)
    return mapping


def _pop_extras(mapping: dict[str, str], spec: dict) -> dict:
    """Split experiment-specific keys off before RunConfig sees the rest."""
    out = {}
    for key, (convert, default) in spec.items():
        if key in mapping:
            raw = mapping.pop(key)
            try:
                out[key] = convert(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
        else:
            out[key] = default
    return out


def _write_csv(path, header: tuple[str, ...], rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _march(cfg: RunConfig, seed: int | None = None):
    """Run one simulation described by cfg; returns (grid, params, samples)."""
    grid = build_grid(cfg)
    params = build_model(cfg)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    state = initial_state(cfg.initial, grid, rng)
    steps = cfg.n_steps()
    if steps % cfg.sample_every:
        raise ConfigError(
            f"step count {steps} is not a multiple of sample_every {cfg.sample_every}"
        )
    samples = run(state, params, cfg.dt, steps, sample_every=cfg.sample_every)
    return grid, params, samples


def _audit_with_envelope(traj: Trajectory, want_envelope: bool):
    """Energy audit plus, on request, the decay envelope from measured constants."""
    audit = audit_energy(traj)
    if not want_envelope:
        return audit, None
    grid = traj.grid
    fields = [s.d for s in traj.samples[:: max(1, (len(traj.samples) - 1) // 7)]]
    kappa, eta, ell = estimate_prelim_constants(traj.params.potential, grid, fields)
    k = decay_rate(kappa, eta, traj.params.nu, stokes_lambda1(grid).lambda1)
    return audit, dissipative_envelope(traj, k, ell)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    mapping = _gather_mapping(args)
    extras = _pop_extras(mapping, {"envelope": (int, 0)})
    cfg = RunConfig.from_mapping(mapping)
    params = build_model(cfg)
    archive_dir = os.path.join(args.out, "archive")
    delta = cfg.dt * cfg.sample_every
    try:
        _, params, samples = _march(cfg)
    except StepAborted as exc:
        # flag the partial archive so downstream tools refuse to trust it
        save_archive(exc.partial, params, delta, archive_dir, dt=cfg.dt,
                     forcing_spec=cfg.forcing, bc_spec=cfg.bc)
        with open(os.path.join(archive_dir, "ABORTED.txt"), "w", encoding="utf-8") as fh:
            fh.write(f"aborted at step {exc.step_index}: {exc.cause}\n")
        print(f"solver failure at step {exc.step_index}: {exc.cause}", file=sys.stderr)
        return 2
    save_archive(samples, params, delta, archive_dir, dt=cfg.dt,
                 forcing_spec=cfg.forcing, bc_spec=cfg.bc)
    if len(samples) >= 2:
        traj = Trajectory(samples, params, dt=cfg.dt)
        audit, envelope = _audit_with_envelope(traj, bool(extras["envelope"]))
        write_audit_csv(os.path.join(args.out, "audit.csv"), audit, envelope)
        print(f"steps={cfg.n_steps()} samples={len(samples)} "
              f"max_window_residual={audit.max_window_residual:.3e}")
    else:
        print("zero-horizon run: archived initial snapshot only")
    return 0


def cmd_check_potential(args) -> int:
    mapping = _gather_mapping(args)
    extras = _pop_extras(mapping, {
        "assumptions": (str, ",".join(_ASSUMPTIONS)),
        "radius": (float, 3.0),
        "count": (int, 2048),
        "skip": (int, 0),
    })
    cfg = RunConfig.from_mapping(mapping)
    potential = parse_potential(cfg.potential)
    wanted = [a.strip() for a in extras["assumptions"].split(",") if a.strip()]
    for a in wanted:
        if a not in _ASSUMPTIONS:
            raise ConfigError(f"unknown assumption {a!r}")
    all_passed = True
    print(f"potential: {potential.name}")
    print(f"{'assumption':<12} {'result':<6} constants")
    for a in wanted:
        report = check_assumption(
            potential, a, radius=extras["radius"],
            count=extras["count"], skip=extras["skip"],
        )
        all_passed &= report.passed
        consts = " ".join(f"{k}={v:.6g}" for k, v in report.constants.items())
        line = f"{a:<12} {'pass' if report.passed else 'FAIL':<6} {consts}"
        if report.notes:
            line += f"  # {report.notes}"
        print(line)
    return 0 if all_passed else 3


def cmd_audit(args) -> int:
    mapping = _gather_mapping(args)
    extras = _pop_extras(mapping, {
        "archive": (str, ""),
        "residual_tol": (float, 0.0),
        "envelope": (int, 0),
    })
    if not extras["archive"]:
        raise ConfigError("audit needs archive=<directory>")
    traj = load_trajectory(extras["archive"])
    audit, envelope = _audit_with_envelope(traj, bool(extras["envelope"]))
    write_audit_csv(os.path.join(args.out, "audit.csv"), audit, envelope)
    worst = audit.max_window_residual
    print(f"samples={len(traj)} max_window_residual={worst:.3e}")
    if extras["residual_tol"] > 0 and worst > extras["residual_tol"]:
        print(f"check failed: residual {worst:.3e} exceeds "
              f"tolerance {extras['residual_tol']:.3e}", file=sys.stderr)
        return 3
    return 0


def cmd_decay_fit(args) -> int:
    mapping = _gather_mapping(args)
    extras = _pop_extras(mapping, {
        "archive": (str, ""),
        "e_inf": (float, np.nan),
        "t_start": (float, np.nan),
    })
    if not extras["archive"]:
        raise ConfigError("decay-fit needs archive=<directory>")
    traj = load_trajectory(extras["archive"])
    totals = np.array([
        energy(s, traj.params.potential, traj.params.bc).total for s in traj.samples
    ])
    e_inf = extras["e_inf"]
    if np.isnan(e_inf):
        e_inf = totals[-1]
    t_start = None if np.isnan(extras["t_start"]) else extras["t_start"]
    k = fit_decay_rate(traj.times, totals, e_inf=e_inf, t_start=t_start)
    _write_csv(
        os.path.join(args.out, "decay_fit.csv"),
        ("k", "e_inf", "t_start", "samples"),
        [(k, e_inf, traj.times[0] if t_start is None else t_start, len(traj))],
    )
    print(f"k={k!r} e_inf={e_inf!r}")
    return 0


def cmd_attract(args) -> int:
    mapping = _gather_mapping(args)
    extras = _pop_extras(mapping, {
        "members": (int, 8),
        "window": (float, 1.0),
        "delta1": (float, 0.25),
        "delta2": (float, 0.25),
        "lp": (float, 0.0),
        "tail_start": (float, np.nan),
        "eval_end": (float, np.nan),
    })
    cfg = RunConfig.from_mapping(mapping)
    if extras["members"] < 1:
        raise ConfigError("members must be at least 1")
    delta = cfg.dt * cfg.sample_every
    window = extras["window"]
    horizon = cfg.t_final
    wsteps = round(window / delta)
    if wsteps < 1 or abs(wsteps * delta - window) > 1e-9 * window:
        raise ConfigError(f"window {window} is not a multiple of the sample spacing {delta}")
    tail_start = extras["tail_start"]
    if np.isnan(tail_start):
        tail_start = horizon - 2.0 * window
    eval_end = extras["eval_end"]
    if np.isnan(eval_end):
        eval_end = tail_start - delta
    if tail_start < 0 or tail_start > horizon - window or eval_end < 0:
        raise ConfigError(
            f"insufficient horizon: t_final={horizon} window={window} "
            f"tail_start={tail_start} eval_end={eval_end}"
        )

    def member(i: int):
        _, params, samples = _march(cfg, seed=cfg.seed + i)
        return Trajectory(samples, params, dt=cfg.dt)

    indices = range(extras["members"])
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            ensemble = list(pool.map(member, indices))
    else:
        ensemble = [member(i) for i in indices]

    # the reference is every window of the ensemble's late tail
    tail_lo = round(tail_start / delta)
    tail_hi = round((horizon - window) / delta)
    reference = [
        translate(traj, j * delta)
        for traj in ensemble
        for j in range(tail_lo, tail_hi + 1)
    ]
    times = [j * delta for j in range(int(np.floor(eval_end / delta + 1e-9)) + 1)]
    s = extras["lp"] if extras["lp"] > 0 else None
    curve = attraction_curve(
        ensemble, reference, times, window=window,
        delta1=extras["delta1"], delta2=extras["delta2"], s=s,
    )
    _write_csv(os.path.join(args.out, "attract.csv"), ("t", "dist"), zip(times, curve))
    print(f"members={extras['members']} initial={float(curve[0])!r} final={float(curve[-1])!r}")
    return 0


def cmd_convergence(args) -> int:
    mapping = _gather_mapping(args)
    extras = _pop_extras(mapping, {"levels": (int, 2)})
    if extras["levels"] < 1:
        raise ConfigError("levels must be at least 1")
    base = RunConfig.from_mapping(mapping)
    rows = []
    for level in range(extras["levels"]):
        cfg = RunConfig.from_mapping(
            dict(mapping, dt=str(base.dt / 2**level))
        )
        _, params, samples = _march(cfg)
        audit = audit_energy(Trajectory(samples, params, dt=cfg.dt))
        rows.append((cfg.dt, audit.max_window_residual))
        line = f"dt={cfg.dt!r} residual_max={audit.max_window_residual!r}"
        if level:
            line += f" ratio={rows[-2][1] / rows[-1][1]:.3f}"
        print(line)
    _write_csv(os.path.join(args.out, "convergence.csv"), ("dt", "residual_max"), rows)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are configuration errors
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key=value config file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("overrides", nargs="*", metavar="key=value",
                        help="config overrides applied after the file")

    parser = _Parser(prog="nemaflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, blurb in (
        ("simulate", cmd_simulate, "run the model, archive snapshots, audit the energy"),
        ("check-potential", cmd_check_potential, "test structural assumptions on a potential"),
        ("audit", cmd_audit, "recompute the energy audit for an archive"),
        ("decay-fit", cmd_decay_fit, "fit a decay rate to an archived energy history"),
        ("attract", cmd_attract, "ensemble attraction curve against a late-tail reference"),
        ("convergence", cmd_convergence, "audit residuals under time step refinement"),
    ):
        p = sub.add_parser(name, parents=[common], help=blurb, description=blurb)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except StepAborted as exc:
        print(f"solver failure at step {exc.step_index}: {exc.cause}", file=sys.stderr)
        return 2
    except (CflViolationError, NonFiniteError, SolverConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
