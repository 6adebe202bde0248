"""Command-line entry point: ``periodic-nsf <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import grid as grid_mod
from .config import ConfigError, RunConfig, load_config
from .integrator import NormSpec, advective_dt_limit, evolve, random_small_state
from .io import emit_timeseries, load_snapshot, save_snapshot
from .linear import spectral_bounds_scan
from .littlewood_paley import besov_norm, build_ladder
from .inequalities import check_inequalities
from .model import ForceMode, ForceSpec
from .periodic import cauchy_rate_report, linear_periodic_solution, poincare_iterate
from .stability import DecayExperiment, decay_experiment


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, default=float))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=float) + "\n")


def _parse_range(text: str, n: int, cast=float):
    parts = text.split(":")
    if len(parts) != n:
        raise argparse.ArgumentTypeError(f"expected {n} colon-separated values, got {text!r}")
    return [cast(p) for p in parts]


def _force(cfg: RunConfig) -> ForceSpec | None:
    return cfg.force.build() if cfg.force is not None else None


# ---------------------------------------------------------------------------
def cmd_spectrum(args, cfg: RunConfig):
    sc = cfg.spectrum
    r_min, r_max, count = (sc.r_min, sc.r_max, sc.count)
    if args.radii:
        r_min, r_max, count = _parse_range(args.radii, 3)
        count = int(count)
    radii = np.geomspace(r_min, r_max, count)
    params = cfg.params.build()
    bounds, lam, ratios = spectral_bounds_scan(params, radii, sc.band_factor, table=True)
    cols = ["k"] + [f"re{i}" for i in range(1, 5)] + [f"im{i}" for i in range(1, 5)] + [f"ratio{i}" for i in range(1, 5)]
    records = []
    for k, row, rat in zip(radii, lam, ratios):
        vals = [k, *row.real, *row.imag, *rat]
        records.append(dict(zip(cols, vals)))
    emit_timeseries(records, args.out_dir / "spectrum.csv", cols)
    _write_json(args.out_dir / "spectrum.json", bounds.as_dict())
    _emit(bounds.as_dict())


def cmd_evolve(args, cfg: RunConfig):
    ic = cfg.integrator
    g = cfg.grid.build()
    params = cfg.params.build()
    force = _force(cfg)
    t_end = ic.t_end if args.t_end is None else args.t_end
    dt = ic.dt if args.dt is None else args.dt
    cadence = ic.cadence if args.cadence is None else args.cadence
    linear_only = ic.linear_only or args.linear_only
    record = args.record or ic.record
    if ic.initial.snapshot:
        snap = load_snapshot(ic.initial.snapshot)
        if snap.grid != g:
            raise ConfigError("initial snapshot grid differs from the configured grid")
        U0 = g.forward(snap.data)
    else:
        U0 = random_small_state(g, params, ic.initial.amplitude, ic.initial.band, cfg.seed)
    if not linear_only:
        limit = advective_dt_limit(g, U0, params, force.T if force else None, ic.dt_max_factor)
        if dt > limit:
            raise ConfigError(f"integrator.dt: {dt} exceeds the advective limit {limit:.4g}")
    traj = evolve(g, U0, t_end, dt, params, force, cadence, [NormSpec.parse(r) for r in record], linear_only, ic.pin_mean)
    emit_timeseries(traj.records(), args.out_dir / "evolve.csv")
    save_snapshot(args.out_dir / "evolve_final.snap", g, g.inverse(traj.states[-1]), traj.times[-1])
    _emit({"t_end": traj.times[-1], "snapshots": len(traj.times)})


def cmd_find_periodic(args, cfg: RunConfig):
    pc = cfg.periodic
    g = cfg.grid.build()
    params = cfg.params.build()
    force = _force(cfg)
    if force is None:
        force = ForceSpec(T=1.0, eps=0.0, modes=(ForceMode((1, 0, 0), 1),))
    tol = pc.tol if args.tol is None else args.tol
    max_periods = pc.max_periods if args.max_periods is None else args.max_periods
    linear_only = pc.linear_only or args.linear_only
    sol = poincare_iterate(
        g,
        force,
        params,
        tol=tol,
        max_periods=max_periods,
        steps_per_period=pc.steps_per_period,
        linear_only=linear_only,
        pin_mean=pc.pin_mean,
        delta_cap=pc.delta_cap,
        stall_periods=pc.stall_periods,
    )
    out = {"residual": sol.residual, "n_periods": sol.n_periods, "converged": sol.converged}
    if sol.distances is not None and sol.distances.shape[0] >= 10:
        rep = cauchy_rate_report(sol)
        out.update({"C_fit": rep.C, "exponent_fit": rep.exponent})
    else:
        out.update({"C_fit": None, "exponent_fit": None})
    if linear_only:
        ref = linear_periodic_solution(g, force, params)
        from .periodic import acceptance_norm

        out["oracle_gap"] = acceptance_norm(g, sol.U_T0 - ref.U_T0)
    emit_timeseries([{"n": n + 1, "decrement": d} for n, d in enumerate(sol.history)], args.out_dir / "periodic_history.csv", ["n", "decrement"])
    save_snapshot(args.out_dir / "periodic_U_T0.snap", g, g.inverse(sol.U_T0), 0.0)
    _write_json(args.out_dir / "periodic.json", out)
    _emit(out)


def cmd_stability(args, cfg: RunConfig):
    sc = cfg.stability
    g = cfg.grid.build()
    params = cfg.params.build()
    force = _force(cfg)
    p = sc.p if args.p is None else args.p
    amplitude = sc.amplitude if args.amplitude is None else args.amplitude
    s_list = tuple(sc.s_list if args.s_list is None else [float(x) for x in args.s_list.split(",")])
    window = sc.window if args.window is None else tuple(_parse_range(args.window, 2))
    linear_only = sc.linear_only or args.linear_only
    base = None
    steps = int(round(force.T / sc.dt)) if force is not None else None
    if force is not None and not linear_only:
        base = poincare_iterate(
            g, force, params, tol=sc.base_tol, max_periods=sc.base_max_periods, steps_per_period=steps, keep_distances=False
        )
    exp = DecayExperiment(
        g,
        params,
        p=p,
        amplitude=amplitude,
        seed=cfg.seed,
        s_list=s_list,
        window=window,
        cutoff=sc.cutoff,
        linear_only=linear_only,
        base=base,
        force=force if base is not None else None,
        dt=sc.dt,
        samples=sc.samples,
        s_margin=sc.s_margin,
        tolerance=sc.tolerance,
    )
    res = decay_experiment(exp)
    cols = ["t"] + [f"H{s:g}" for s in s_list]
    recs = [dict(zip(cols, [t, *[res.norms[s][i] for s in s_list]])) for i, t in enumerate(res.times)]
    emit_timeseries(recs, args.out_dir / "stability.csv", cols)
    verdict = res.verdicts()
    _write_json(args.out_dir / "stability.json", verdict)
    _emit(verdict)


def cmd_besov(args, cfg: RunConfig):
    bc = cfg.besov
    snap = load_snapshot(args.snapshot)
    s = bc.s if args.s is None else args.s
    r = bc.r if args.r is None else args.r
    j_min, j_max = bc.j_min, bc.j_max
    if args.ladder_range:
        j_min, j_max = _parse_range(args.ladder_range, 2, int)
    ladder = build_ladder(snap.grid, j_min, j_max)
    norm, per_block = besov_norm(snap.grid.forward(snap.data), ladder, s, r, per_block=True)
    _emit({"norm": norm, "j_min": ladder.j_min, "j_max": ladder.j_max, "per_block": list(per_block)})


def cmd_check_inequalities(args, cfg: RunConfig):
    ic = cfg.inequalities
    n = ic.n_fields if args.n_fields is None else args.n_fields
    rep = check_inequalities(grid_mod.make_grid(2 * math.pi, ic.N), n, cfg.seed, tuple(ic.slopes), ic.doubling)
    out = rep.as_dict()
    out["stable"] = rep.stable() if ic.doubling else None
    _write_json(args.out_dir / "inequalities.json", out)
    _emit(out)


# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="periodic-nsf", description=__doc__)
    ap.add_argument("--config", type=Path, help="JSON or TOML run configuration")
    ap.add_argument("--seed", type=int, help="override the configured seed")
    ap.add_argument("--out-dir", type=Path, default=Path("."), help="directory for CSV/JSON/snapshot outputs")
    ap.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="dispersion scan and spectral bounds")
    sp.add_argument("--params", type=Path, help="config file used for the physical parameters")
    sp.add_argument("--radii", help="min:max:count (log-spaced)")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("evolve", help="integrate from a small random state or a snapshot")
    sp.add_argument("--t-end", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--cadence", type=int)
    sp.add_argument("--linear-only", action="store_true")
    sp.add_argument("--record", action="append", help="norm to record, e.g. s=1 or s=0.5,r=1 (repeatable)")
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("find-periodic", help="iterate the period map from rest")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-periods", type=int)
    sp.add_argument("--linear-only", action="store_true")
    sp.set_defaults(func=cmd_find_periodic)

    sp = sub.add_parser("stability", help="decay of a perturbation around the periodic orbit")
    sp.add_argument("--p", type=float)
    sp.add_argument("--amplitude", type=float)
    sp.add_argument("--s-list", help="comma-separated norm indices")
    sp.add_argument("--window", help="t1:t2")
    sp.add_argument("--linear-only", action="store_true")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("besov", help="Besov norm of a snapshot")
    sp.add_argument("snapshot", type=Path)
    sp.add_argument("--s", type=float)
    sp.add_argument("--r", type=float)
    sp.add_argument("--ladder-range", help="j_min:j_max")
    sp.set_defaults(func=cmd_besov)

    sp = sub.add_parser("check-inequalities", help="inequality ratio corpus")
    sp.add_argument("--n-fields", type=int)
    sp.set_defaults(func=cmd_check_inequalities)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        path = getattr(args, "params", None) or args.config
        cfg = load_config(path) if path else RunConfig()
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        grid_mod.set_threads(args.threads)
        args.out_dir.mkdir(parents=True, exist_ok=True)
        args.func(args, cfg)
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
