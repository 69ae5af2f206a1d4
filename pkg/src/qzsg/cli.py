"""
Command-line driver.

    qzsg gen-game KIND --out game.json [--payoff P] [--seed S] [--qubits Q]
    qzsg run   --config run.json [--figures] [--return-frac F]
    qzsg sweep --config sweep.json [--figures] [--return-frac F]

Exit status: 0 on success, 2 for invalid input, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, linalg
from .analysis import annotate, bounded_orbit_ratio, conservation_report, detect_recurrence, require_fully_mixed
from .config import (
    REPLICATOR_KEYS,
    RunConfig,
    RunManifest,
    jsonable,
    mmwu_config,
    parse_run_config,
    read_json,
    replicator_config,
    resolve_reference,
    write_json,
)
from .errors import NumericalError, ValidationError
from .game import (
    GameSpec,
    diagonal_game,
    exploitability,
    matching_pennies,
    multi_qubit_interior_game,
    unitary_game,
)
from .mmwu import find_nash, run_mmwu, vanishing_limit_probe
from .replicator import divergence_probe, integrate, random_canonical_state

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

GAME_KINDS = ("matching-pennies", "diagonal", "unitary", "multi-qubit")


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _write_rows(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def worker_count(n_jobs: int) -> int:
    raw = os.environ.get("QZSG_THREADS")
    if raw is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ValidationError(f"QZSG_THREADS must be a positive integer, got {raw!r}") from None
        if cap < 1:
            raise ValidationError(f"QZSG_THREADS must be a positive integer, got {raw!r}")
    return max(1, min(cap, n_jobs))


# -- game generation ---------------------------------------------------------------


def load_payoff(path) -> np.ndarray:
    """Real payoff matrix from JSON (a nested list, or an object with 'payoff') or CSV."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            data = read_json(path)
            p = np.asarray(data["payoff"] if isinstance(data, dict) else data, dtype=float)
        else:
            p = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"cannot read payoff matrix from {path}: {exc}") from exc
    if p.ndim != 2 or p.size == 0 or not np.all(np.isfinite(p)):
        raise ValidationError(f"{path}: payoff must be a finite non-empty 2-D matrix")
    return p


def build_game(kind: str, payoff=None, seed=None, qubits=None) -> GameSpec:
    if kind == "matching-pennies":
        return matching_pennies()
    if kind in ("diagonal", "unitary"):
        if payoff is None:
            raise ValidationError(f"'{kind}' games need a payoff matrix")
        p = np.asarray(payoff, dtype=float)
        if p.ndim != 2:
            raise ValidationError("payoff must be a 2-D matrix")
        if kind == "diagonal":
            return diagonal_game(p)
        if p.shape[0] != p.shape[1]:
            raise ValidationError(f"unitary embedding needs a square payoff matrix, got {p.shape}")
        if seed is None:
            raise ValidationError("'unitary' games need a seed")
        return unitary_game(p, int(seed))
    if kind == "multi-qubit":
        if qubits is None or seed is None:
            raise ValidationError("'multi-qubit' games need qubits and seed")
        return multi_qubit_interior_game(int(qubits), int(seed))
    raise ValidationError(f"unknown game kind {kind!r}; choose from {', '.join(GAME_KINDS)}")


def eigen_summary(spec: GameSpec) -> dict:
    g = spec.observable()
    w = g.spectrum
    vals, counts = np.unique(np.round(w, 9) + 0.0, return_counts=True)
    u = exploitability(g, linalg.maximally_mixed(g.dim_a), linalg.maximally_mixed(g.dim_b))
    return {
        "name": spec.name,
        "dims": [g.dim_a, g.dim_b],
        "eigenvalues": [float(x) for x in w],
        "distinct": [[float(v), int(c)] for v, c in zip(vals, counts)],
        "uniform_exploitability": float(u),
    }


def print_eigen_summary(s: dict, out=None) -> None:
    out = out or sys.stdout
    print(f"game {s['name']}: {s['dims'][0]}x{s['dims'][1]} players, observable {np.prod(s['dims'])}-dimensional", file=out)
    for v, c in s["distinct"]:
        print(f"  eigenvalue {v: .9f}  x{c}", file=out)
    print(f"  exploitability of the maximally mixed pair: {s['uniform_exploitability']:.3e}", file=out)


def write_game(spec: GameSpec, out: Path) -> Path:
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(out, spec.to_dict())
    GameSpec.from_dict(read_json(out))  # the written file must load back cleanly
    return out


# -- run modes -----------------------------------------------------------------------


def _split(params: dict, extra: set) -> tuple[dict, dict]:
    inner = {k: v for k, v in params.items() if k not in extra}
    outer = {k: v for k, v in params.items() if k in extra}
    return inner, outer


def _trajectory_outputs(cfg: RunConfig, traj, out: Path, return_frac: float) -> list[Path]:
    paths = [out / "trajectory.csv"]
    traj.to_csv(paths[0])
    if cfg.dump_states:
        paths.append(out / "states.jsonl")
        traj.dump_states(paths[-1])
    if cfg.figures:
        from .plotting import trajectory_figures

        paths.extend(trajectory_figures(traj, out, return_frac))
    return paths


def run_mode_mmwu(cfg: RunConfig, out: Path):
    g = cfg.game.observable()
    params, extra = _split(cfg.params, {"return_frac"})
    mcfg = mmwu_config(params)
    ref = resolve_reference(cfg, g)
    traj, cert = run_mmwu(g, mcfg)
    annotate(traj, ref)
    rf = float(extra.get("return_frac", 0.1))
    summary = {
        "mode": "mmwu",
        "horizon": mcfg.horizon(g.dim_a, g.dim_b),
        "certificate": cert.to_dict(),
        "exploitability": cert.exploitability,
    }
    if ref is not None:
        summary["conservation"] = conservation_report(traj, ref).to_dict()
    paths = _trajectory_outputs(cfg, traj, out, rf)
    return summary, paths, [mcfg.seed_rho0, mcfg.seed_sigma0]


def run_mode_replicator(cfg: RunConfig, out: Path):
    g = cfg.game.observable()
    params, extra = _split(cfg.params, {"return_frac"})
    rcfg = replicator_config(params)
    rf = float(extra.get("return_frac", 0.1))
    ref = resolve_reference(cfg, g)
    traj = integrate(g, rcfg, reference=ref)
    summary = {"mode": "replicator", "n_samples": len(traj), "final_t": float(traj.t[-1])}
    if ref is not None:
        summary["reference_exploitability"] = ref.exploitability
        summary["conservation"] = conservation_report(traj, ref).to_dict()
    if len(traj) >= 3:
        summary["recurrence"] = detect_recurrence(traj, rf).to_dict()
        summary["bounded_orbit_ratio"] = bounded_orbit_ratio(traj)
    paths = _trajectory_outputs(cfg, traj, out, rf)
    return summary, paths, [rcfg.seed_rho0, rcfg.seed_sigma0]


def run_mode_find_nash(cfg: RunConfig, out: Path):
    g = cfg.game.observable()
    p = dict(cfg.params)
    eps = float(p.pop("epsilon", 1e-3))
    max_iters = int(p.pop("max_iters", 200_000))
    if p:
        raise ValidationError(f"unknown find-nash parameters: {sorted(p)}")
    cert = find_nash(g, epsilon=eps, max_iters=max_iters)
    nash = out / "nash.json"
    write_json(nash, cert.to_dict())
    summary = {"mode": "find-nash", "certificate": cert.to_dict(), "converged": cert.exploitability <= eps}
    return summary, [nash], []


def sweep_seed(g, base: dict, seed: int, return_frac: float):
    rcfg = replicator_config({**base, "seed_rho0": 2 * seed, "seed_sigma0": 2 * seed + 1})
    traj = integrate(g, rcfg)
    return traj, detect_recurrence(traj, return_frac)


def run_mode_sweep(cfg: RunConfig, out: Path):
    g = cfg.game.observable()
    params, extra = _split(cfg.params, {"seeds", "return_frac"})
    if "seeds" not in extra:
        raise ValidationError("recurrence-sweep needs a 'seeds' list")
    seeds = extra["seeds"]
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ValidationError("'seeds' must be a non-empty list of non-negative integers (or a count)")
    if len(set(seeds)) != len(seeds):
        raise ValidationError("'seeds' must not repeat")
    bad = set(params) - (REPLICATOR_KEYS - {"seed_rho0", "seed_sigma0"})
    if bad:
        raise ValidationError(f"unknown recurrence-sweep parameters: {sorted(bad)}")
    replicator_config(params)  # validate before fanning out
    rf = float(extra.get("return_frac", 0.1))
    seeds = sorted(seeds)
    with ThreadPoolExecutor(max_workers=worker_count(len(seeds))) as pool:
        results = list(pool.map(lambda s: sweep_seed(g, params, s, rf), seeds))
    reports = [r for _, r in results]
    path = out / "sweep.csv"
    _write_rows(path, ["seed", "t_return", "max_excursion"], [[s, _fmt(r.t_return), _fmt(r.max_excursion)] for s, r in zip(seeds, reports)])
    recurred = sum(r.recurred for r in reports)
    summary = {
        "mode": "recurrence-sweep",
        "n_seeds": len(seeds),
        "n_recurred": recurred,
        "recurrence_fraction": recurred / len(seeds),
        "return_frac": rf,
        "reports": [{"seed": s, **r.to_dict()} for s, r in zip(seeds, reports)],
    }
    paths = [path]
    if cfg.figures:
        from .plotting import plot_frob_return, plot_sweep

        paths.append(plot_sweep(seeds, [r.t_return for r in reports], out / "sweep.png"))
        paths.append(plot_frob_return(results[0][0], out / f"frob_return_seed{seeds[0]}.png", rf))
    used = sorted({x for s in seeds for x in (2 * s, 2 * s + 1)})
    return summary, paths, used


def run_mode_probe_limit(cfg: RunConfig, out: Path):
    g = cfg.game.observable()
    p = dict(cfg.params)
    mus = p.pop("mus", [1e-1, 1e-2, 1e-3])
    steps = int(p.pop("steps", 200))
    seed = int(p.pop("seed", 0))
    if p:
        raise ValidationError(f"unknown probe-limit parameters: {sorted(p)}")
    if not isinstance(mus, list) or not mus:
        raise ValidationError("'mus' must be a non-empty list")
    ref = resolve_reference(cfg, g)
    if ref is not None:
        require_fully_mixed(ref)
    rows = vanishing_limit_probe(g, mus, steps, seed, reference=ref)
    path = out / "probe_limit.csv"
    _write_rows(path, ["mu", "max_abs_delta_s_over_mu"], [[_fmt(m), _fmt(r)] for m, r in rows])
    ratios = [b / a if a > 0 else None for (_, a), (_, b) in zip(rows, rows[1:])]
    summary = {
        "mode": "probe-limit",
        "steps": steps,
        "rows": [{"mu": m, "max_abs_delta_s_over_mu": r} for m, r in rows],
        "successive_ratios": ratios,
        "strictly_decreasing": all(b < a for (_, a), (_, b) in zip(rows, rows[1:])),
    }
    return summary, [path], [seed]


def run_mode_probe_divergence(cfg: RunConfig, out: Path):
    g = cfg.game.observable()
    p = dict(cfg.params)
    n_states = int(p.pop("n_states", 20))
    seed = int(p.pop("seed", 0))
    fd_step = float(p.pop("fd_step", 1e-5))
    if p:
        raise ValidationError(f"unknown probe-divergence parameters: {sorted(p)}")
    if n_states < 1 or not fd_step > 0:
        raise ValidationError("need n_states >= 1 and fd_step > 0")
    seeds = [seed + i for i in range(n_states)]
    divs = [divergence_probe(g, random_canonical_state(g, s), fd_step) for s in seeds]
    path = out / "divergence.csv"
    _write_rows(path, ["seed", "divergence"], [[s, _fmt(d)] for s, d in zip(seeds, divs)])
    summary = {"mode": "probe-divergence", "max_abs_divergence": float(np.max(np.abs(divs))), "fd_step": fd_step}
    return summary, [path], seeds


def run_mode_gen_game(cfg: RunConfig, out: Path):
    p = dict(cfg.params)
    kind = p.pop("kind", None)
    payoff = p.pop("payoff", None)
    if isinstance(payoff, str):
        payoff = load_payoff(cfg.resolve(payoff))
    target = p.pop("out", "game.json")
    seed, qubits = p.pop("seed", None), p.pop("qubits", None)
    if p:
        raise ValidationError(f"unknown gen-game parameters: {sorted(p)}")
    spec = build_game(kind, payoff, seed, qubits)
    target = Path(target)
    path = write_game(spec, target if target.is_absolute() else out / target)
    summary = {"mode": "gen-game", **eigen_summary(spec)}
    return summary, [path], [] if seed is None else [int(seed)]


MODE_RUNNERS = {
    "mmwu": run_mode_mmwu,
    "replicator": run_mode_replicator,
    "find-nash": run_mode_find_nash,
    "recurrence-sweep": run_mode_sweep,
    "probe-limit": run_mode_probe_limit,
    "probe-divergence": run_mode_probe_divergence,
    "gen-game": run_mode_gen_game,
}


def execute(cfg: RunConfig) -> dict:
    """Run one config and write summary.json and manifest.json next to the mode's artifacts."""
    t0 = time.perf_counter()
    out = cfg.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output_dir {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ValidationError(f"output_dir {out} is not writable")
    summary, paths, seeds = MODE_RUNNERS[cfg.mode](cfg, out)
    summary["config_hash"] = cfg.hash
    summary_path = out / "summary.json"
    write_json(summary_path, jsonable(summary))
    paths = list(paths) + [summary_path]
    manifest = RunManifest.create(cfg.hash, seeds, time.perf_counter() - t0, paths)
    write_json(out / "manifest.json", manifest.to_dict())
    return summary


def _load(args) -> RunConfig:
    path = Path(args.config)
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    raw = copy.deepcopy(raw)
    # command-line overrides become part of the hashed config
    if args.figures:
        raw["figures"] = True
    if args.return_frac is not None:
        if not 0 < args.return_frac < 1:
            raise ValidationError("--return-frac must lie in (0, 1)")
        mode = raw.get("mode")
        if isinstance(raw.get(mode), dict) and mode in ("mmwu", "replicator", "recurrence-sweep"):
            raw[mode]["return_frac"] = args.return_frac
    return parse_run_config(raw, path.parent)


# -- entry points ----------------------------------------------------------------------


def cmd_gen_game(args) -> int:
    payoff = load_payoff(args.payoff) if args.payoff else None
    spec = build_game(args.kind, payoff, args.seed, args.qubits)
    write_game(spec, Path(args.out))
    print_eigen_summary(eigen_summary(spec))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    summary = execute(cfg)
    print(f"{cfg.mode}: wrote {cfg.output_dir}")
    if "exploitability" in summary:
        print(f"  exploitability {summary['exploitability']:.3e}")
    if "conservation" in summary:
        print(f"  max entropy drift {summary['conservation']['max_drift']:.3e}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.mode != "recurrence-sweep":
        raise ValidationError(f"sweep needs a recurrence-sweep config, got mode {cfg.mode!r}")
    summary = execute(cfg)
    print(f"recurrence fraction {summary['recurrence_fraction']:.3f} over {summary['n_seeds']} seeds")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qzsg", description="Learning dynamics in zero-sum quantum games.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-game", help="write a game spec JSON")
    gen.add_argument("kind", choices=GAME_KINDS)
    gen.add_argument("--out", required=True, help="output game JSON")
    gen.add_argument("--payoff", help="payoff matrix file (.json or .csv) for diagonal/unitary games")
    gen.add_argument("--seed", type=int, help="seed for unitary or multi-qubit games")
    gen.add_argument("--qubits", type=int, help="qubits per player for multi-qubit games")
    gen.set_defaults(func=cmd_gen_game)

    for name, func, text in (("run", cmd_run, "run a config"), ("sweep", cmd_sweep, "run a recurrence sweep config")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True)
        p.add_argument("--figures", action="store_true", help="also render PNG figures")
        p.add_argument("--return-frac", type=float, default=None, help="return threshold as a fraction of the max excursion")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"qzsg: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        print(f"qzsg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"qzsg: I/O error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
