"""
JSON run configurations, reference resolution and the run manifest.

A run config names a game, a ``mode`` and exactly one parameter block keyed by
that mode::

    {
      "game": "games/mp.json",
      "mode": "replicator",
      "replicator": {"t_end": 100, "step_h": 0.001, "seed_rho0": 0, "seed_sigma0": 1},
      "reference": {"analytic": "uniform"},
      "output_dir": "out/mp"
    }

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__, linalg
from .errors import ValidationError
from .game import GameSpec, NashCertificate, PayoffObservable, complex_from_json, uniform_reference
from .mmwu import Constant, Decreasing, MmwuConfig, find_nash
from .replicator import ReplicatorConfig

MODES = (
    "mmwu",
    "replicator",
    "find-nash",
    "recurrence-sweep",
    "gen-game",
    "probe-limit",
    "probe-divergence",
)


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(obj: Any) -> str:
    """sha256 of the canonical JSON form; insensitive to key order and whitespace."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def read_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RunConfig:
    mode: str
    params: dict
    output_dir: Path
    game: Optional[GameSpec] = None
    reference: Optional[dict] = None
    figures: bool = False
    dump_states: bool = False
    base_dir: Path = field(default_factory=Path.cwd)
    raw: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p


def _load_game(entry, base: Path) -> GameSpec:
    if isinstance(entry, str):
        p = Path(entry)
        return GameSpec.from_dict(read_json(p if p.is_absolute() else base / p))
    if isinstance(entry, dict):
        return GameSpec.from_dict(entry)
    raise ValidationError("'game' must be a path or an inline game spec")


def parse_run_config(data: dict, base_dir: Path = Path(".")) -> RunConfig:
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    mode = data.get("mode")
    if mode not in MODES:
        raise ValidationError(f"'mode' must be one of {', '.join(MODES)}; got {mode!r}")
    blocks = [m for m in MODES if m in data]
    if blocks != [mode]:
        raise ValidationError(f"config needs exactly one parameter block, '{mode}'; found {blocks or 'none'}")
    params = data[mode]
    if not isinstance(params, dict):
        raise ValidationError(f"'{mode}' block must be an object")
    unknown = set(data) - {"game", "mode", mode, "output_dir", "reference", "figures", "dump_states"}
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if "output_dir" not in data:
        raise ValidationError("config needs 'output_dir'")
    base_dir = Path(base_dir)
    out = Path(data["output_dir"])
    game = None
    if mode != "gen-game":
        if "game" not in data:
            raise ValidationError(f"mode '{mode}' needs a 'game'")
        game = _load_game(data["game"], base_dir)
    ref = data.get("reference")
    if ref is not None and (not isinstance(ref, dict) or len(ref) != 1 or next(iter(ref)) not in ("analytic", "mmwu")):
        raise ValidationError("'reference' must be {\"analytic\": ...} or {\"mmwu\": {\"epsilon\": ...}}")
    return RunConfig(
        mode=mode,
        params=params,
        output_dir=out if out.is_absolute() else base_dir / out,
        game=game,
        reference=ref,
        figures=bool(data.get("figures", False)),
        dump_states=bool(data.get("dump_states", False)),
        base_dir=base_dir,
        raw=data,
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    return parse_run_config(read_json(path), path.parent)


def _build(cls, params: dict, allowed: set, what: str):
    extra = set(params) - allowed
    if extra:
        raise ValidationError(f"unknown {what} parameters: {sorted(extra)}")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValidationError(f"bad {what} parameters: {exc}") from exc


def parse_schedule(spec) -> Constant | Decreasing:
    if spec is None:
        return Constant()
    if not isinstance(spec, dict):
        raise ValidationError("schedule must be an object with a 'kind'")
    spec = dict(spec)
    kind = spec.pop("kind", "constant")
    if kind == "constant":
        return _build(Constant, spec, {"mu"}, "constant schedule")
    if kind == "decreasing":
        return _build(Decreasing, spec, {"a"}, "decreasing schedule")
    raise ValidationError(f"unknown schedule kind {kind!r}")


def mmwu_config(params: dict) -> MmwuConfig:
    params = dict(params)
    params["schedule"] = parse_schedule(params.get("schedule"))
    allowed = {"epsilon", "schedule", "max_iters", "record_every", "seed_rho0", "seed_sigma0", "init"}
    return _build(MmwuConfig, params, allowed, "mmwu")


REPLICATOR_KEYS = {"t_end", "step_h", "integrator", "record_every", "seed_rho0", "seed_sigma0", "transform"}


def replicator_config(params: dict) -> ReplicatorConfig:
    if "t_end" not in params:
        raise ValidationError("replicator parameters need 't_end'")
    return _build(ReplicatorConfig, dict(params), REPLICATOR_KEYS, "replicator")


def resolve_reference(cfg: RunConfig, g: PayoffObservable) -> Optional[NashCertificate]:
    """Turn the config's reference entry into a certificate.

    ``{"analytic": "uniform"}`` is the maximally mixed pair; ``{"analytic": path}``
    or an inline ``{"rho": ..., "sigma": ...}`` gives explicit states;
    ``{"mmwu": {"epsilon": e}}`` computes one with :func:`find_nash`.
    """
    if cfg.reference is None:
        return None
    kind, val = next(iter(cfg.reference.items()))
    if kind == "mmwu":
        opts = dict(val or {})
        eps = float(opts.pop("epsilon", 1e-3))
        max_iters = int(opts.pop("max_iters", 200_000))
        if opts:
            raise ValidationError(f"unknown mmwu reference options: {sorted(opts)}")
        return find_nash(g, epsilon=eps, max_iters=max_iters)
    if val == "uniform":
        return uniform_reference(g)
    if isinstance(val, str):
        val = read_json(cfg.resolve(val))
    if isinstance(val, dict) and "rho_star" in val:  # a find-nash summary
        val = {"rho": val["rho_star"], "sigma": val.get("sigma_star")}
    if not isinstance(val, dict) or val.get("rho") is None or val.get("sigma") is None:
        raise ValidationError("analytic reference needs 'rho' and 'sigma'")
    rho = linalg.check_density(complex_from_json(val["rho"]), name="reference rho")
    sigma = linalg.check_density(complex_from_json(val["sigma"]), name="reference sigma")
    if rho.shape[0] != g.dim_a or sigma.shape[0] != g.dim_b:
        raise ValidationError("reference states do not match the game dimensions")
    return NashCertificate.from_pair(g, rho, sigma)


@dataclass
class RunManifest:
    tool_version: str
    config_hash: str
    seeds: list
    wall_time_s: float
    artifact_paths: list

    @classmethod
    def create(cls, cfg_hash: str, seeds, wall_time_s: float, artifacts) -> "RunManifest":
        return cls(__version__, cfg_hash, [int(s) for s in seeds], float(wall_time_s), [str(p) for p in artifacts])

    def to_dict(self) -> dict:
        return asdict(self)


def jsonable(x):
    """Recursively convert numpy scalars/arrays so ``json.dump`` accepts them."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, Path):
        return str(x)
    return x
