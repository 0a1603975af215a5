"""Command-line front end.

Subcommands: certify, sweep-k, validate, selftest.  Config is a JSON
document with a versioned schema; unknown keys are rejected.  Exit codes:
0 success, 1 numerical failure, 2 config error.  Every output file embeds
the config hash, the seed and the toolkit version.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .equilibrium import VIProblem, compute_invariants, solve_vi
from .errors import ConfigError, ScenarioGneError
from .game import AggregativeGame, game_from_document
from .polytope import HalfspaceSystem
from .scenario import (
    Certificate,
    SamplerSpec,
    build_program,
    certify,
    epsilon_defining_sum,
    epsilon_even_split,
    sample_scenarios,
)
from .util import child_seed, config_digest, provenance_lines
from .validation import (
    empirical_violation,
    grid_equilibrium_set,
    sweep_normalized_length,
    violation_summary,
    write_sweep_csv,
    write_violation_csv,
)

logger = logging.getLogger("scenario_gne")

SCHEMA_VERSION = 1
_CONFIG_KEYS = {
    "version", "game", "sampler", "K", "beta", "seed", "granularity",
    "n_fresh", "trials", "k_grid", "output_dir",
}
_SAMPLER_KEYS = {"kind", "box"}

# distinct tags so certification draws and validation draws never collide
_FRESH_TAG = 1_000_003


@dataclass(frozen=True)
class RunConfig:
    game: AggregativeGame
    sampler: SamplerSpec
    k: int
    beta: float
    seed: int
    granularity: float
    n_fresh: int
    trials: int
    k_grid: tuple[int, ...]
    output_dir: Path
    digest: str


def load_config(path: Path, seed_override: Optional[int] = None,
                out_override: Optional[Path] = None) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if doc.get("version") != SCHEMA_VERSION:
        raise ConfigError(f"config version must be {SCHEMA_VERSION}")
    for key in ("game", "sampler"):
        if key not in doc:
            raise ConfigError(f'config is missing "{key}"')

    game_field = doc["game"]
    if isinstance(game_field, str):
        game_path = Path(game_field)
        if not game_path.is_absolute():
            game_path = Path(path).parent / game_path
        if not game_path.is_file():
            raise ConfigError(f"game file not found: {game_path}")
        game = game_from_document(json.loads(game_path.read_text()))
    elif isinstance(game_field, dict):
        game = game_from_document(game_field)
    else:
        raise ConfigError('"game" must be an inline document or a file path')

    sampler_field = doc["sampler"]
    if not isinstance(sampler_field, dict):
        raise ConfigError('"sampler" must be an object')
    unknown = set(sampler_field) - _SAMPLER_KEYS
    if unknown:
        raise ConfigError(f"unknown sampler keys: {sorted(unknown)}")
    kind = sampler_field.get("kind")
    if kind != "uniform_halfspace":
        raise ConfigError(f'sampler kind must be "uniform_halfspace", got {kind!r}')
    box = np.asarray(sampler_field.get("box", []), dtype=float)
    if box.ndim != 2 or box.shape != (game.n + 1, 2):
        raise ConfigError(f"sampler box must be ({game.n + 1}, 2) for this game")
    sampler = SamplerSpec.uniform_halfspace(box)

    k = int(doc.get("K", 100))
    if k < 0:
        raise ConfigError("K must be >= 0")
    beta = float(doc.get("beta", 1e-6))
    if not 0.0 < beta < 1.0:
        raise ConfigError("beta out of range (0, 1)")
    seed = int(doc.get("seed", 0)) if seed_override is None else int(seed_override)
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    granularity = float(doc.get("granularity", 0.01))
    if not 0.0 < granularity <= 1.0:
        raise ConfigError("granularity out of range (0, 1]")
    n_fresh = int(doc.get("n_fresh", 10_000))
    if n_fresh < 1:
        raise ConfigError("n_fresh must be >= 1")
    trials = int(doc.get("trials", 10))
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    k_grid = tuple(int(v) for v in doc.get("k_grid", [1, 10, 100, 1000]))
    if any(v < 0 for v in k_grid) or list(k_grid) != sorted(k_grid):
        raise ConfigError("k_grid must be sorted nonnegative counts")
    out_dir = Path(doc.get("output_dir", "out")) if out_override is None else Path(out_override)

    resolved = dict(doc)
    resolved["seed"] = seed
    resolved["output_dir"] = str(out_dir)
    return RunConfig(
        game=game, sampler=sampler, k=k, beta=beta, seed=seed,
        granularity=granularity, n_fresh=n_fresh, trials=trials, k_grid=k_grid,
        output_dir=out_dir, digest=config_digest(resolved),
    )


def _provenance(cfg: RunConfig) -> dict:
    return {"config_sha256": cfg.digest, "seed": cfg.seed, "toolkit_version": __version__}


def _csv_header(cfg: RunConfig) -> list[str]:
    return provenance_lines(cfg.digest, cfg.seed, __version__)


def _solve_base_equilibrium(game: AggregativeGame):
    """Equilibrium of the coupling-free game plus its invariants."""
    local = HalfspaceSystem(game.local_a, game.local_b)
    witness = solve_vi(VIProblem(game.mapping_matrix, game.mapping_offset, local))
    return compute_invariants(game, witness)


def _run_certificate(cfg: RunConfig) -> Certificate:
    scenarios = sample_scenarios(cfg.sampler, cfg.k, cfg.seed)
    prog = build_program(cfg.game, scenarios, cfg.seed)
    inv = _solve_base_equilibrium(cfg.game)
    return certify(prog, inv, cfg.beta)


def cmd_certify(cfg: RunConfig, as_json: bool) -> int:
    cert = _run_certificate(cfg)
    doc = cert.to_json_dict()
    doc["provenance"] = _provenance(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.output_dir / "certificate.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print(json.dumps(doc, indent=None if as_json else 2))
    logger.info("certificate written to %s", path)
    return 0


def cmd_sweep_k(cfg: RunConfig, as_json: bool) -> int:
    inv = _solve_base_equilibrium(cfg.game)
    result = sweep_normalized_length(cfg.game, inv, cfg.sampler, cfg.k_grid,
                                     cfg.trials, cfg.seed)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = cfg.output_dir / "sweep_k.csv"
    write_sweep_csv(result, csv_path, _csv_header(cfg))
    from .figures import sweep_figure

    svg_path = cfg.output_dir / "sweep_k.svg"
    sweep_figure(result.k_grid, result.mean, result.std, svg_path,
                 provenance=json.dumps(_provenance(cfg)))
    summary = {
        "k_grid": list(result.k_grid),
        "mean_ratio": [float(v) for v in result.mean],
        "std_ratio": [float(v) for v in result.std],
        "provenance": _provenance(cfg),
    }
    if as_json:
        print(json.dumps(summary))
    else:
        for k, mean, std in zip(result.k_grid, result.mean, result.std):
            print(f"K={k:>6d}  mean={mean:.4f}  std={std:.4f}")
    logger.info("sweep written to %s and %s", csv_path, svg_path)
    return 0


def cmd_validate(cfg: RunConfig, as_json: bool) -> int:
    scenarios = sample_scenarios(cfg.sampler, cfg.k, cfg.seed)
    prog = build_program(cfg.game, scenarios, cfg.seed)
    inv = _solve_base_equilibrium(cfg.game)
    cert = certify(prog, inv, cfg.beta)

    mus, points = grid_equilibrium_set(cfg.game, inv, prog.combined, cfg.granularity)
    fresh_seed = child_seed(cfg.seed, _FRESH_TAG)
    report = empirical_violation(mus, points, cfg.sampler, cfg.n_fresh, fresh_seed,
                                 epsilon_bound=cert.epsilon_s)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = cfg.output_dir / "violation.csv"
    write_violation_csv(report, csv_path, _csv_header(cfg))
    summary = violation_summary(report)
    summary["certificate"] = cert.to_json_dict()
    summary["provenance"] = _provenance(cfg)
    json_path = cfg.output_dir / "violation_summary.json"
    json_path.write_text(json.dumps(summary, indent=2) + "\n")

    from .figures import set_figure, violation_figure

    violation_figure(report.mus, report.per_point, cert.epsilon_s,
                     cfg.output_dir / "violation.svg",
                     provenance=json.dumps(_provenance(cfg)))
    set_figure(prog.combined, np.vstack([points[0], points[-1]]),
               cfg.output_dir / "equilibrium_set.svg",
               provenance=json.dumps(_provenance(cfg)))

    if as_json:
        print(json.dumps(summary))
    else:
        print(f"s_K={cert.s_k}  v_K={cert.v_k}  epsilon(s_K)={cert.epsilon_s:.4f}")
        print(f"max empirical violation {report.max_violation:.4f} at mu={report.argmax_mu:.2f}; "
              f"set violation {report.set_violation:.4f} over {report.n_fresh} draws")
    logger.info("validation artifacts written to %s", cfg.output_dir)
    return 0


def _selftest_game() -> AggregativeGame:
    doc = {
        "players": [
            {"Q": [[1.0]], "C": {"1": [[-2.0]]}, "q": [1.0], "box": [[-2.0, 2.0]]},
            {"Q": [[1.0]], "C": {"0": [[-2.0]]}, "q": [-1.0], "box": [[-2.0, 2.0]]},
        ]
    }
    return game_from_document(doc)


def cmd_selftest() -> int:
    """Compact end-to-end checks on the two-player reference game."""
    from .scenario import ACTIVE_NO_EQUILIBRIUM, SUPPORT, Scenario, support_subsample_count

    failures = 0

    def check(label: str, ok: bool) -> None:
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {label}")
        if not ok:
            failures += 1

    game = _selftest_game()
    inv = _solve_base_equilibrium(game)
    check("invariant vector (-2, 2)", bool(np.max(np.abs(inv.c - [-2.0, 2.0])) <= 1e-9))
    check("invariant scalar 1", abs(inv.d - 1.0) <= 1e-9)

    eps = epsilon_even_split(100, 1e-6, 2)
    check("bound eps(2) for K=100, beta=1e-6", abs(eps - 0.24025597390132337) <= 1e-12)
    check("defining sum returns beta (K=100)",
          abs(epsilon_defining_sum(100, 1e-6) - 1e-6) <= 1e-18)

    cutting = Scenario(1, [[1.0, 1.0]], [0.0])
    tangent_free = Scenario(2, [[1.0, -1.0]], [2.5])
    slack = Scenario(3, [[1.0, 1.0]], [10.0])
    prog = build_program(game, [cutting, tangent_free, slack], seed=0)
    result = support_subsample_count(prog, inv)
    check("cutting sample verdict", result.per_sample[1] == SUPPORT)
    check("active non-intersecting verdict", result.per_sample[2] == ACTIVE_NO_EQUILIBRIUM)
    check("inactive sample verdict", result.per_sample[3] == "inactive")
    check("support counts", (result.s_k, result.v_k) == (1, 2))

    sampler = SamplerSpec.uniform_halfspace([[-4, 4], [-4, 4], [4, 10]])
    ok = True
    for seed in range(5):
        scen = sample_scenarios(sampler, 20, seed)
        cert = certify(build_program(game, scen, seed), inv, 1e-6)
        ok = ok and cert.s_k <= cert.v_k and cert.epsilon_s <= cert.epsilon_v
    check("support count never exceeds active count (5 seeds)", ok)

    print(f"{'OK' if failures == 0 else 'FAILED'}: selftest "
          f"({failures} failure{'s' if failures != 1 else ''})")
    return 0 if failures == 0 else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenario-gne",
        description="Robustness certificates for equilibrium sets of aggregative "
                    "games with sampled coupling constraints")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, required=True, help="JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", type=Path, default=None, help="override the output dir")
        p.add_argument("--json", action="store_true", help="machine-readable stdout")

    add_common(sub.add_parser("certify", help="sample, count supports, emit certificate"))
    add_common(sub.add_parser("sweep-k", help="normalized set size across sample counts"))
    add_common(sub.add_parser("validate", help="empirical violation against the bound"))
    sub.add_parser("selftest", help="built-in checks on the reference game")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return cmd_selftest()
        cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
        if args.command == "certify":
            return cmd_certify(cfg, args.json)
        if args.command == "sweep-k":
            return cmd_sweep_k(cfg, args.json)
        if args.command == "validate":
            return cmd_validate(cfg, args.json)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except ScenarioGneError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
