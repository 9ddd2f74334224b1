"""Command-line interface to the coalitional free-energy toolkit.

Every command accepts ``--config PATH`` (a JSON object whose keys match the
long option names, with dashes as underscores), ``--out DIR``, ``--seed`` and
``--threads``.  Explicit flags override config values.  Each run writes a
``run_manifest.json`` with the resolved parameters and SHA-256 digests of the
artifacts it produced.

Exit codes: 0 success, 2 bad configuration or input, 3 fatal numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .game import epsilon_decay_scan
from .gibbs import EnergyTable, collective_free_energy, energy_from_game, gibbs_posterior
from .io import (
    InputFormatError,
    read_pairwise,
    read_table,
    read_value_table,
    sha256,
    write_csv,
    write_json,
)
from .lattice import (
    LatticeError,
    Synergy,
    classify_synergy,
    harsanyi_dividends,
    popcounts,
    shapley_from_dividends,
    shapley_monte_carlo,
    truncate_dividends,
)
from .meanfield import attention_weights, compare_exact_meanfield, meanfield_fixed_point, random_pairwise
from .models import PRESETS, DomainPreset
from .sweep import normalize_overlay, run_sweep

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

DEFAULTS = {
    "out": "out",
    "seed": 42,
    "threads": 1,
    "tol": 1e-9,
    "max_order": None,
    "permutations": 0,
    "beta": 1.0,
    "from_game": False,
    "damping": 0.5,
    "mf_tol": 1e-10,
    "max_iter": 10_000,
    "betas": [1.0, 2.0, 4.0, 8.0, 16.0],
    "grid": 1001,
    "random_agents": None,
    "profile": "meanfield",
    "presets": {},
}

# Execution details that must not change the manifest.
_NOT_RESOLVED = {"out", "threads", "config", "command", "func"}


class ConfigError(ValueError):
    pass


class NumericFailure(RuntimeError):
    pass


def _resolve(args) -> dict:
    cfg = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}:1: config must be a JSON object")
    params = dict(DEFAULTS)
    params.update(cfg)
    for key, val in vars(args).items():
        if val is not None and key not in ("config", "func"):
            params[key] = val
    for key in ("values", "energy", "pairwise"):
        if params.get(key) and not Path(params[key]).is_file():
            raise ConfigError(f"input file not found: {params[key]}")
    if int(params["threads"]) < 1:
        raise ConfigError("--threads must be >= 1")
    return params


def _finish(params, out: Path, artifacts: list[Path]):
    resolved = {k: v for k, v in sorted(params.items()) if k not in _NOT_RESOLVED}
    manifest = {
        "tool": f"coalfe {__version__}",
        "command": params["command"],
        "parameters": resolved,
        "artifacts": {p.name: sha256(p) for p in sorted(artifacts)},
    }
    write_json(out / "run_manifest.json", manifest)


def _energy_input(params) -> EnergyTable:
    if params.get("pairwise"):
        return read_pairwise(params["pairwise"]).energy_table()
    if params.get("values") and (params["from_game"] or not params.get("energy")):
        return energy_from_game(read_value_table(params["values"]))
    if params.get("energy"):
        return EnergyTable(read_table(params["energy"], "energy"))
    if params.get("random_agents"):
        rng = np.random.default_rng(int(params["seed"]))
        return random_pairwise(int(params["random_agents"]), rng).energy_table()
    raise ConfigError("no energy source: give --energy, --values, --pairwise or --random-agents")


def cmd_dividends(params) -> int:
    out = Path(params["out"])
    v = read_value_table(params["values"])
    d = harsanyi_dividends(v)
    if params.get("max_order"):
        d = truncate_dividends(d, int(params["max_order"]))
    eta = shapley_from_dividends(d).eta
    labels = classify_synergy(d, float(params["tol"]))
    sizes = popcounts(d.n_agents)
    arts = [
        write_csv(out / "dividends.csv", ["mask", "dividend"], enumerate(d.dividends)),
        write_csv(out / "shapley.csv", ["agent", "eta"], enumerate(eta)),
        write_csv(
            out / "synergy.csv",
            ["mask", "size", "dividend", "label"],
            ((m, sizes[m], d.dividends[m], Synergy(labels[m]).name.lower()) for m in range(1, sizes.size)),
        ),
    ]
    _finish(params, out, arts)
    return EXIT_OK


def cmd_shapley(params) -> int:
    out = Path(params["out"])
    v = read_value_table(params["values"])
    n_perm = int(params["permutations"])
    if n_perm > 0:
        sv = shapley_monte_carlo(v, v.n_agents, n_perm, int(params["seed"]))
        rows = zip(range(v.n_agents), sv.eta, sv.stderr)
        art = write_csv(out / "shapley.csv", ["agent", "eta", "stderr"], rows)
    else:
        sv = shapley_from_dividends(harsanyi_dividends(v))
        art = write_csv(out / "shapley.csv", ["agent", "eta"], enumerate(sv.eta))
    _finish(params, out, [art])
    return EXIT_OK


def cmd_gibbs(params) -> int:
    out = Path(params["out"])
    beta = float(params["beta"])
    if not beta > 0:
        raise ConfigError(f"beta must be positive, got {beta}")
    E = _energy_input(params)
    g = gibbs_posterior(E, beta)
    summary = {
        "beta": beta,
        "n_agents": E.n_agents,
        "log_partition": g.log_partition,
        "free_energy": collective_free_energy(g.distribution, E, beta),
        "neg_log_z_over_beta": g.free_energy,
        "entropy": g.distribution.entropy(),
    }
    arts = [
        write_csv(out / "posterior.csv", ["mask", "probability"], enumerate(g.probs)),
        write_csv(out / "marginals.csv", ["agent", "alpha"], enumerate(g.marginals)),
        write_json(out / "free_energy.json", summary),
    ]
    _finish(params, out, arts)
    return EXIT_OK


def cmd_meanfield(params) -> int:
    out = Path(params["out"])
    if not params.get("pairwise"):
        raise ConfigError("meanfield needs --pairwise PATH")
    e = read_pairwise(params["pairwise"])
    beta = float(params["beta"])
    if not beta > 0:
        raise ConfigError(f"beta must be positive, got {beta}")
    kw = dict(tol=float(params["mf_tol"]), max_iter=int(params["max_iter"]), damping=float(params["damping"]))
    cmp = compare_exact_meanfield(e, beta, **kw)
    sol = meanfield_fixed_point(e, beta, **kw)
    weights = attention_weights(e, sol.alpha, beta)
    arts = [
        write_csv(
            out / "comparison.csv",
            ["agent", "alpha_exact", "alpha_mf", "gap"],
            zip(range(e.n_agents), cmp.alpha_exact, cmp.alpha_mf, cmp.gaps),
        ),
        write_csv(out / "attention.csv", ["agent", "weight"], enumerate(weights)),
        write_json(
            out / "meanfield.json",
            {
                "beta": beta,
                "converged": sol.converged,
                "iterations": sol.iterations,
                "residual": sol.residual,
                "max_abs_gap": cmp.max_abs_gap,
            },
        ),
    ]
    _finish(params, out, arts)
    if not sol.converged:
        raise NumericFailure(f"mean-field iteration did not converge (residual {sol.residual:.3g})")
    return EXIT_OK


def cmd_nash(params) -> int:
    out = Path(params["out"])
    betas = [float(b) for b in params["betas"]]
    E = _energy_input(params)
    rows = epsilon_decay_scan(
        E, betas, grid=int(params["grid"]), threads=int(params["threads"]), profile=params["profile"]
    )
    arts = [
        write_csv(
            out / "epsilon_scan.csv",
            ["beta", "epsilon", "worst_agent"],
            ((r.beta, r.epsilon, r.worst_agent) for r in rows),
        ),
        write_json(
            out / "certificate.json",
            {
                "n_agents": E.n_agents,
                "grid": int(params["grid"]),
                "profile": params["profile"],
                "rows": [
                    {
                        "beta": r.beta,
                        "epsilon": r.epsilon,
                        "worst_agent": r.worst_agent,
                        "converged": r.converged,
                        "residual": r.residual,
                    }
                    for r in rows
                ],
                "max_epsilon_times_beta": max(r.epsilon * r.beta for r in rows),
            },
        ),
    ]
    _finish(params, out, arts)
    return EXIT_OK


def _preset(name: str, params) -> DomainPreset:
    if name not in PRESETS:
        raise ConfigError(f"unknown domain {name!r}; choose from {sorted(PRESETS)} or 'all'")
    overrides = dict(params.get("presets", {}).get(name, {}))
    overrides["seed"] = int(params["seed"])
    try:
        return PRESETS[name].replace(**overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"preset {name}: {exc}") from None


def cmd_reproduce(params) -> int:
    out = Path(params["out"])
    domain = params["domain"]
    names = ["neural", "fish", "marl"] if domain == "all" else [domain]
    presets = [_preset(n, params) for n in names]
    threads = int(params["threads"])
    arts, results = [], []
    for preset in presets:
        res = run_sweep(preset, threads=threads)
        results.append(res)
        arts.append(
            write_csv(
                out / f"{res.domain}_samples.csv",
                ["domain", "beta", "run", "eta"],
                ((res.domain, s.beta, s.run_index, s.eta) for s in res.samples),
            )
        )
        arts.append(
            write_csv(
                out / f"{res.domain}_sweep.csv",
                ["beta", "mean", "std", "n"],
                ((r.beta, r.mean, r.std, r.n) for r in res.rows),
            )
        )
        arts.append(write_json(out / f"{res.domain}_summary.json", res.summary()))
        print(_verdict(res))
    arts.append(write_json(out / "summary.json", [r.summary() for r in results]))
    arts.append(write_csv(out / "overlay.csv", ["domain", "beta", "normalized_eta"], normalize_overlay(results)))
    _finish(params, out, arts)
    return EXIT_OK


def _verdict(res) -> str:
    parts = [f"{res.domain}: beta*={res.beta_star:.3f} ({res.beta_star_method}), R2={res.fit.r_squared:.3f}"]
    if res.reference_beta_star is not None:
        parts.append(f"reference {res.reference_beta_star:.2f} (diff {res.beta_star - res.reference_beta_star:+.3f})")
    if res.analytic_beta_star is not None:
        parts.append(f"analytic {res.analytic_beta_star:.3f} (diff {res.beta_star - res.analytic_beta_star:+.3f})")
    note = res.discrepancy_note()
    if note:
        parts.append(f"NOTE {note}")
    return "; ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coalfe", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"coalfe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config")
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.set_defaults(func=func)
        return p

    p = command("dividends", cmd_dividends, "Harsanyi dividends, Shapley values and synergy labels")
    p.add_argument("--values")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-order", type=int)

    p = command("shapley", cmd_shapley, "exact or permutation-sampled Shapley values")
    p.add_argument("--values")
    p.add_argument("--permutations", type=int)

    p = command("gibbs", cmd_gibbs, "Gibbs posterior, marginals and free energy")
    p.add_argument("--energy")
    p.add_argument("--values")
    p.add_argument("--from-game", action="store_true", default=None)
    p.add_argument("--beta", type=float)

    p = command("meanfield", cmd_meanfield, "mean-field marginals against exact Gibbs marginals")
    p.add_argument("--pairwise")
    p.add_argument("--beta", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--mf-tol", type=float)
    p.add_argument("--max-iter", type=int)

    p = command("nash", cmd_nash, "epsilon-Nash certificates over a beta grid")
    p.add_argument("--energy")
    p.add_argument("--values")
    p.add_argument("--pairwise")
    p.add_argument("--from-game", action="store_true", default=None)
    p.add_argument("--random-agents", type=int)
    p.add_argument("--betas", type=float, nargs="+")
    p.add_argument("--grid", type=int)
    p.add_argument("--profile", choices=["meanfield", "gibbs"])

    p = command("reproduce", cmd_reproduce, "precision sweeps of the analytic coalition models")
    p.add_argument("domain", choices=sorted(PRESETS) + ["all"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        params = _resolve(args)
        return args.func(params)
    except (ConfigError, InputFormatError, LatticeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
