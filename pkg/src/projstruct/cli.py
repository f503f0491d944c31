"""Command-line entry point.

    projstruct select   --config cfg.json --out result.json [--seed S]
    projstruct simulate --config cfg.json --out table.csv [--seed S] [--workers K]
    projstruct check    --config cfg.json --out report.csv [--seed S]

Configs are single JSON documents (schema in the README).  Outputs are
deterministic functions of (config, seed): CSV files carry a metadata comment
line with version, seed, and config hash; floats print with '.' decimal
separator via repr.  Exit codes: 0 success, 2 config error, 3 cap error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .ddm import DdmConfig, ma_mean, sparsity_ma_mean_exact, structure_posterior
from .errors import CapExceededError, ConfigError, ExactModeUnavailableError
from .experiments import (
    build_family,
    build_noise,
    build_signal,
    config_hash,
    derive_rng,
    format_value,
    render_csv,
    resolve_sigma,
    run_experiment,
)
from .noise import check_a1, check_a2, check_a3, check_a4
from .selection import search_candidates, select_penalized
from .structures import Caps, SparseSet, SparsityFamily
from .errors import UnsupportedFamilyError


def _csv_field(value) -> str:
    text = format_value(value)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def write_csv(path: str, header, rows, seed: int, config: dict) -> None:
    lines = [f"# projstruct={__version__} seed={seed} config_sha256={config_hash(config)}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_csv_field(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON: line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc


def _require(config: dict, field: str):
    if field not in config:
        raise ConfigError(f"config is missing required field {field!r}")
    return config[field]


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------


def _load_vector_csv(path: str) -> np.ndarray:
    try:
        rows = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot parse data file {path}: {exc}") from exc
    return rows.reshape(-1)


def _observation(config: dict, family, sigma: float, seed: int) -> np.ndarray:
    data = _require(config, "data")
    if "file" in data:
        y = _load_vector_csv(data["file"])
        if y.size != family.ambient_dim:
            raise ConfigError(
                f"data file has {y.size} values, family needs {family.ambient_dim}")
        return y
    if "signal" in data:
        theta = build_signal(data["signal"], family, sigma)
        noise = build_noise(data.get("noise"))
        rng = derive_rng(seed, "select-data")
        return theta + sigma * noise.sample(rng, family.ambient_dim)
    raise ConfigError("data section needs either 'file' or 'signal'")


def _posterior_for(y, family, cfg: DdmConfig, rng):
    """Enumerate when feasible; otherwise fall back to an exactly-normalized
    size path (sparsity) or a restricted candidate set from the heuristic
    search paths."""
    if isinstance(family, SparsityFamily) and family.n > 16:
        order = np.argsort(-np.abs(y), kind="stable")
        candidates = [SparseSet(tuple(sorted(int(i) for i in order[:s])))
                      for s in range(family.n + 1)]
        return structure_posterior(y, family, cfg, candidates=candidates,
                                   method="symmetric-polynomial")
    try:
        return structure_posterior(y, family, cfg, caps=Caps(max_count=50_000))
    except (CapExceededError, NotImplementedError):
        pass
    try:
        candidates = search_candidates(y, family, cfg.sigma, cfg.kappa,
                                       cfg.pen_variant, rng=rng)
    except ExactModeUnavailableError:
        return None
    return structure_posterior(y, family, cfg, candidates=candidates,
                               method="restricted-candidate-set")


def cmd_select(config: dict, seed: int, out_path: str) -> None:
    family = build_family(_require(config, "family"))
    sigma = resolve_sigma(_require(config, "sigma"), family.ambient_dim)
    kappa = float(_require(config, "kappa"))
    mode = config.get("mode", "exact")
    pen_variant = config.get("pen_variant", "main")
    y = _observation(config, family, sigma, seed)

    rng = derive_rng(seed, "select")
    structure, objective = select_penalized(y, family, sigma, kappa, mode=mode,
                                            pen_variant=pen_variant, rng=rng)
    theta_check = family.project(structure, y)

    cfg = DdmConfig(kappa=kappa, sigma=sigma, pen_variant=pen_variant)
    post = _posterior_for(y, family, cfg, derive_rng(seed, "select-posterior"))
    if isinstance(family, SparsityFamily):
        theta_tilde = sparsity_ma_mean_exact(y, family, cfg)
    elif post is not None:
        theta_tilde = ma_mean(y, family, post)
    else:
        theta_tilde = None

    top_k = int(config.get("posterior_top_k", 5))
    doc = {
        "version": __version__,
        "seed": seed,
        "config_sha256": config_hash(config),
        "structure": family.structure_to_json(structure),
        "objective": objective,
        "theta_check": [float(v) for v in theta_check],
        "theta_tilde": None if theta_tilde is None else [float(v) for v in theta_tilde],
        "posterior": None if post is None else {
            "method": post.method,
            "top": post.export()[:top_k],
        },
    }
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def _caps_from(config: dict) -> Caps | None:
    spec = config.get("caps")
    if spec is None:
        return None
    return Caps(max_count=int(spec.get("max_count", 200_000)),
                max_size=spec.get("max_size"),
                max_blocks=spec.get("max_blocks"))


def cmd_check(config: dict, seed: int, out_path: str) -> None:
    which = _require(config, "check")
    caps = _caps_from(config)
    rng = derive_rng(seed, "check", which)
    if which == "a1":
        family = build_family(_require(config, "family"))
        noise = build_noise(config.get("noise"))
        rows = check_a1(family, noise, float(_require(config, "alpha")),
                        int(config.get("reps", 10_000)), rng, caps=caps,
                        se_mult=float(config.get("se_mult", 2.0)))
        header = ["structure", "estimate", "bound", "std_err", "n_saturated", "pass"]
        out = [[json.dumps(family.structure_to_json(r.structure), sort_keys=True),
                r.estimate, r.bound, r.std_err, r.n_saturated, int(r.passed)]
               for r in rows]
    elif which == "a2":
        family = build_family(_require(config, "family"))
        rep = check_a2(family, float(_require(config, "nu")), caps)
        header = ["family", "nu", "total", "bound", "pass", "count", "min_rho_minus_dim"]
        out = [[family.tag, float(config["nu"]), rep.total,
                "" if rep.bound is None else rep.bound, int(rep.passed), rep.count,
                rep.min_rho_minus_dim]]
    elif which == "a3":
        family = build_family(_require(config, "family"))
        header = ["family", "status", "pairs", "max_containment_residual",
                  "max_rho_excess", "pass"]
        try:
            rep = check_a3(family, int(config.get("pairs", 100)), rng, caps)
            out = [[family.tag, "checked", rep.pairs_checked,
                    rep.max_containment_residual, rep.max_rho_excess, int(rep.passed)]]
        except UnsupportedFamilyError:
            out = [[family.tag, "unsupported", 0, "", "", 0]]
    elif which == "a4":
        noise = build_noise(config.get("noise"))
        rows = check_a4(noise, [float(m) for m in _require(config, "M")],
                        int(config.get("reps", 10_000)), int(_require(config, "n")), rng)
        header = ["M", "psi1", "psi2"]
        out = [[r.M, r.psi1, r.psi2] for r in rows]
    else:
        raise ConfigError(f"unknown check {which!r}; choose a1, a2, a3 or a4")
    write_csv(out_path, header, out, seed, config)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projstruct",
        description="Penalized structure selection, diagnostics and experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("select", "run the penalized selector on one data set"),
                       ("simulate", "run a Monte Carlo experiment grid"),
                       ("check", "verify the A1-A4 conditions")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--workers", type=int, default=1,
                       help="replication worker processes (simulate only)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "select":
            cmd_select(config, args.seed, args.out)
        elif args.command == "simulate":
            header, rows = run_experiment(config, args.seed, max(1, args.workers))
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(render_csv(header, rows, args.seed, config))
        else:
            cmd_check(config, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CapExceededError, ExactModeUnavailableError) as exc:
        print(f"cap error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
