"""Command-line interface.

``tvisvar estimate`` writes an archive directory; the analysis subcommands
read it back, so estimation and analysis are decoupled. Regimes, shocks,
equations and patterns are numbered from 1 on the command line.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import analysis
from .archive import ArchiveError, read_archive, write_archive
from .config import ConfigError, load_config
from .data import DataError, Dataset, load_csv, prepare_dataset, write_csv
from .gibbs import SamplerError, run_gibbs
from .patterns import build_patterns
from .rng import chain_seeds, make_rng
from .simulation import DgpSpec, simulate

log = logging.getLogger("tvisvar")

OUTPUT_ENV = "TVISVAR_OUTPUT_DIR"
DEFAULT_OUTPUT = "tvisvar-output"


class CliError(RuntimeError):
    pass


def _output_dir(args, fallback: str | Path | None = None) -> Path:
    out = args.output or fallback or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_dataset(path, config, lags=None) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise CliError(f"data file not found: {path}")
    raw = load_csv(path)
    if config is not None and config.var_names:
        missing = [v for v in config.var_names if v not in raw.names]
        if missing:
            raise DataError(f"{path}: columns {missing} listed in var_names are not in the file")
        cols = [raw.names.index(v) for v in config.var_names]
        values, names = raw.values[:, cols], list(config.var_names)
    else:
        values, names = raw.values, raw.names
    if config is not None and values.shape[1] != config.n_vars:
        raise DataError(f"{path}: {values.shape[1]} columns but the model has n_vars={config.n_vars}")
    return prepare_dataset(values, config.lags if lags is None else lags, config.n_det, names=names, index=raw.index)


def _variable(spec: str, names: list[str]) -> int:
    """1-based index or variable name to a 0-based index."""
    if spec in names:
        return names.index(spec)
    try:
        i = int(spec)
    except ValueError:
        raise CliError(f"unknown variable {spec!r}; choose from {names} or 1..{len(names)}") from None
    if not 1 <= i <= len(names):
        raise CliError(f"index {i} out of range 1..{len(names)}")
    return i - 1


def _names(archive) -> list[str]:
    cfg = archive.config
    return list(cfg.var_names) if cfg.var_names else [f"y{i + 1}" for i in range(cfg.n_vars)]


def _analysis_data(args, archive) -> Dataset:
    path = args.data or archive.manifest.get("data_path")
    if not path:
        raise CliError("no data file: pass --data (the archive does not record one)")
    return _load_dataset(path, archive.config)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_estimate(args) -> None:
    if not args.config:
        raise CliError("estimate needs --config")
    config, run = load_config(args.config)
    if args.iterations is not None or args.burnin is not None or args.thin is not None:
        m = config.mcmc
        m.iterations = args.iterations if args.iterations is not None else m.iterations
        m.burnin = args.burnin if args.burnin is not None else m.burnin
        m.thin = args.thin if args.thin is not None else m.thin
        config.validate()
    data_path = args.data or run.get("data")
    if not data_path:
        raise CliError("no data file: pass --data or set `data:` in the config")
    data_path = Path(args.config).parent / data_path if not args.data and not Path(data_path).is_absolute() else Path(data_path)
    data = _load_dataset(data_path, config)
    patterns = build_patterns(config)
    out = _output_dir(args, run.get("output"))
    seed = config.mcmc.seed if args.seed is None else args.seed
    seeds = [seed] if args.chains == 1 else chain_seeds(seed, args.chains)
    every = max(1, config.mcmc.iterations // 10)

    for c, s in enumerate(seeds):
        def progress(it, c=c):
            if (it + 1) % every == 0:
                log.info("chain %d: iteration %d/%d", c + 1, it + 1, config.mcmc.iterations)

        arc = run_gibbs(config, patterns, data, seed=s, progress=progress)
        arc.manifest["data_path"] = str(Path(data_path).resolve())
        arc.manifest["chain"] = c + 1
        target = out if args.chains == 1 else out / f"chain_{c + 1}"
        write_archive(arc, target)
        print(f"wrote {len(arc)} draws to {target}")


def cmd_simulate(args) -> None:
    if not args.config:
        raise CliError("simulate needs --config pointing to a DGP specification")
    path = Path(args.config)
    if not path.is_file():
        raise CliError(f"config file not found: {path}")
    raw = yaml.safe_load(path.read_text()) or {}
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = DgpSpec.from_dict(raw)
    except TypeError as err:
        raise ConfigError(f"{path}: {err}") from None
    data, truth = simulate(spec, make_rng(spec.seed))
    out = _output_dir(args)
    names = [f"y{i + 1}" for i in range(data.N)]
    Y0 = np.vstack([data.initial_lags()[::-1], data.Y])
    write_csv(out / "data.csv", Y0, names)
    write_csv(out / "truth_regimes.csv", truth.s[:, None] + 1.0, ["regime"])
    write_csv(out / "truth_log_volatility.csv", truth.h.T, names)
    write_csv(out / "truth_shocks.csv", truth.u, names)
    with open(out / "dgp.yaml", "w") as fh:
        yaml.safe_dump(spec.to_dict(), fh, sort_keys=False)
    print(f"wrote simulated data ({data.T} observations + {data.lags} presample) to {out}")


def cmd_tvi_probs(args) -> None:
    arc = read_archive(args.archive)
    tab = analysis.tvi_probabilities(arc)
    out = _output_dir(args, args.archive)
    rows = [[m + 1, *tab[m]] for m in range(tab.shape[0])]
    analysis.write_table(out / "tvi_probs.csv", ["regime", *arc.pattern_names], rows)
    print(f"wrote {out / 'tvi_probs.csv'}")


def cmd_regime_probs(args) -> None:
    arc = read_archive(args.archive)
    tab = analysis.regime_probabilities(arc)
    index = None
    if args.data or arc.manifest.get("data_path"):
        try:
            index = _analysis_data(args, arc).index
        except (CliError, DataError, OSError):
            index = None
    index = index or [str(t + 1) for t in range(tab.shape[0])]
    out = _output_dir(args, args.archive)
    rows = [[index[t], *tab[t]] for t in range(tab.shape[0])]
    analysis.write_table(out / "regime_probs.csv", ["t", *[f"regime_{m + 1}" for m in range(tab.shape[1])]], rows)
    print(f"wrote {out / 'regime_probs.csv'}")


def cmd_verify_het(args) -> None:
    arc = read_archive(args.archive)
    n = _variable(args.shock, _names(arc))
    reports = analysis.verify_heteroskedasticity(arc, n, eps=args.eps, mass=args.mass)
    out = _output_dir(args, args.archive)
    analysis.write_json(
        out / "verify_het.json", {"shock": n + 1, "eps": args.eps, "mass": args.mass, "regimes": [r.to_dict() for r in reports]}
    )
    for r in reports:
        print(f"regime {r.regime + 1}: HDI |omega| = [{r.hdi_abs[0]:.3f}, {r.hdi_abs[1]:.3f}], identified={r.identified}")


def cmd_irf(args) -> None:
    arc = read_archive(args.archive)
    names = _names(arc)
    shock = _variable(args.shock, names)
    instrument = _variable(args.instrument, names) if args.instrument else None
    size = None if args.unit else args.size
    res = analysis.impulse_responses(arc, shock, args.horizon, size=size, instrument=instrument, mass=args.mass)
    out = _output_dir(args, args.archive)
    analysis.write_table(out / "irf.csv", ["regime", "variable", "horizon", "median", "lower", "upper"], res.rows(names))
    analysis.write_json(
        out / "irf.json",
        {"shock": shock + 1, "size": size, "mass": args.mass, "n_draws": res.responses.shape[0], "n_skipped": res.n_skipped},
    )
    print(f"wrote {out / 'irf.csv'} ({res.n_skipped} singular draws skipped)")


def cmd_cumulative(args) -> None:
    arc = read_archive(args.archive)
    data = _analysis_data(args, arc)
    shock = _variable(args.shock, data.names)
    res = analysis.cumulative_effects(arc, data, shock, window=args.window, mass=args.mass)
    out = _output_dir(args, args.archive)
    rows = (
        [data.index[t], data.names[i], res.median[t, i], res.lower[t, i], res.upper[t, i], int(res.truncated[t])]
        for t in range(data.T)
        for i in range(data.N)
    )
    analysis.write_table(out / "cumulative.csv", ["t", "variable", "median", "lower", "upper", "truncated"], rows)
    print(f"wrote {out / 'cumulative.csv'}")


def cmd_counterfactual(args) -> None:
    arc = read_archive(args.archive)
    data = _analysis_data(args, arc)
    eq = _variable(args.policy_equation, data.names)
    res = analysis.counterfactual(arc, data, eq, args.donor_regime - 1, mass=args.mass)
    actual = np.median(res.actual, axis=0)
    out = _output_dir(args, args.archive)
    rows = (
        [data.index[t], data.names[i], data.Y[t, i], actual[t, i], res.median[t, i], res.lower[t, i], res.upper[t, i]]
        for t in range(data.T)
        for i in range(data.N)
    )
    analysis.write_table(
        out / "counterfactual.csv", ["t", "variable", "observed", "model_median", "median", "lower", "upper"], rows
    )
    print(f"wrote {out / 'counterfactual.csv'}")


def cmd_moments(args) -> None:
    arc = read_archive(args.archive)
    data = _analysis_data(args, arc)
    diff = [_variable(v, data.names) for v in (args.difference or [])]
    res = analysis.regime_moments(arc, data, difference=diff)
    out = _output_dir(args, args.archive)
    analysis.write_json(out / "moments.json", res.to_dict(data.names))
    print(f"wrote {out / 'moments.json'}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tvisvar", description="Markov-switching SVAR with stochastic volatility and TVI")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, archive=False, data=False):
        sp.add_argument("--output", "-o", help=f"output directory (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
        if archive:
            sp.add_argument("--archive", "-a", required=True, help="archive directory written by `estimate`")
        if data:
            sp.add_argument("--data", help="CSV data file (default: the one recorded in the archive)")

    sp = sub.add_parser("estimate", help="run the Gibbs sampler and write an archive")
    sp.add_argument("--config", "-c", required=True)
    sp.add_argument("--data")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--chains", type=int, default=1)
    sp.add_argument("--iterations", type=int)
    sp.add_argument("--burnin", type=int)
    sp.add_argument("--thin", type=int)
    common(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("simulate", help="simulate data from a DGP specification")
    sp.add_argument("--config", "-c", required=True)
    sp.add_argument("--seed", type=int)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("tvi-probs", help="posterior pattern probabilities per regime")
    common(sp, archive=True)
    sp.set_defaults(func=cmd_tvi_probs)

    sp = sub.add_parser("regime-probs", help="posterior regime probabilities per period")
    common(sp, archive=True, data=True)
    sp.set_defaults(func=cmd_regime_probs)

    sp = sub.add_parser("verify-het", help="check heteroskedasticity of one shock per regime")
    common(sp, archive=True)
    sp.add_argument("--shock", required=True)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--mass", type=float, default=0.90)
    sp.set_defaults(func=cmd_verify_het)

    sp = sub.add_parser("irf", help="regime-conditional impulse responses")
    common(sp, archive=True)
    sp.add_argument("--shock", required=True)
    sp.add_argument("--horizon", type=int, default=48)
    sp.add_argument("--size", type=float, default=1.0, help="impact on the instrument variable")
    sp.add_argument("--instrument", help="variable whose impact is set to --size (default: the shock's equation)")
    sp.add_argument("--unit", action="store_true", help="one-standard-deviation shock instead of --size")
    sp.add_argument("--mass", type=float, default=0.95)
    sp.set_defaults(func=cmd_irf)

    sp = sub.add_parser("cumulative", help="cumulative effects of realised shocks")
    common(sp, archive=True, data=True)
    sp.add_argument("--shock", required=True)
    sp.add_argument("--window", type=int, default=12)
    sp.add_argument("--mass", type=float, default=0.68)
    sp.set_defaults(func=cmd_cumulative)

    sp = sub.add_parser("counterfactual", help="swap the policy row to a donor regime")
    common(sp, archive=True, data=True)
    sp.add_argument("--policy-equation", required=True)
    sp.add_argument("--donor-regime", type=int, required=True)
    sp.add_argument("--mass", type=float, default=0.68)
    sp.set_defaults(func=cmd_counterfactual)

    sp = sub.add_parser("moments", help="regime-specific moments of data and shocks")
    common(sp, archive=True, data=True)
    sp.add_argument("--difference", nargs="*", help="variables to first-difference")
    sp.set_defaults(func=cmd_moments)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "chains", 1) < 1:
        parser.error("--chains must be >= 1")
    try:
        args.func(args)
    except (CliError, ConfigError, DataError, ArchiveError, analysis.AnalysisError, SamplerError, OSError) as err:
        print(f"tvisvar {args.command}: error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
