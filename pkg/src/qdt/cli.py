"""Command-line front end: ``qdt {stp,roc,threshold,persuade,simulate}``.

Precedence for every field: command-line flag > config file > ``QDT_SEED``
(seed only) > built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from . import experiments as ex
from .config import EXPERIMENTS, FIELDS, RunConfig, coerce_field, from_mapping, parse_config
from .errors import ConfigError

OUTPUT_NAME = {
    "stp": "stp.csv",
    "roc": "roc.csv",
    "threshold": "threshold.csv",
    "persuade": "persuade.json",
    "simulate": "mc.csv",
}

# Flags added by hand; everything else is generated from RunConfig fields.
_MANUAL = {"experiment", "seed", "out"}


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _add_field_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--seed", type=int, help="random seed (64-bit unsigned)")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    for name, f in FIELDS.items():
        if name in _MANUAL:
            continue
        flag = "--" + name.replace("_", "-")
        default = f.default
        if isinstance(default, bool):
            parser.add_argument(flag, dest=name, type=_bool, metavar="BOOL")
        elif isinstance(default, tuple):
            parser.add_argument(flag, dest=name, type=float, nargs=2, metavar=("H0", "H1"))
        elif isinstance(default, int):
            parser.add_argument(flag, dest=name, type=int)
        elif isinstance(default, float):
            parser.add_argument(flag, dest=name, type=float)
        else:
            parser.add_argument(flag, dest=name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdt", description="Quantum prospect-theory detection experiments.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    helps = {
        "stp": "sure-thing-principle sweep over the attraction factor",
        "roc": "quantum and classical ROC curves",
        "threshold": "best-response threshold against the prior p(H1)",
        "persuade": "optimize the sender's signaling coefficients",
        "simulate": "Monte-Carlo run of the full protocol",
    }
    for name in EXPERIMENTS:
        _add_field_flags(sub.add_parser(name, help=helps[name]))
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    cfg = RunConfig()
    if environ.get("QDT_SEED"):
        try:
            seed = int(environ["QDT_SEED"])
        except ValueError as exc:
            raise ConfigError(f"QDT_SEED is not an integer: {environ['QDT_SEED']!r}", field="seed") from exc
        cfg = from_mapping({"seed": seed}, cfg)
    if args.config:
        cfg = parse_config(Path(args.config).read_text(), cfg)
    overrides = {"experiment": args.experiment}
    for name in FIELDS:
        value = getattr(args, name, None)
        if value is not None and name != "experiment":
            overrides[name] = list(value) if isinstance(value, list) else value
    return from_mapping({k: coerce_field(k, v) for k, v in overrides.items()}, cfg)


def _write_sidecar(cfg: RunConfig, out_file: Path):
    out_file.with_name(out_file.stem + ".config.json").write_text(cfg.dumps())


def run(cfg: RunConfig) -> int:
    """Run one experiment, write its outputs and print a one-line summary."""
    out_dir = Path(cfg.out)
    out_file = out_dir / OUTPUT_NAME[cfg.experiment]
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        headline = _dispatch(cfg, out_file)
        _write_sidecar(cfg, out_file)
    except OSError as exc:
        print(f"qdt {cfg.experiment}: cannot write output to {out_file}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report the chain and fail
        chain = []
        err = exc
        while err is not None:
            chain.append(f"{type(err).__name__}: {err}")
            err = err.__cause__ or err.__context__
        print(f"qdt {cfg.experiment}: failed: " + " <- ".join(chain), file=sys.stderr)
        return 1
    print(f"experiment={cfg.experiment} seed={cfg.seed} out={out_file} {headline}")
    return 0


def _dispatch(cfg: RunConfig, out_file: Path) -> str:
    if cfg.experiment == "stp":
        res = ex.stp_experiment(cfg)
        ex.write_stp_csv(res, out_file)
        onset = "none" if res.violation_onset is None else repr(res.violation_onset)
        return (f"p_defect_given_defect={res.p_defect_given_defect:.6g} "
                f"p_defect_given_coop={res.p_defect_given_coop:.6g} g={res.g:.6g} violation_onset={onset}")
    if cfg.experiment == "roc":
        curves = ex.roc_experiment(cfg)
        ex.write_roc_csv(curves, out_file)
        return " ".join(f"auc_{c.label}={c.auc():.6g}" for c in curves)
    if cfg.experiment == "threshold":
        curve = ex.threshold_vs_prior(cfg)
        ex.write_threshold_csv(curve, out_file)
        taus = curve.tau_stars
        return f"tau_star_first={taus[0]:.6g} tau_star_last={taus[-1]:.6g}"
    if cfg.experiment == "persuade":
        sol = ex.persuade_experiment(cfg)
        out_file.write_text(sol.dumps() + "\n")
        return f"sender_value={sol.value:.6g} accepted_steps={len(sol.trace) - 1}"
    summary = ex.monte_carlo_protocol(cfg)
    ex.write_mc_csv(summary, out_file)
    return (f"P_D={summary.p_detect_emp:.6g} P_F={summary.p_false_emp:.6g} "
            f"P_D_trace={summary.p_detect_trace:.6g} P_F_trace={summary.p_false_trace:.6g}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"qdt: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
