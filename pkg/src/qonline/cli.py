"""Command line entry point ``qonline``.

Exit codes: 0 when every checked bound holds, 2 on a bound violation,
1 on usage or validation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import learn
from .errors import QOnlineError
from .harness import ExperimentConfig, run_experiment, summary_text, write_outputs

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2

CONFIG_SCHEMA = """config file: one JSON object with any of the keys
  kind, n, T, variant (rftl|mmw), loss (L1|L2), feedback (exact|noisy|bernoulli),
  feedback_noise, epsilon, eta, k, adversary (random|adaptive|adaptive-max-loss|fixture), fixture,
  hidden_state, seed, output, instances, check_optimality, panel_size, kraus (sqrt|patterns)
unknown keys are rejected; command-line flags override file values."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n{CONFIG_SCHEMA}\n")
        raise SystemExit(EXIT_USAGE)


_FLAGS = {
    # flag: (config key, type)
    "--n": ("n", int),
    "--T": ("T", int),
    "--variant": ("variant", str),
    "--loss": ("loss", str),
    "--feedback": ("feedback", str),
    "--feedback-noise": ("feedback_noise", float),
    "--epsilon": ("epsilon", float),
    "--eta": ("eta", float),
    "--k": ("k", int),
    "--adversary": ("adversary", str),
    "--fixture": ("fixture", str),
    "--hidden-state": ("hidden_state", str),
    "--seed": ("seed", int),
    "--instances": ("instances", int),
    "--panel-size": ("panel_size", int),
    "--kraus": ("kraus", str),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qonline", description="Online learning of quantum states: simulations and bound checks.",
                     epilog=CONFIG_SCHEMA, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind in ("regret", "mistake", "postselect", "union-bound", "rac"):
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", help="JSON config file")
        for flag, (key, typ) in _FLAGS.items():
            p.add_argument(flag, dest=key, type=typ, default=None)
        p.add_argument("--check-optimality", dest="check_optimality", action="store_true", default=None)
        p.add_argument("--out", dest="output", help="directory for records.csv and summary.json")
    b = sub.add_parser("bounds", help="evaluate the regret and mistake bounds")
    b.add_argument("--variant", required=True, choices=learn.VARIANTS)
    b.add_argument("--n", required=True, type=int)
    b.add_argument("--T", type=int)
    b.add_argument("--L", type=float, default=1.0)
    b.add_argument("--epsilon", type=float)
    return parser


def _bounds(args) -> int:
    if args.T is None and args.epsilon is None:
        raise QOnlineError("bounds needs --T (regret bound) and/or --epsilon (mistake bound)")
    out = {"variant": args.variant, "n": args.n}
    if args.T is not None:
        out["T"] = args.T
        out["L"] = args.L
        out["regret_bound"] = learn.theoretical_regret_bound(args.variant, args.T, args.n, args.L)
        out["default_eta"] = learn.default_eta(args.variant, args.T, args.n, args.L)
    if args.epsilon is not None:
        out["epsilon"] = args.epsilon
        out["mistake_bound"] = learn.mistake_bound(args.variant, args.n, args.epsilon)
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def _experiment(args) -> int:
    values = {}
    if args.config:
        values.update(json.loads(Path(args.config).read_text()))
        if not isinstance(values, dict):
            raise QOnlineError("config must be a JSON object")
    elif args.n is None:
        raise QOnlineError("either --config or --n is required")
    for key in [k for k, _ in _FLAGS.values()] + ["check_optimality", "output"]:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    values["kind"] = args.command
    cfg = ExperimentConfig.from_dict(values)
    result = run_experiment(cfg)
    if cfg.output:
        write_outputs(result, cfg.output)
    sys.stdout.write(summary_text(result.summary))
    return EXIT_OK if result.passed else EXIT_VIOLATION


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bounds":
            return _bounds(args)
        return _experiment(args)
    except (QOnlineError, OSError, json.JSONDecodeError, TypeError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"qonline: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
