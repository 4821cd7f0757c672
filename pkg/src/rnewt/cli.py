"""Command line interface: ``rnewt gen | fit | sweep | plot``.

Exit status is 0 on success, 1 on a configuration error and 2 on any other
failure. ``RNEWT_LOG`` sets the log level (default ``WARNING``).
"""

import argparse
import json
import logging
import os
import sys

from . import experiment
from .datagen import generate, write_csv
from .exceptions import ConfigError
from .svgplot import emit_plot

log = logging.getLogger("rnewt")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _common(parser):
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--scenario", choices=["LinearHuber", "LogisticFlip", "LinearPareto"])
    parser.add_argument("--solver", choices=list(experiment.SOLVERS))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--output-dir", dest="output_dir")


def build_parser():
    parser = argparse.ArgumentParser(prog="rnewt", description="Robust Newton experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a simulated dataset as CSV")
    _common(p)
    p.add_argument("--out", help="output CSV path (default: <output-dir>/data_seed<seed>.csv)")

    p = sub.add_parser("fit", help="run one configuration over its repeat seeds")
    _common(p)
    p.add_argument("--repeats", type=int)

    p = sub.add_parser("sweep", help="run a parameter grid and write summary.csv")
    _common(p)
    p.add_argument("--repeats", type=int)
    p.add_argument("--grid", help="JSON file mapping keys to lists of values")
    p.add_argument("--param", action="append", default=[], metavar="KEY=V1,V2",
                   help="grid axis; may be repeated")

    p = sub.add_parser("plot", help="plot trace CSVs as SVG")
    p.add_argument("traces", nargs="+")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--title", default="")
    return parser


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_param(spec):
    """``"epsilon=0.05,0.1"`` -> ``("epsilon", [0.05, 0.1])``."""
    if "=" not in spec:
        raise ConfigError(f"expected KEY=V1,V2, got {spec!r}", field="param")
    key, values = spec.split("=", 1)
    vals = [_parse_value(v.strip()) for v in values.split(",") if v.strip()]
    if not vals:
        raise ConfigError("no values given", field=f"grid.{key}")
    return key.strip(), vals


def load_run_config(args):
    """Config file values overridden by explicit flags."""
    cfg = experiment.load_config(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    for key in ("scenario", "solver", "seed", "epsilon", "jobs", "output_dir", "repeats"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def cmd_gen(args):
    cfg = experiment.resolve_config(load_run_config(args))
    dataset = generate(experiment.scenario_spec(cfg, cfg["seed"]))
    out = args.out or os.path.join(cfg["output_dir"], f"data_seed{cfg['seed']}.csv")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    write_csv(dataset, out)
    print(out)


def cmd_fit(args):
    for path in experiment.run_experiment(load_run_config(args)):
        print(path)


def cmd_sweep(args):
    grid = {}
    if args.grid:
        grid.update(experiment.load_config(args.grid))
    for spec in args.param:
        key, vals = parse_param(spec)
        grid[key] = vals
    rows = experiment.sweep(load_run_config(args), grid)
    for row in rows:
        print(json.dumps(row, sort_keys=True))


def cmd_plot(args):
    labels = emit_plot(args.traces, args.out, title=args.title)
    log.info("plotted %d series", len(labels))
    print(args.out)


COMMANDS = {"gen": cmd_gen, "fit": cmd_fit, "sweep": cmd_sweep, "plot": cmd_plot}


def main(argv=None):
    level = os.environ.get("RNEWT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # bad flags are configuration errors; --help exits cleanly
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to status 2
        log.debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
