"""Command line scenario runner.

    eprgeo run <scenario> --config <file.ini> --out <dir> [--override section.key=value]...

Exit codes: 0 success, 2 unknown scenario, 3 invalid configuration.
The BLAS thread count can be capped with ``EPRGEO_THREADS``.
"""
import argparse
import contextlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, default_config_text, load_config, snapshot
from .scenarios import SCENARIOS

EXIT_OK, EXIT_UNKNOWN_SCENARIO, EXIT_BAD_CONFIG = 0, 2, 3
THREADS_ENV = "EPRGEO_THREADS"


def _thread_limit():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=int(n))


def _fmt(x):
    return repr(float(x))


def write_table(table, path):
    names = list(table.columns)
    cols = [np.asarray(table.columns[n], dtype=float) for n in names]
    with open(path, "w", newline="\n") as fh:
        fh.write("# %s\n" % table.name)
        fh.write("# units: %s\n" % ", ".join("%s [%s]" % (n, table.units.get(n, "")) for n in names))
        for key in sorted(table.meta):
            fh.write("# %s = %s\n" % (key, json.dumps(table.meta[key], sort_keys=True, default=float)))
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def run_scenario(name, config_path, out_dir, overrides=()):
    """Run ``name`` and write its tables and ``manifest.json`` into ``out_dir``."""
    if name not in SCENARIOS:
        raise KeyError(name)
    run = load_config(config_path, overrides)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    with _thread_limit():
        tables = SCENARIOS[name](run)
    files = []
    for table in tables:
        fname = "%s__%s.csv" % (name, table.name)
        write_table(table, out / fname)
        files.append(fname)
    manifest = {
        "scenario": name,
        "config_path": str(config_path),
        "overrides": list(overrides),
        "config": snapshot(run),
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
        "files": files,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return manifest


def main(argv=None):
    parser = argparse.ArgumentParser(prog="eprgeo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a named scenario")
    p_run.add_argument("scenario")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE")
    sub.add_parser("scenarios", help="list scenario names")
    sub.add_parser("default-config", help="print a configuration with every default")
    args = parser.parse_args(argv)

    if args.command == "scenarios":
        print("\n".join(SCENARIOS))
        return EXIT_OK
    if args.command == "default-config":
        sys.stdout.write(default_config_text())
        return EXIT_OK
    if args.scenario not in SCENARIOS:
        print("error: unknown scenario %r (choose from %s)" % (args.scenario, ", ".join(SCENARIOS)),
              file=sys.stderr)
        return EXIT_UNKNOWN_SCENARIO
    try:
        manifest = run_scenario(args.scenario, args.config, args.out, args.override)
    except ConfigError as exc:
        for line in exc.diagnostics:
            print("config error: %s" % line, file=sys.stderr)
        return EXIT_BAD_CONFIG
    except OSError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_BAD_CONFIG
    print("%s: wrote %d files to %s in %.1f s" % (args.scenario, len(manifest["files"]), args.out,
                                                  manifest["wall_time_s"]))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
