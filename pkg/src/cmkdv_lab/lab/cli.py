"""``cmkdv-lab`` command line.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O problem.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigurationError, LabError
from .config import RunConfig, parse_value
from .io import LabIOError, RunManifest
from .plots import FIGURES, emit_plot_script
from .runner import default_cache_dir, profile_cache, run, sweep

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _parser():
    p = _Parser(prog="cmkdv-lab", description="Numerical experiments for complex mKdV.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", type=Path, help="key = value configuration file")
            sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                            help="override one configuration entry")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--force", action="store_true", help="recompute even if outputs are current")

    sp = sub.add_parser("run", help="evolve one configuration")
    common(sp)
    sp = sub.add_parser("sweep", help="run a configuration over several values of one entry")
    common(sp)
    sp.add_argument("--axis", required=True)
    sp.add_argument("--values", required=True, help="comma separated")
    sp.add_argument("--workers", type=int, default=1)
    sp = sub.add_parser("plot", help="write plotting scripts for a run or sweep directory")
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--figure", choices=FIGURES + ("all",), default="all")
    sp = sub.add_parser("verify", help="check that a run directory matches its manifest")
    sp.add_argument("--out", type=Path, required=True)
    sp = sub.add_parser("profile-cache", help="inspect or clear calibrated profiles")
    sp.add_argument("action", choices=("inspect", "clear"))
    sp.add_argument("--cache-dir", type=Path, default=None)
    return p


def _load_config(args) -> RunConfig:
    text = args.config.read_text() if args.config else ""
    text += "\n" + "\n".join(args.set)
    overrides = {"output_dir": str(args.out)} if args.out else {}
    return RunConfig.from_text(text, **overrides)


def _report(manifest: RunManifest) -> int:
    where = manifest.directory
    if manifest.cache_hit:
        print(f"{where}: up to date (cache hit, {manifest.config_hash[:12]})")
    else:
        print(f"{where}: {manifest.status} ({len(manifest.files)} files)")
    if not manifest.ok:
        print(f"  {manifest.error}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _plot(out: Path, figure: str) -> int:
    figures = FIGURES if figure == "all" else (figure,)
    if (out / RunManifest.FILENAME).exists():
        source = RunManifest.load(out)
    elif (out / "aggregate.csv").exists():
        source = out
    else:
        raise LabIOError(f"{out} holds neither a run manifest nor a sweep aggregate")
    written, skipped = [], []
    for name in figures:
        if (name == "beta_sweep") != (source is out):
            continue
        try:
            written.append(emit_plot_script(source, name))
        except LabError as exc:
            if figure != "all":
                raise
            skipped.append(f"{name}: {exc}")
    for path in written:
        print(path)
    for line in skipped:
        print(f"skipped {line}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "run":
            return _report(run(_load_config(args), force=args.force))
        if args.verb == "sweep":
            base = _load_config(args)
            values = [parse_value(args.axis, v.strip()) for v in args.values.split(",")]
            manifests = sweep(base, args.axis, values, workers=args.workers, force=args.force)
            codes = [_report(m) for m in manifests]
            print(Path(base.output_dir) / "aggregate.csv")
            return max(codes)
        if args.verb == "plot":
            return _plot(args.out, args.figure)
        if args.verb == "verify":
            problems = RunManifest.load(args.out).verify()
            for line in problems:
                print(line)
            if problems:
                return EXIT_IO
            print(f"{args.out}: all indexed files present and unchanged")
            return EXIT_OK
        if args.verb == "profile-cache":
            cache = profile_cache(args.cache_dir or default_cache_dir())
            if args.action == "clear":
                files = cache.entries()[1]
                cache.clear()
                print(f"removed {len(files)} profile files from {cache.directory}")
            else:
                for path in cache.entries()[1]:
                    print(path)
            return EXIT_OK
    except ConfigurationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (LabIOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
