"""``xresil`` command line.

Exit codes: 0 success, 1 configuration error, 2 data or I/O error, 3 internal
error. Failures print one JSON object to stderr (and ``error.json`` in the
output directory when it exists).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis.sweep import parse_probabilities
from .config import ClusterSpec, SensitivitySpec, SweepSpec, load_config
from .errors import ConfigError, DataError, XresilError
from .identify import Strategy
from .pipeline import Pipeline, mixes_from, run
from .synth import WorldSpec, generate_world, write_world

log = logging.getLogger("xresil")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the root seed")
    p.add_argument("--mode", choices=("top", "weighted"), default=None, help="override the prediction mode")
    p.add_argument("--log-level", default="WARNING", choices=("DEBUG", "INFO", "WARNING", "ERROR"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xresil", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"xresil {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("run", help="full pipeline: identify, then every configured analysis"))
    _common(sub.add_parser("embed", help="write the CS-NC, CS-AS and PC-NC maps"))
    _common(sub.add_parser("identify", help="write impacted_segments.csv"))

    p = sub.add_parser("analyze", help="analyses over an impacted-segments file")
    _common(p)
    p.add_argument("--impacted", required=True, help="impacted_segments.csv from `identify`")

    p = sub.add_parser("sweep", help="impact versus failure probability and sampling strategy")
    _common(p)
    p.add_argument("--p", default=None, help="'start:stop:step' or comma list")
    p.add_argument("--strategies", default=None, help="comma list of top,random,weighted")
    p.add_argument("--runs", type=int, default=None)

    p = sub.add_parser("cluster", help="Ward clustering of N-Countries by P-Country usage")
    _common(p)
    p.add_argument("--cut", type=float, default=None, help="distance threshold for flat clusters")
    p.add_argument("--features", choices=("correlation", "normalized"), default=None)

    p = sub.add_parser("sensitivity", help="impact under random cross-layer mapping errors")
    _common(p)
    p.add_argument("--mix", action="append", default=None, help="'top,secondary,incorrect' percentages; repeatable")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--impacted", default=None, help="impacted_segments.csv; identified from the config if omitted")

    p = sub.add_parser("synth", help="generate a synthetic world and its run config")
    _common(p, config=False)
    p.add_argument("--spec", default=None, help="world spec JSON; defaults otherwise")
    return parser


def _pipeline(args, command: str) -> Pipeline:
    cfg = load_config(args.config).with_overrides(args.seed, args.mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return Pipeline(cfg, out, command)


def _cmd_synth(args) -> None:
    spec = WorldSpec()
    if args.spec:
        try:
            spec = WorldSpec.from_dict(json.loads(Path(args.spec).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.spec}: invalid JSON ({exc})") from None
        except OSError as exc:
            raise ConfigError(f"cannot read world spec {args.spec}: {exc.strerror or exc}") from None
    if args.seed is not None:
        spec = WorldSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    out = write_world(generate_world(spec), args.out, spec)
    if args.mode is not None:
        cfg_path = out / "config.json"
        cfg = json.loads(cfg_path.read_text())
        cfg["mode"] = args.mode
        cfg_path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")


def dispatch(args) -> None:
    cmd = args.command
    if cmd == "synth":
        _cmd_synth(args)
        return
    if cmd == "run":
        cfg = load_config(args.config).with_overrides(args.seed, args.mode)
        run(cfg, args.out)
        return
    p = _pipeline(args, cmd)
    a = p.cfg.analyses
    if cmd == "embed":
        p.write_maps()
    elif cmd == "identify":
        p.write_impacted(p.identify())
    elif cmd == "analyze":
        p.analyze(p.load_impacted(args.impacted))
    elif cmd == "sweep":
        base = a.sweep or SweepSpec()
        try:
            probs = tuple(parse_probabilities(args.p)) if args.p else base.probabilities
            strategies = (
                tuple(Strategy.parse(s) for s in args.strategies.split(",")) if args.strategies else base.strategies
            )
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from None
        if any(not 0.0 < x <= 1.0 for x in probs):
            raise ConfigError("sweep: probabilities must lie in (0, 1]")
        runs = args.runs if args.runs is not None else base.runs
        if runs < 1:
            raise ConfigError("sweep: --runs must be >= 1")
        p.sweep(SweepSpec(probs, strategies, runs))
    elif cmd == "cluster":
        base = a.cluster or ClusterSpec()
        p.cluster(ClusterSpec(args.cut if args.cut is not None else base.cut, args.features or base.features))
    elif cmd == "sensitivity":
        base = a.sensitivity or SensitivitySpec()
        mixes = mixes_from(args.mix) if args.mix else base.mixes
        rounds = args.rounds if args.rounds is not None else base.rounds
        if rounds < 1:
            raise ConfigError("sensitivity: --rounds must be >= 1")
        impacted = p.load_impacted(args.impacted) if args.impacted else p.identify()
        p.sensitivity(SensitivitySpec(mixes, rounds), impacted)
    p.finish()


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (DataError, OSError)):
        return EXIT_DATA
    return EXIT_INTERNAL


def _report_error(exc: BaseException, out: Optional[str]) -> int:
    code = exit_code_for(exc)
    kind = "IoError" if isinstance(exc, OSError) and not isinstance(exc, XresilError) else type(exc).__name__
    err = {"error": kind, "exit_code": code, "stage": getattr(exc, "stage", None), "message": str(exc)}
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    if out and Path(out).is_dir():
        try:
            (Path(out) / "error.json").write_text(json.dumps(err, indent=2, sort_keys=True) + "\n")
        except OSError:
            pass
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    try:
        dispatch(args)
    except (XresilError, OSError) as exc:
        return _report_error(exc, getattr(args, "out", None))
    except Exception as exc:  # noqa: BLE001 - last-resort internal error report
        log.debug("internal error", exc_info=True)
        return _report_error(exc, getattr(args, "out", None))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
