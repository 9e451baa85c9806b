"""Command-line front end.

Heavy imports are deferred until after argument parsing so --threads can pin
the BLAS/OpenMP pool sizes before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fockbarrier",
        description="Barrier-transmission experiments for displaced number "
                    "states: exact Wigner dynamics vs the truncated Wigner "
                    "approximation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("config", help="TOML config path, or a preset name")
        p.add_argument("--out", help="output directory (default: "
                                     "config, then $FOCKBARRIER_OUT/<scenario>)")
        p.add_argument("--seed", type=int, help="override twa.seed")
        p.add_argument("--strict", action="store_true",
                       help="escalate truncation warnings to errors")
        p.add_argument("--threads", type=int,
                       help="thread count for BLAS/OpenMP pools")

    add_run_flags(sub.add_parser("run", help="run any scenario config"))
    add_run_flags(sub.add_parser("sweep-energy",
                                 help="transmission vs mean energy sweep"))
    add_run_flags(sub.add_parser("sweep-fock",
                                 help="transmission vs Fock index sweep"))
    pre = sub.add_parser("presets", help="list or emit bundled configs")
    pre_sub = pre.add_subparsers(dest="presets_command", required=True)
    pre_sub.add_parser("list", help="list preset names")
    emit = pre_sub.add_parser("emit", help="print a preset TOML to stdout")
    emit.add_argument("name")
    return parser


def _set_threads(n: int) -> None:
    for var in _THREAD_VARS:
        os.environ[var] = str(n)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if getattr(args, "threads", None):
        _set_threads(args.threads)

    from . import experiments as ex
    from .core import ConfigError, NumericError

    try:
        if args.command == "presets":
            if args.presets_command == "list":
                for name in ex.list_presets():
                    print(name)
            else:
                sys.stdout.write(ex.preset_text(args.name))
            return 0

        if os.path.exists(args.config):
            cfg = ex.load_config(args.config)
        else:
            cfg = ex.load_preset(args.config)
        ex.apply_overrides(cfg, seed=args.seed, strict=args.strict)
        outdir = ex.resolve_outdir(cfg, args.out)
        if args.command == "sweep-energy":
            manifest = ex.sweep_energy(cfg, outdir)
        elif args.command == "sweep-fock":
            manifest = ex.sweep_fock(cfg, outdir)
        else:
            manifest = ex.run(cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    print(f"{cfg.scenario}: {len(manifest.outputs)} files in {outdir} "
          f"({manifest.wall_clock_s:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
