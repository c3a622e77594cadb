"""Command-line entry point ``adp-lab``.

::

    adp-lab run CONFIG.toml [--out DIR]
    adp-lab figure1 --preset integration-step --out DIR
    adp-lab grid --preset convolution-hat --out DIR
    adp-lab initvals --preset convolution-step --out DIR
    adp-lab selftest
"""

import argparse
import logging
import sys
from pathlib import Path

from ..errors import AdpLabError
from .config import PRESET_IDS, ExperimentConfig, load_config
from .output import write_metrics_csv
from .runners import (
    execute,
    run_figure1,
    run_initial_value_study,
    run_method_grid,
    write_record,
)
from .selftest import run_selftest

_SINGLE = {"figure1": run_figure1, "grid": run_method_grid, "initvals": run_initial_value_study}


def build_parser():
    p = argparse.ArgumentParser(prog="adp-lab", description="Analytic deep prior experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run every task of a TOML config")
    r.add_argument("config", type=Path)
    r.add_argument("--out", type=Path, default=None, help="override the config's output directory")
    for name, help_ in (("figure1", "start / early-stopped / limit / Tikhonov comparison"),
                        ("grid", "four methods with a-posteriori weight search"),
                        ("initvals", "dependence on the initial operator")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--preset", required=True, choices=PRESET_IDS)
        s.add_argument("--out", type=Path, required=True)
        s.add_argument("--config", type=Path, default=None, help="TOML config for solver settings")
        s.add_argument("--seed", type=int, default=None)
    st = sub.add_parser("selftest", help="quick checks of the lemma constructions and solvers")
    st.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            return 0 if run_selftest(seed=args.seed) else 1
        if args.command == "run":
            cfg = load_config(args.config)
            out = args.out or Path(cfg.out)
            records = execute(cfg, out)
            print(f"wrote {len(records)} records to {out}")
            return 0
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg = cfg.with_overrides(seed=args.seed)
        rec = _SINGLE[args.command](cfg, args.preset)
        d = write_record(rec, args.out, cfg.record_wall_time)
        write_metrics_csv(Path(args.out) / "metrics.csv", rec.rows)
        for row in rec.rows:
            print(f"{row['method']:<28} l2_error={row['l2_error']:.6g}  psnr={row['psnr']:.4g}")
        print(f"outputs in {d}")
        return 0
    except (AdpLabError, OSError, ValueError) as exc:
        print(f"adp-lab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
