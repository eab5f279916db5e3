"""``simulate`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .sim import emit_csv, emit_plot, run_sweep

log = logging.getLogger("bicmbcp")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="simulate",
        description="Monte-Carlo complexity/BER sweep of BICMB-CP bit-metric decoders.")
    p.add_argument("--config", help="flat 'key = value' configuration file")
    p.add_argument("--snr-db", help="comma-separated SNR grid in dB (overrides the file)")
    p.add_argument("--modes", help="comma-separated subset of exh,csd,psi")
    p.add_argument("--frames", type=int, help="channel blocks per SNR point")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out-csv", help="write the sweep table here")
    p.add_argument("--out-plot", help="write the complexity plot here (.svg or .pdf)")
    p.add_argument("--count-preprocessing", action="store_true", default=None,
                   help="include QR and check-table construction in the averages")
    for key in ("nt", "nr", "S", "P", "M", "K", "workers"):
        p.add_argument(f"--{key}", type=int, dest=key)
    p.add_argument("--rate", help="code rate: 1/2, 2/3 or 4/5")
    p.add_argument("--bp", help="precoded subchannels (0-based, comma-separated)")
    p.add_argument("--bn", help="non-precoded subchannels (0-based, comma-separated)")
    p.add_argument("--precoder", help="precoder matrix file (rows of re+imj tokens)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {
        "snr_db": args.snr_db, "modes": args.modes, "frames": args.frames, "seed": args.seed,
        "count_preprocessing": args.count_preprocessing, "rate": args.rate, "b_p": args.bp,
        "b_n": args.bn, "precoder": args.precoder,
        "n_t": args.nt, "n_r": args.nr, "S": args.S, "P": args.P, "M": args.M, "K": args.K,
        "workers": args.workers,
    }
    try:
        config = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    log.info("running %s", config.label())
    result = run_sweep(config)
    if args.out_csv:
        emit_csv(result, args.out_csv)
    if args.out_plot and result.rows:
        emit_plot(result, args.out_plot)
    for row in result.rows:
        print(f"{row.mode:>3} snr={row.snr_db:5.1f} dB  mults/metric={row.avg_mults_per_precoded_metric:.4g}"
              f"  ber={row.ber:.3g}  sd/instant={row.sd_execs_per_instant:.3g}")
    diag = {k: v for k, v in result.diagnostics.items() if k != "per_frame"}
    if diag:
        print("diagnostics:", diag)
    return 0


if __name__ == "__main__":
    sys.exit(main())
