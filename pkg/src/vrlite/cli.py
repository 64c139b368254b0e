"""Command-line benchmark runner.

Exit codes: 0 on success, 2 when the run (or every sweep point)
diverges, 1 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    ALGOS,
    DEFAULT_GRID,
    DEFAULT_LAMBDA,
    DEFAULT_TARGET,
    MODES,
    TRANSPORTS,
    ExperimentConfig,
    epochs_to_target,
    run_experiment,
    stepsize_sweep,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGED = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; this tool reserves 2
    # for divergence, so usage problems exit 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vrlite-bench",
                description="Run one optimizer configuration (or a stepsize "
                            "sweep) and write per-epoch metrics as CSV.")
    p.add_argument("--algo", choices=ALGOS, required=True)
    p.add_argument("--mode", choices=MODES, default="seq",
                   help="seq runs one process; sync/async need --algo vrlite")
    p.add_argument("--dataset", required=True,
                   help="toy-class | toy-reg | libsvm:<path>")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--eta", type=float, help="constant stepsize")
    group.add_argument("--sweep", nargs="?", const="default", metavar="GRID",
                       help="sweep stepsizes; optional comma-separated grid, "
                            "default 1e-4 * 2^k for k=0..12")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA,
                   help="l2 weight (default 1e-4)")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--transport", choices=TRANSPORTS, default="sim")
    p.add_argument("--latency-ms", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-rel", type=float, default=DEFAULT_TARGET,
                   help="sweep target for the relative gradient norm")
    p.add_argument("--out", default="metrics.csv", help="CSV output path")
    return p


def _parse_grid(text: str) -> tuple[float, ...]:
    if text == "default":
        return DEFAULT_GRID
    try:
        grid = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"bad sweep grid {text!r}") from None
    if not grid:
        raise ValueError("sweep grid is empty")
    return grid


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    cfg = ExperimentConfig(
        algo=args.algo,
        dataset=args.dataset,
        eta=args.eta,
        mode=args.mode,
        lam=args.lam,
        epochs=args.epochs,
        workers=args.workers,
        transport=args.transport,
        latency_ms=args.latency_ms,
        seed=args.seed,
        target_rel=args.target_rel,
        out_path=args.out,
    )

    try:
        cfg.validate()
        if args.sweep is not None:
            grid = _parse_grid(args.sweep)
            sweep = stepsize_sweep(cfg, grid)
            for o in sweep.outcomes:
                status = ("diverged" if o.diverged
                          else f"target@{o.epochs_to_target}"
                          if o.epochs_to_target is not None else "no-target")
                print(f"eta={o.eta:.6g}  {status}")
            if sweep.best_eta is None:
                print("sweep found no stepsize reaching the target", file=sys.stderr)
                return EXIT_DIVERGED
            print(f"best eta: {sweep.best_eta:.6g}")
            # Re-run the winner for the full budget so the CSV is complete.
            from dataclasses import replace
            result = run_experiment(replace(cfg, eta=sweep.best_eta))
        else:
            result = run_experiment(cfg)
    except (ValueError, OSError) as e:
        print(f"vrlite-bench: error: {e}", file=sys.stderr)
        return EXIT_ERROR

    reached = epochs_to_target(result.rows, cfg.target_rel)
    last = result.rows[-1]
    print(f"wrote {cfg.out_path}: {len(result.rows)} rows, final "
          f"rel_grad_norm={last.rel_grad_norm:.3e}"
          + (f", target reached at epoch {reached}" if reached is not None else ""))
    if result.diverged:
        print("run diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
