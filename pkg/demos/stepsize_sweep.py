"""Walkthrough: picking a constant stepsize by sweeping a grid.

The sweep runs one configuration per grid point with early stopping at
the target metric, then picks the stepsize that reached the target in
the fewest epochs (ties go to the smaller stepsize, so the choice never
depends on grid order). Diverged points and points that never reach the
target are excluded. The winner is re-run for the full budget and its
per-epoch metrics land in a CSV.

Run as: python3 demos/stepsize_sweep.py
"""

from dataclasses import replace

from vrlite.bench import (
    DEFAULT_GRID,
    ExperimentConfig,
    run_experiment,
    stepsize_sweep,
)

OUT = "sweep-winner.csv"


def main():
    cfg = ExperimentConfig(algo="vrlite", dataset="toy-reg", eta=None,
                           epochs=30, seed=0, target_rel=1e-8)
    print(f"sweeping {len(DEFAULT_GRID)} stepsizes on toy ridge regression, "
          f"target rel_grad_norm <= {cfg.target_rel:g}")
    print()

    sweep = stepsize_sweep(cfg)
    print(f"{'eta':>10s} {'epochs-to-target':>18s} {'status':>10s}")
    for o in sweep.outcomes:
        if o.diverged:
            status, reached = "diverged", "-"
        elif o.epochs_to_target is None:
            status, reached = "too slow", "-"
        else:
            status, reached = "ok", str(o.epochs_to_target)
        print(f"{o.eta:10.4g} {reached:>18s} {status:>10s}")

    print()
    if sweep.best_eta is None:
        print("no stepsize reached the target; tighten the grid or budget")
        return

    print(f"winner: eta={sweep.best_eta:g}")
    result = run_experiment(replace(cfg, eta=sweep.best_eta, out_path=OUT))
    final = result.rows[-1]
    print(f"re-ran winner for the full budget; wrote {OUT} "
          f"({len(result.rows)} rows, final rel {final.rel_grad_norm:.2e})")


if __name__ == "__main__":
    main()
