"""Miniature success-rate sweeps (a desk-scale version of the benchmark).

Runs the union experiment over a small C grid and the novel-task
experiment over a C* grid, 15 trials per point, and prints the curves.
The full-scale protocol lives behind the ``isingmeta experiment-union``
and ``isingmeta experiment-novel`` CLI subcommands.
"""

from isingmeta import ExperimentConfig, run_novel_experiment, run_union_experiment


def main():
    union_config = ExperimentConfig(
        p=6, d=3, seed=42, trials=15, c_values=(5, 25, 100), delta_q=0.9
    )
    print(f"union experiment: p=6, d=3, K={union_config.resolved_k}, 15 trials/point")
    _, summary = run_union_experiment(union_config)
    for c, rate in summary["success_rate"].items():
        print(f"  C = {c:>3}: success rate {rate:.2f}")

    novel_config = ExperimentConfig(
        p=6, d=3, seed=43, trials=15, c_star_values=(5, 25, 100),
        union_source="estimated", union_c=50,
    )
    print("\nnovel-task experiment (union re-estimated at C = 50):")
    _, summary = run_novel_experiment(novel_config)
    for c, rate in summary["success_rate"].items():
        print(f"  C* = {c:>3}: signed success rate {rate:.2f}")


if __name__ == "__main__":
    main()
