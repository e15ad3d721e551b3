"""Render sweep tables as heatmaps and line charts.

    demsim sweep --scenario 2u --out-dir out
    python3 docs/plots/plot_tables.py out 2u

Writes PNG files next to the CSVs. Needs pandas and matplotlib.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def read(out: Path, scenario: str, table: str) -> pd.DataFrame:
    return pd.read_csv(out / f"{scenario}_{table}.csv", comment="#", na_values=["nan"])


def heatmaps(out: Path, scenario: str) -> None:
    df = read(out, scenario, "t_change")
    for ac, part in df.groupby("ac"):
        grid = part.pivot(index="beta", columns="alpha", values="percent")
        fig, ax = plt.subplots(figsize=(6, 4.5))
        im = ax.imshow(
            grid.values,
            origin="lower",
            aspect="auto",
            cmap="RdYlGn",
            extent=[grid.columns.min(), grid.columns.max(), grid.index.min(), grid.index.max()],
        )
        fig.colorbar(im, ax=ax, label="throughput change [%]")
        ax.set_xlabel("alpha")
        ax.set_ylabel("beta")
        ax.set_title(f"{scenario}: T_change[{ac}]")
        fig.savefig(out / f"{scenario}_t_change_{ac}.png", dpi=120, bbox_inches="tight")
        plt.close(fig)


def lines(out: Path, scenario: str, axis: str) -> None:
    avg = read(out, scenario, f"t_avg_vs_{axis}")
    change = read(out, scenario, f"t_change_vs_{axis}")
    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4))
    for (sched, ac), part in avg.groupby(["scheduler", "ac"]):
        left.plot(part[axis], part["value"], marker=".", label=f"{sched} {ac}")
    left.set_xlabel(axis)
    left.set_ylabel("average normalized throughput")
    left.legend()
    for ac, part in change.groupby("ac"):
        right.plot(part[axis], part["percent"], marker=".", label=ac)
    right.axhline(0, color="grey", linewidth=0.8)
    right.set_xlabel(axis)
    right.set_ylabel("average throughput change [%]")
    right.legend()
    fig.suptitle(f"{scenario}: averages vs {axis}")
    fig.savefig(out / f"{scenario}_vs_{axis}.png", dpi=120, bbox_inches="tight")
    plt.close(fig)


def main() -> None:
    out, scenario = Path(sys.argv[1]), sys.argv[2]
    if scenario != "1u":
        heatmaps(out, scenario)
        lines(out, scenario, "beta")
    lines(out, scenario, "alpha")
    print(f"plots written to {out}")


if __name__ == "__main__":
    main()
