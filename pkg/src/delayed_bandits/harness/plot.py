"""Optional SVG rendering of ``aggregate.csv`` (needs matplotlib)."""
from __future__ import annotations

import csv
from pathlib import Path


def plot_aggregate(aggregate_csv: str | Path, out_path: str | Path) -> Path:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise RuntimeError("plotting needs matplotlib: pip install 'artifact[plot]'") from exc

    curves: dict[str, tuple[list[int], list[float], list[float]]] = {}
    with open(aggregate_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            ts, means, ses = curves.setdefault(row["policy"], ([], [], []))
            ts.append(int(row["checkpoint_t"]))
            means.append(float(row["mean"]))
            ses.append(float(row["se"]))

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, (ts, means, ses) in curves.items():
        line = ax.plot(ts, means, label=name)[0]
        lo = [m - 2 * s for m, s in zip(means, ses)]
        hi = [m + 2 * s for m, s in zip(means, ses)]
        ax.fill_between(ts, lo, hi, color=line.get_color(), alpha=0.2, linewidth=0)
    ax.set_xlabel("round")
    ax.set_ylabel("pseudo-regret")
    ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path
