"""CSV writers and optional matplotlib figures.

CSV files use a fixed column order, six decimal places and LF endings so
that identical runs give byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

from wsnsim.engine import MetricsReport, SweepRow

METRICS_COLUMNS = (
    "seed", "originated", "delivered", "dropped_queue", "dropped_link", "missed_deadline",
    "drop_percent", "success_rate", "mean_r", "energy_prioritizer", "energy_sched_unit",
    "energy_congestion", "energy_implicit", "energy_tx_total",
)
TIMESERIES_COLUMNS = ("time_ms", "node_id", "queue_len", "sched_rate", "service_rate", "ratio")
SWEEP_COLUMNS = (
    "parameter", "value", "runs", "mean_r", "mean_r_stderr", "drop_percent", "drop_stderr",
    "success_rate", "success_stderr",
)
COMPARE_COLUMNS = (
    "seed", "rate_control", "drop_percent", "success_rate", "dropped_queue",
    "energy_prioritizer", "energy_sched_unit", "energy_congestion", "energy_implicit",
    "energy_tx_total",
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def metrics_row(rep: MetricsReport) -> tuple:
    e = rep.energy
    return (rep.seed, rep.originated, rep.delivered, rep.dropped_queue, rep.dropped_link,
            rep.missed_deadline, rep.drop_percent, rep.success_rate, rep.mean_r,
            e.prioritizer, e.scheduling_unit, e.congestion, e.implicit_congestion,
            e.transmission)


def write_metrics(path, reports: Sequence[MetricsReport]) -> Path:
    return write_csv(path, METRICS_COLUMNS, (metrics_row(r) for r in reports))


def write_timeseries(path, rep: MetricsReport) -> Path:
    return write_csv(path, TIMESERIES_COLUMNS, rep.timeseries)


def write_sweep(path, key: str, rows: Sequence[SweepRow]) -> Path:
    return write_csv(path, SWEEP_COLUMNS, (
        (key, row.value, row.runs, row.mean_r, row.mean_r_stderr, row.drop_percent,
         row.drop_stderr, row.success_rate, row.success_stderr) for row in rows))


def compare_row(rep: MetricsReport, enabled: bool) -> tuple:
    e = rep.energy
    return (rep.seed, enabled, rep.drop_percent, rep.success_rate, rep.dropped_queue,
            e.prioritizer, e.scheduling_unit, e.congestion, e.implicit_congestion,
            e.transmission)


def write_compare(path, pairs: Sequence[tuple[MetricsReport, MetricsReport]]) -> Path:
    rows = []
    for on, off in pairs:
        rows.append(compare_row(on, True))
        rows.append(compare_row(off, False))
    return write_csv(path, COMPARE_COLUMNS, rows)


def write_trace(path, rep: MetricsReport) -> Path:
    path = Path(path)
    path.write_text("\n".join(rep.trace or []) + "\n", newline="\n")
    return path


# -- figures ---------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({"font.size": 10, "axes.grid": True, "grid.alpha": 0.3,
                         "savefig.dpi": 150, "figure.figsize": (5.0, 3.4)})
    return plt


def plot_sweep(out_dir: str | Path, rows: Sequence[SweepRow]) -> list[Path]:
    """Drop % and success rate against achieved service ratio."""
    plt = _pyplot()
    out_dir = Path(out_dir)
    rows = sorted(rows, key=lambda r: r.mean_r)
    x = [r.mean_r for r in rows]
    written = []
    for name, ys, errs, label in (
        ("drop_vs_ratio.png", [r.drop_percent for r in rows], [r.drop_stderr for r in rows],
         "Packet drop (%)"),
        ("success_vs_ratio.png", [100 * r.success_rate for r in rows],
         [100 * r.success_stderr for r in rows], "Success rate (%)"),
    ):
        fig, ax = plt.subplots()
        ax.errorbar(x, ys, yerr=errs, marker="o", capsize=3)
        ax.set_xlabel("Packet service ratio r")
        ax.set_ylabel(label)
        fig.tight_layout()
        fig.savefig(out_dir / name)
        plt.close(fig)
        written.append(out_dir / name)
    return written


def plot_compare(out_dir: str | Path,
                 pairs: Sequence[tuple[MetricsReport, MetricsReport]]) -> Path:
    """Mean per-component energy with rate control on and off."""
    plt = _pyplot()
    labels = ("Prioritizer", "Congestion", "Scheduling unit", "Implicit congestion")

    def means(idx):
        ledgers = [pair[idx].energy for pair in pairs]
        n = max(1, len(ledgers))
        return [sum(getattr(e, a) for e in ledgers) / n
                for a in ("prioritizer", "congestion", "scheduling_unit", "implicit_congestion")]

    on, off = means(0), means(1)
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    pos = range(len(labels))
    ax.bar([p - 0.2 for p in pos], off, width=0.4, label="rate control off")
    ax.bar([p + 0.2 for p in pos], on, width=0.4, label="rate control on")
    ax.set_xticks(list(pos), labels, rotation=15)
    ax.set_ylabel("Energy (J)")
    ax.legend()
    fig.tight_layout()
    path = Path(out_dir) / "energy_components.png"
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_run(out_dir: str | Path, rep: MetricsReport) -> list[Path]:
    """Path-length buckets and the network-mean queue/ratio time series."""
    plt = _pyplot()
    out_dir = Path(out_dir)
    written = []

    fig, ax = plt.subplots()
    hops = sorted(rep.path_length_table)
    ax.bar([str(h) for h in hops], [rep.path_length_table[h] for h in hops])
    ax.set_xlabel("Hops to sink (BFS)")
    ax.set_ylabel("Mean path length found")
    fig.tight_layout()
    fig.savefig(out_dir / "path_length.png")
    plt.close(fig)
    written.append(out_dir / "path_length.png")

    by_time: dict[int, list] = {}
    for t, _node, qlen, _sch, _srv, ratio in rep.timeseries:
        by_time.setdefault(t, []).append((qlen, ratio))
    if by_time:
        ts = sorted(by_time)
        fig, ax = plt.subplots()
        ax.plot([t / 1000 for t in ts],
                [sum(q for q, _ in by_time[t]) / len(by_time[t]) for t in ts], label="queue")
        ax.plot([t / 1000 for t in ts],
                [sum(r for _, r in by_time[t]) / len(by_time[t]) for t in ts], label="ratio r")
        ax.set_xlabel("Time (s)")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / "timeseries.png")
        plt.close(fig)
        written.append(out_dir / "timeseries.png")
    return written
