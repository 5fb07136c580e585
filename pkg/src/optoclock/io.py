"""File formats: trajectory CSV, tick-times files, metrics JSON, manifests.

All outputs are deterministic byte-for-byte for identical inputs: keys
sorted, floats rendered with repr, no timestamps.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .runner import SampleSeries
from .tickstats import TickRecord

TRAJECTORY_COLUMNS = ("t", "x", "p", "p1", "p2", "p3", "nphot")


def write_trajectory_csv(path, samples: SampleSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        cols = [samples.t, samples.x, samples.p, samples.p1, samples.p2,
                samples.p3, samples.nphot]
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def read_trajectory_csv(path) -> SampleSeries:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != TRAJECTORY_COLUMNS:
            raise ValueError(f"unexpected trajectory header: {header}")
        data = np.array([[float(v) for v in row] for row in r])
    if data.size == 0:
        data = np.empty((0, len(TRAJECTORY_COLUMNS)))
    return SampleSeries(t=data[:, 0], x=data[:, 1], p=data[:, 2],
                        p1=data[:, 3], p2=data[:, 4], p3=data[:, 5],
                        nphot=data[:, 6])


def write_ticks(path, record: TickRecord) -> None:
    """One timestamp per line, fixed-point decimal in units of 1/gamma_h."""
    with open(path, "w") as fh:
        for t in record.times:
            fh.write(f"{t:.6f}\n")


def read_ticks(path, origin: str = "raw", meta: dict | None = None
               ) -> TickRecord:
    times = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                times.append(float(line))
    return TickRecord(np.array(times), origin=origin, meta=meta or {})


def write_metrics_json(path, metrics: dict) -> None:
    """Flat key -> number mapping, sorted keys, deterministic rendering."""
    flat = {}
    for key, value in metrics.items():
        if isinstance(value, (bool, np.bool_)):
            flat[key] = bool(value)
        elif isinstance(value, (int, np.integer)):
            flat[key] = int(value)
        elif isinstance(value, (float, np.floating)):
            flat[key] = float(value)
        elif isinstance(value, str):
            flat[key] = value
        else:
            raise TypeError(f"metrics must be flat scalars; {key} is "
                            f"{type(value).__name__}")
    with open(path, "w") as fh:
        json.dump(flat, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metrics_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_histogram_csv(path, hist) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("bin_left", "bin_right", "count"))
        for left, right, count in zip(hist.edges[:-1], hist.edges[1:],
                                      hist.counts):
            w.writerow([repr(float(left)), repr(float(right)), int(count)])


def write_allan_csv(path, m, avar, asymptote) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("m", "allan_var", "uncorrelated_limit"))
        for row in zip(m, avar, asymptote):
            w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2]))])


def write_covariance_csv(path, k, cov) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("lag", "covariance"))
        for row in zip(k, cov):
            w.writerow([int(row[0]), repr(float(row[1]))])


def write_manifest(path, config_text: str, provenance: dict) -> None:
    """Config echo plus a [provenance] section of run-defining values."""
    lines = [config_text.rstrip(), "", "[provenance]"]
    for key in sorted(provenance):
        lines.append(f"{key} = {provenance[key]}")
    Path(path).write_text("\n".join(lines) + "\n")
