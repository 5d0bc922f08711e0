"""Post-processing: HP de-trending, moving averages, CSV export and re-import.

Ensemble files are long format (replicate, period, variable, value); sweep
files are wide (one column per variable).  Floats are written with ``repr``
so a read-back reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

HP_LAMBDA_MONTHLY = 14400.0

# variable groups written to one CSV each
VARIABLE_GROUPS = {
    "market": ("df_on", "df_term", "lf_on", "lf_term", "settled_on", "settled_term",
               "excess_on", "excess_term", "rate_on", "rate_term", "gamma_on", "gamma_term",
               "gamma_on_matched", "gamma_term_matched", "lending_facility", "deposit_facility",
               "n_deficit", "n_surplus", "n_matches", "funding_cost_mean"),
    "policy": ("icb_d", "icb_l", "icb_t", "pdu", "theta", "lbw"),
    "stability": ("ms_mean", "ms_deficit", "ms_surplus", "asf_mean", "rsf_mean",
                  "pi_b_mean", "pi_l_mean"),
    "real": ("output", "consumption", "gov_spending", "taxes", "gdp", "wages",
             "flow_sum", "flow_abs", "flow_commercial", "flow_business",
             "loans_deficit", "loans_surplus"),
    "checks": ("max_residual", "audit_pass"),
}


# ---------------------------------------------------------------------------
# filters


def _hp_bands(n: int, lamb: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonals of I + lamb * K'K, K the (n-2) x n second-difference operator."""
    d0 = np.ones(n)
    d1 = np.zeros(n - 1)
    d2 = np.zeros(n - 2)
    c = (1.0, -2.0, 1.0)
    for r in range(n - 2):
        for i in range(3):
            d0[r + i] += lamb * c[i] * c[i]
        d1[r] += lamb * c[0] * c[1]
        d1[r + 1] += lamb * c[1] * c[2]
        d2[r] += lamb * c[0] * c[2]
    return d0, d1, d2


def solve_pentadiagonal(d0, d1, d2, rhs) -> np.ndarray:
    """Solve a symmetric positive-definite pentadiagonal system by banded LDL'."""
    n = len(d0)
    dd = np.zeros(n)
    l1 = np.zeros(n)  # L[i, i-1]
    l2 = np.zeros(n)  # L[i, i-2]
    for i in range(n):
        if i >= 2:
            l2[i] = d2[i - 2] / dd[i - 2]
        if i >= 1:
            acc = d1[i - 1]
            if i >= 2:
                acc -= l2[i] * l1[i - 1] * dd[i - 2]
            l1[i] = acc / dd[i - 1]
        piv = d0[i]
        if i >= 1:
            piv -= l1[i] * l1[i] * dd[i - 1]
        if i >= 2:
            piv -= l2[i] * l2[i] * dd[i - 2]
        dd[i] = piv
    z = np.array(rhs, dtype=float)
    for i in range(1, n):
        z[i] -= l1[i] * z[i - 1]
        if i >= 2:
            z[i] -= l2[i] * z[i - 2]
    z /= dd
    for i in range(n - 2, -1, -1):
        z[i] -= l1[i + 1] * z[i + 1]
        if i + 2 < n:
            z[i] -= l2[i + 2] * z[i + 2]
    return z


def hp_filter(series, lamb: float = HP_LAMBDA_MONTHLY) -> tuple[np.ndarray, np.ndarray]:
    """Hodrick-Prescott filter.  Returns ``(trend, cycle)``."""
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or len(y) < 4:
        raise ValueError("hp_filter needs a 1-d series of length >= 4")
    if not lamb > 0:
        raise ValueError("smoothing parameter must be positive")
    trend = solve_pentadiagonal(*_hp_bands(len(y), lamb), y)
    return trend, y - trend


def moving_average(series, window: int) -> np.ndarray:
    """Trailing mean over the last ``window`` points (fewer at the start)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    y = np.asarray(series, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(y)])
    idx = np.arange(1, len(y) + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


# ---------------------------------------------------------------------------
# frames


@dataclass
class TimeSeriesFrame:
    replicate: int
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.columns.get("period", ()))

    @classmethod
    def from_run(cls, result) -> "TimeSeriesFrame":
        return cls(result.replicate, {k: np.asarray(v, dtype=float) for k, v in result.columns.items()})

    def trimmed(self, burn_in: int) -> "TimeSeriesFrame":
        return TimeSeriesFrame(self.replicate, {k: v[burn_in:] for k, v in self.columns.items()})

    def variables(self) -> list[str]:
        return [k for k in self.columns if k != "period"]


def frames_of(ensemble) -> list[TimeSeriesFrame]:
    return [TimeSeriesFrame.from_run(r) for r in ensemble.runs]


def _fmt(x: float) -> str:
    return repr(float(x))


def _group_of(var: str) -> str:
    for group, names in VARIABLE_GROUPS.items():
        if var in names:
            return group
    return "other"


def write_long_csv(frames: list[TimeSeriesFrame], path: Path, variables=None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replicate", "period", "variable", "value"])
        for fr in frames:
            names = [v for v in (variables or fr.variables()) if v in fr.columns]
            periods = fr.columns["period"]
            for t in range(fr.steps):
                for name in names:
                    w.writerow([fr.replicate, int(periods[t]), name, _fmt(fr.columns[name][t])])
    return path


def read_long_csv(path: Path) -> list[TimeSeriesFrame]:
    data: dict[int, dict[str, dict[int, float]]] = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rep = int(row["replicate"])
            data.setdefault(rep, {}).setdefault(row["variable"], {})[int(row["period"])] = float(row["value"])
    frames = []
    for rep in sorted(data):
        cols = data[rep]
        periods = sorted(next(iter(cols.values()))) if cols else []
        out = {"period": np.array(periods, dtype=float)}
        for name, series in cols.items():
            out[name] = np.array([series[p] for p in periods], dtype=float)
        frames.append(TimeSeriesFrame(rep, out))
    return frames


def read_frames(out_dir: Path) -> list[TimeSeriesFrame]:
    """Re-assemble frames from every group file in an export directory."""
    merged: dict[int, TimeSeriesFrame] = {}
    for group in list(VARIABLE_GROUPS) + ["other"]:
        path = Path(out_dir) / f"{group}.csv"
        if not path.exists():
            continue
        for fr in read_long_csv(path):
            tgt = merged.setdefault(fr.replicate, TimeSeriesFrame(fr.replicate, {"period": fr.columns["period"]}))
            tgt.columns.update(fr.columns)
    return [merged[k] for k in sorted(merged)]


def write_interbank_csv(frames: list[TimeSeriesFrame], path: Path) -> Path:
    """Per-period segment book rows."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "replicate", "segment", "df", "lf", "settled", "rate", "gamma",
                    "lending_facility", "deposit_facility"])
        for fr in frames:
            c = fr.columns
            for t in range(fr.steps):
                for seg in ("on", "term"):
                    w.writerow([int(c["period"][t]), fr.replicate, seg, _fmt(c[f"df_{seg}"][t]),
                                _fmt(c[f"lf_{seg}"][t]), _fmt(c[f"settled_{seg}"][t]),
                                _fmt(c[f"rate_{seg}"][t]), _fmt(c[f"gamma_{seg}"][t]),
                                _fmt(c["lending_facility"][t]), _fmt(c["deposit_facility"][t])])
    return path


def write_audit_csv(frames: list[TimeSeriesFrame], path: Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replicate", "period", "max_residual", "pass"])
        for fr in frames:
            c = fr.columns
            for t in range(fr.steps):
                w.writerow([fr.replicate, int(c["period"][t]), _fmt(c["max_residual"][t]),
                            int(c["audit_pass"][t])])
    return path


def summarize(frames: list[TimeSeriesFrame], q=(0.25, 0.75)) -> dict[str, dict[str, np.ndarray]]:
    """Cross-replicate mean and quantile band per variable."""
    if not frames:
        return {}
    out = {}
    for name in frames[0].variables():
        stack = np.vstack([fr.columns[name] for fr in frames])
        out[name] = {"mean": stack.mean(axis=0),
                     "lo": np.quantile(stack, q[0], axis=0),
                     "hi": np.quantile(stack, q[1], axis=0)}
    return out


def write_summary_csv(frames: list[TimeSeriesFrame], path: Path) -> Path:
    path = Path(path)
    summ = summarize(frames)
    periods = frames[0].columns["period"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "variable", "mean", "q25", "q75"])
        for name, s in summ.items():
            for t in range(len(periods)):
                w.writerow([int(periods[t]), name, _fmt(s["mean"][t]), _fmt(s["lo"][t]), _fmt(s["hi"][t])])
    return path


def export(frames: list[TimeSeriesFrame], out_dir: Path) -> list[Path]:
    """Write one long CSV per variable group plus interbank, audit and summary files."""
    if not frames:
        log.warning("empty ensemble: nothing exported")
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_group: dict[str, list[str]] = {}
    for name in frames[0].variables():
        by_group.setdefault(_group_of(name), []).append(name)
    written = [write_long_csv(frames, out_dir / f"{g}.csv", names) for g, names in by_group.items()]
    written.append(write_interbank_csv(frames, out_dir / "interbank.csv"))
    written.append(write_audit_csv(frames, out_dir / "audit.csv"))
    written.append(write_summary_csv(frames, out_dir / "summary.csv"))
    return written


def write_sweep_csv(points: list[tuple[float, list[TimeSeriesFrame]]], param: str, path: Path) -> Path:
    """Wide sweep file: one row per (value, replicate, period), one column per variable."""
    path = Path(path)
    names = points[0][1][0].variables() if points and points[0][1] else []
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([param, "replicate", "period"] + names)
        for value, frames in points:
            for fr in frames:
                c = fr.columns
                for t in range(fr.steps):
                    w.writerow([_fmt(value), fr.replicate, int(c["period"][t])]
                               + [_fmt(c[n][t]) for n in names])
    return path


def read_sweep_csv(path: Path) -> tuple[str, list[tuple[float, list[TimeSeriesFrame]]]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        param, names = header[0], header[3:]
        rows: dict[float, dict[int, list[list[float]]]] = {}
        for row in reader:
            val, rep = float(row[0]), int(row[1])
            rows.setdefault(val, {}).setdefault(rep, []).append([float(row[2])] + [float(x) for x in row[3:]])
    points = []
    for val in rows:
        frames = []
        for rep in sorted(rows[val]):
            arr = np.array(rows[val][rep], dtype=float)
            cols = {"period": arr[:, 0]}
            cols.update({n: arr[:, j + 1] for j, n in enumerate(names)})
            frames.append(TimeSeriesFrame(rep, cols))
        points.append((val, frames))
    return param, points


def detrend_frames(frames: list[TimeSeriesFrame], lamb: float = HP_LAMBDA_MONTHLY,
                   variables=None) -> list[TimeSeriesFrame]:
    """HP cycle of each variable (``<name>_cycle``) and its trend (``<name>_trend``)."""
    out = []
    for fr in frames:
        cols = {"period": fr.columns["period"]}
        for name in variables or fr.variables():
            trend, cycle = hp_filter(fr.columns[name], lamb)
            cols[f"{name}_trend"] = trend
            cols[f"{name}_cycle"] = cycle
        out.append(TimeSeriesFrame(fr.replicate, cols))
    return out


def smooth_frames(frames: list[TimeSeriesFrame], window: int, variables=None) -> list[TimeSeriesFrame]:
    return [TimeSeriesFrame(fr.replicate, {"period": fr.columns["period"],
                                           **{f"{n}_ma{window}": moving_average(fr.columns[n], window)
                                              for n in (variables or fr.variables())}})
            for fr in frames]
