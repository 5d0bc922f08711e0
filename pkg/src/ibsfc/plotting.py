"""Static SVG figures: ensemble mean with an inter-quantile band."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analytics import moving_average, summarize  # noqa: E402

log = logging.getLogger(__name__)

# fixed salt and no timestamp so repeated renders are byte-identical
plt.rcParams["svg.hashsalt"] = "ibsfc"
_META = {"Date": None, "Creator": None}

# figure name -> (title, [(variable, label)])
FIGURES = {
    "interbank_volumes_levels": ("Interbank volumes in levels",
                                 [("settled_on", "overnight"), ("settled_term", "term")]),
    "standing_facilities": ("Standing facilities",
                            [("lending_facility", "lending facility"), ("deposit_facility", "deposit facility")]),
    "demand_supply": ("Interbank demand and supply",
                      [("df_on", "DF overnight"), ("df_term", "DF term"),
                       ("lf_on", "LF overnight"), ("lf_term", "LF term")]),
    "interbank_rates": ("Interbank rates",
                        [("rate_on", "overnight"), ("rate_term", "term"),
                         ("icb_d", "floor"), ("icb_t", "target"), ("icb_l", "ceiling")]),
    "stability_components": ("NSFR components",
                             [("ms_mean", "MS"), ("asf_mean", "ASF share"), ("rsf_mean", "RSF share"),
                              ("pi_b_mean", "borrower preference"), ("pi_l_mean", "lender preference")]),
    "stability_by_status": ("Margin of stability by interbank status",
                            [("ms_deficit", "deficit banks"), ("ms_surplus", "surplus banks")]),
    "rationing": ("Interbank rationing", [("gamma_on", "overnight"), ("gamma_term", "term")]),
    "loans_by_status": ("Loans by interbank status",
                        [("loans_deficit", "deficit banks"), ("loans_surplus", "surplus banks")]),
    "payment_flows": ("Payment flows",
                      [("flow_commercial", "commercial banks"), ("flow_business", "business banks")]),
    "output": ("Output and demand", [("output", "output"), ("consumption", "consumption"),
                                     ("gov_spending", "government")]),
}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_ensemble(frames, out_dir: Path, label: str = "", burn_in: int = 0,
                  figures=None) -> list[Path]:
    """One SVG per entry of ``FIGURES`` whose variables are present."""
    if not frames:
        log.warning("empty ensemble: no figures")
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summ = summarize([fr.trimmed(burn_in) for fr in frames])
    periods = frames[0].columns["period"][burn_in:]
    written = []
    for name, (title, series) in FIGURES.items():
        if figures is not None and name not in figures:
            continue
        present = [(v, lab) for v, lab in series if v in summ]
        if not present:
            continue
        fig, ax = plt.subplots(figsize=(7, 4))
        for var, lab in present:
            s = summ[var]
            line, = ax.plot(periods, s["mean"], lw=1.0, label=lab)
            ax.fill_between(periods, s["lo"], s["hi"], color=line.get_color(), alpha=0.2, lw=0)
        ax.set_title(f"{title} {label}".strip())
        ax.set_xlabel("period")
        ax.legend(fontsize=8)
        written.append(_save(fig, out_dir / f"{name}{'_' + label if label else ''}.svg"))
    return written


def plot_shock_comparison(ensembles: dict[str, list], variable: str, out_dir: Path,
                          burn_in: int = 0, title: str | None = None) -> Path:
    """Mean of one variable under several shocks on a single axis."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    for shock, frames in ensembles.items():
        if not frames:
            continue
        s = summarize([fr.trimmed(burn_in) for fr in frames])[variable]
        periods = frames[0].columns["period"][burn_in:]
        line, = ax.plot(periods, s["mean"], lw=1.0, label=shock)
        ax.fill_between(periods, s["lo"], s["hi"], color=line.get_color(), alpha=0.15, lw=0)
    ax.set_title(title or f"{variable} per shock")
    ax.set_xlabel("period")
    ax.legend(fontsize=8)
    return _save(fig, out_dir / f"{variable}_per_shock.svg")


def plot_sweep(points, param: str, variables, out_dir: Path, window: int = 200,
               burn_in: int = 0) -> list[Path]:
    """Moving average of each variable, one line per grid value."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for var in variables:
        fig, ax = plt.subplots(figsize=(7, 4))
        cmap = plt.get_cmap("viridis", max(len(points), 2))
        for k, (value, frames) in enumerate(points):
            if not frames or var not in frames[0].columns:
                continue
            mean = np.mean([fr.columns[var][burn_in:] for fr in frames], axis=0)
            periods = frames[0].columns["period"][burn_in:]
            ax.plot(periods, moving_average(mean, window), lw=1.0, color=cmap(k), label=f"{param}={value:g}")
        ax.set_title(f"{var}, {window}-step moving average")
        ax.set_xlabel("period")
        ax.legend(fontsize=6, ncol=2)
        written.append(_save(fig, out_dir / f"sweep_{param}_{var}.svg"))
    return written
