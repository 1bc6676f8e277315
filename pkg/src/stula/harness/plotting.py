"""SVG plots of harness CSV files with byte-stable output."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..errors import SchemaError  # noqa: E402
from .tables import read_csv  # noqa: E402


@dataclass(frozen=True)
class PlotKind:
    x: str
    y: str
    xlog: bool = False
    ylog: bool = False
    group: str | None = None
    yerr: str | None = None
    title: str = ""


PLOT_KINDS = {
    "spectrum": PlotKind("beta", "gap", ylog=True, title="spectral gap vs beta"),
    "lambda_sweep": PlotKind("lam", "plateau_kl", xlog=True, ylog=True, title="plateau KL vs stepsize"),
    "kl_trace": PlotKind("time", "kl", ylog=True, group="beta", title="KL along the chain"),
    "excess_risk": PlotKind("beta", "excess_risk", yerr="std_error", title="excess risk vs beta"),
    "moment_trace": PlotKind("step", "mean_sq_norm", title="running mean of |x|^2"),
}


def _floats(rows, col):
    try:
        return np.array([float(r[col]) for r in rows])
    except ValueError as exc:
        raise SchemaError(f"column {col!r} has a non-numeric entry: {exc}") from None


def plot_csv(csv_path, kind: str, out_path) -> Path:
    """Render ``csv_path`` as the plot ``kind`` and write an SVG to ``out_path``."""
    if kind not in PLOT_KINDS:
        raise SchemaError(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")
    spec = PLOT_KINDS[kind]
    need = [c for c in (spec.x, spec.y, spec.group, spec.yerr) if c]
    _, rows = read_csv(csv_path, need)

    groups = {}
    for r in rows:
        groups.setdefault(r[spec.group] if spec.group else "", []).append(r)

    with plt.rc_context({"svg.hashsalt": "stula", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, grp in groups.items():
            x, y = _floats(grp, spec.x), _floats(grp, spec.y)
            order = np.argsort(x, kind="stable")
            kw = {"marker": "o", "markersize": 3, "label": f"{spec.group}={label}" if spec.group else None}
            if spec.yerr:
                ax.errorbar(x[order], y[order], yerr=_floats(grp, spec.yerr)[order], capsize=3, **kw)
            else:
                ax.plot(x[order], y[order], **kw)
        if spec.xlog:
            ax.set_xscale("log")
        if spec.ylog:
            ax.set_yscale("log")
        ax.set_xlabel(spec.x)
        ax.set_ylabel(spec.y)
        ax.set_title(spec.title)
        if spec.group:
            ax.legend()
        fig.tight_layout()
        out_path = Path(out_path)
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out_path
