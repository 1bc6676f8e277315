"""CSV output: RFC-4180, CRLF line ends, header row, floats at 17 significant digits.

Column sets are versioned in :data:`SCHEMAS`; changing one means bumping
:data:`SCHEMA_VERSION`.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ..errors import SchemaError

SCHEMA_VERSION = 1

SCHEMAS: dict[str, tuple[str, ...]] = {
    "metrics": ("metric", "variant", "value", "n_samples"),
    "moment_trace": ("step", "mean_sq_norm", "mean_quartic_norm"),
    "lambda_sweep": ("lam", "n_steps", "plateau_kl", "plateau_tv", "kl_window_prev", "kl_window_last",
                     "plateaued", "n_samples", "n_diverged"),
    "lambda_ratios": ("lam", "lam_next", "kl_ratio", "tv_ratio"),
    "kl_trace": ("beta", "step", "time", "kl"),
    "decay_rates": ("beta", "rate", "plateau", "n_fit", "fit_ok"),
    "checks": ("check", "lam", "holds", "worst_margin", "n_tested", "status"),
    "excess_risk": ("beta", "lam", "excess_risk", "std_error", "quadrature", "n_samples"),
}


def spectrum_columns(k: int) -> tuple[str, ...]:
    return ("beta", "n_cells", "gap", *(f"eig_{i}" for i in range(k)), "converged")


def grid_columns(dim: int) -> tuple[str, ...]:
    return (*(f"i{k}" for k in range(dim)), *(f"x{k}" for k in range(dim)), "mass", "log_density")


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path, columns, rows) -> Path:
    """Write ``rows`` (sequences or dicts keyed by column) under ``columns``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                extra = set(row) - set(columns)
                if extra:
                    raise SchemaError(f"row has columns outside the schema: {sorted(extra)}")
                row = [row.get(c) for c in columns]
            if len(row) != len(columns):
                raise SchemaError(f"row has {len(row)} fields, schema has {len(columns)}")
            w.writerow([format_cell(v) for v in row])
    return path


def read_csv(path, required=()) -> tuple[list[str], list[dict[str, str]]]:
    """Read a CSV with a header; raise :class:`SchemaError` on missing columns or no data."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = [r for r in reader if r]
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    if not header:
        raise SchemaError(f"{path} is empty (no header row)")
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path} is missing column(s): {', '.join(missing)}")
    if not rows:
        raise SchemaError(f"{path} has a header but no data rows")
    return header, [dict(zip(header, r)) for r in rows]


def write_grid_csv(grid, path) -> Path:
    """One row per cell: axis indices, midpoints, mass, log-density."""
    idx = np.stack(np.unravel_index(np.arange(grid.cell_mass.size), grid.n_cells), axis=1)
    mids = grid.mesh()
    mass = grid.cell_mass.reshape(-1)
    logd = grid.log_density().reshape(-1)
    rows = ([*map(int, idx[i]), *mids[i], mass[i], logd[i]] for i in range(mass.size))
    return write_csv(path, grid_columns(grid.dim), rows)
