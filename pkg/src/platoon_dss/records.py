"""CSV writers and the matching reader.

All files are plain comma-separated tables with one header row. Numbers
are written with ``repr`` precision so reading a file back reproduces the
arrays exactly.
"""

import csv

import numpy as np

from .bounds import DssBound, eval_bound, KINDS


def write_table(path, columns):
    """Write ``{name: sequence}`` as a CSV table (columns in dict order)."""
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    n_rows = len(cols[0]) if cols else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for r in range(n_rows):
            w.writerow([_fmt(c[r]) for c in cols])


def _fmt(x):
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def read_table(path):
    """Read a CSV written by this module into ``{name: ndarray}``.

    Columns that do not parse as numbers come back as string arrays.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in body]
        try:
            out[name] = np.array([float(x) for x in raw])
        except ValueError:
            out[name] = np.array(raw)
    return out


def trajectory_columns(traj):
    cols = {"t": traj.times}
    gaps = traj.gap_errors()
    for i in range(traj.n_vehicles):
        n = i + 1
        cols[f"q_{n}"] = traj.q[:, i]
        cols[f"v_{n}"] = traj.v[:, i]
        cols[f"zeta_{n}"] = traj.zeta[:, i]
        cols[f"u_{n}"] = traj.u[:, i]
        cols[f"a_{n}"] = traj.a[:, i]
        cols[f"d_{n}"] = traj.d[:, i]
        cols[f"e_gap_{n}"] = gaps[:, i]
    return cols


def write_trajectory(path, traj):
    write_table(path, trajectory_columns(traj))


def write_metrics(path, traj, inputs=None):
    """``t, sup_err, bound_eq16, bound_eq17`` (+ augmented columns with integral action).

    Bound columns are NaN when there is no certificate (``inputs is None``).
    """
    nan = np.full_like(traj.times, np.nan)
    cols = {"t": traj.times, "sup_err": traj.error_norm_x()}
    for short, kind in (("eq16", "original_eq16"), ("eq17", "monteil_eq17")):
        cols[f"bound_{short}"] = eval_bound(DssBound(kind, inputs), traj.times) if inputs else nan
    if traj.xi_shift is not None:
        cols["sup_err_z"] = traj.error_norm_z()
        cols["bound_eq14"] = eval_bound(DssBound("augmented_eq14", inputs), traj.times) if inputs else nan
    write_table(path, cols)


def write_bound_curves(path, times, inputs, kinds=KINDS):
    ts, vals, names = [], [], []
    for kind in kinds:
        ts.append(times)
        vals.append(eval_bound(DssBound(kind, inputs), times))
        names.append(np.full(len(times), kind))
    write_table(path, {
        "t": np.concatenate(ts),
        "bound_value": np.concatenate(vals),
        "kind": np.concatenate(names),
    })


def write_sweep(path, rows):
    write_table(path, {
        "N": np.array([r.n_vehicles for r in rows], dtype=int),
        "worst_sup_err": np.array([r.worst_sup_err for r in rows], dtype=float),
        "bound_envelope": np.array([r.bound_envelope for r in rows], dtype=float),
    })
