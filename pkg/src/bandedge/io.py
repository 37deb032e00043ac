"""File formats: CSV and JSON writers with lossless float formatting.

Every writer goes through :func:`atomic_write`, which writes to a temporary
file in the target directory and renames it into place, so a failed run
never leaves a partial file behind.
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .reconstruct import MeasurementSet


def fmt(x):
    """Decimal text with 17 significant digits (round-trips a double)."""
    return format(float(x), ".17g")


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(header, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, complex):
            return [o.real, o.imag]
        return super().default(o)


def json_text(obj):
    # repr of a Python float is already the shortest round-tripping form
    return json.dumps(obj, cls=_Encoder, indent=2, sort_keys=True, allow_nan=True) + "\n"


# -- susceptibility curves ---------------------------------------------------

def curve_csv(c):
    return _csv_text(["delta", "re_chi", "im_chi", "absorption", "dispersion"],
                     [c.deltas, c.chi.real, c.chi.imag, c.absorption, c.dispersion])


def curve_dict(c):
    return {"reservoir": c.spec.to_dict(), "scale": c.scale,
            "edge_points": list(c.edge_points), "delta": c.deltas,
            "re_chi": c.chi.real, "im_chi": c.chi.imag,
            "absorption": c.absorption, "dispersion": c.dispersion}


# -- trajectories ------------------------------------------------------------

def trajectory_csv(traj):
    return _csv_text(["t", "re_a0", "im_a0", "re_a1", "im_a1"],
                     [traj.times, traj.a0.real, traj.a0.imag, traj.a1.real, traj.a1.imag])


def bath_csv(traj):
    """Final-time bath amplitudes next to their mode frequencies."""
    return _csv_text(["omega", "re_alpha", "im_alpha"],
                     [traj.mode_frequencies, traj.bath.real, traj.bath.imag])


def trajectory_dict(traj):
    out = {"reservoir": traj.spec.to_dict(), "solver": traj.config.to_dict(),
           "delta": traj.delta, "rabi": traj.rabi,
           "t": traj.times, "re_a0": traj.a0.real, "im_a0": traj.a0.imag,
           "re_a1": traj.a1.real, "im_a1": traj.a1.imag, "meta": traj.meta}
    if traj.norm is not None:
        out["norm"] = traj.norm
    return out


# -- measurements ------------------------------------------------------------

def measurement_csv(m):
    return _csv_text(["delta", "re_chi", "im_chi"], [m.deltas, m.chi.real, m.chi.imag])


def read_measurement(text, *, scale=1.0, gamma=1.0, noise_sigma=0.0):
    """Parse a ``delta,re_chi,im_chi`` CSV.

    Raises
    ------
    ValueError
        On a wrong header, a malformed row or a non-increasing grid.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or [c.strip() for c in rows[0]] != ["delta", "re_chi", "im_chi"]:
        raise ValueError("measurement CSV must start with header 'delta,re_chi,im_chi'")
    body = rows[1:]
    if len(body) < 2:
        raise ValueError("measurement CSV needs at least two rows")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"malformed measurement row: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError("every measurement row needs exactly three columns")
    if not np.all(np.isfinite(data)):
        raise ValueError("measurement CSV contains non-finite values")
    return MeasurementSet(data[:, 0], data[:, 1] + 1j * data[:, 2], scale, gamma, noise_sigma)
