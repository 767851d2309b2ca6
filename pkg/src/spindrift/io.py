"""CSV input/output with provenance headers and write-once semantics."""

import csv
import os
from importlib import metadata

import numpy as np

from . import kernels
from .particle import Trace

try:
    VERSION = metadata.version("spindrift")
except metadata.PackageNotFoundError:  # pragma: no cover
    VERSION = "0.0.0"


def provenance_lines(config_hash, seed):
    return [
        f"# spindrift {VERSION}",
        f"# config_hash={config_hash} seed={seed} backend={kernels.BACKEND}",
    ]


def write_csv(path, fieldnames, rows, config_hash="-", seed="-", force=False):
    """Write a provenance-stamped CSV; refuses to overwrite unless forced."""
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        for line in provenance_lines(config_hash, seed):
            fh.write(line + "\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def data_section(path):
    """Everything after the provenance comments (for determinism checks)."""
    with open(path, "rb") as fh:
        return b"".join(line for line in fh if not line.startswith(b"#"))


def read_trace_csv(path, kind="decay"):
    """Experimental trace: header (time_s, signal[, normalization])."""
    times, signal = [], []
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty trace file")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["time_s", "signal"]:
        raise ValueError(f"{path}: expected header (time_s, signal), got {header}")
    has_norm = len(header) > 2 and header[2] == "normalization"
    for r in rows[1:]:
        t, s = float(r[0]), float(r[1])
        if has_norm:
            s /= float(r[2])
        times.append(t)
        signal.append(s)
    order = np.argsort(times)
    return Trace(np.asarray(times, float)[order], np.asarray(signal, float)[order],
                 kind, {"source": str(path)})


def write_trace_csv(path, trace, config_hash="-", seed="-", force=False):
    rows = ({"time_s": f"{t:.10g}", "signal": f"{p:.10g}"}
            for t, p in zip(trace.times, trace.polarization))
    write_csv(path, ["time_s", "signal"], rows, config_hash, seed, force)


def read_sweep_csv(path):
    """Rows of a diffusion sweep CSV as dicts with floats where possible."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    out = []
    for row in reader:
        parsed = {}
        for key, val in row.items():
            try:
                parsed[key] = float(val)
            except (TypeError, ValueError):
                parsed[key] = val
        out.append(parsed)
    return out
