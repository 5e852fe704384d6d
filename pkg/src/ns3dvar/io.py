"""Persistence formats: NDJSON snapshots, CSV run records, JSON manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import spectral as sp
from .assimilation import RunRecord
from .spectral import SpectralField

__all__ = [
    "save_field",
    "load_field",
    "write_run_csv",
    "write_error_csv",
    "write_ensemble_csv",
    "write_manifest",
    "config_hash",
]


def save_field(f: SpectralField, path: str | Path):
    """Write a field as NDJSON: header {N, L}, then {k1, k2, re, im} records."""
    N = f.N
    mask = sp.mode_mask(N)
    k1g, k2g = np.meshgrid(np.fft.fftfreq(N, 1 / N), np.fft.fftfreq(N, 1 / N),
                           indexing="ij")
    with open(path, "w") as fh:
        fh.write(json.dumps({"N": N, "L": f.L}) + "\n")
        idx = np.argwhere(mask & (f.coeffs != 0))
        for i, j in idx:
            c = f.coeffs[i, j]
            fh.write(json.dumps({
                "k1": int(k1g[i, j]), "k2": int(k2g[i, j]),
                "re": c.real, "im": c.imag,
            }) + "\n")


def load_field(path: str | Path) -> SpectralField:
    with open(path) as fh:
        header = json.loads(fh.readline())
        N, L = header["N"], header["L"]
        coeffs = np.zeros((N, N), dtype=np.complex128)
        for line in fh:
            rec = json.loads(line)
            coeffs[rec["k1"] % N, rec["k2"] % N] = rec["re"] + 1j * rec["im"]
    return SpectralField(coeffs, L)


def run_csv_header(mode_list) -> list[str]:
    cols = ["t"]
    for k1, k2 in mode_list:
        cols += [f"re_m_{k1}_{k2}", f"im_m_{k1}_{k2}",
                 f"re_u_{k1}_{k2}", f"im_u_{k1}_{k2}"]
    cols += ["err_h", "signal_h", "rel_err"]
    return cols


def write_run_csv(rec: RunRecord, path: str | Path):
    rel = rec.relative_error()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(run_csv_header(rec.mode_list))
        for i, t in enumerate(rec.times):
            row = [repr(float(t))]
            for j in range(len(rec.mode_list)):
                m = rec.estimator_modes[i, j]
                u = rec.signal_modes[i, j]
                row += [repr(float(m.real)), repr(float(m.imag)),
                        repr(float(u.real)), repr(float(u.imag))]
            row += [repr(float(rec.error_h[i])), repr(float(rec.signal_h[i])),
                    repr(float(rel[i])) if math.isfinite(rel[i]) else "nan"]
            w.writerow(row)


def write_error_csv(rec: RunRecord, path: str | Path):
    """Compact error series: t, |m - u|, |u|, relative error."""
    rel = rec.relative_error()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "err_h", "signal_h", "rel_err"])
        for i, t in enumerate(rec.times):
            w.writerow([repr(float(t)), repr(float(rec.error_h[i])),
                        repr(float(rec.signal_h[i])),
                        repr(float(rel[i])) if math.isfinite(rel[i]) else "nan"])


def write_ensemble_csv(times: np.ndarray, series: np.ndarray,
                       envelope: np.ndarray, path: str | Path):
    n_pairs = series.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"dist_{k + 2}_vs_1" for k in range(n_pairs)]
                   + ["envelope"])
        for i, t in enumerate(times):
            w.writerow([repr(float(t))]
                       + [repr(float(series[i, k])) for k in range(n_pairs)]
                       + [repr(float(envelope[i]))])


def config_hash(manifest: dict) -> str:
    """Content hash of a manifest (seeds and all numeric parameters)."""
    blob = json.dumps(manifest, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_manifest(manifest: dict, path: str | Path):
    manifest = dict(manifest)
    manifest["config_hash"] = config_hash(
        {k: v for k, v in manifest.items() if k != "config_hash"})
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
