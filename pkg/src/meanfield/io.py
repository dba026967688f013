"""Deterministic artifact serialization.

Every writer here produces byte-identical output for identical inputs:
floats are rendered with ``repr`` (shortest round-trip form), newlines are
always ``\\n``, and nothing environment-dependent (timestamps, hostnames,
absolute paths) is ever embedded.  Reruns with the same seed must hash
equal, so keep it that way.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError

FRAME_MAGIC = b"MFN1"
FRAME_VERSION = 1
_HEADER = struct.Struct("<4sHIdI")


def _fmt(v) -> str:
    return repr(float(v))


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_long_csv(path, times, positions, realizations=None, particle_index=0) -> None:
    """Tagged-particle trajectories in long format.

    ``positions`` has shape (R, T) aligned with ``times``; one row per
    (realization, time) pair.  Columns: realization, time, particle_index,
    position.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim == 1:
        positions = positions[None, :]
    if realizations is None:
        realizations = range(positions.shape[0])
    rows = (
        (str(int(r)), _fmt(t), str(int(particle_index)), _fmt(positions[i, j]))
        for i, r in enumerate(realizations)
        for j, t in enumerate(times)
    )
    _write_rows(path, ("realization", "time", "particle_index", "position"), rows)


def write_snapshot_csv(path, times, snapshots, realization=0) -> None:
    """Full ensemble snapshots in long format; ``snapshots`` is (T, N)."""
    snapshots = np.asarray(snapshots, dtype=float)
    rows = (
        (str(int(realization)), _fmt(t), str(p), _fmt(snapshots[j, p]))
        for j, t in enumerate(times)
        for p in range(snapshots.shape[1])
    )
    _write_rows(path, ("realization", "time", "particle_index", "position"), rows)


def write_density_csv(path, density) -> None:
    """Columns: x, value."""
    rows = ((_fmt(x), _fmt(v)) for x, v in zip(density.x, density.values))
    _write_rows(path, ("x", "value"), rows)


def write_divergence_csv(path, times, h_fg, i_fg, h_finf, l1, l2) -> None:
    """Relative-entropy pair series.  Columns: t, H_fg, I_fg, H_finf, L1, L2."""
    cols = [np.asarray(c, dtype=float) for c in (h_fg, i_fg, h_finf, l1, l2)]
    rows = (
        (_fmt(t), _fmt(cols[0][j]), _fmt(cols[1][j]), _fmt(cols[2][j]), _fmt(cols[3][j]), _fmt(cols[4][j]))
        for j, t in enumerate(times)
    )
    _write_rows(path, ("t", "H_fg", "I_fg", "H_finf", "L1", "L2"), rows)


def write_bound_csv(path, times, values, regime_tags) -> None:
    """Decay-envelope curve.  Columns: t, value, regime_tag."""
    if isinstance(regime_tags, str):
        regime_tags = [regime_tags] * len(times)
    rows = (
        (_fmt(t), _fmt(v), str(tag))
        for t, v, tag in zip(times, values, regime_tags)
    )
    _write_rows(path, ("t", "value", "regime_tag"), rows)


def write_trace_csv(path, trace_mle, trace_lin) -> None:
    """Estimator trace over growing horizons.  Columns: T, theta_hat, theta_tilde.

    Both traces must share the same horizon grid.
    """
    if not np.array_equal(trace_mle.horizons, trace_lin.horizons):
        raise ConfigError("estimator traces use different horizon grids")
    rows = (
        (_fmt(T), _fmt(h), _fmt(l))
        for T, h, l in zip(trace_mle.horizons, trace_mle.estimates, trace_lin.estimates)
    )
    _write_rows(path, ("T", "theta_hat", "theta_tilde"), rows)


def write_histogram_csv(path, bin_edges, counts, sigma) -> None:
    """Histogram of rescaled endpoints against the matching normal density.

    Columns: bin_left, bin_right, count, normal_pdf_at_center where the
    reference is the centered normal with standard deviation ``sigma``.
    """
    edges = np.asarray(bin_edges, dtype=float)
    counts = np.asarray(counts)
    if edges.size != counts.size + 1:
        raise ConfigError("bin_edges must have one more entry than counts")
    centers = 0.5 * (edges[:-1] + edges[1:])
    pdf = np.exp(-0.5 * (centers / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi))
    rows = (
        (_fmt(edges[j]), _fmt(edges[j + 1]), str(int(counts[j])), _fmt(pdf[j]))
        for j in range(counts.size)
    )
    _write_rows(path, ("bin_left", "bin_right", "count", "normal_pdf_at_center"), rows)


def write_frames(path, times, snapshots, dt) -> None:
    """Compact binary frame stream.

    Header: magic ``MFN1``, version u16, particle count u32, dt f64,
    frame count u32, all little-endian.  Each frame is the time followed
    by the particle positions, f64 throughout.
    """
    snapshots = np.asarray(snapshots, dtype=float)
    times = np.asarray(times, dtype=float)
    if snapshots.ndim != 2 or snapshots.shape[0] != times.size:
        raise ConfigError("snapshots must be (n_frames, n_particles) aligned with times")
    n = snapshots.shape[1]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FRAME_MAGIC, FRAME_VERSION, n, float(dt), times.size))
        for j in range(times.size):
            fh.write(struct.pack("<d", times[j]))
            fh.write(snapshots[j].astype("<f8").tobytes())


def read_frames(path):
    """Inverse of :func:`write_frames`; returns (dt, times, snapshots)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ConfigError(f"{path}: truncated frame header")
    magic, version, n, dt, count = _HEADER.unpack_from(raw, 0)
    if magic != FRAME_MAGIC:
        raise ConfigError(f"{path}: bad magic {magic!r}")
    if version != FRAME_VERSION:
        raise ConfigError(f"{path}: unsupported frame version {version}")
    frame_bytes = 8 * (n + 1)
    expected = _HEADER.size + count * frame_bytes
    if len(raw) != expected:
        raise ConfigError(f"{path}: expected {expected} bytes, found {len(raw)}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(count, n + 1)
    return dt, body[:, 0].copy(), body[:, 1:].copy()


def _json_scalar(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_json(path, doc) -> None:
    """Sorted, indented JSON with a trailing newline; deterministic."""
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_scalar)
        fh.write("\n")


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, experiment, seed, extra=None, files=None) -> Path:
    """Hash artifacts into manifest.json.

    ``files`` restricts the listing to the artifacts this run actually
    wrote; without it every file in the directory is hashed.  The manifest
    lists relative names only; rerunning with the same seed must reproduce
    it byte for byte.
    """
    out = Path(out_dir)
    if files is None:
        listed = [p for p in sorted(out.iterdir()) if p.is_file()]
    else:
        listed = sorted(Path(p) for p in files)
    files = {p.name: file_sha256(p) for p in listed if p.name != "manifest.json"}
    doc = {"schema_version": 1, "experiment": experiment, "seed": int(seed), "files": files}
    if extra:
        doc["summary"] = extra
    path = out / "manifest.json"
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_scalar)
        fh.write("\n")
    return path
