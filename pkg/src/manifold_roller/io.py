"""Text serialization of driver and rolled paths (JSON-lines and CSV).

Every double is written with 17 significant digits, so reading a file back
gives bitwise identical arrays. Driver paths store increments rather than
cumulative values for the same reason; the cumulative value is written too,
for plotting, but ignored on read.

JSON-lines layout: the first line is a header object
``{"kind": ..., "format": 1, "config_hash": ..., "metadata": {...}, ...}``;
then one object per grid time. CSV layout: ``# key: value`` comment lines
carrying the same header (values JSON-encoded), then a column header row.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from pathlib import Path

import numpy as np

from .manifolds import parse_manifold
from .paths import DriverPath, PathError, RolledPath

FORMAT_VERSION = 1


def fmt(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise PathError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _arr(a) -> str:
    return "[" + ", ".join(fmt(v) for v in np.ravel(a)) + "]"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def versions() -> dict:
    from . import __version__
    return {"manifold_roller": __version__, "numpy": np.__version__, "python": platform.python_version()}


def write_metadata(path, config: dict, **extra) -> dict:
    """Metadata JSON next to the outputs: config echo, its hash, versions."""
    meta = {"config": config, "config_hash": config_hash(config), "versions": versions(), **extra}
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n")
    return meta


def _header(kind, metadata, config_hash_value, **fields) -> dict:
    return {"kind": kind, "format": FORMAT_VERSION, "config_hash": config_hash_value,
            "metadata": dict(metadata or {}), **fields}


def _check_header(head, kind):
    if head.get("kind") != kind:
        raise PathError(f"expected a {kind} file, found {head.get('kind')!r}")
    if head.get("format") != FORMAT_VERSION:
        raise PathError(f"unsupported format version {head.get('format')!r}")


# ---------------------------------------------------------------- JSON-lines

def write_driver_jsonl(path, W: DriverPath, metadata=None, config_hash_value=None):
    jumps = dict(zip(W.jump_index.tolist(), W.jump_size))
    values = W.right_values
    with open(path, "w") as fh:
        fh.write(canonical_json(_header("driver-path", metadata, config_hash_value, dim=W.dim)) + "\n")
        for i, t in enumerate(W.times):
            parts = [f'"i": {i}', f'"t": {fmt(t)}', f'"value": {_arr(values[i])}']
            if i > 0:
                parts.append(f'"dw": {_arr(W.increments[i - 1])}')
            if i in jumps:
                parts.append(f'"jump": {_arr(jumps[i])}')
            fh.write("{" + ", ".join(parts) + "}\n")


def _read_jsonl(path):
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise PathError(f"{path}: empty file")
    try:
        return json.loads(lines[0]), [json.loads(ln) for ln in lines[1:]]
    except json.JSONDecodeError as exc:
        raise PathError(f"{path}: malformed JSON ({exc})") from exc


def read_driver_jsonl(path):
    """Returns (DriverPath, header)."""
    head, recs = _read_jsonl(path)
    _check_header(head, "driver-path")
    times = [r["t"] for r in recs]
    inc = [r["dw"] for r in recs[1:]]
    idx = [r["i"] for r in recs if "jump" in r]
    size = [r["jump"] for r in recs if "jump" in r]
    d = head["dim"]
    return DriverPath(times, np.reshape(inc, (-1, d)), idx, np.reshape(size, (-1, d))), head


def write_rolled_jsonl(path, X: RolledPath, metadata=None, config_hash_value=None):
    jumps = {int(k): j for j, k in enumerate(X.jump_index)}
    with open(path, "w") as fh:
        head = _header("rolled-path", dict(X.metadata, **(metadata or {})), config_hash_value,
                       manifold=X.manifold.name, has_frames=X.has_frames,
                       has_jump_dw=X.jump_dw is not None)
        fh.write(canonical_json(head) + "\n")
        for i, t in enumerate(X.times):
            parts = [f'"i": {i}', f'"t": {fmt(t)}', f'"x": {_arr(X.points[i])}']
            if X.has_frames:
                parts.append(f'"frame": {_arr(X.frames[i])}')
            if i in jumps:
                j = jumps[i]
                jp = [f'"pre": {_arr(X.jump_pre[j])}', f'"vec": {_arr(X.jump_vec[j])}']
                if X.has_frames:
                    jp.append(f'"frame_pre": {_arr(X.frame_jump_pre[j])}')
                if X.jump_dw is not None:
                    jp.append(f'"dw": {_arr(X.jump_dw[j])}')
                parts.append('"jump": {' + ", ".join(jp) + "}")
            fh.write("{" + ", ".join(parts) + "}\n")


def read_rolled_jsonl(path):
    """Returns (RolledPath, header)."""
    head, recs = _read_jsonl(path)
    _check_header(head, "rolled-path")
    m = parse_manifold(head["manifold"])
    n, d = m.ambient_dim, m.dim
    jr = [(r["i"], r["jump"]) for r in recs if "jump" in r]
    frames = np.reshape([r["frame"] for r in recs], (-1, n, d)) if head["has_frames"] else None
    X = RolledPath(
        m, [r["t"] for r in recs], np.reshape([r["x"] for r in recs], (-1, n)),
        [i for i, _ in jr], np.reshape([j["pre"] for _, j in jr], (-1, n)),
        np.reshape([j["vec"] for _, j in jr], (-1, n)), frames,
        np.reshape([j["frame_pre"] for _, j in jr], (-1, n, d)) if head["has_frames"] else None,
        np.reshape([j["dw"] for _, j in jr], (-1, d)) if head["has_jump_dw"] else None,
        head.get("metadata", {}),
    )
    return X, head


# ---------------------------------------------------------------------- CSV

def _write_csv(path, head: dict, columns, rows):
    with open(path, "w", newline="") as fh:
        for key in sorted(head):
            fh.write(f"# {key}: {canonical_json(head[key])}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(row)


def _read_csv(path):
    head, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                head[key.strip()] = json.loads(val)
            else:
                body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise PathError(f"{path}: no column header")
    return head, rows[0], rows[1:]


def write_driver_csv(path, W: DriverPath, metadata=None, config_hash_value=None):
    """Columns: t, w1..wd (value), dw1..dwd (continuous increment into t), jump flag, j1..jd."""
    d = W.dim
    cols = ["t"] + [f"w{k + 1}" for k in range(d)] + [f"dw{k + 1}" for k in range(d)] + ["jump"] + \
        [f"j{k + 1}" for k in range(d)]
    jumps = dict(zip(W.jump_index.tolist(), W.jump_size))
    values = W.right_values
    zero = np.zeros(d)

    def rows():
        for i, t in enumerate(W.times):
            inc = W.increments[i - 1] if i else zero
            jump = jumps.get(i)
            yield ([fmt(t)] + [fmt(v) for v in values[i]] + [fmt(v) for v in inc] + [int(jump is not None)]
                   + [fmt(v) for v in (zero if jump is None else jump)])

    _write_csv(path, _header("driver-path", metadata, config_hash_value, dim=d), cols, rows())


def read_driver_csv(path):
    head, cols, rows = _read_csv(path)
    _check_header(head, "driver-path")
    d = head["dim"]
    a = np.array([[float(v) for v in r] for r in rows])
    jump = a[:, 1 + 2 * d] != 0
    return DriverPath(a[:, 0], a[1:, 1 + d:1 + 2 * d], np.nonzero(jump)[0], a[jump, 2 + 2 * d:]), head


def write_rolled_csv(path, X: RolledPath, metadata=None, config_hash_value=None):
    """Columns: t, x1..xn, jump flag, pre1..pren, v1..vn, then frame entries u<row>_<col> when present."""
    m = X.manifold
    n, d = m.ambient_dim, m.dim
    cols = ["t"] + [f"x{k + 1}" for k in range(n)] + ["jump"] + [f"pre{k + 1}" for k in range(n)] + \
        [f"v{k + 1}" for k in range(n)]
    if X.has_frames:
        cols += [f"u{a + 1}_{b + 1}" for a in range(n) for b in range(d)]
        cols += [f"upre{a + 1}_{b + 1}" for a in range(n) for b in range(d)]
    jumps = {int(k): j for j, k in enumerate(X.jump_index)}
    zn, znd = np.zeros(n), np.zeros(n * d)

    def rows():
        for i, t in enumerate(X.times):
            j = jumps.get(i)
            row = [fmt(t)] + [fmt(v) for v in X.points[i]] + [int(j is not None)]
            row += [fmt(v) for v in (zn if j is None else X.jump_pre[j])]
            row += [fmt(v) for v in (zn if j is None else X.jump_vec[j])]
            if X.has_frames:
                row += [fmt(v) for v in X.frames[i].ravel()]
                row += [fmt(v) for v in (znd if j is None else X.frame_jump_pre[j].ravel())]
            yield row

    head = _header("rolled-path", dict(X.metadata, **(metadata or {})), config_hash_value,
                   manifold=m.name, has_frames=X.has_frames)
    _write_csv(path, head, cols, rows())


def read_rolled_csv(path):
    head, cols, rows = _read_csv(path)
    _check_header(head, "rolled-path")
    m = parse_manifold(head["manifold"])
    n, d = m.ambient_dim, m.dim
    a = np.array([[float(v) for v in r] for r in rows])
    jump = a[:, 1 + n] != 0
    frames = fpre = None
    off = 2 + 3 * n
    if head["has_frames"]:
        frames = a[:, off:off + n * d].reshape(-1, n, d)
        fpre = a[jump, off + n * d:off + 2 * n * d].reshape(-1, n, d)
    X = RolledPath(m, a[:, 0], a[:, 1:1 + n], np.nonzero(jump)[0], a[jump, 2 + n:2 + 2 * n],
                   a[jump, 2 + 2 * n:2 + 3 * n], frames, fpre, None, head.get("metadata", {}))
    return X, head


def write_table_csv(path, columns, rows, metadata=None, config_hash_value=None):
    """Plain numeric table (convergence studies, reports) with the same header convention."""
    out = ([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row] for row in rows)
    _write_csv(path, _header("table", metadata, config_hash_value), list(columns), out)


def write_path(path, obj, **kw):
    """Dispatch on suffix (.jsonl or .csv) and object type."""
    path = Path(path)
    csv_out = path.suffix == ".csv"
    if isinstance(obj, DriverPath):
        return (write_driver_csv if csv_out else write_driver_jsonl)(path, obj, **kw)
    if isinstance(obj, RolledPath):
        return (write_rolled_csv if csv_out else write_rolled_jsonl)(path, obj, **kw)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def read_path(path):
    """Read either path kind from either format; returns (path object, header)."""
    path = Path(path)
    if path.suffix == ".csv":
        head, _, _ = _read_csv(path)
        return (read_driver_csv if head.get("kind") == "driver-path" else read_rolled_csv)(path)
    with open(path) as fh:
        kind = json.loads(fh.readline()).get("kind")
    return (read_driver_jsonl if kind == "driver-path" else read_rolled_jsonl)(path)
