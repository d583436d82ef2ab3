"""Text serialization for datasets, parameters and reports.

Dataset CSV: a first row ``d,m,k,loss`` (values; a literal ``d,m,k,loss``
name row before it is also accepted), then one row per instance holding
``x_1..x_d`` followed by the target (``k`` values for the squared loss, one
class index for cross-entropy).  Floats are written with ``repr`` so every
value survives a round trip exactly.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .montecarlo.stats import _clean
from .nets import Dataset, DeepParams, TwoLayerParams

__all__ = [
    "DataFormatError",
    "dataset_to_csv",
    "dataset_from_csv",
    "write_dataset",
    "read_dataset",
    "params_to_dict",
    "params_from_dict",
    "write_params",
    "read_params",
    "write_json",
    "write_records_csv",
]


class DataFormatError(ValueError):
    """Malformed input file; ``location`` is ``path:line`` when known."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def _fmt(x) -> str:
    return repr(float(x))


def dataset_to_csv(data: Dataset) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([data.d, data.m, data.k, data.loss])
    y = data.y.reshape(data.m, -1)
    for t in range(data.m):
        if data.loss == "cross_entropy":
            tail = [str(int(y[t, 0]))]
        else:
            tail = [_fmt(v) for v in y[t]]
        w.writerow([_fmt(v) for v in data.X[t]] + tail)
    return buf.getvalue()


def dataset_from_csv(text: str, source: str = "<string>", meta: dict | None = None) -> Dataset:
    rows = [(i + 1, r) for i, r in enumerate(csv.reader(_io.StringIO(text))) if r and any(c.strip() for c in r)]
    if rows and [c.strip().lower() for c in rows[0][1]] == ["d", "m", "k", "loss"]:
        rows = rows[1:]
    if not rows:
        raise DataFormatError("empty dataset file", f"{source}:1")
    line, head = rows[0]
    if len(head) != 4:
        raise DataFormatError(f"header must be 'd,m,k,loss', got {len(head)} field(s)", f"{source}:{line}")
    try:
        d, m, k = (int(head[i]) for i in range(3))
    except ValueError:
        raise DataFormatError(f"header fields d, m, k must be integers, got {head[:3]}", f"{source}:{line}") from None
    loss = head[3].strip()
    ce = loss.lower().replace("-", "_") in ("cross_entropy", "crossentropy", "ce")
    width = d + (1 if ce else k)
    body = rows[1:]
    if len(body) != m:
        raise DataFormatError(f"header declares m={m} instances but {len(body)} rows follow",
                              f"{source}:{body[-1][0] if body else line}")
    X = np.empty((m, d))
    Y = np.empty((m, width - d))
    for t, (ln, r) in enumerate(body):
        if len(r) != width:
            raise DataFormatError(f"expected {width} fields, got {len(r)}", f"{source}:{ln}")
        for col, cell in enumerate(r):
            try:
                val = float(cell)
            except ValueError:
                raise DataFormatError(f"field {col + 1} is not a number: {cell!r}", f"{source}:{ln}") from None
            if not math.isfinite(val):
                raise DataFormatError(f"field {col + 1} is not finite", f"{source}:{ln}")
            if col < d:
                X[t, col] = val
            else:
                Y[t, col - d] = val
    y = Y[:, 0] if Y.shape[1] == 1 else Y
    meta = dict(meta or {})
    ids = meta.pop("cluster_ids", None)
    prov = meta.pop("provenance", None)
    try:
        return Dataset(X, y, loss=loss, k=k, cluster_ids=ids, provenance=prov, meta=meta)
    except ValueError as exc:
        raise DataFormatError(str(exc), source) from None


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def write_dataset(data: Dataset, path, extra: dict | None = None) -> None:
    """Write the CSV and a JSON sidecar (same stem) with provenance and constants."""
    path = Path(path)
    path.write_text(dataset_to_csv(data))
    side = {"provenance": data.provenance, "d": data.d, "m": data.m, "k": data.k, "loss": data.loss,
            **({"cluster_ids": data.cluster_ids.tolist()} if data.cluster_ids is not None else {}),
            **data.meta, **(extra or {})}
    write_json(side, _sidecar(path))


def read_dataset(path) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read dataset: {exc.strerror}", str(path)) from None
    side = _sidecar(path)
    meta = None
    if side.exists() and side != path:
        try:
            meta = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise DataFormatError(exc.msg, f"{side}:{exc.lineno}") from None
        for key in ("d", "m", "k", "loss"):
            meta.pop(key, None)
    return dataset_from_csv(text, str(path), meta)


def params_to_dict(params) -> dict:
    if isinstance(params, TwoLayerParams):
        return {"type": "two_layer", "n": params.n, "d": params.d, "k": params.k,
                "W": params.W.ravel().tolist(), "v": params.v.ravel().tolist()}
    if isinstance(params, DeepParams):
        out = {"type": "deep", "layer_sizes": params.layer_sizes}
        for i, (W, b) in enumerate(params.hidden):
            out[f"W{i}"] = W.ravel().tolist()
            out[f"b{i}"] = b.tolist()
        out["output"] = params.output.ravel().tolist()
        return out
    raise TypeError(f"cannot serialize {type(params).__name__}")


def params_from_dict(doc: dict, source: str = "<params>"):
    try:
        kind = doc.get("type", "two_layer")
        if kind == "two_layer":
            n, d = int(doc["n"]), int(doc["d"])
            W = np.asarray(doc["W"], float)
            v = np.asarray(doc["v"], float)
            if W.size != n * d:
                raise DataFormatError(f"field 'W' has {W.size} entries, expected n*d = {n * d}", source)
            k = int(doc.get("k", 1))
            if v.size != n * k:
                raise DataFormatError(f"field 'v' has {v.size} entries, expected {n * k}", source)
            return TwoLayerParams(W.reshape(n, d), v if k == 1 else v.reshape(n, k))
        if kind == "deep":
            sizes = [int(s) for s in doc["layer_sizes"]]
            hidden = []
            for i in range(len(sizes) - 2):
                W = np.asarray(doc[f"W{i}"], float)
                if W.size != sizes[i + 1] * sizes[i]:
                    raise DataFormatError(f"field 'W{i}' has {W.size} entries, expected {sizes[i + 1] * sizes[i]}",
                                          source)
                hidden.append((W.reshape(sizes[i + 1], sizes[i]), np.asarray(doc[f"b{i}"], float)))
            out = np.asarray(doc["output"], float).reshape(sizes[-1], sizes[-2])
            return DeepParams(tuple(hidden), out)
    except KeyError as exc:
        raise DataFormatError(f"missing field {exc.args[0]!r}", source) from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DataFormatError):
            raise
        raise DataFormatError(str(exc), source) from None
    raise DataFormatError(f"unknown params type {kind!r}", source)


def write_params(params, path) -> None:
    write_json(params_to_dict(params), path)


def read_params(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise DataFormatError(f"cannot read params: {exc.strerror}", str(path)) from None
    except json.JSONDecodeError as exc:
        raise DataFormatError(exc.msg, f"{path}:{exc.lineno}") from None
    if not isinstance(doc, dict):
        raise DataFormatError("params file must hold a JSON object", str(path))
    return params_from_dict(doc, str(path))


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def write_records_csv(records: list[dict], path) -> None:
    """Per-trial diagnostics; columns in order of first appearance, ``trial`` first."""
    cols = list(dict.fromkeys(k for r in records for k in r))
    if "trial" in cols:
        cols.insert(0, cols.pop(cols.index("trial")))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            row = []
            for c in cols:
                v = r.get(c, "")
                if isinstance(v, (float, np.floating)):
                    v = repr(float(v))
                elif isinstance(v, (list, tuple, dict)):
                    v = json.dumps(_clean(v))
                row.append(v)
            w.writerow(row)
