"""File formats: dataset JSON, report JSON, chain CSV. All writes are atomic."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from ..errors import DatasetFormatError
from ..netsim import NetworkDataset

FORMAT_VERSION = 1

_num_array = {"type": "array", "items": {"type": "number"}}

DATASET_SCHEMA = {
    "type": "object",
    "required": ["version", "dims", "inputs", "outputs"],
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "dims": {
            "type": "object",
            "required": ["n", "m", "p"],
            "properties": {k: {"type": "integer", "minimum": 1} for k in ("n", "m", "p")},
        },
        "seed": {"type": ["integer", "null"], "minimum": 0},
        "input_kind": {"type": ["string", "null"]},
        "inputs": {"type": "array", "items": _num_array},
        "outputs": _num_array,
        "truth": {"type": "array", "items": _num_array},
        "sigma2_true": {"type": "number", "exclusiveMinimum": 0},
        "active_set": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "created": {"type": "string"},
    },
}


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _dump(obj, out: list) -> None:
    # json.dumps offers no float formatting hook; floats go out at 17 significant digits
    if obj is None or isinstance(obj, (bool, str)):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialize non-finite value {obj}")
        out.append(format(float(obj), ".17g"))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)) + ": ")
            _dump(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _dump(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    out: list = []
    _dump(obj, out)
    return "".join(out) + "\n"


def atomic_write_text(path, text: str) -> None:
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


def write_json(path, obj) -> None:
    atomic_write_text(path, dumps(obj))


def read_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def dataset_to_dict(ds: NetworkDataset, created: bool = True) -> dict:
    d = {
        "version": FORMAT_VERSION,
        "dims": {"n": ds.n, "m": ds.m, "p": ds.p},
        "seed": ds.seed,
        "input_kind": ds.input_kind,
        "inputs": ds.inputs,
        "outputs": ds.outputs,
    }
    if ds.truth is not None:
        d["truth"] = ds.truth
    if ds.sigma2_true is not None:
        d["sigma2_true"] = ds.sigma2_true
    if ds.active_set is not None:
        d["active_set"] = [k + 1 for k in ds.active_set]
    if created:
        d["created"] = timestamp()
    return d


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def dataset_from_dict(d: dict, source: str = "<dataset>") -> NetworkDataset:
    try:
        jsonschema.validate(d, DATASET_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DatasetFormatError(f"{source}: {_pointer(exc.absolute_path)}: {exc.message}") from exc
    n, m, p = (d["dims"][k] for k in ("n", "m", "p"))

    def check(ptr, cond, msg):
        if not cond:
            raise DatasetFormatError(f"{source}: {ptr}: {msg}")

    check("/inputs", len(d["inputs"]) == p, f"expected {p} input signals")
    for k, u in enumerate(d["inputs"]):
        check(f"/inputs/{k}", len(u) == n + m - 1, f"expected {n + m - 1} samples, got {len(u)}")
    check("/outputs", len(d["outputs"]) == n, f"expected {n} samples, got {len(d['outputs'])}")
    truth = None
    if "truth" in d:
        check("/truth", len(d["truth"]) == p, f"expected {p} impulse responses")
        for k, t in enumerate(d["truth"]):
            check(f"/truth/{k}", len(t) == m, f"expected {m} coefficients, got {len(t)}")
        truth = np.asarray(d["truth"], dtype=float)
    active = None
    if "active_set" in d:
        for i, k in enumerate(d["active_set"]):
            check(f"/active_set/{i}", k <= p, f"module index {k} exceeds p={p}")
        active = sorted(k - 1 for k in d["active_set"])
    return NetworkDataset(
        inputs=np.asarray(d["inputs"], dtype=float),
        outputs=np.asarray(d["outputs"], dtype=float),
        n=n, m=m, p=p, truth=truth, sigma2_true=d.get("sigma2_true"),
        active_set=active, seed=d.get("seed"), input_kind=d.get("input_kind"),
    )


def save_dataset(path, ds: NetworkDataset) -> None:
    write_json(path, dataset_to_dict(ds))


def load_dataset(path) -> NetworkDataset:
    return dataset_from_dict(read_json(path), source=str(path))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(float(v), ".17g") if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    atomic_write_text(path, _csv_text(header, rows))


def write_chain_csv(path, record) -> None:
    p = record.lambda2.shape[1]
    header = ["sweep", "sigma2", "tau2"] + [f"lambda2_{k + 1}" for k in range(p)]
    rows = (
        [int(s), float(a), float(b), *map(float, lam)]
        for s, a, b, lam in zip(record.sweeps, record.sigma2, record.tau2, record.lambda2)
    )
    write_csv(path, header, rows)


def write_theta_csvs(directory, record) -> list:
    """One CSV per module: ``sweep, theta_1 .. theta_m`` for each stored sweep."""
    if record.thetas is None:
        return []
    directory = Path(directory)
    _, p, m = record.thetas.shape
    header = ["sweep"] + [f"theta_{i + 1}" for i in range(m)]
    paths = []
    for k in range(p):
        path = directory / f"theta_module_{k + 1}.csv"
        rows = ([int(s), *map(float, th)] for s, th in zip(record.sweeps, record.thetas[:, k, :]))
        write_csv(path, header, rows)
        paths.append(path)
    return paths
