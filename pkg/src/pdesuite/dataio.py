"""HDF5 dataset files and metric-report files.

Layout: one group per file, arrays packed ``(b, t, x1..xd, v)`` (no ``t``
for steady problems), parameters stored as a YAML document in a UTF-8 string
attribute.  Samples are streamed in per-sample chunks; out-of-order samples
are buffered so the byte layout never depends on worker scheduling.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import h5py
import numpy as np
import yaml

from .metrics import MetricReport

PRECISIONS = {"f32": np.float32, "f64": np.float64}
META_ATTR = "config"


class DatasetError(RuntimeError):
    """Unreadable, truncated or malformed dataset file."""


def _plain(obj):
    """Make metadata YAML/JSON friendly (tuples -> lists, numpy -> python)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def dump_meta(meta: dict) -> str:
    return yaml.safe_dump(_plain(meta), sort_keys=True, allow_unicode=True)


def load_meta(text: str) -> dict:
    return yaml.safe_load(text) or {}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class FileName:
    pde_name: str
    parameters: str
    config: str

    def __post_init__(self):
        for part in (self.pde_name, self.parameters, self.config):
            if not part or "--" in part or "/" in part:
                raise ValueError(f"invalid file name component {part!r}")

    @classmethod
    def from_values(cls, pde: str, params: dict, config: dict):
        p = "_".join(f"{k}={_fmt(v)}" for k, v in sorted(params.items())) or "default"
        c = "_".join(f"{k}={_fmt(v)}" for k, v in config.items()) or "default"
        return cls(pde, p, c)

    def render(self) -> str:
        return f"{self.pde_name}--{self.parameters}--{self.config}.h5"

    __str__ = render

    @classmethod
    def parse(cls, name: str):
        m = re.fullmatch(r"(.+?)--(.+?)--(.+)\.h5", os.path.basename(name))
        if not m:
            raise ValueError(f"not a dataset file name: {name!r}")
        return cls(*m.groups())


@dataclass
class DatasetFile:
    path: Path
    group: str
    arrays: dict[str, np.ndarray]
    meta: dict
    coords: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name):
        return self.arrays[name]


class DatasetWriter:
    """Stream samples into a new file.

    ``layout`` maps array name -> per-sample shape; the batch axis is
    prepended.  Use as a context manager: on any exception the partial file
    is removed.
    """

    def __init__(self, path, group: str, layout: dict[str, tuple[int, ...]], n_samples: int,
                 meta: dict, precision: str = "f32", coords: dict[str, np.ndarray] | None = None):
        if precision not in PRECISIONS:
            raise ValueError(f"precision must be one of {sorted(PRECISIONS)}")
        self.path = Path(path)
        self.n_samples = int(n_samples)
        self.layout = {k: tuple(int(s) for s in v) for k, v in layout.items()}
        self.dtype = PRECISIONS[precision]
        self._next = 0
        self._row = 0
        self._pending: dict[int, dict[str, np.ndarray]] = {}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._precision = precision
        meta = dict(meta, precision=precision)
        try:
            self._f = h5py.File(self.path, "w", libver=("earliest", "v110"), track_order=False)
            self._g = self._f.create_group(group, track_order=False)
            self._g.attrs[META_ATTR] = dump_meta(meta)
            self._f.attrs[META_ATTR] = dump_meta(meta)
            for name, c in (coords or {}).items():
                self._g.create_dataset(name, data=np.asarray(c, dtype=np.float64), track_times=False)
            self._ds = {}
            for name, shape in self.layout.items():
                chunk = (1, 1) + shape[1:] if len(shape) > 2 else (1,) + shape
                self._ds[name] = self._g.create_dataset(
                    name, shape=(self.n_samples,) + shape, maxshape=(None,) + shape,
                    dtype=self.dtype, chunks=chunk, track_times=False)
        except Exception:
            self._abort()
            raise

    def write_sample(self, index: int, arrays: dict[str, np.ndarray]):
        if not 0 <= index < self.n_samples:
            raise IndexError(f"sample index {index} outside [0, {self.n_samples})")
        for name, shape in self.layout.items():
            a = np.asarray(arrays[name])
            if a.shape != shape:
                raise ValueError(f"array {name!r}: shape {a.shape} != expected {shape}")
        self._queue(index, arrays)

    def skip(self, index: int):
        """Drop sample ``index``; later samples move up one row."""
        self._queue(index, None)

    def _queue(self, index, arrays):
        if index < self._next or index in self._pending:
            raise ValueError(f"sample {index} queued twice")
        self._pending[index] = arrays
        while self._next in self._pending:
            arrays = self._pending.pop(self._next)
            if arrays is not None:
                for name, a in arrays.items():
                    self._ds[name][self._row] = np.asarray(a, dtype=self.dtype)
                self._row += 1
            self._next += 1

    def set_meta(self, meta: dict):
        text = dump_meta(dict(meta, precision=self._precision))
        self._g.attrs[META_ATTR] = text
        self._f.attrs[META_ATTR] = text

    @property
    def rows_written(self) -> int:
        return self._row

    def close(self):
        if self._next != self.n_samples:
            missing = self.n_samples - self._next
            self._abort()
            raise DatasetError(f"{missing} samples never written; partial file removed")
        if self._row != self.n_samples:
            for ds in self._ds.values():
                ds.resize(self._row, axis=0)
        self._f.close()

    def _abort(self):
        try:
            if getattr(self, "_f", None) is not None:
                self._f.close()
        finally:
            self.path.unlink(missing_ok=True)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self._abort()
            return False
        self.close()
        return False


def write_dataset(path, group: str, arrays: dict[str, np.ndarray], meta: dict,
                  precision: str = "f32", coords: dict[str, np.ndarray] | None = None) -> DatasetFile:
    """Write fully materialized batch arrays (leading axis = sample)."""
    arrays = {k: np.asarray(v) for k, v in arrays.items()}
    sizes = {v.shape[0] for v in arrays.values()}
    if len(sizes) != 1:
        raise ValueError(f"arrays disagree on batch size: {sorted(sizes)}")
    n = sizes.pop()
    with DatasetWriter(path, group, {k: v.shape[1:] for k, v in arrays.items()}, n, meta,
                       precision, coords) as w:
        for i in range(n):
            w.write_sample(i, {k: v[i] for k, v in arrays.items()})
    return read_dataset(path)


def read_dataset(path) -> DatasetFile:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"no such dataset file: {path}")
    try:
        with h5py.File(path, "r") as f:
            groups = [k for k in f.keys() if isinstance(f[k], h5py.Group)]
            if len(groups) != 1:
                raise DatasetError(f"{path}: expected exactly one group, found {groups}")
            g = f[groups[0]]
            meta = load_meta(g.attrs[META_ATTR])
            coords, arrays = {}, {}
            for name, ds in g.items():
                (coords if name.endswith("-coordinate") else arrays)[name] = ds[()]
            return DatasetFile(path, groups[0], arrays, meta, coords)
    except DatasetError:
        raise
    except (OSError, KeyError, ValueError) as e:
        raise DatasetError(f"cannot read {path}: {e}") from e


# -- reports -------------------------------------------------------------------

def format_report_table(report: MetricReport) -> str:
    width = max((len(k) for k in report.values), default=0)
    return "".join(f"{k:<{width}}  {v:.17g}\n" for k, v in report.values.items())


def parse_report_table(text: str) -> dict[str, float]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, val = line.rstrip().rsplit(None, 1)
            out[key.strip()] = float(val)
    return out


def emit_report(report: MetricReport, path) -> tuple[Path, Path]:
    """Write ``<path>.json`` and ``<path>.txt``; returns both paths."""
    base = Path(path)
    if base.suffix in (".json", ".txt"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    js, txt = base.with_name(base.name + ".json"), base.with_name(base.name + ".txt")
    js.write_text(json.dumps(_plain(report.to_dict()), indent=2) + "\n")
    txt.write_text(format_report_table(report))
    return js, txt


def load_report(path) -> MetricReport:
    return MetricReport.from_dict(json.loads(Path(path).read_text()))
