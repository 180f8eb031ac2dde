"""Tensor files and CSV/JSON reports.

Native tensor layout (little-endian)::

    b"EQTN" | u8 version=1 | u8 ndim=4 | 4 x u32 dims | u8 scalar width (4|8) | C-order payload

``.npy`` files (format 1.0, little-endian f4/f8, C order, 4-D) are accepted
on read.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .metrics import Cell, EquivarianceReport
from .spectral import RadialPSD
from .verify import SweepRow

MAGIC = b"EQTN"
NPY_MAGIC = b"\x93NUMPY"
VERSION = 1
_HEADER = struct.Struct("<4sBB4IB")
_SCALARS = {4: np.dtype("<f4"), 8: np.dtype("<f8")}


class TensorFormatError(ValueError):
    pass


class BadMagicError(TensorFormatError):
    pass


class WrongNdimError(TensorFormatError):
    pass


class UnsupportedElementTypeError(TensorFormatError):
    pass


class TruncatedPayloadError(TensorFormatError):
    pass


def write_tensor(x: np.ndarray, path, width: int = 8) -> None:
    if width not in _SCALARS:
        raise UnsupportedElementTypeError(f"scalar width must be 4 or 8, got {width}")
    x = np.asarray(x)
    if x.ndim != 4:
        raise WrongNdimError(f"expected a 4-D tensor, got {x.ndim} dims")
    header = _HEADER.pack(MAGIC, VERSION, 4, *x.shape, width)
    payload = np.ascontiguousarray(x, dtype=_SCALARS[width]).tobytes()
    Path(path).write_bytes(header + payload)


def read_tensor(path) -> np.ndarray:
    """Load a 4-D tensor as float64 from a native or ``.npy`` file."""
    path = Path(path)
    with path.open("rb") as f:
        head = f.read(len(NPY_MAGIC))
        if head == NPY_MAGIC:
            f.seek(0)
            return _read_npy(f, path)
        f.seek(0)
        return _read_native(f, path)


def _read_native(f, path: Path) -> np.ndarray:
    fixed = f.read(6)
    if len(fixed) < 4 or fixed[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {fixed[:4]!r}")
    if len(fixed) < 6:
        raise TruncatedPayloadError(f"{path}: truncated header")
    version, ndim = fixed[4], fixed[5]
    if version != VERSION:
        raise TensorFormatError(f"{path}: unsupported version {version}")
    if ndim != 4:
        raise WrongNdimError(f"{path}: expected ndim 4, got {ndim}")
    rest = f.read(_HEADER.size - 6)
    if len(rest) < _HEADER.size - 6:
        raise TruncatedPayloadError(f"{path}: truncated header")
    _, _, _, *dims, width = _HEADER.unpack(fixed + rest)
    if width not in _SCALARS:
        raise UnsupportedElementTypeError(f"{path}: unsupported scalar width {width}")
    return _payload(f.read(), tuple(dims), _SCALARS[width], path)


def _read_npy(f, path: Path) -> np.ndarray:
    fmt = np.lib.format
    version = fmt.read_magic(f)
    if version != (1, 0):
        raise TensorFormatError(f"{path}: unsupported .npy version {version}")
    shape, fortran, dtype = fmt.read_array_header_1_0(f)
    if dtype not in _SCALARS.values():
        raise UnsupportedElementTypeError(f"{path}: unsupported element type {dtype.str}")
    if fortran:
        raise TensorFormatError(f"{path}: Fortran-ordered arrays are not supported")
    if len(shape) != 4:
        raise WrongNdimError(f"{path}: expected ndim 4, got {len(shape)}")
    return _payload(f.read(), shape, dtype, path)


def _payload(raw: bytes, dims: tuple[int, ...], dtype: np.dtype, path: Path) -> np.ndarray:
    expected = math.prod(dims) * dtype.itemsize
    if len(raw) < expected:
        raise TruncatedPayloadError(f"{path}: payload has {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw[:expected], dtype=dtype).reshape(dims)
    return data.astype(np.float64)


def read_map_dir(directory) -> list[np.ndarray]:
    files = sorted(
        p for p in Path(directory).iterdir() if p.suffix in (".eqtn", ".npy") and p.is_file()
    )
    return [read_tensor(p) for p in files]


def fmt(v: float) -> str:
    return f"{v:.5e}"


def _write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with Path(path).open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, kind: str, metadata: dict | None, rows: list[dict]) -> None:
    doc = {"kind": kind, "tool_version": __version__, "metadata": metadata or {}, "rows": rows}
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n")


def json_path(path) -> Path:
    return Path(path).with_suffix(".json")


REPORT_HEADER = ("layer", "group", "mean", "stderr", "n")


def write_report(report: EquivarianceReport, path, metadata: dict | None = None) -> None:
    """CSV with one row per cell, plus a full-precision JSON mirror next to it."""
    _write_csv(
        path,
        REPORT_HEADER,
        ([c.layer, c.group, fmt(c.mean), fmt(c.stderr), c.n] for c in report.cells),
    )
    rows = [
        {"layer": c.layer, "group": c.group, "mean": c.mean, "stderr": c.stderr, "n": c.n}
        for c in report.cells
    ]
    _write_json(json_path(path), "equivariance", metadata, rows)


def read_report(path) -> EquivarianceReport:
    """Parse a report CSV; per-cell second moments are rebuilt from the stderr."""
    report = EquivarianceReport()
    with Path(path).open(newline="") as f:
        for row in csv.DictReader(f):
            n = int(row["n"])
            se = float(row["stderr"])
            m2 = 0.0 if math.isnan(se) else se * se * n * (n - 1)
            report.cells.append(Cell(row["layer"], row["group"], n, float(row["mean"]), m2))
    return report


SWEEP_HEADER = (
    "center", "scale", "affine", "predicted", "shift_error", "translation_error",
    "measured", "agreement",
)


def _affine_label(affine) -> str:
    return "none" if affine is None else str(affine)


def write_sweep(rows: Sequence[SweepRow], path, metadata: dict | None = None) -> None:
    def measured(r):
        return "indeterminate" if r.measured is None else str(r.measured)

    _write_csv(
        path,
        SWEEP_HEADER,
        (
            [str(r.center_axes), str(r.scale_axes), _affine_label(r.affine_axes), str(r.predicted),
             fmt(r.shift_error), fmt(r.translation_error), measured(r), str(r.agreement).lower()]
            for r in rows
        ),
    )
    doc_rows = [
        {
            "center": str(r.center_axes), "scale": str(r.scale_axes),
            "affine": _affine_label(r.affine_axes), "predicted": str(r.predicted),
            "shift_error": r.shift_error, "translation_error": r.translation_error,
            "measured": measured(r), "agreement": r.agreement,
        }
        for r in rows
    ]
    _write_json(json_path(path), "sweep", metadata, doc_rows)


PSD_HEADER = ("layer", "r_lo", "r_hi", "power", "count")


def write_psd(psds: dict[str, RadialPSD], path, metadata: dict | None = None) -> None:
    """Plot-ready radial PSD rows, one block per layer."""
    rows, doc_rows = [], []
    for layer, psd in psds.items():
        for lo, hi, p, n in zip(psd.edges[:-1], psd.edges[1:], psd.power, psd.counts):
            rows.append([layer, fmt(lo), fmt(hi), fmt(p), int(n)])
            doc_rows.append(
                {"layer": layer, "r_lo": float(lo), "r_hi": float(hi), "power": float(p), "count": int(n)}
            )
    _write_csv(path, PSD_HEADER, rows)
    _write_json(json_path(path), "radial_psd", metadata, doc_rows)
