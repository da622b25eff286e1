"""Binary and text artifact formats shared by the CLI stages.

All integers and floats are little-endian. Map payloads are row-major.
Formats:
  MRFM  maps         magic, version u32, dtype u8 (0=f64, 1=i32), rows u32,
                     cols u32, payload
  MRFD  dictionary   magic, version u32, K u32, T u32, K x 3 f64 params,
                     K f64 norms, K x T interleaved (re, im) f64 atoms
  MRFA  metric       magic, dim u32, row-major f64 transform, f64 ridge
  MRFY  measurements magic, version u32, rows u32, cols u32, T u32,
                     mask-text length u32, mask text (UTF-8), per-frame
                     interleaved (re, im) f64 blocks
"""

import struct

import numpy as np

from .dictionary import Dictionary
from .kspace import MeasurementSet
from .metric import MahalanobisMetric
from .phantom import LabelMap, ParameterMaps, TissueTable, DEFAULT_TISSUES
from .sampling import format_mask_text, parse_mask_text

MAP_MAGIC = b"MRFM"
DICT_MAGIC = b"MRFD"
METRIC_MAGIC = b"MRFA"
MEAS_MAGIC = b"MRFY"
VERSION = 1

_DTYPE_F64 = 0
_DTYPE_I32 = 1


class FormatError(ValueError):
    pass


def _read_exact(fh, n, what):
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file while reading {what}")
    return data


def write_map(path, array):
    """Write a 2-D float64 or int32 array in the map format."""
    array = np.asarray(array)
    if array.ndim != 2:
        raise ValueError("map must be 2-D")
    if np.issubdtype(array.dtype, np.integer):
        tag, payload = _DTYPE_I32, array.astype("<i4")
    else:
        tag, payload = _DTYPE_F64, array.astype("<f8")
    with open(path, "wb") as fh:
        fh.write(MAP_MAGIC)
        fh.write(struct.pack("<IBII", VERSION, tag, array.shape[0], array.shape[1]))
        fh.write(payload.tobytes(order="C"))


def read_map(path):
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAP_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAP_MAGIC!r}")
        version, tag, rows, cols = struct.unpack("<IBII", _read_exact(fh, 13, "header"))
        if version != VERSION:
            raise FormatError(f"unsupported map version {version}")
        if tag == _DTYPE_F64:
            dt, size = np.dtype("<f8"), 8
        elif tag == _DTYPE_I32:
            dt, size = np.dtype("<i4"), 4
        else:
            raise FormatError(f"unknown dtype tag {tag}")
        payload = _read_exact(fh, rows * cols * size, "payload")
        return np.frombuffer(payload, dtype=dt).reshape(rows, cols).copy()


def write_label_map(path, labels: LabelMap):
    write_map(path, labels.labels)


def load_label_map(path, table: TissueTable = DEFAULT_TISSUES) -> LabelMap:
    """Load a label map and validate every label against the tissue table."""
    arr = read_map(path)
    if not np.issubdtype(arr.dtype, np.integer):
        raise FormatError("label map payload must be integer")
    labels = LabelMap(arr)
    labels.validate_against(table)
    return labels


def write_parameter_maps(prefix, maps: ParameterMaps):
    """Write t1/t2/b0/density next to each other as `<prefix>_<name>.mrfm`."""
    for name, arr in maps.as_dict().items():
        write_map(f"{prefix}_{name}.mrfm", arr)


def read_parameter_maps(prefix) -> ParameterMaps:
    arrays = {name: read_map(f"{prefix}_{name}.mrfm")
              for name in ("t1", "t2", "b0", "density")}
    return ParameterMaps(**arrays)


def write_dictionary(path, dictionary: Dictionary):
    k, t = dictionary.size, dictionary.length
    with open(path, "wb") as fh:
        fh.write(DICT_MAGIC)
        fh.write(struct.pack("<III", VERSION, k, t))
        fh.write(dictionary.params.astype("<f8").tobytes(order="C"))
        fh.write(dictionary.norms.astype("<f8").tobytes(order="C"))
        inter = np.empty((k, 2 * t))
        inter[:, 0::2] = dictionary.atoms.real
        inter[:, 1::2] = dictionary.atoms.imag
        fh.write(inter.astype("<f8").tobytes(order="C"))


def read_dictionary(path) -> Dictionary:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != DICT_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {DICT_MAGIC!r}")
        version, k, t = struct.unpack("<III", _read_exact(fh, 12, "header"))
        if version != VERSION:
            raise FormatError(f"unsupported dictionary version {version}")
        params = np.frombuffer(_read_exact(fh, k * 3 * 8, "params"), dtype="<f8")
        norms = np.frombuffer(_read_exact(fh, k * 8, "norms"), dtype="<f8")
        if np.any(norms <= 0):
            raise FormatError("atom norms must be positive")
        inter = np.frombuffer(_read_exact(fh, k * t * 16, "atoms"), dtype="<f8")
        inter = inter.reshape(k, 2 * t)
        atoms = inter[:, 0::2] + 1j * inter[:, 1::2]
        return Dictionary(atoms=atoms, params=params.reshape(k, 3).copy(),
                          norms=norms.copy())


def write_metric(path, metric: MahalanobisMetric):
    with open(path, "wb") as fh:
        fh.write(METRIC_MAGIC)
        fh.write(struct.pack("<I", metric.dim))
        fh.write(metric.w.astype("<f8").tobytes(order="C"))
        fh.write(struct.pack("<d", metric.ridge))


def read_metric(path) -> MahalanobisMetric:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != METRIC_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {METRIC_MAGIC!r}")
        dim, = struct.unpack("<I", _read_exact(fh, 4, "dim"))
        w = np.frombuffer(_read_exact(fh, dim * dim * 8, "transform"), dtype="<f8")
        ridge, = struct.unpack("<d", _read_exact(fh, 8, "ridge"))
        return MahalanobisMetric(w=w.reshape(dim, dim).copy(), ridge=ridge)


def write_measurements(path, measurements: MeasurementSet, n_per_frame=None, c=None):
    mask_text = format_mask_text(measurements.masks, n_per_frame=n_per_frame, c=c).encode()
    with open(path, "wb") as fh:
        fh.write(MEAS_MAGIC)
        fh.write(struct.pack("<IIIII", VERSION, measurements.rows, measurements.cols,
                             measurements.length, len(mask_text)))
        fh.write(mask_text)
        for block in measurements.y:
            inter = np.empty(block.shape + (2,))
            inter[..., 0] = block.real
            inter[..., 1] = block.imag
            fh.write(inter.astype("<f8").tobytes(order="C"))


def read_measurements(path) -> MeasurementSet:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MEAS_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MEAS_MAGIC!r}")
        version, rows, cols, frames, mask_len = struct.unpack(
            "<IIIII", _read_exact(fh, 20, "header"))
        if version != VERSION:
            raise FormatError(f"unsupported measurement version {version}")
        masks = parse_mask_text(_read_exact(fh, mask_len, "mask block").decode())
        if masks.length != frames:
            raise FormatError("mask block frame count disagrees with header")
        y = []
        for rows_t in masks.frames:
            raw = _read_exact(fh, rows_t.size * cols * 16, "frame payload")
            inter = np.frombuffer(raw, dtype="<f8").reshape(rows_t.size, cols, 2)
            y.append(inter[..., 0] + 1j * inter[..., 1])
        return MeasurementSet(masks=masks, y=y, rows=rows, cols=cols)


def export_pgm(array, path, anchor=None):
    """16-bit binary PGM with truth-anchored normalization.

    `anchor=(lo, hi)` pins the gray scale so several maps can share one
    range; it defaults to the array's own min/max. Values are clipped.
    """
    array = np.asarray(array, dtype=float)
    if array.ndim != 2:
        raise ValueError("PGM export expects a 2-D map")
    if not np.all(np.isfinite(array)):
        raise ValueError("map contains non-finite values")
    lo, hi = anchor if anchor is not None else (array.min(), array.max())
    span = hi - lo
    if span <= 0:
        quant = np.zeros(array.shape, dtype=">u2")
    else:
        scaled = np.clip((array - lo) / span, 0.0, 1.0) * 65535.0
        quant = np.round(scaled).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{array.shape[1]} {array.shape[0]}\n65535\n".encode())
        fh.write(quant.tobytes(order="C"))


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) < 4:
        raise FormatError("not a binary PGM file")
    cols, rows = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[3][:rows * cols * np.dtype(dtype).itemsize],
                         dtype=dtype).reshape(rows, cols).copy()


def write_manifest(path, entries):
    """Plain `key = value` manifest capturing how an artifact was produced."""
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")


def read_manifest(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                key, value = line.split("=", 1)
                out[key.strip()] = value.strip()
    return out
