"""Binary persistence of a CoverageModel.

Layout: the magic bytes b"SVCM", a little-endian uint16 format version and a
uint16 section count, then length-prefixed sections (uint64 byte length
followed by the payload):

0. header, UTF-8 JSON: grid descriptor, measurement span and shape
1. vehicle ids, UTF-8 JSON list in row order
2. weights, float64
3. block rows, int64
4. block cols, int64
5. CSR indptr, int64
6. CSR indices, int64
7. dwell seconds, float64
8. hit counts, int64

Every array is little endian, vehicles are sorted by id and blocks are in
row-major order, so equal models serialize to equal bytes.
"""

import json
import logging
import struct

import numpy as np

from .coverage_model import CoverageModel
from .errors import ModelFormatError
from .geo_grid import Grid

logger = logging.getLogger(__name__)

MAGIC = b"SVCM"
VERSION = 1
_PREFIX = struct.Struct("<4sHH")
_LENGTH = struct.Struct("<Q")
_ARRAY_SECTIONS = [
    ("weights", "<f8"),
    ("block_rows", "<i8"),
    ("block_cols", "<i8"),
    ("indptr", "<i8"),
    ("indices", "<i8"),
    ("dwell", "<f8"),
    ("hits", "<i8"),
]
N_SECTIONS = 2 + len(_ARRAY_SECTIONS)


def _json_bytes(value):
    return json.dumps(value, sort_keys=True, separators=(",", ":")).encode("utf-8")


def model_to_bytes(model):
    header = {
        "grid": model.grid.to_dict() if model.grid is not None else None,
        "measurement_span": model.measurement_span,
        "n_vehicles": model.n_vehicles,
        "n_blocks": model.n_blocks,
    }
    arrays = {
        "weights": model.weights,
        "block_rows": np.array([b.row for b in model.blocks], dtype=np.int64),
        "block_cols": np.array([b.col for b in model.blocks], dtype=np.int64),
        "indptr": model.dwell.indptr,
        "indices": model.dwell.indices,
        "dwell": model.dwell.data,
        "hits": model.hits.data,
    }
    sections = [_json_bytes(header), _json_bytes(model.vehicle_ids)]
    sections += [np.ascontiguousarray(arrays[name], dtype=dtype).tobytes() for name, dtype in _ARRAY_SECTIONS]
    chunks = [_PREFIX.pack(MAGIC, VERSION, len(sections))]
    for payload in sections:
        chunks.append(_LENGTH.pack(len(payload)))
        chunks.append(payload)
    return b"".join(chunks)


def _read_sections(data):
    if len(data) < _PREFIX.size:
        raise ModelFormatError("model file is truncated")
    magic, version, count = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise ModelFormatError(f"not a coverage model file (magic {magic!r})")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model format version {version}, expected {VERSION}")
    if count != N_SECTIONS:
        raise ModelFormatError(f"expected {N_SECTIONS} sections, file declares {count}")
    offset = _PREFIX.size
    sections = []
    for _ in range(count):
        if offset + _LENGTH.size > len(data):
            raise ModelFormatError("model file is truncated")
        (length,) = _LENGTH.unpack_from(data, offset)
        offset += _LENGTH.size
        if offset + length > len(data):
            raise ModelFormatError("model file is truncated")
        sections.append(data[offset : offset + length])
        offset += length
    if offset != len(data):
        raise ModelFormatError(f"{len(data) - offset} trailing bytes after the last section")
    return sections


def model_from_bytes(data):
    sections = _read_sections(bytes(data))
    try:
        header = json.loads(sections[0].decode("utf-8"))
        vehicle_ids = json.loads(sections[1].decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as error:
        raise ModelFormatError(f"corrupt model header: {error}") from error
    arrays = {}
    for (name, dtype), payload in zip(_ARRAY_SECTIONS, sections[2:]):
        if len(payload) % np.dtype(dtype).itemsize:
            raise ModelFormatError(f"section {name} has a partial element")
        arrays[name] = np.frombuffer(payload, dtype=dtype).astype(dtype[1:])

    n_vehicles, n_blocks = header["n_vehicles"], header["n_blocks"]
    if len(vehicle_ids) != n_vehicles or len(arrays["weights"]) != n_vehicles:
        raise ModelFormatError("vehicle sections disagree with the header")
    if len(arrays["block_rows"]) != n_blocks or len(arrays["block_cols"]) != n_blocks:
        raise ModelFormatError("block sections disagree with the header")
    indptr = arrays["indptr"]
    nnz = len(arrays["indices"])
    if (
        len(indptr) != n_vehicles + 1
        or indptr[0] != 0
        or indptr[-1] != nnz
        or np.any(np.diff(indptr) < 0)
        or len(arrays["dwell"]) != nnz
        or len(arrays["hits"]) != nnz
        or (nnz and (arrays["indices"].min() < 0 or arrays["indices"].max() >= n_blocks))
    ):
        raise ModelFormatError("inconsistent sparse matrix sections")

    shape = (n_vehicles, n_blocks)
    grid = Grid.from_dict(header["grid"]) if header["grid"] is not None else None
    return CoverageModel(
        vehicle_ids,
        list(zip(arrays["block_rows"].tolist(), arrays["block_cols"].tolist())),
        (arrays["dwell"], arrays["indices"], indptr),
        (arrays["hits"], arrays["indices"], indptr),
        header["measurement_span"],
        weights=arrays["weights"],
        grid=grid,
    )


def save_model(model, path):
    data = model_to_bytes(model)
    with open(path, "wb") as f:
        f.write(data)
    logger.debug("wrote %d bytes to %s", len(data), path)


def load_model(path):
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as error:
        raise ModelFormatError(f"cannot read model file {path}: {error}") from error
    return model_from_bytes(data)
