"""File formats: DMAT binary matrices, label files, tag lists and model files.

DMAT
    ``DMAT <rows> <cols>\\n`` in ASCII, then ``rows * cols`` little-endian
    IEEE-754 binary64 values in row-major order, no padding.

Labels
    One UTF-8 line per row holding a tag name, or ``-`` for an unlabeled row.
    A blank line ends a sequence.

Tag list
    One tag per line, ``O`` first. A line may carry a prototype count after a
    tab (``I-LOC\\t2``); otherwise O gets the caller's default and every other
    tag gets one prototype.

Model
    Text section markers around binary DMAT payloads::

        WSKM-MODEL 1
        centroids
        DMAT k d + payload
        projection
        DMAT d p + payload          (identity d x d when no subspace was learned)
        eigenvalues
        DMAT 1 p + payload          (1 x 0 when no subspace was learned)
        tagmap <k>
        <prototype index>\\t<tag name>      k lines
        trace <rounds>
        iter,objective,row_sum_residual,ratio_residual
        <one line per round, floats in repr() form>
        end
"""
from __future__ import annotations

import io
import os
from typing import BinaryIO

import numpy as np

from .core import OUTSIDE, UNLABELED, TagMap
from .pipeline import Model, TraceRow
from .subspace import Projection

MAGIC = b"DMAT"
MODEL_MAGIC = "WSKM-MODEL 1"
TRACE_HEADER = "iter,objective,row_sum_residual,ratio_residual"
_LE_F64 = np.dtype("<f8")


class FormatError(ValueError):
    """Base class for malformed input files; ``code`` doubles as a CLI exit status."""

    code = 10


class BadMagicError(FormatError):
    code = 11


class TruncatedPayloadError(FormatError):
    code = 12


class TrailingDataError(FormatError):
    code = 13


class NonFiniteError(FormatError):
    code = 14


class LabelError(FormatError):
    code = 15

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ModelFormatError(FormatError):
    code = 16


# -- DMAT -------------------------------------------------------------------

def dump_dmat(fh: BinaryIO, M) -> None:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"DMAT holds 2-D matrices, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError("refusing to write non-finite values")
    rows, cols = M.shape
    fh.write(b"%s %d %d\n" % (MAGIC, rows, cols))
    fh.write(np.ascontiguousarray(M, dtype=_LE_F64).tobytes())


def load_dmat(fh: BinaryIO, exact_end: bool = False) -> np.ndarray:
    header = fh.readline(64)
    parts = header.rstrip(b"\n").split(b" ")
    if (
        not header.endswith(b"\n")
        or len(parts) != 3
        or parts[0] != MAGIC
        or not all(p.isdigit() for p in parts[1:])
    ):
        raise BadMagicError(f"bad DMAT header {header[:32]!r}")
    rows, cols = int(parts[1]), int(parts[2])
    nbytes = rows * cols * 8
    payload = fh.read(nbytes)
    if len(payload) < nbytes:
        raise TruncatedPayloadError(
            f"DMAT {rows}x{cols} needs {nbytes} payload bytes, found {len(payload)}"
        )
    if exact_end and fh.read(1):
        raise TrailingDataError(f"bytes after the {rows}x{cols} DMAT payload")
    M = np.frombuffer(payload, dtype=_LE_F64).astype(np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(M)):
        raise NonFiniteError("DMAT payload contains non-finite values")
    return M


def write_dmat(path, M) -> None:
    with open(path, "wb") as fh:
        dump_dmat(fh, M)


def read_dmat(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return load_dmat(fh, exact_end=True)


# -- labels ------------------------------------------------------------------

def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return lines


def read_label_names(path) -> list[list[str]]:
    """Raw tag names (``-`` kept as is), grouped into sequences."""
    seqs: list[list[str]] = [[]]
    for line in _read_lines(path):
        name = line.strip()
        if not name:
            if seqs[-1]:
                seqs.append([])
            continue
        seqs[-1].append(name)
    if not seqs[-1]:
        seqs.pop()
    return seqs


def read_label_sequences(path, tag_map: TagMap, allow_unlabeled: bool = True) -> list[list[int]]:
    seqs: list[list[int]] = [[]]
    for lineno, line in enumerate(_read_lines(path), start=1):
        name = line.strip()
        if not name:
            if seqs[-1]:
                seqs.append([])
            continue
        if name == "-":
            if not allow_unlabeled:
                raise LabelError("unlabeled row not allowed here", lineno)
            seqs[-1].append(UNLABELED)
            continue
        try:
            seqs[-1].append(tag_map.index(name))
        except KeyError:
            raise LabelError(f"unknown tag {name!r}", lineno) from None
    if not seqs[-1]:
        seqs.pop()
    return seqs


def read_labels(path, tag_map: TagMap) -> list[int]:
    """Flat per-row tag indices; unlabeled rows are ``UNLABELED``."""
    return [t for seq in read_label_sequences(path, tag_map) for t in seq]


def write_labels(path, sequences, tag_map: TagMap) -> None:
    """Write label sequences (lists of tag indices, ``UNLABELED`` as ``-``)."""
    blocks = []
    for seq in sequences:
        blocks.append("".join(
            ("-" if t == UNLABELED else tag_map.tags[t]) + "\n" for t in seq
        ))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(blocks))


# -- tag lists ---------------------------------------------------------------

def read_tag_list(path, o_prototypes: int = 10) -> TagMap:
    tags, counts = [], []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        name, _, count = line.strip().partition("\t")
        if not count:
            count = str(o_prototypes) if name == OUTSIDE else "1"
        if not count.isdigit() or int(count) < 1:
            raise LabelError(f"bad prototype count {count!r}", lineno)
        tags.append(name)
        counts.append(int(count))
    if not tags or tags[0] != OUTSIDE:
        raise LabelError(f"tag list must start with {OUTSIDE!r}")
    try:
        return TagMap.from_counts(tags, counts)
    except ValueError as exc:
        raise LabelError(str(exc)) from None


def write_tag_list(path, tag_map: TagMap) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t, name in enumerate(tag_map.tags):
            fh.write(f"{name}\t{len(tag_map.prototypes_of(t))}\n")


# -- model files -------------------------------------------------------------

def dump_model(fh: BinaryIO, model: Model) -> None:
    C = model.centroids
    d = C.shape[1]
    if model.projection is None:
        U, eig = np.eye(d), np.zeros((1, 0))
    else:
        U, eig = model.projection.u, model.projection.eigenvalues.reshape(1, -1)
    fh.write(f"{MODEL_MAGIC}\ncentroids\n".encode())
    dump_dmat(fh, C)
    fh.write(b"projection\n")
    dump_dmat(fh, U)
    fh.write(b"eigenvalues\n")
    dump_dmat(fh, eig)
    phi = model.tag_map
    lines = [f"tagmap {phi.k}"]
    lines += [f"{j}\t{phi.tags[t]}" for j, t in enumerate(phi.proto_tag)]
    lines += [f"trace {len(model.trace)}", TRACE_HEADER]
    lines += [trace_line(r) for r in model.trace]
    lines.append("end")
    fh.write(("\n".join(lines) + "\n").encode())


def trace_line(r: TraceRow) -> str:
    vals = (float(r.objective), float(r.row_sum_residual), float(r.ratio_residual))
    return f"{int(r.iteration)}," + ",".join(repr(v) for v in vals)


def _expect(fh: BinaryIO, text: str) -> None:
    line = fh.readline().decode("utf-8", "replace").rstrip("\n")
    if line != text:
        raise ModelFormatError(f"expected {text!r}, found {line!r}")


def _counted(fh: BinaryIO, key: str) -> int:
    line = fh.readline().decode("utf-8", "replace").rstrip("\n")
    name, _, count = line.partition(" ")
    if name != key or not count.isdigit():
        raise ModelFormatError(f"expected '{key} <count>', found {line!r}")
    return int(count)


def load_model(fh: BinaryIO) -> Model:
    _expect(fh, MODEL_MAGIC)
    _expect(fh, "centroids")
    C = load_dmat(fh)
    _expect(fh, "projection")
    U = load_dmat(fh)
    _expect(fh, "eigenvalues")
    eig = load_dmat(fh)

    k = _counted(fh, "tagmap")
    tags: list[str] = []
    proto_tag = []
    for j in range(k):
        idx, _, name = fh.readline().decode("utf-8").rstrip("\n").partition("\t")
        if idx != str(j) or not name:
            raise ModelFormatError(f"bad tagmap line for prototype {j}")
        if name not in tags:
            tags.append(name)
        proto_tag.append(tags.index(name))
    try:
        phi = TagMap(tuple(tags), tuple(proto_tag))
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None

    rounds = _counted(fh, "trace")
    _expect(fh, TRACE_HEADER)
    trace = []
    for _ in range(rounds):
        parts = fh.readline().decode().rstrip("\n").split(",")
        if len(parts) != 4:
            raise ModelFormatError("bad trace line")
        trace.append(TraceRow(int(parts[0]), *(float(p) for p in parts[1:])))
    _expect(fh, "end")
    if fh.read(1):
        raise TrailingDataError("bytes after model 'end' marker")

    if C.shape[0] != k or U.shape[0] != C.shape[1] or eig.shape[1] > U.shape[1]:
        raise ModelFormatError(f"inconsistent shapes C {C.shape}, U {U.shape}, k {k}")
    projection = None
    if eig.shape[1] > 0:
        projection = Projection(U, eig[0].copy())
    return Model(C, phi, projection, trace)


def save_model(path, model: Model) -> None:
    buf = io.BytesIO()
    dump_model(buf, model)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def load_model_file(path) -> Model:
    with open(path, "rb") as fh:
        return load_model(fh)
