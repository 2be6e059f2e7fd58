"""Binary file formats and the JSONL manifest.

Trajectory bundle (``.trjb``)::

    magic "TRJB" | version u16 | S u32 | L u32 | D u32
    S records of L*D little-endian float32, row-major

Raw activation file (``.ract``)::

    magic "RACT" | version u16 | L u32 | T u32 | D u32 | K_h u32
    hidden block  L*T*D   little-endian float32
    attn block    L*K_h*T little-endian float32
    sample_id     u32 byte length + UTF-8 bytes

Coordinates are stored as float32 (model-dump precision) and widened to
float64 in memory, so a save/load round trip is exact for any payload
already on the float32 grid.

A manifest is JSON-lines, one object per sample: ``{"sample_id", "path"}``.
Relative paths resolve against the manifest's directory.  Records that
carry an ``"error"`` key (written by extractors for failed samples) are
skipped.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .trajectory import (
    RawActivationBundle,
    Trajectory,
    TrajectoryEnsemble,
    project_attention_weighted,
)

TRJB_MAGIC = b"TRJB"
RACT_MAGIC = b"RACT"
FORMAT_VERSION = 1

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


class _Reader:
    """Byte-offset-tracking reader so format errors can name a position."""

    def __init__(self, data: bytes, path: str):
        self.data = data
        self.path = path
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"truncated payload while reading {what}: expected {n} bytes, "
                f"found {len(self.data) - self.pos}",
                path=self.path,
                offset=self.pos,
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self, what: str) -> int:
        return _U16.unpack(self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return _U32.unpack(self.take(4, what))[0]

    def f32_array(self, shape: tuple[int, ...], what: str) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)

    def expect_magic(self, magic: bytes):
        found = self.take(len(magic), "magic number")
        if found != magic:
            raise FormatError(
                f"magic number mismatch: expected {magic!r}, found {found!r}",
                path=self.path,
                offset=0,
            )

    def expect_version(self):
        version = self.u16("format version")
        if version != FORMAT_VERSION:
            raise FormatError(
                f"unsupported format version {version} (expected {FORMAT_VERSION})",
                path=self.path,
                offset=self.pos - 2,
            )

    def expect_eof(self):
        if self.pos != len(self.data):
            raise FormatError(
                f"trailing bytes after payload: expected EOF, found {len(self.data) - self.pos} extra",
                path=self.path,
                offset=self.pos,
            )


def _f32_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def save_ensemble(ensemble: TrajectoryEnsemble, path) -> None:
    """Write a TRJB bundle with one record per trajectory."""
    S, L, D = ensemble.n_samples, ensemble.n_layers, ensemble.dim
    with open(path, "wb") as fh:
        fh.write(TRJB_MAGIC)
        fh.write(_U16.pack(FORMAT_VERSION))
        fh.write(_U32.pack(S))
        fh.write(_U32.pack(L))
        fh.write(_U32.pack(D))
        for traj in ensemble.trajectories:
            fh.write(_f32_bytes(traj.points))


def save_trajectory(traj: Trajectory, path) -> None:
    """Write a single trajectory as an S=1 TRJB bundle."""
    save_ensemble(TrajectoryEnsemble((traj,)), path)


def _load_trjb(data: bytes, path: str) -> TrajectoryEnsemble:
    reader = _Reader(data, path)
    reader.expect_magic(TRJB_MAGIC)
    reader.expect_version()
    S = reader.u32("header field S")
    L = reader.u32("header field L")
    D = reader.u32("header field D")
    if S < 1 or L < 2 or D < 1:
        raise FormatError(
            f"inconsistent header: S={S}, L={L}, D={D} (need S>=1, L>=2, D>=1)",
            path=path,
            offset=6,
        )
    expected = S * L * D * 4
    remaining = len(data) - reader.pos
    if remaining < expected:
        rows_found = remaining // (D * 4)
        raise FormatError(
            f"truncated payload: header declares {S}x{L} rows "
            f"({S * L}), only {rows_found} complete rows present",
            path=path,
            offset=reader.pos,
        )
    trajectories = []
    for s in range(S):
        pts = reader.f32_array((L, D), f"record {s}")
        trajectories.append(Trajectory(pts, meta=f"sample_{s}"))
    reader.expect_eof()
    return TrajectoryEnsemble(tuple(trajectories))


def save_bundle(bundle: RawActivationBundle, path) -> None:
    """Write a RACT raw-activation file."""
    L, T, D = bundle.hidden.shape
    K_h = bundle.attn_last.shape[1]
    sid = bundle.sample_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(RACT_MAGIC)
        fh.write(_U16.pack(FORMAT_VERSION))
        fh.write(_U32.pack(L))
        fh.write(_U32.pack(T))
        fh.write(_U32.pack(D))
        fh.write(_U32.pack(K_h))
        fh.write(_f32_bytes(bundle.hidden))
        fh.write(_f32_bytes(bundle.attn_last))
        fh.write(_U32.pack(len(sid)))
        fh.write(sid)


def load_bundle(path) -> RawActivationBundle:
    """Read a RACT raw-activation file."""
    path = str(path)
    with open(path, "rb") as fh:
        data = fh.read()
    reader = _Reader(data, path)
    reader.expect_magic(RACT_MAGIC)
    reader.expect_version()
    L = reader.u32("header field L")
    T = reader.u32("header field T")
    D = reader.u32("header field D")
    K_h = reader.u32("header field K_h")
    if L < 1 or T < 1 or D < 1 or K_h < 1:
        raise FormatError(
            f"inconsistent header: L={L}, T={T}, D={D}, K_h={K_h} (all must be >= 1)",
            path=path,
            offset=6,
        )
    hidden = reader.f32_array((L, T, D), "hidden block")
    attn = reader.f32_array((L, K_h, T), "attention block")
    sid_len = reader.u32("sample_id length")
    sid = reader.take(sid_len, "sample_id").decode("utf-8")
    reader.expect_eof()
    return RawActivationBundle(hidden=hidden, attn_last=attn, sample_id=sid)


def load_manifest(path) -> list[dict]:
    """Read a JSONL manifest; returns records with resolved paths.

    Error records (carrying an ``"error"`` key) are dropped.
    """
    path = Path(path)
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(
                    f"manifest line {lineno} is not valid JSON: {exc}", path=str(path)
                ) from exc
            if "error" in record:
                continue
            if "sample_id" not in record or "path" not in record:
                raise FormatError(
                    f"manifest line {lineno} needs \"sample_id\" and \"path\" keys, got {sorted(record)}",
                    path=str(path),
                )
            record = dict(record)
            record["path"] = str((path.parent / record["path"]).resolve())
            entries.append(record)
    if not entries:
        raise FormatError("manifest contains no usable sample records", path=str(path))
    return entries


def load_ensemble(path) -> TrajectoryEnsemble:
    """Read an ensemble from a TRJB bundle or a JSONL manifest.

    Manifest entries reference RACT files; each one is loaded and
    projected to a trajectory, so the manifest is the grouping mechanism
    for per-sample dumps.  Dimension disagreement across samples raises a
    format error naming both shapes.
    """
    path = str(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == TRJB_MAGIC:
        with open(path, "rb") as fh:
            return _load_trjb(fh.read(), path)
    if head == RACT_MAGIC:
        bundle = load_bundle(path)
        return TrajectoryEnsemble((project_attention_weighted(bundle),))
    # Not a binary payload: treat as manifest.
    trajectories = []
    for record in load_manifest(path):
        bundle = load_bundle(record["path"])
        traj = project_attention_weighted(bundle)
        trajectories.append(Trajectory(traj.points, meta=str(record["sample_id"])))
    return TrajectoryEnsemble(tuple(trajectories))
