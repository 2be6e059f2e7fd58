"""RACT raw-activation file writer and the JSONL manifest.

Wire format (little-endian)::

    magic "RACT" | version u16 | L u32 | T u32 | D u32 | K_h u32
    hidden block  L*T*D   float32
    attn block    L*K_h*T float32
    sample_id     u32 byte length + UTF-8 bytes

This mirrors the format the analysis tool reads; bit-compatibility is
covered by the cross-component round-trip test.  All writes go through a
temp file plus rename so partially written files never appear.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

RACT_MAGIC = b"RACT"
FORMAT_VERSION = 1

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")

#: attention rows must be probability distributions within this tolerance
ATTN_ROW_TOL = 1e-4


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def write_ract(path, hidden: np.ndarray, attn_last: np.ndarray, sample_id: str) -> None:
    """Write one sample's activations; shapes (L,T,D) and (L,K_h,T)."""
    hidden = np.ascontiguousarray(hidden, dtype="<f4")
    attn_last = np.ascontiguousarray(attn_last, dtype="<f4")
    L, T, D = hidden.shape
    aL, K_h, aT = attn_last.shape
    if (aL, aT) != (L, T):
        raise ValueError(f"hidden {hidden.shape} and attention {attn_last.shape} disagree")
    row_err = np.abs(attn_last.sum(axis=2) - 1.0).max()
    if row_err > ATTN_ROW_TOL:
        raise ValueError(f"attention rows deviate from 1 by {row_err:.3e} (> {ATTN_ROW_TOL})")
    if not (np.isfinite(hidden).all() and np.isfinite(attn_last).all()):
        raise ValueError("non-finite values in activations")

    sid = sample_id.encode("utf-8")
    payload = b"".join(
        [
            RACT_MAGIC,
            _U16.pack(FORMAT_VERSION),
            _U32.pack(L),
            _U32.pack(T),
            _U32.pack(D),
            _U32.pack(K_h),
            hidden.tobytes(),
            attn_last.tobytes(),
            _U32.pack(len(sid)),
            sid,
        ]
    )
    _atomic_write(Path(path), payload)


def write_manifest(path, records: list[dict]) -> None:
    """One JSON object per line; error/warning records carry no path."""
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    _atomic_write(Path(path), text.encode("utf-8"))
