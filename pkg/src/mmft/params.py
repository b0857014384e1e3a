"""Named parameter registry and the binary checkpoint format.

Checkpoint layout (all integers little-endian)::

    b"MMFT"  uint32 version  uint32 n_records
    n_records x ( uint32 name_len, utf-8 name, uint32 ndim, ndim x uint64 dim,
                  prod(dims) x float64 )

Records are written in sorted name order so identical parameters give
identical bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from mmft.errors import InputError, ParseError
from mmft.numerics import Tensor

MAGIC = b"MMFT"
FORMAT_VERSION = 1


class ModelParams:
    def __init__(self, tensors: dict | None = None):
        self._t: dict[str, Tensor] = {}
        for name, t in (tensors or {}).items():
            self[name] = t

    def __getitem__(self, name: str) -> Tensor:
        return self._t[name]

    def __setitem__(self, name: str, t) -> None:
        if not isinstance(t, Tensor):
            t = Tensor(t, requires_grad=True)
        self._t[name] = t

    def __contains__(self, name) -> bool:
        return name in self._t

    def __iter__(self):
        return iter(self._t)

    def __len__(self) -> int:
        return len(self._t)

    def names(self) -> list[str]:
        return sorted(self._t)

    def items(self):
        return ((n, self._t[n]) for n in self.names())

    def update(self, other: dict) -> None:
        for name, t in other.items():
            if name in self._t:
                raise InputError(f"duplicate parameter name {name!r}")
            self[name] = t

    def n_values(self) -> int:
        return int(sum(t.size for t in self._t.values()))

    def zero_grad(self) -> None:
        for t in self._t.values():
            t.grad = None

    def arrays(self) -> dict[str, np.ndarray]:
        return {n: t.data for n, t in self.items()}

    def grads(self) -> dict[str, np.ndarray]:
        return {n: (np.zeros_like(t.data) if t.grad is None else t.grad) for n, t in self.items()}

    def assign(self, arrays: dict) -> None:
        for n, a in arrays.items():
            self._t[n].data = np.array(a, dtype=np.float64)

    def copy(self) -> "ModelParams":
        return ModelParams({n: Tensor(t.data.copy(), requires_grad=True) for n, t in self.items()})

    def equals(self, other: "ModelParams") -> bool:
        return self.names() == other.names() and all(
            np.array_equal(self[n].data, other[n].data) for n in self.names())

    # -- serialisation ------------------------------------------------------
    def to_bytes(self) -> bytes:
        parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(self._t))]
        for name, t in self.items():
            raw = name.encode("utf-8")
            parts.append(struct.pack("<I", len(raw)))
            parts.append(raw)
            parts.append(struct.pack("<I", t.ndim))
            parts.append(struct.pack(f"<{t.ndim}Q", *t.shape))
            parts.append(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes, source: str = "<bytes>") -> "ModelParams":
        def need(n, pos, what):
            if pos + n > len(blob):
                raise ParseError(source, pos, f"truncated checkpoint while reading {what}")

        if blob[:4] != MAGIC:
            raise ParseError(source, 0, "bad magic; not an MMFT checkpoint")
        need(8, 4, "header")
        version, count = struct.unpack_from("<II", blob, 4)
        if version != FORMAT_VERSION:
            raise ParseError(source, 4, f"unsupported checkpoint version {version}")
        pos = 12
        out = cls()
        for rec in range(count):
            need(4, pos, f"record {rec} name length")
            (nlen,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            need(nlen, pos, f"record {rec} name")
            name = blob[pos:pos + nlen].decode("utf-8")
            pos += nlen
            need(4, pos, f"record {rec} ndim")
            (ndim,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            need(8 * ndim, pos, f"record {rec} shape")
            shape = struct.unpack_from(f"<{ndim}Q", blob, pos)
            pos += 8 * ndim
            size = int(np.prod(shape)) if ndim else 1
            need(8 * size, pos, f"record {rec} data")
            data = np.frombuffer(blob, dtype="<f8", count=size, offset=pos).astype(np.float64)
            pos += 8 * size
            out[name] = Tensor(data.reshape(shape), requires_grad=True)
        if pos != len(blob):
            raise ParseError(source, pos, "trailing bytes after last record")
        return out

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ModelParams":
        return cls.from_bytes(Path(path).read_bytes(), source=str(path))
