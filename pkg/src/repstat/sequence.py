"""Finite symbol sequences over a declared alphabet.

A Sequence stores nonnegative integer symbol ids strictly below its
alphabet_size.  All string statistics in this package consume Sequences;
they never mutate them, so sharing one Sequence between threads is safe.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError

__all__ = ["Sequence", "from_bytes", "from_text", "concat"]


class Sequence:
    """Immutable string of symbol ids over the alphabet {0, ..., alphabet_size-1}."""

    __slots__ = ("symbols", "alphabet_size")

    def __init__(self, symbols, alphabet_size: int):
        arr = np.asarray(symbols, dtype=np.int64)
        if arr.ndim != 1:
            raise InputError("symbols must be one-dimensional")
        if not isinstance(alphabet_size, (int, np.integer)) or alphabet_size < 1:
            raise InputError(f"alphabet_size must be a positive integer, got {alphabet_size!r}")
        if arr.size and (arr.min() < 0 or arr.max() >= alphabet_size):
            raise InputError(
                f"symbol ids must lie in [0, {alphabet_size}); "
                f"observed range [{arr.min()}, {arr.max()}]"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "symbols", arr)
        object.__setattr__(self, "alphabet_size", int(alphabet_size))

    def __setattr__(self, name, value):
        raise AttributeError("Sequence is immutable")

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __getitem__(self, ix):
        if isinstance(ix, slice):
            return Sequence(self.symbols[ix], self.alphabet_size)
        return int(self.symbols[ix])

    def __iter__(self):
        return iter(self.symbols.tolist())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Sequence)
            and self.alphabet_size == other.alphabet_size
            and np.array_equal(self.symbols, other.symbols)
        )

    def __repr__(self) -> str:
        body = ",".join(map(str, self.symbols[:16]))
        tail = ",..." if len(self) > 16 else ""
        return f"Sequence([{body}{tail}], alphabet_size={self.alphabet_size}, len={len(self)})"

    def prefix(self, n: int) -> "Sequence":
        if n < 0 or n > len(self):
            raise InputError(f"prefix length {n} out of range for sequence of length {len(self)}")
        return Sequence(self.symbols[:n], self.alphabet_size)

    def tolist(self) -> list[int]:
        return self.symbols.tolist()


def from_bytes(data: bytes) -> Sequence:
    """Byte string as a Sequence over the full byte alphabet (size 256)."""
    return Sequence(np.frombuffer(data, dtype=np.uint8).astype(np.int64), 256)


def from_text(text: str, alphabet: str | None = None) -> Sequence:
    """Map characters of `text` to symbol ids.

    With `alphabet` given, ids follow its character order; otherwise the
    distinct characters of `text` are numbered in sorted order.
    """
    if alphabet is None:
        alphabet = "".join(sorted(set(text)))
    table = {ch: i for i, ch in enumerate(alphabet)}
    try:
        ids = [table[ch] for ch in text]
    except KeyError as exc:
        raise InputError(f"character {exc.args[0]!r} not in alphabet") from None
    return Sequence(np.array(ids, dtype=np.int64), max(len(alphabet), 1))


def concat(*seqs: Sequence) -> Sequence:
    """Concatenate sequences sharing one alphabet."""
    if not seqs:
        raise InputError("concat needs at least one sequence")
    sizes = {s.alphabet_size for s in seqs}
    if len(sizes) != 1:
        raise InputError(f"alphabet sizes differ: {sorted(sizes)}")
    return Sequence(np.concatenate([s.symbols for s in seqs]), seqs[0].alphabet_size)
