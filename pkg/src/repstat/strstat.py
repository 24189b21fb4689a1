"""Exact combinatorial string statistics.

Maximal repetition, subword complexity, longest match length and
waiting/recurrence times, each with a fast implementation (suffix array +
LCP, suffix automaton) and a definitional brute-force twin used as a test
oracle.  All functions are pure; sequences are never modified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .sequence import Sequence

__all__ = [
    "suffix_array",
    "lcp_array",
    "maximal_repetition",
    "maximal_repetition_brute",
    "maximal_repetition_profile",
    "maximal_repetition_run_profile",
    "subword_complexity",
    "subword_complexity_brute",
    "subword_complexity_profile",
    "longest_match",
    "longest_match_brute",
    "RecurrenceSample",
    "waiting_time",
    "recurrence_time",
]


# ---------------------------------------------------------------------------
# suffix array / LCP machinery
# ---------------------------------------------------------------------------


def suffix_array(symbols: np.ndarray) -> np.ndarray:
    """Suffix array by prefix doubling (numpy lexsort), O(n log^2 n)."""
    n = len(symbols)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    _, rank = np.unique(np.asarray(symbols, dtype=np.int64), return_inverse=True)
    rank = rank.astype(np.int64)
    k = 1
    sa = np.argsort(rank, kind="stable").astype(np.int64)
    while rank[sa[-1]] < n - 1:
        second = np.full(n, -1, dtype=np.int64)
        second[: n - k] = rank[k:]
        sa = np.lexsort((second, rank))
        r1, r2 = rank[sa], second[sa]
        bumped = np.empty(n, dtype=np.int64)
        bumped[0] = 0
        np.cumsum((np.diff(r1) != 0) | (np.diff(r2) != 0), out=bumped[1:])
        rank[sa] = bumped
        k *= 2
    return sa.astype(np.int64)


def lcp_array(symbols: np.ndarray, sa: np.ndarray) -> np.ndarray:
    """Kasai LCP array: lcp[i] = common prefix of suffixes sa[i-1], sa[i]; lcp[0] = 0."""
    n = len(sa)
    lcp = [0] * n
    if n == 0:
        return np.empty(0, dtype=np.int64)
    rank = [0] * n
    x = symbols.tolist()
    sal = sa.tolist()
    for i, s in enumerate(sal):
        rank[s] = i
    h = 0
    for i in range(n):
        r = rank[i]
        if r > 0:
            j = sal[r - 1]
            while i + h < n and j + h < n and x[i + h] == x[j + h]:
                h += 1
            lcp[r] = h
            if h:
                h -= 1
        else:
            h = 0
    return np.array(lcp, dtype=np.int64)


def _longest_true_run(mask: np.ndarray) -> int:
    if not mask.any():
        return 0
    padded = np.empty(len(mask) + 2, dtype=np.int8)
    padded[0] = padded[-1] = 0
    padded[1:-1] = mask
    edges = np.flatnonzero(np.diff(padded))
    return int((edges[1::2] - edges[0::2]).max())


# ---------------------------------------------------------------------------
# maximal repetition
# ---------------------------------------------------------------------------


def maximal_repetition(x: Sequence) -> int:
    """Greatest k such that some length-k substring occurs at two distinct
    start positions (overlap allowed); 0 when nothing repeats.

    Equals the maximum LCP of lexicographically adjacent suffixes.
    """
    if len(x) < 2:
        return 0
    sa = suffix_array(x.symbols)
    return int(lcp_array(x.symbols, sa).max())


def maximal_repetition_brute(x: Sequence) -> int:
    """Definitional scan: for every start-position gap d, the longest run of
    agreements between the string and its d-shift is the longest repeat at
    that gap.  O(n^2) over all (i, j, k) triples."""
    a = x.symbols
    n = len(a)
    best = 0
    for d in range(1, n):
        if n - d <= best:
            break
        best = max(best, _longest_true_run(a[: n - d] == a[d:]))
    return best


def maximal_repetition_profile(x: Sequence, grid: list[int]) -> list[tuple[int, int]]:
    """Maximal repetition of each prefix x[:n] for n in a strictly increasing grid."""
    _check_grid(grid, len(x))
    return [(n, maximal_repetition(x.prefix(n))) for n in grid]


def maximal_repetition_run_profile(x: Sequence) -> np.ndarray:
    """Maximal repetition of every prefix at once: out[n] = L(x[:n]).

    Diagonal-run scan, O(n^2) total but vectorized per gap; intended for
    dense profiles where per-prefix suffix arrays would be wasteful.
    """
    a = x.symbols
    n = len(a)
    # best_end[e] = longest repeat whose later copy ends within prefix length e
    best_end = np.zeros(n + 1, dtype=np.int64)
    for d in range(1, n):
        m = a[: n - d] == a[d:]
        if not m.any():
            continue
        c = np.cumsum(m)
        runs = c - np.maximum.accumulate(np.where(m, 0, c))
        np.maximum(best_end[d + 1 :], runs, out=best_end[d + 1 :])
    return np.maximum.accumulate(best_end)


def _check_grid(grid: list[int], limit: int) -> None:
    if any(n2 <= n1 for n1, n2 in zip(grid, grid[1:])):
        raise InputError("grid must be strictly increasing")
    if grid and (grid[0] < 1 or grid[-1] > limit):
        raise InputError(f"grid values must lie in [1, {limit}]")


# ---------------------------------------------------------------------------
# subword complexity
# ---------------------------------------------------------------------------


def subword_complexity(x: Sequence, k: int) -> int:
    """Number of distinct length-k substrings; 0 when k exceeds len(x)."""
    if k < 1:
        raise InputError(f"substring length must be >= 1, got {k}")
    n = len(x)
    if k > n:
        return 0
    sa = suffix_array(x.symbols)
    lcp = lcp_array(x.symbols, sa)
    long_enough = (n - sa) >= k
    return int((long_enough & (lcp < k)).sum())


def subword_complexity_brute(x: Sequence, k: int) -> int:
    """Set-of-substrings oracle."""
    if k < 1:
        raise InputError(f"substring length must be >= 1, got {k}")
    n = len(x)
    if k > n:
        return 0
    dtype = np.min_scalar_type(max(x.alphabet_size - 1, 1))
    data = x.symbols.astype(dtype).tobytes()
    w = np.dtype(dtype).itemsize
    return len({data[i * w : (i + k) * w] for i in range(n - k + 1)})


def subword_complexity_profile(x: Sequence) -> np.ndarray:
    """All subword complexities at once: out[k] = f(k | x) for k = 0..n.

    Shares one suffix array; each suffix sa[i] contributes a new substring
    exactly for lengths in (lcp[i], n - sa[i]].
    """
    n = len(x)
    if n == 0:
        return np.ones(1, dtype=np.int64)
    diff = np.zeros(n + 2, dtype=np.int64)
    sa = suffix_array(x.symbols)
    lcp = lcp_array(x.symbols, sa)
    lengths = n - sa
    np.add.at(diff, lcp + 1, 1)
    np.add.at(diff, lengths + 1, -1)
    out = np.cumsum(diff)[: n + 1]
    out[0] = 1  # the empty substring
    return out


# ---------------------------------------------------------------------------
# longest match
# ---------------------------------------------------------------------------


class _SuffixAutomaton:
    """Minimal automaton of all substrings of one sequence."""

    def __init__(self, symbols):
        self.next: list[dict[int, int]] = [{}]
        self.link = [-1]
        self.length = [0]
        self.last = 0
        for c in symbols:
            self._extend(int(c))

    def _extend(self, c: int) -> None:
        cur = len(self.next)
        self.next.append({})
        self.link.append(-1)
        self.length.append(self.length[self.last] + 1)
        p = self.last
        while p >= 0 and c not in self.next[p]:
            self.next[p][c] = cur
            p = self.link[p]
        if p == -1:
            self.link[cur] = 0
        else:
            q = self.next[p][c]
            if self.length[p] + 1 == self.length[q]:
                self.link[cur] = q
            else:
                clone = len(self.next)
                self.next.append(dict(self.next[q]))
                self.link.append(self.link[q])
                self.length.append(self.length[p] + 1)
                while p >= 0 and self.next[p].get(c) == q:
                    self.next[p][c] = clone
                    p = self.link[p]
                self.link[q] = clone
                self.link[cur] = clone
        self.last = cur


def longest_match(past: Sequence, future: Sequence) -> int:
    """Length of the longest prefix of `future` occurring as a substring of `past`."""
    if past.alphabet_size != future.alphabet_size:
        raise InputError("past and future must share an alphabet")
    sam = _SuffixAutomaton(past.symbols)
    state, k = 0, 0
    for c in future.symbols.tolist():
        nxt = sam.next[state].get(c)
        if nxt is None:
            break
        state = nxt
        k += 1
    return k


def longest_match_brute(past: Sequence, future: Sequence) -> int:
    """Brute-force prefix search."""
    p, f = past.symbols, future.symbols
    k = 0
    for kk in range(1, len(f) + 1):
        w = f[:kk]
        if any(np.array_equal(p[i : i + kk], w) for i in range(len(p) - kk + 1)):
            k = kk
        else:
            break
    return k


# ---------------------------------------------------------------------------
# waiting and recurrence times
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecurrenceSample:
    """One observed waiting/recurrence time.

    value: the time i (shifts back to the first match), possibly trimmed to
    trimmed_cap; truncated is set when the finite search window was exhausted
    before either a match or the cap, in which case value equals the number
    of shifts searched.
    """

    value: int
    trimmed_cap: int | None = None
    truncated: bool = False

    def __post_init__(self):
        if self.value < 1:
            raise InputError(f"time must be a positive integer, got {self.value}")
        if self.trimmed_cap is not None and self.value > self.trimmed_cap:
            raise InputError(f"value {self.value} exceeds cap {self.trimmed_cap}")


def waiting_time(
    window: Sequence, anchor: int, w: Sequence, cap: int | None = None
) -> RecurrenceSample:
    """First backward shift i >= 1 at which a copy of `w` starts in `window`.

    `anchor` is the 0-based start of the anchored block inside `window`; the
    candidate copy at shift i starts at anchor - i and may overlap the
    anchored block.  Searchable shifts run 1..anchor.  With `cap` given the
    result is trimmed: value = min(first match, cap).
    """
    k = len(w)
    n = len(window)
    if anchor < 0 or anchor + k > n:
        raise InputError(f"anchored block [{anchor}, {anchor + k}) out of range for window of length {n}")
    if anchor < 1:
        raise InputError("no searchable shifts: anchor at window start")
    if cap is not None and cap < 1:
        raise InputError(f"cap must be positive, got {cap}")
    a = window.symbols
    target = w.symbols
    shifts = anchor
    limit = shifts if cap is None else min(shifts, cap)
    for i in range(1, limit + 1):
        s = anchor - i
        if np.array_equal(a[s : s + k], target):
            return RecurrenceSample(i, trimmed_cap=cap)
    if cap is not None and limit == cap:
        # no match within the cap: the trimmed time equals the cap exactly
        return RecurrenceSample(cap, trimmed_cap=cap)
    return RecurrenceSample(limit, trimmed_cap=cap, truncated=True)


def recurrence_time(
    window: Sequence, anchor: int, k: int, capped: bool = False
) -> RecurrenceSample:
    """Waiting time of the block of length k anchored at `anchor` itself.

    With capped=True the time is trimmed at alphabet_size**k.
    """
    if k < 1:
        raise InputError(f"block length must be >= 1, got {k}")
    if anchor + k > len(window):
        raise InputError(f"anchored block [{anchor}, {anchor + k}) out of range")
    w = window[anchor : anchor + k]
    cap = window.alphabet_size**k if capped else None
    return waiting_time(window, anchor, w, cap=cap)
