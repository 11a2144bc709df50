"""Mann-Whitney change-point statistics.

``V(k)`` is the fraction of cross-cut pairs ``(i <= k < j)`` with
``x_i > x_j``; ``U`` is the same statistic evaluated at the midpoint of a
sliding window. Ties count as zero (strict ``>``), and numerators are
kept as exact integers until the final division.
"""

from __future__ import annotations

import bisect
from collections import deque
from typing import List, Tuple

import numpy as np
from sortedcontainers import SortedList

from .core import check_series, search_range
from .exceptions import LengthError, StateError

__all__ = [
    "v_numerator_bruteforce",
    "v_stat_bruteforce",
    "v_numerators_all",
    "v_stats_all",
    "u_numerator_bruteforce",
    "u_stat_bruteforce",
    "WindowStatEngine",
    "sensitivity_offline",
    "sensitivity_window",
]


def v_numerator_bruteforce(series, k: int) -> int:
    """``sum_{i<=k<j} I(x_i > x_j)`` by direct enumeration (1-based ``k``)."""
    x = check_series(series)
    n = x.shape[0]
    if not 1 <= k <= n - 1:
        raise IndexError(f"k must lie in [1, {n - 1}], got {k}")
    left, right = x[:k], x[k:]
    return int(np.count_nonzero(left[:, None] > right[None, :]))


def v_stat_bruteforce(series, k: int) -> float:
    x = check_series(series)
    n = x.shape[0]
    return v_numerator_bruteforce(x, k) / (k * (n - k))


class _Fenwick:
    """Prefix counts over ranks ``0..size-1``."""

    __slots__ = ("tree",)

    def __init__(self, size: int):
        self.tree = [0] * (size + 1)

    def add(self, rank: int) -> None:
        i = rank + 1
        tree = self.tree
        n = len(tree)
        while i < n:
            tree[i] += 1
            i += i & -i

    def count_below(self, rank: int) -> int:
        """Number of inserted ranks strictly less than ``rank``."""
        i = rank
        tree = self.tree
        total = 0
        while i > 0:
            total += tree[i]
            i -= i & -i
        return total


def _numerators_sweep(x: np.ndarray) -> List[int]:
    """``N(k)`` for ``k = 0..n-1`` in ``O(n log n)``.

    Moving ``x_m`` from the right part to the left part changes the
    numerator by ``-#{i<m : x_i > x_m} + #{j>m : x_j < x_m}``.
    """
    n = x.shape[0]
    distinct = np.unique(x)
    ranks = np.searchsorted(distinct, x).tolist()
    # below_all[r]: how many values in the whole series have rank < r
    sorted_ranks = sorted(ranks)
    below_all = [bisect.bisect_left(sorted_ranks, r) for r in range(len(distinct))]
    same_all = [0] * len(distinct)
    for r in ranks:
        same_all[r] += 1

    fen = _Fenwick(len(distinct))
    out = [0]
    numerator = 0
    seen = 0
    for m in range(n - 1):
        r = ranks[m]
        below_prefix = fen.count_below(r)
        at_or_below_prefix = fen.count_below(r + 1)
        greater_prefix = seen - at_or_below_prefix
        smaller_suffix = below_all[r] - below_prefix
        numerator += smaller_suffix - greater_prefix
        fen.add(r)
        seen += 1
        out.append(numerator)
    return out


def v_numerators_all(series, gamma: float) -> List[Tuple[int, int]]:
    """Exact integer numerators ``(k, N(k))`` over the gamma-constrained range."""
    x = check_series(series)
    n = x.shape[0]
    lo, hi = search_range(gamma, n)
    lo, hi = max(lo, 1), min(hi, n - 1)
    if lo > hi:
        raise IndexError(f"empty search range for gamma={gamma}, n={n}")
    nums = _numerators_sweep(x)
    return [(k, nums[k]) for k in range(lo, hi + 1)]


def v_stats_all(series, gamma: float) -> List[Tuple[int, float]]:
    """``(k, V(k))`` for every ``k`` in ``ceil(gamma n)..floor((1-gamma) n)``."""
    x = check_series(series)
    n = x.shape[0]
    return [(k, num / (k * (n - k))) for k, num in v_numerators_all(x, gamma)]


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise LengthError(f"window length must be even and >= 2, got {n}")


def u_numerator_bruteforce(window) -> int:
    w = check_series(window)
    _check_even(w.shape[0])
    return v_numerator_bruteforce(w, w.shape[0] // 2)


def u_stat_bruteforce(window) -> float:
    """``(4/n^2) * sum_{i in first half, j in second half} I(x_i > x_j)``."""
    w = check_series(window)
    n = w.shape[0]
    _check_even(n)
    return 4.0 * u_numerator_bruteforce(w) / (n * n)


class WindowStatEngine:
    """Incremental ``U`` over a sliding window of ``n`` points.

    Two sorted multisets hold the left and right halves; each slide costs a
    constant number of ``O(log n)`` rank queries.

    >>> eng = WindowStatEngine(2)
    >>> eng.warm([3.0, 1.0])
    1.0
    >>> eng.push(2.0)
    0.0
    """

    def __init__(self, n: int):
        _check_even(n)
        self.n = n
        self.half = n // 2
        self._buf = deque()
        self._left = SortedList()
        self._right = SortedList()
        self.numerator = 0

    @property
    def warmed_up(self) -> bool:
        return len(self._buf) == self.n

    @property
    def window(self) -> np.ndarray:
        return np.fromiter(self._buf, dtype=np.float64, count=len(self._buf))

    @property
    def value(self) -> float:
        if not self.warmed_up:
            raise StateError("window engine is not warmed up")
        return 4.0 * self.numerator / (self.n * self.n)

    def warm(self, values) -> float:
        """Load exactly ``n`` initial points and return their ``U``."""
        w = check_series(values)
        if w.shape[0] != self.n:
            raise LengthError(f"warmup needs exactly {self.n} points, got {w.shape[0]}")
        self._buf = deque(w.tolist())
        self._left = SortedList(self._buf[i] for i in range(self.half))
        self._right = SortedList(self._buf[i] for i in range(self.half, self.n))
        self.numerator = u_numerator_bruteforce(w)
        return self.value

    def push(self, x_new: float) -> float:
        """Slide by one point and return ``U`` of the new window."""
        if not self.warmed_up:
            raise StateError("window engine is not warmed up")
        x_new = float(x_new)
        if x_new != x_new or x_new in (float("inf"), float("-inf")):
            raise ValueError("pushed value must be finite")
        left, right, buf = self._left, self._right, self._buf

        oldest = buf.popleft()
        left.remove(oldest)
        self.numerator -= right.bisect_left(oldest)  # right values below oldest

        middle = buf[self.half - 1]
        right.remove(middle)
        self.numerator -= len(left) - left.bisect_right(middle)  # left values above middle
        self.numerator += right.bisect_left(middle)
        left.add(middle)

        self.numerator += len(left) - left.bisect_right(x_new)
        right.add(x_new)
        buf.append(x_new)
        return self.value


def sensitivity_offline(gamma: float, n: int) -> float:
    """Neighbour sensitivity of every ``V(k)`` in the constrained range."""
    if not 0.0 < gamma <= 0.5:
        raise ValueError(f"gamma must lie in (0, 1/2), got {gamma}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return 1.0 / (gamma * n)


def sensitivity_window(n: int) -> float:
    """Neighbour sensitivity of the window statistic ``U``."""
    _check_even(n)
    return 2.0 / n
