"""Exact lattice-walk path counting and its asymptotic growth comparison.

Counts are exact arbitrary-precision integers:

* simple random walk (SRW): one of the four neighbors each step,
* lazy random walk (LRW): stay put or move, five choices each step,
* oriented +-1 walks confined to a symmetric strip, by the reflection
  principle (complete image series, so the count is exact for every width).

Dynamic-programming counters over the same step sets serve as the
brute-force cross-checks, and ``growth_rate_check`` compares the exact
per-step growth of the weighted path count against the speed functional.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .speed import rate_functional

__all__ = [
    "PathCount",
    "count_srw",
    "count_lrw",
    "count_oriented_strip",
    "dp_srw",
    "dp_lrw",
    "dp_oriented_strip",
    "growth_rate_check",
]


def log_of_int(v: int) -> float:
    """Natural log of a nonnegative big integer; -inf for zero."""
    if v < 0:
        raise ValueError("negative count")
    if v == 0:
        return float("-inf")
    shift = max(v.bit_length() - 53, 0)
    return math.log(v >> shift) + shift * math.log(2.0)


@dataclass(frozen=True)
class PathCount:
    value: int
    log_value: float

    @staticmethod
    def of(v: int) -> "PathCount":
        return PathCount(value=v, log_value=log_of_int(v))


def count_srw(m: int, l: int, n: int) -> PathCount:
    """Number of n-step SRW paths from the origin to (m, l).

    Equals binom(n, (n-(m+l))/2) * binom(n, (n-(m-l))/2); zero whenever
    |m| + |l| > n or the parity of n and m + l differ.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if abs(m) + abs(l) > n or (n - m - l) % 2 != 0:
        return PathCount.of(0)
    a = (n - (m + l)) // 2
    b = (n - (m - l)) // 2
    if not (0 <= a <= n and 0 <= b <= n):
        return PathCount.of(0)
    return PathCount.of(math.comb(n, a) * math.comb(n, b))


def count_lrw(m: int, l: int, n: int) -> PathCount:
    """Number of n-step LRW paths from the origin to (m, l).

    Sums over the number i of moving steps:
    sum binom(n, n-i) * srw(m, l; i) for |m|+|l| <= i <= n with i = m+l mod 2.
    The total over all endpoints is 5^n.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    d = abs(m) + abs(l)
    if d > n:
        return PathCount.of(0)
    total = 0
    start = d if (d - m - l) % 2 == 0 else d + 1  # i must match m+l parity
    for i in range(start, n + 1, 2):
        s = count_srw(m, l, i).value
        if s:
            total += math.comb(n, n - i) * s
    return PathCount.of(total)


def count_oriented_strip(m: int, n: int, k: int) -> PathCount:
    """Oriented +-1 walks of length n from 0 to m staying strictly inside
    (-k, k).

    Reflection principle with the full image family: the walls at +-k act
    with period 4k, giving

        sum_j [ binom(n, (n + m + 4kj)/2) - binom(n, (n + 2k - m + 4kj)/2) ].

    The five leading terms are the familiar truncation; the full series is
    summed so the count is exact for every (m, n, k).
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if k <= 0:
        raise ValueError(f"strip half-width must be positive, got {k}")
    if abs(m) >= k:
        raise ValueError(f"endpoint {m} outside the open strip (-{k}, {k})")
    if (n - m) % 2 != 0 or abs(m) > n:
        return PathCount.of(0)

    def free(x):
        if (n + x) % 2 != 0 or abs(x) > n:
            return 0
        return math.comb(n, (n + x) // 2)

    total = 0
    j = 0
    while True:
        off = 4 * k * j
        terms = [free(m + off), -free(2 * k - m + off)]
        if j > 0:
            terms += [free(m - off), -free(2 * k - m - off)]
        if j > 0 and all(t == 0 for t in terms):
            break
        total += sum(terms)
        j += 1
    return PathCount.of(total)


# ---------------------------------------------------------------------------
# Dynamic-programming oracles (exact integers; deliverable cross-checks)


def dp_srw(n: int) -> dict:
    """{(m, l): exact count} of n-step SRW endpoints, by convolution."""
    table = {(0, 0): 1}
    for _ in range(n):
        new: dict = {}
        for (x, y), c in table.items():
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                key = (x + dx, y + dy)
                new[key] = new.get(key, 0) + c
        table = new
    return table


def dp_lrw(n: int) -> dict:
    """{(m, l): exact count} of n-step LRW endpoints, by convolution."""
    table = {(0, 0): 1}
    for _ in range(n):
        new: dict = {}
        for (x, y), c in table.items():
            for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
                key = (x + dx, y + dy)
                new[key] = new.get(key, 0) + c
        table = new
    return table


def dp_oriented_strip(n: int, k: int) -> dict:
    """{m: exact count} of +-1 walks of length n confined to (-k, k)."""
    table = {0: 1}
    for _ in range(n):
        new: dict = {}
        for x, c in table.items():
            for dx in (1, -1):
                y = x + dx
                if -k < y < k:
                    new[y] = new.get(y, 0) + c
        table = new
    return table


def growth_rate_check(
    theta: float, direction: tuple, speed: float, lengths: list
) -> list:
    """Exact vs. asymptotic growth of the seed-weighted LRW path count.

    For each n, the walk endpoint is the direction scaled so that its l1
    norm is speed * n.  Rows are (n, lhs, rhs, gap) with
    lhs = log((1+theta)/5) + log(#paths)/n and
    rhs = log((1+theta)/5) - rate_functional(speed, phi).
    """
    dm, dl = direction
    if dm < 0 or dl < 0 or dm + dl == 0:
        raise ValueError("direction must be a nonzero pair of nonnegative integers")
    if not 0.0 < speed <= 1.0:
        raise ValueError(f"speed must lie in (0, 1], got {speed}")
    log_branch = math.log((1.0 + theta) / 5.0)
    phi = math.atan2(dl, dm)
    rhs = log_branch - rate_functional(speed, phi)
    rows = []
    for n in lengths:
        scale = speed * n / (dm + dl)
        if abs(scale - round(scale)) > 1e-9:
            raise ValueError(
                f"speed {speed} and n={n} do not land on an integer multiple of {direction}"
            )
        s = round(scale)
        m, l = dm * s, dl * s
        lhs = log_branch + count_lrw(m, l, n).log_value / n
        rows.append((n, lhs, rhs, abs(lhs - rhs)))
    return rows


def growth_rows_to_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "lhs", "rhs", "gap"])
        for n, lhs, rhs, gap in rows:
            writer.writerow([n, f"{lhs:.10g}", f"{rhs:.10g}", f"{gap:.10g}"])
