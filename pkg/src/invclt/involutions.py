"""Fixed-point-free involutions: enumeration, uniform sampling, statistics.

A fixed-point-free involution of {0..n-1} (n even) is a perfect matching;
there are (n-1)!! of them.  The canonical enumeration order pairs the
smallest unpaired index with each larger unpaired index in increasing order
and recurses, which is lexicographic in the per-step choice sequence and
therefore matches the mixed-radix rank used by the uniformity tests.

Uniform sampling repeatedly matches the smallest unmatched index to a
uniform choice among the remaining unmatched indices; uniformity follows
from |Pi_n| = (n-1) |Pi_{n-2}|.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels, rng as rngmod
from .arrays import CenteredArray, SymmetricArray
from .errors import CapExceeded, DimensionMismatch, InputError, OddDimension

ENUM_CAP = 16  # |Pi_16| ~ 2.03M keeps exact sweeps desk-scale
ATOM_MERGE_TOL = 1e-12


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@dataclass(eq=False, frozen=True)
class Involution:
    """Self-inverse permutation without fixed points, images 0-based."""

    n: int
    images: np.ndarray

    def validate(self) -> None:
        img = self.images
        if img.shape != (self.n,):
            raise InputError("involution image array has wrong shape")
        idx = np.arange(self.n)
        if np.any(img == idx):
            raise InputError("involution has a fixed point")
        if not np.array_equal(img[img], idx):
            raise InputError("permutation is not an involution")

    def cycles(self) -> list[tuple[int, int]]:
        return [(i, int(self.images[i])) for i in range(self.n) if i < self.images[i]]

    def to_list_1based(self) -> list[int]:
        return [int(v) + 1 for v in self.images]

    @classmethod
    def from_list_1based(cls, values: list[int]) -> "Involution":
        img = np.asarray(values, dtype=np.int64) - 1
        out = cls(n=len(values), images=img)
        out.validate()
        return out

    @classmethod
    def from_cycles(cls, n: int, cycles: list[tuple[int, int]]) -> "Involution":
        """Build from 1-based two-cycles, e.g. [(1,2),(3,4)]."""
        img = -np.ones(n, dtype=np.int64)
        for a, b in cycles:
            img[a - 1] = b - 1
            img[b - 1] = a - 1
        out = cls(n=n, images=img)
        out.validate()
        return out


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise OddDimension(f"n={n}: involutions without fixed points need even n >= 2")


def enumerate_involutions(n: int, cap: int = ENUM_CAP) -> Iterator[Involution]:
    """Yield all (n-1)!! involutions in canonical order."""
    _check_even(n)
    if n > cap:
        raise CapExceeded(f"n={n} exceeds enumeration cap {cap}")
    images = np.empty(n, dtype=np.int64)

    def rec(rem: tuple[int, ...]) -> Iterator[None]:
        if not rem:
            yield None
            return
        i0 = rem[0]
        for t in range(1, len(rem)):
            j = rem[t]
            images[i0] = j
            images[j] = i0
            yield from rec(rem[1:t] + rem[t + 1 :])

    for _ in rec(tuple(range(n))):
        yield Involution(n=n, images=images.copy())


def involution_matrix(n: int, cap: int = 12) -> np.ndarray:
    """All involutions as an ((n-1)!!, n) image matrix, canonical order."""
    _check_even(n)
    if n > cap:
        raise CapExceeded(f"n={n} exceeds matrix cap {cap}")
    count = double_factorial(n - 1)
    out = np.empty((count, n), dtype=np.int64)
    for r, inv in enumerate(enumerate_involutions(n, cap=cap)):
        out[r] = inv.images
    return out


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def choice_highs(n: int) -> np.ndarray:
    """Number of partner choices at each pairing step: n-1, n-3, ..., 1."""
    return np.arange(n - 1, 0, -2, dtype=np.int64)


def rank_radices(n: int) -> np.ndarray:
    """Place values turning a choice sequence into a canonical rank."""
    highs = choice_highs(n)
    rad = np.ones(n // 2, dtype=np.int64)
    for t in range(n // 2 - 2, -1, -1):
        rad[t] = rad[t + 1] * highs[t + 1]
    return rad


def draw_choices(n: int, count: int, gen: np.random.Generator) -> np.ndarray:
    return gen.integers(0, choice_highs(n), size=(count, n // 2))


def sample_involution(n: int, gen: np.random.Generator) -> Involution:
    """One exactly-uniform draw from Pi_n using the supplied generator."""
    _check_even(n)
    images = _kernels.match_pairs(draw_choices(n, 1, gen), n)[0]
    out = Involution(n=n, images=images)
    out.validate()
    return out


def sample_involutions(
    n: int,
    m: int,
    *,
    master_seed: int = rngmod.DEFAULT_SEED,
    stream: int = 0,
    chunk: int = rngmod.DEFAULT_CHUNK,
    threads: int = 1,
) -> np.ndarray:
    """``m`` uniform draws as an (m, n) image matrix.

    The result is a pure function of (master_seed, stream, m, chunk); thread
    count only schedules the chunks.
    """
    _check_even(n)

    def worker(idx: int, count: int, gen: np.random.Generator) -> np.ndarray:
        return _kernels.match_pairs(draw_choices(n, count, gen), n)

    parts = rngmod.run_chunked(
        m,
        worker,
        master_seed=master_seed,
        purpose=rngmod.PURPOSE_INVOLUTIONS,
        extra_id=stream,
        chunk=chunk,
        threads=threads,
    )
    return rngmod.concat_chunks(parts)


def sample_y_values(
    entries: np.ndarray,
    m: int,
    *,
    master_seed: int = rngmod.DEFAULT_SEED,
    stream: int = 0,
    chunk: int = rngmod.DEFAULT_CHUNK,
    threads: int = 1,
) -> np.ndarray:
    """``m`` Monte Carlo values of Y = sum_i e_{i,pi(i)} without retaining pi."""
    n = entries.shape[0]
    _check_even(n)

    def worker(idx: int, count: int, gen: np.random.Generator) -> np.ndarray:
        images = _kernels.match_pairs(draw_choices(n, count, gen), n)
        return _kernels.y_batch(entries, images)

    parts = rngmod.run_chunked(
        m,
        worker,
        master_seed=master_seed,
        purpose=rngmod.PURPOSE_INVOLUTIONS,
        extra_id=stream,
        chunk=chunk,
        threads=threads,
    )
    return rngmod.concat_chunks(parts)


def sample_ranks(
    n: int,
    m: int,
    *,
    master_seed: int = rngmod.DEFAULT_SEED,
    stream: int = 0,
    chunk: int = rngmod.DEFAULT_CHUNK,
    threads: int = 1,
) -> np.ndarray:
    """Canonical ranks of ``m`` draws (same draws as sample_involutions)."""
    _check_even(n)
    rad = rank_radices(n)

    def worker(idx: int, count: int, gen: np.random.Generator) -> np.ndarray:
        return draw_choices(n, count, gen) @ rad

    parts = rngmod.run_chunked(
        m,
        worker,
        master_seed=master_seed,
        purpose=rngmod.PURPOSE_INVOLUTIONS,
        extra_id=stream,
        chunk=chunk,
        threads=threads,
    )
    return rngmod.concat_chunks(parts)


def rank_of(images: np.ndarray) -> int:
    """Canonical rank of one involution (inverse of the choice decoding)."""
    n = images.shape[0]
    rad = rank_radices(n)
    rem = list(range(n))
    rank = 0
    for t in range(n // 2):
        i0 = rem.pop(0)
        j = int(images[i0])
        c = rem.index(j)
        rank += c * int(rad[t])
        rem.remove(j)
    return rank


# ---------------------------------------------------------------------------
# the statistic and its exact law
# ---------------------------------------------------------------------------


def _entries_of(array) -> np.ndarray:
    if isinstance(array, (SymmetricArray, CenteredArray)):
        return array.entries
    return np.asarray(array, dtype=np.float64)


def y_value(array, pi: Involution) -> float:
    """Y = sum_i e_{i, pi(i)}; every two-cycle contributes twice its score."""
    e = _entries_of(array)
    if e.shape[0] != pi.n:
        raise DimensionMismatch(f"array n={e.shape[0]} vs involution n={pi.n}")
    return float(e[np.arange(pi.n), pi.images].sum())


@dataclass
class ExactDistribution:
    """Finite law as sorted atoms with integer multiplicities."""

    values: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.total

    def mean(self) -> float:
        return float(self.probs @ self.values)

    def var(self) -> float:
        mu = self.mean()
        return float(self.probs @ (self.values - mu) ** 2)

    def moment(self, k: int) -> float:
        return float(self.probs @ self.values**k)

    def to_csv_rows(self) -> list[tuple[float, float]]:
        return [(float(v), float(p)) for v, p in zip(self.values, self.probs)]


def _merge_atoms(values: np.ndarray, tol: float = ATOM_MERGE_TOL) -> ExactDistribution:
    vals, counts = np.unique(values, return_counts=True)
    if len(vals) == 0:
        raise InputError("empty value list")
    merged_v: list[float] = []
    merged_c: list[int] = []
    acc_v = vals[0] * counts[0]
    acc_c = int(counts[0])
    last = vals[0]
    for v, c in zip(vals[1:], counts[1:]):
        if v - last <= tol:
            acc_v += v * c
            acc_c += int(c)
        else:
            merged_v.append(acc_v / acc_c)
            merged_c.append(acc_c)
            acc_v = v * c
            acc_c = int(c)
        last = v
    merged_v.append(acc_v / acc_c)
    merged_c.append(acc_c)
    return ExactDistribution(
        values=np.asarray(merged_v),
        counts=np.asarray(merged_c, dtype=np.int64),
        total=int(values.shape[0]),
    )


def exact_w_distribution(D: CenteredArray, cap: int = ENUM_CAP) -> ExactDistribution:
    """Exact law of W = Y_D over the uniform involution."""
    n = D.n
    _check_even(n)
    if n > cap:
        raise CapExceeded(f"n={n} exceeds enumeration cap {cap}")
    batch = 65536
    values = []
    buf = np.empty((batch, n), dtype=np.int64)
    fill = 0
    for inv in enumerate_involutions(n, cap=cap):
        buf[fill] = inv.images
        fill += 1
        if fill == batch:
            values.append(_kernels.y_batch(D.entries, buf))
            fill = 0
    if fill:
        values.append(_kernels.y_batch(D.entries, buf[:fill]))
    return _merge_atoms(np.concatenate(values))
