"""Exchangeable-pair and zero-bias couplings for the involution statistic.

Construction summary (all indices 0-based internally):

* Swap map: for distinct ``a, b``, ``swap(pi, a, b)`` returns the involution
  with the cycles ``(a, b)`` and ``(pi(a), pi(b))`` planted and every other
  cycle untouched.  Composing ``pi`` on the right with a transposition
  ``tau_{x,y}`` swaps positions ``x`` and ``y`` of the image array, so each
  rewiring case below is a short list of position swaps.
* Stein pair: ``pi' = swap(pi, I, J)`` for a uniform ordered pair ``(I, J)``,
  giving ``W - W' = 2(d_{I pi(I)} + d_{J pi(J)} - d_{IJ} - d_{pi(I) pi(J)})``
  and ``E(W - W' | pi) = (4/n) W``.
* Square-bias law on ordered distinct quadruples:
  ``p(i,j,k,l) = c_n [d_ik + d_jl - (d_ij + d_kl)]^2`` with
  ``c_n = 1 / (2 (n-1)^2 (n-3))``.
* Ten-case rewiring: given ``(I,J,K,L)`` from ``p`` and an independent
  uniform ``pi``, the table below plants the cycles ``(I,K)`` and ``(J,L)``
  while keeping the remainder uniform; ``pi_ddag = swap(pi_dag, I, J)``
  then carries the cycles ``(I,J)`` and ``(K,L)``.
* With ``U`` uniform on [0,1), ``W* = U W_dag + (1-U) W_ddag`` has the
  zero-bias law of ``W``: ``E[W f(W)] = Var(W) E[f'(W*)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels, rng as rngmod
from .arrays import CenteredArray
from .errors import CapExceeded, EqualIndices, InputError, NoCaseMatched
from .involutions import (
    Involution,
    double_factorial,
    enumerate_involutions,
    exact_w_distribution,
    involution_matrix,
    draw_choices,
    sample_involution,
)

TABLE_CAP = 48  # materialized O(n^4) table above this uses rejection sampling
SWEEP_CAP = 8  # exhaustive (pi x quadruple) sweeps
EXACT_CAP = 12  # full-enumeration oracles

# expected (R1, R2) per rewiring case; (2,1) and (1,2) cannot occur
CASE_R = {
    1: (1, 0),
    2: (1, 0),
    3: (1, 1),
    4: (1, 1),
    5: (0, 1),
    6: (0, 1),
    7: (2, 0),
    8: (0, 2),
    9: (2, 2),
    10: (0, 0),
}


def cn(n: int) -> float:
    """Normalizer of the square-bias law, 1 / (2 (n-1)^2 (n-3))."""
    return 1.0 / (2.0 * (n - 1) ** 2 * (n - 3))


def lambda_n(n: int) -> float:
    """Linearity constant of the Stein pair: E(W - W'|W) = (4/n) W."""
    return 4.0 / n


# ---------------------------------------------------------------------------
# swap composition
# ---------------------------------------------------------------------------


def alpha_compose(pi: Involution, i: int, j: int) -> Involution:
    """Plant cycles (i, j) and (pi(i), pi(j)); all other cycles unchanged.

    Right-composes ``pi`` with ``tau_{i, pi(j)} tau_{j, pi(i)}``; degenerate
    transpositions (``pi(i) == j``) collapse to the identity, so the result
    is total and equals ``pi`` when (i, j) is already a cycle.
    """
    if i == j:
        raise EqualIndices(f"i == j == {i}")
    img = pi.images.copy()
    pi_i, pi_j = int(img[i]), int(img[j])
    img[i], img[j] = j, i
    img[pi_i], img[pi_j] = pi_j, pi_i
    out = Involution(n=pi.n, images=img)
    out.validate()
    return out


# ---------------------------------------------------------------------------
# Stein pair
# ---------------------------------------------------------------------------


@dataclass
class SteinPairDraw:
    pi: Involution
    pi_prime: Involution
    i: int
    j: int
    w: float
    diff: float  # W - W', stored as the exact four-term formula value

    @property
    def w_prime(self) -> float:
        return self.w - self.diff


def pair_difference(d: np.ndarray, images: np.ndarray, i: int, j: int) -> float:
    """W - W' for the swap at (i, j): 2(d_{i pi(i)} + d_{j pi(j)} - d_{ij} - d_{pi(i) pi(j)})."""
    pi_i, pi_j = images[i], images[j]
    return 2.0 * (d[i, pi_i] + d[j, pi_j] - (d[i, j] + d[pi_i, pi_j]))


def stein_pair_draw(D: CenteredArray, gen: np.random.Generator) -> SteinPairDraw:
    """One draw of the exchangeable pair; W' is defined through the exact
    difference formula so the pair identity holds bit-for-bit."""
    n = D.n
    pi = sample_involution(n, gen)
    r = gen.integers(0, np.array([n, n - 1], dtype=np.int64), size=(1, 2))[0]
    i = int(r[0])
    j = int(r[1]) + (1 if r[1] >= i else 0)
    w = float(D.entries[np.arange(n), pi.images].sum())
    delta = pair_difference(D.entries, pi.images, i, j)
    return SteinPairDraw(
        pi=pi, pi_prime=alpha_compose(pi, i, j), i=i, j=j, w=w, diff=delta
    )


# ---------------------------------------------------------------------------
# square-bias quadruple law
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class QuadrupleTable:
    """Materialized square-bias law over ordered distinct quadruples.

    ``raw_total`` is the plain sum of ``c_n [..]^2`` over the support and
    equals 1 up to rounding (the normalization identity); sampling and exact
    oracles use the weights normalized by the actual sum.
    """

    n: int
    c_n: float
    weights: np.ndarray  # flat, length n^4; zero off the support
    raw_total: float

    def __post_init__(self) -> None:
        self._cum = np.cumsum(self.weights)

    def weight(self, i: int, j: int, k: int, l: int) -> float:
        n = self.n
        return float(self.weights[((i * n + j) * n + k) * n + l])

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """(quads, probs) for the positive-weight ordered quadruples."""
        idx = np.nonzero(self.weights)[0]
        quads = np.empty((idx.size, 4), dtype=np.int64)
        rest, quads[:, 3] = np.divmod(idx, self.n)
        rest, quads[:, 2] = np.divmod(rest, self.n)
        quads[:, 0], quads[:, 1] = np.divmod(rest, self.n)
        return quads, self.weights[idx] / self._cum[-1]

    def sample(self, us: np.ndarray) -> np.ndarray:
        """Invert the cumulative table at uniforms ``us`` -> (m, 4) quads."""
        x = np.asarray(us) * self._cum[-1]
        idx = np.searchsorted(self._cum, x, side="right")
        idx = np.minimum(idx, self.weights.size - 1)
        quads = np.empty((idx.size, 4), dtype=np.int64)
        rest, quads[:, 3] = np.divmod(idx, self.n)
        rest, quads[:, 2] = np.divmod(rest, self.n)
        quads[:, 0], quads[:, 1] = np.divmod(rest, self.n)
        return quads


def square_bias_table(D: CenteredArray, cap: int = TABLE_CAP) -> QuadrupleTable:
    """Materialize p(i,j,k,l) = c_n [d_ik + d_jl - (d_ij + d_kl)]^2."""
    n = D.n
    if n > cap:
        raise CapExceeded(f"n={n} exceeds quadruple table cap {cap}")
    d = D.entries
    # grouped so the (i,j,k,l) -> (i,k,j,l) swap negates the bracket exactly
    bracket = (d[:, None, :, None] + d[None, :, None, :]) - (
        d[:, :, None, None] + d[None, None, :, :]
    )
    ii = np.arange(n)
    a, b, c, e = (
        ii[:, None, None, None],
        ii[None, :, None, None],
        ii[None, None, :, None],
        ii[None, None, None, :],
    )
    distinct = (a != b) & (a != c) & (a != e) & (b != c) & (b != e) & (c != e)
    w = cn(n) * bracket * bracket
    w[~distinct] = 0.0
    flat = w.ravel()
    return QuadrupleTable(n=n, c_n=cn(n), weights=flat, raw_total=float(flat.sum()))


def _decode_distinct(r1, r2, r3, r4, n):
    """Map reduced-range integers to uniform ordered distinct quadruples."""
    i = r1
    j = r2 + (r2 >= i)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    k = r3
    k = k + (k >= lo)
    k = k + (k >= hi)
    used = np.sort(np.stack([i, j, k], axis=0), axis=0)
    l = r4
    for row in used:
        l = l + (l >= row)
    return np.stack([i, j, k, l], axis=1)


def sample_quadruples_rejection(
    D: CenteredArray, count: int, gen: np.random.Generator
) -> np.ndarray:
    """Exact square-bias sampling without the O(n^4) table.

    Proposes uniform ordered distinct quadruples and accepts with ratio
    ``[..]^2 / (4 max|d|)^2``, valid since ``[..]^2 <= 16 max|d|^2``.
    """
    d = D.entries
    n = D.n
    env = (4.0 * float(np.abs(d).max())) ** 2
    out = np.empty((count, 4), dtype=np.int64)
    have = 0
    highs = np.array([n, n - 1, n - 2, n - 3], dtype=np.int64)
    while have < count:
        batch = max(1024, 4 * (count - have))
        r = gen.integers(0, highs, size=(batch, 4))
        quads = _decode_distinct(r[:, 0], r[:, 1], r[:, 2], r[:, 3], n)
        u = gen.random(batch)
        i, j, k, l = quads[:, 0], quads[:, 1], quads[:, 2], quads[:, 3]
        bracket = d[i, k] + d[j, l] - (d[i, j] + d[k, l])
        acc = np.nonzero(u * env < bracket * bracket)[0]
        take = acc[: count - have]
        out[have : have + take.size] = quads[take]
        have += take.size
    return out


def sample_quadruple(
    source: QuadrupleTable | CenteredArray, gen: np.random.Generator
) -> tuple[int, int, int, int]:
    """One quadruple with the square-bias law from a table or via rejection."""
    if isinstance(source, QuadrupleTable):
        q = source.sample(gen.random(1))[0]
    else:
        q = sample_quadruples_rejection(source, 1, gen)[0]
    return int(q[0]), int(q[1]), int(q[2]), int(q[3])


# ---------------------------------------------------------------------------
# joint index-image laws
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class IndexImageLaw:
    """Dense joint laws of the quadruple and the base involution's images.

    ``p2[i,j,k,l,s,t]`` is the probability of quadruple (i,j,k,l) together
    with images s = pi(i), t = pi(j); ``p3[i,j,k,l,s,t,r]`` adds r = pi(l).
    Both factor as (quadruple weight) x (image law), since the quadruple is
    drawn independently of pi.  Each table sums to 1; configurations that
    contradict an involution without fixed points carry exactly zero.
    """

    n: int
    p2: np.ndarray
    p3: np.ndarray

    def validate(self) -> None:
        for name, table in (("p2", self.p2), ("p3", self.p3)):
            total = float(table.sum())
            if abs(total - 1.0) > 1e-10:
                raise InputError(f"{name} sums to {total!r}, not 1")


def index_image_law(D: CenteredArray, cap: int = SWEEP_CAP) -> IndexImageLaw:
    """Materialize the (quadruple, image) laws for exact verification."""
    n = D.n
    if n > cap:
        raise CapExceeded(f"n={n} exceeds sweep cap {cap}")
    table = square_bias_table(D)
    _, probs_flat = table.support()
    pq = np.zeros(n**4)
    pq[np.nonzero(table.weights)[0]] = probs_flat
    pq = pq.reshape((n, n, n, n))

    ii = np.arange(n)
    i_ = ii.reshape(n, 1, 1, 1)
    j_ = ii.reshape(1, n, 1, 1)
    s_ = ii.reshape(1, 1, n, 1)
    t_ = ii.reshape(1, 1, 1, n)
    # image pair (s, t) of (i, j): either the cycle (i, j) itself, which
    # forces (s, t) = (j, i), or two images off {i, j}
    q2 = np.zeros((n, n, n, n))
    q2 += ((s_ == j_) & (t_ == i_)) / (n - 1.0)
    off = (s_ != i_) & (s_ != j_) & (t_ != i_) & (t_ != j_) & (s_ != t_)
    q2 += off / ((n - 1.0) * (n - 3.0))

    # image triple (s, t, r) of (i, j, l): one of the pairings (i,j), (i,l),
    # (j,l) inside the triple, or all three images outside it
    i3 = ii.reshape(n, 1, 1, 1, 1, 1)
    j3 = ii.reshape(1, n, 1, 1, 1, 1)
    l3 = ii.reshape(1, 1, n, 1, 1, 1)
    s3 = ii.reshape(1, 1, 1, n, 1, 1)
    t3 = ii.reshape(1, 1, 1, 1, n, 1)
    r3 = ii.reshape(1, 1, 1, 1, 1, n)
    out_s = (s3 != i3) & (s3 != j3) & (s3 != l3)
    out_t = (t3 != i3) & (t3 != j3) & (t3 != l3)
    out_r = (r3 != i3) & (r3 != j3) & (r3 != l3)
    pair2 = 1.0 / ((n - 1.0) * (n - 3.0))
    q3 = np.zeros((n, n, n, n, n, n))
    q3 += ((s3 == j3) & (t3 == i3) & out_r) * pair2
    q3 += ((s3 == l3) & (r3 == i3) & out_t) * pair2
    q3 += ((t3 == l3) & (r3 == j3) & out_s) * pair2
    q3 += (
        out_s & out_t & out_r & (s3 != t3) & (s3 != r3) & (t3 != r3)
    ) / ((n - 1.0) * (n - 3.0) * (n - 5.0))

    law = IndexImageLaw(
        n=n,
        p2=pq[:, :, :, :, None, None] * q2[:, :, None, None, :, :],
        p3=pq[:, :, :, :, None, None, None] * q3[:, :, None, :, :, :, :],
    )
    law.validate()
    return law


# ---------------------------------------------------------------------------
# ten-case rewiring
# ---------------------------------------------------------------------------


def classify(pi: Involution, quad: Iterable[int]) -> tuple[int, int, int]:
    """(R1, R2, case_id) for the rewiring table.

    R1 = |{pi(I), pi(J)} ∩ {K, L}|, R2 = |{pi(I), pi(K)} ∩ {J, L}|; the rows
    are evaluated in table order with first match winning (they are disjoint,
    so the order is a safety net only).
    """
    i, j, k, l = (int(x) for x in quad)
    if len({i, j, k, l}) != 4:
        raise InputError("quadruple indices must be distinct")
    p = pi.images
    pi_i, pi_j, pi_k = int(p[i]), int(p[j]), int(p[k])
    r1 = int(pi_i in (k, l)) + int(pi_j in (k, l))
    r2 = int(pi_i in (j, l)) + int(pi_k in (j, l))
    a1, a2 = pi_i == k, pi_j == l
    b1, b2 = pi_i == l, pi_j == k
    c1, c2 = pi_i == j, pi_k == l
    if a1 and not a2:
        case = 1
    elif (not a1) and a2:
        case = 2
    elif b1 and not b2:
        case = 3
    elif (not b1) and b2:
        case = 4
    elif c1 and not c2:
        case = 5
    elif (not c1) and c2:
        case = 6
    elif a1 and a2:
        case = 7
    elif c1 and c2:
        case = 8
    elif b1 and b2:
        case = 9
    elif r1 == 0 and r2 == 0:
        case = 10
    else:
        raise NoCaseMatched(f"(R1,R2)=({r1},{r2}) matched no rewiring case")
    if (r1, r2) != CASE_R[case]:
        raise NoCaseMatched(f"case {case} saw (R1,R2)=({r1},{r2})")
    return r1, r2, case


def _dagger_swaps(p: np.ndarray, case: int, i: int, j: int, k: int, l: int):
    """Right-composition transpositions realizing each table row."""
    if case == 1:
        return ((j, p[l]), (l, p[j]))
    if case == 2:
        return ((i, p[k]), (k, p[i]))
    if case == 3:
        return ((j, p[k]), (k, p[j]), (i, j), (k, l))
    if case == 4:
        return ((i, p[l]), (l, p[i]), (i, j), (k, l))
    if case == 5:
        return ((k, p[l]), (l, p[k]), (i, l), (j, k))
    if case == 6:
        return ((i, p[j]), (j, p[i]), (i, l), (j, k))
    if case == 7:
        return ()
    if case == 8:
        return ((i, l), (j, k))
    if case == 9:
        return ((i, j), (k, l))
    return ((i, p[k]), (k, p[i]), (j, p[l]), (l, p[j]))


def index_set(pi: Involution, quad: Iterable[int]) -> frozenset[int]:
    """The touched indices: the quadruple and its images under pi."""
    i, j, k, l = (int(x) for x in quad)
    p = pi.images
    return frozenset((i, j, k, l, int(p[i]), int(p[j]), int(p[k]), int(p[l])))


def pi_dagger(pi: Involution, quad: Iterable[int]) -> tuple[Involution, int]:
    """Rewire ``pi`` so the cycles (I,K) and (J,L) appear; all indices
    outside the touched set keep their images."""
    i, j, k, l = (int(x) for x in quad)
    _, _, case = classify(pi, quad)
    img = pi.images.copy()
    for a, b in _dagger_swaps(pi.images, case, i, j, k, l):
        img[a], img[b] = img[b], img[a]
    out = Involution(n=pi.n, images=img)
    out.validate()
    if img[i] != k or img[j] != l:
        raise NoCaseMatched(f"case {case} failed to plant required cycles")
    touched = index_set(pi, quad)
    outside = np.setdiff1d(np.arange(pi.n), np.fromiter(touched, dtype=np.int64))
    if not np.array_equal(img[outside], pi.images[outside]):
        raise NoCaseMatched(f"case {case} modified indices outside the touched set")
    return out, case


# ---------------------------------------------------------------------------
# zero-bias draw
# ---------------------------------------------------------------------------


@dataclass
class ZeroBiasDraw:
    pi: Involution
    quad: tuple[int, int, int, int]
    case_id: int
    r1: int
    r2: int
    pi_dagger: Involution
    pi_ddagger: Involution
    u: float
    w: float
    w_dagger: float
    w_ddagger: float
    w_star: float
    s: float
    t: float
    t_dagger: float
    t_ddagger: float
    index_set: frozenset[int]

    def to_json(self) -> dict:
        return {
            "pi": self.pi.to_list_1based(),
            "quad": [q + 1 for q in self.quad],
            "case_id": self.case_id,
            "r1": self.r1,
            "r2": self.r2,
            "pi_dagger": self.pi_dagger.to_list_1based(),
            "pi_ddagger": self.pi_ddagger.to_list_1based(),
            "u": self.u,
            "w": self.w,
            "w_dagger": self.w_dagger,
            "w_ddagger": self.w_ddagger,
            "w_star": self.w_star,
            "s": self.s,
            "t": self.t,
            "t_dagger": self.t_dagger,
            "t_ddagger": self.t_ddagger,
            "index_set": sorted(x + 1 for x in self.index_set),
        }


def zero_bias_draw(
    D: CenteredArray,
    gen: np.random.Generator,
    table: QuadrupleTable | None = None,
) -> ZeroBiasDraw:
    """One coupled realization of (W, W*).

    Draw order: involution choices, quadruple, U.  A missing table triggers
    rejection sampling for the quadruple (used above the table cap).
    """
    n = D.n
    if n < 6:
        raise InputError("zero-bias construction needs n >= 6")
    d = D.entries
    pi = sample_involution(n, gen)
    quad = sample_quadruple(table if table is not None else D, gen)
    i, j, k, l = quad
    r1, r2, _ = classify(pi, quad)
    dag, case = pi_dagger(pi, quad)
    ddag = alpha_compose(dag, i, j)
    u = float(gen.random())

    touched = index_set(pi, quad)
    inside = np.fromiter(sorted(touched), dtype=np.int64)
    outside = np.setdiff1d(np.arange(n), inside)
    s = float(d[outside, pi.images[outside]].sum())
    t = float(d[inside, pi.images[inside]].sum())
    t_dag = float(d[inside, dag.images[inside]].sum())
    t_ddag = float(d[inside, ddag.images[inside]].sum())
    w = s + t
    w_dag = s + t_dag
    w_ddag = s + t_ddag
    bracket = d[i, k] + d[j, l] - (d[i, j] + d[k, l])
    if bracket == 0.0:
        raise NoCaseMatched("square-bias support produced a zero difference")
    return ZeroBiasDraw(
        pi=pi,
        quad=quad,
        case_id=case,
        r1=r1,
        r2=r2,
        pi_dagger=dag,
        pi_ddagger=ddag,
        u=u,
        w=w,
        w_dagger=w_dag,
        w_ddagger=w_ddag,
        w_star=u * w_dag + (1.0 - u) * w_ddag,
        s=s,
        t=t,
        t_dagger=t_dag,
        t_ddagger=t_ddag,
        index_set=touched,
    )


# ---------------------------------------------------------------------------
# Monte Carlo gap estimation
# ---------------------------------------------------------------------------


def zero_bias_gap_samples(
    D: CenteredArray,
    m: int,
    *,
    master_seed: int = rngmod.DEFAULT_SEED,
    stream: int = 0,
    chunk: int = rngmod.DEFAULT_CHUNK,
    threads: int = 1,
    table: QuadrupleTable | None = None,
) -> np.ndarray:
    """|W - W*| for m coupled draws, batched through the case-term kernels.

    Per chunk the stream is consumed as: pairing choices, quadruple uniforms
    (or rejection proposals), then the interpolation uniforms U.
    """
    n = D.n
    if n < 6:
        raise InputError("zero-bias construction needs n >= 6")
    if table is None and n <= TABLE_CAP:
        table = square_bias_table(D)
    d = D.entries

    def worker(idx: int, count: int, gen: np.random.Generator) -> np.ndarray:
        images = _kernels.match_pairs(draw_choices(n, count, gen), n)
        if table is not None:
            quads = table.sample(gen.random(count))
        else:
            quads = sample_quadruples_rejection(D, count, gen)
        u = gen.random(count)
        _, t, tdag, delta = _kernels.case_terms(d, images, quads)
        return np.abs(t - tdag + (1.0 - u) * delta)

    parts = rngmod.run_chunked(
        m,
        worker,
        master_seed=master_seed,
        purpose=rngmod.PURPOSE_ZERO_BIAS,
        extra_id=stream,
        chunk=chunk,
        threads=threads,
    )
    return rngmod.concat_chunks(parts)


def estimate_gap(
    D: CenteredArray,
    m: int,
    *,
    master_seed: int = rngmod.DEFAULT_SEED,
    stream: int = 0,
    chunk: int = rngmod.DEFAULT_CHUNK,
    threads: int = 1,
) -> tuple[float, float]:
    """(mean, standard error) of |W - W*| over m coupled draws."""
    gaps = zero_bias_gap_samples(
        D, m, master_seed=master_seed, stream=stream, chunk=chunk, threads=threads
    )
    return float(gaps.mean()), float(gaps.std(ddof=1) / math.sqrt(m))


# ---------------------------------------------------------------------------
# exact oracles (full enumeration)
# ---------------------------------------------------------------------------


def exact_gap(D: CenteredArray, cap: int = EXACT_CAP) -> float:
    """Exact E|W - W*| over every involution and weighted quadruple."""
    n = D.n
    if n > cap:
        raise CapExceeded(f"n={n} exceeds exact enumeration cap {cap}")
    quads, probs = square_bias_table(D).support()
    invs = involution_matrix(n, cap=cap)
    return _kernels.exact_gap(D.entries, invs, quads, probs)


def pair_statistics(D: CenteredArray, cap: int = EXACT_CAP) -> tuple[float, float]:
    """(max per-involution linearity error, exact E(W - W')^2).

    The first entry is max over involutions of |avg over ordered pairs of
    (W - W') - (4/n) W|; the second is the exact second moment of the pair
    difference, which must equal 2 * (4/n) * Var(W) = 8/n.
    """
    n = D.n
    d = D.entries
    invs = involution_matrix(n, cap=cap)
    ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    lin_err = 0.0
    sq_terms = []
    for row in invs:
        delta = 2.0 * (d[ii, row[ii]] + d[jj, row[jj]] - (d[ii, jj] + d[row[ii], row[jj]]))
        w = float(d[np.arange(n), row].sum())
        lin_err = max(lin_err, abs(float(delta.mean()) - lambda_n(n) * w))
        sq_terms.append(float((delta * delta).sum()))
    m2 = math.fsum(sq_terms) / (invs.shape[0] * n * (n - 1))
    return lin_err, m2


def exchangeability_counts(D: CenteredArray, cap: int = SWEEP_CAP) -> int:
    """Max |count(a,b) - count(b,a)| over the exact joint law of (W, W').

    Values are keyed by the exact floats produced by one summation routine,
    so equal laws give exactly equal keys.
    """
    n = D.n
    if n > cap:
        raise CapExceeded(f"n={n} exceeds sweep cap {cap}")
    d = D.entries
    invs = list(enumerate_involutions(n))
    w_of = {tuple(inv.images.tolist()): float(d[np.arange(n), inv.images].sum()) for inv in invs}
    counts: dict[tuple[float, float], int] = {}
    for inv in invs:
        w = w_of[tuple(inv.images.tolist())]
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                wp = w_of[tuple(alpha_compose(inv, i, j).images.tolist())]
                counts[(w, wp)] = counts.get((w, wp), 0) + 1
    return max(abs(c - counts.get((b, a), 0)) for (a, b), c in counts.items())


def _distinct_quads(n: int) -> list[tuple[int, int, int, int]]:
    return [
        (i, j, k, l)
        for i in range(n)
        for j in range(n)
        if j != i
        for k in range(n)
        if k not in (i, j)
        for l in range(n)
        if l not in (i, j, k)
    ]


@dataclass
class SweepReport:
    """Outcome of the exhaustive (involution x quadruple) sweep."""

    n: int
    quads: int
    involutions: int
    case_counts: dict[int, int]
    impossible_r: int  # occurrences of (R1,R2) in {(2,1),(1,2)}
    multi_match: int  # (pi, quad) pairs matching != 1 table rows
    closure_failures: int
    uniformity_max_dev: int  # vs the exact per-completion count
    expected_completion_count: int
    p2_max_dev: int
    p3_max_dev: int


def exhaustive_sweep(D: CenteredArray, cap: int = SWEEP_CAP) -> SweepReport:
    """One pass over every (involution, ordered quadruple) at small n.

    Checks row disjointness/exhaustiveness and the impossibility of
    (R1,R2) in {(2,1),(1,2)}, validates every rewired involution, and
    accumulates the integer counts behind the conditional-uniformity law,
    the (quad, pi(I), pi(J)) law and the three-image law slices.
    """
    n = D.n
    if n > cap:
        raise CapExceeded(f"n={n} exceeds sweep cap {cap}")
    table = square_bias_table(D)
    invs = [tuple(inv.images.tolist()) for inv in enumerate_involutions(n)]
    quads = _distinct_quads(n)
    n_inv = len(invs)

    case_counts = {c: 0 for c in range(1, 11)}
    impossible = 0
    multi_match = 0
    closure_failures = 0
    phi_counts: dict[tuple, int] = {}
    p2_counts: dict[tuple, int] = {}
    p3_slice_counts: dict[tuple, int] = {}
    p3_distinct_counts: dict[tuple, int] = {}

    idx = np.arange(n)
    for p in invs:
        parr = np.asarray(p, dtype=np.int64)
        for quad in quads:
            i, j, k, l = quad
            pi_i, pi_j, pi_k, pi_l = p[i], p[j], p[k], p[l]
            a1, a2 = pi_i == k, pi_j == l
            b1, b2 = pi_i == l, pi_j == k
            c1, c2 = pi_i == j, pi_k == l
            rows = [
                a1 and not a2,
                (not a1) and a2,
                b1 and not b2,
                (not b1) and b2,
                c1 and not c2,
                (not c1) and c2,
                a1 and a2,
                c1 and c2,
                b1 and b2,
            ]
            r1 = int(pi_i in (k, l)) + int(pi_j in (k, l))
            r2 = int(pi_i in (j, l)) + int(pi_k in (j, l))
            rows.append(r1 == 0 and r2 == 0)
            if sum(rows) != 1:
                multi_match += 1
            if (r1, r2) in ((2, 1), (1, 2)):
                impossible += 1
            case = rows.index(True) + 1
            case_counts[case] += 1

            img = parr.copy()
            for a, b in _dagger_swaps(parr, case, i, j, k, l):
                img[a], img[b] = img[b], img[a]
            ok = (
                img[i] == k
                and img[j] == l
                and not np.any(img == idx)
                and np.array_equal(img[img], idx)
            )
            touched = {i, j, k, l, pi_i, pi_j, pi_k, pi_l}
            for x in range(n):
                if x not in touched and img[x] != p[x]:
                    ok = False
                    break
            if not ok:
                closure_failures += 1

            if table.weight(i, j, k, l) > 0.0:
                phi_counts[(quad, tuple(img.tolist()))] = (
                    phi_counts.get((quad, tuple(img.tolist())), 0) + 1
                )
                p2_counts[(quad, pi_i, pi_j)] = p2_counts.get((quad, pi_i, pi_j), 0) + 1
                key3 = (quad, pi_i, pi_j, pi_l)
                if pi_i == k and len({i, j, k, l, pi_j, pi_l}) == 6:
                    p3_slice_counts[key3] = p3_slice_counts.get(key3, 0) + 1
                if len({i, j, k, l, pi_i, pi_j, pi_l}) == 7:
                    p3_distinct_counts[key3] = p3_distinct_counts.get(key3, 0) + 1

    # conditional uniformity: every completion of every support quad must be
    # produced by exactly |Pi_n| / |Pi_{n-4}| base involutions
    expected = n_inv // double_factorial(n - 5)
    uni_dev = 0
    for quad in quads:
        if table.weight(*quad) <= 0.0:
            continue
        i, j, k, l = quad
        rest = sorted(set(range(n)) - {i, j, k, l})
        for phi_rest in _sub_involutions(rest):
            phi = list(range(n))
            phi[i], phi[k] = k, i
            phi[j], phi[l] = l, j
            for a, b in phi_rest:
                phi[a], phi[b] = b, a
            got = phi_counts.get((quad, tuple(phi)), 0)
            uni_dev = max(uni_dev, abs(got - expected))

    # (quad, pi(I), pi(J)) joint law: integer counts against the exact law
    p2_dev = 0
    for quad in quads:
        if table.weight(*quad) <= 0.0:
            continue
        i, j = quad[0], quad[1]
        for s in range(n):
            for t in range(n):
                if s == j and t == i:
                    want = n_inv // (n - 1)
                elif s in (i, t, j) or t in (j, i):
                    want = 0
                else:
                    want = n_inv // ((n - 1) * (n - 3))
                if p2_counts.get((quad, s, t), 0) != want:
                    p2_dev = max(p2_dev, abs(p2_counts.get((quad, s, t), 0) - want))

    # three-image slices: both laws put mass 1/((n-1)(n-3)(n-5)) per config
    want3 = n_inv // ((n - 1) * (n - 3) * (n - 5)) if n >= 6 else 0
    p3_dev = 0
    for cdict in (p3_slice_counts, p3_distinct_counts):
        for _, got in cdict.items():
            p3_dev = max(p3_dev, abs(got - want3))

    return SweepReport(
        n=n,
        quads=len(quads),
        involutions=n_inv,
        case_counts=case_counts,
        impossible_r=impossible,
        multi_match=multi_match,
        closure_failures=closure_failures,
        uniformity_max_dev=uni_dev,
        expected_completion_count=expected,
        p2_max_dev=p2_dev,
        p3_max_dev=p3_dev,
    )


def _sub_involutions(points: list[int]):
    """All perfect matchings of ``points`` as lists of two-cycles."""
    if not points:
        yield []
        return
    first, rest = points[0], points[1:]
    for t, partner in enumerate(rest):
        remaining = rest[:t] + rest[t + 1 :]
        for tail in _sub_involutions(remaining):
            yield [(first, partner)] + tail


def exact_pi_dagger_marginal(D: CenteredArray, cap: int = SWEEP_CAP) -> dict:
    """Exact conditional-uniformity report for the rewired involution."""
    rep = exhaustive_sweep(D, cap=cap)
    return {
        "check": "pi_dagger_uniformity",
        "n": rep.n,
        "max_abs_error": float(rep.uniformity_max_dev),
        "pass": rep.uniformity_max_dev == 0 and rep.closure_failures == 0,
        "expected_count": rep.expected_completion_count,
        "p2_max_dev": rep.p2_max_dev,
        "case_counts": rep.case_counts,
    }


def exact_wstar_cdf(D: CenteredArray, cap: int = SWEEP_CAP):
    """Two independent exact routes to the CDF of W*.

    Route one follows the construction: over every square-bias quadruple and
    every uniform completion, W* is uniform on the segment between the two
    rewired values, so the law is a finite mixture of uniform segments.
    Route two uses only the defining identity: the zero-bias law of a mean
    zero variable has density ``E[W 1(W > t)] / Var(W)``, which for an atomic
    W is piecewise constant, making the CDF piecewise linear between atoms.

    Returns ``(grid, construction_cdf, definition_cdf)`` sampled on a grid of
    all atoms and segment endpoints plus midpoints.
    """
    n = D.n
    if n > cap:
        raise CapExceeded(f"n={n} exceeds sweep cap {cap}")
    d = D.entries
    rows = np.arange(n)

    segments = []  # (lo, hi, weight)
    quads, probs = square_bias_table(D).support()
    base = np.arange(n, dtype=np.int64)
    for (i, j, k, l), pq in zip(map(tuple, quads.tolist()), probs):
        rest = sorted(set(range(n)) - {i, j, k, l})
        completions = list(_sub_involutions(rest))
        share = pq / len(completions)
        for phi_rest in completions:
            phi = base.copy()
            phi[i], phi[k] = k, i
            phi[j], phi[l] = l, j
            for a, b in phi_rest:
                phi[a], phi[b] = b, a
            a_val = float(d[rows, phi].sum())
            b_val = float(d[rows, alpha_compose(Involution(n=n, images=phi), i, j).images].sum())
            segments.append((min(a_val, b_val), max(a_val, b_val), share))
    seg_lo = np.array([s[0] for s in segments])
    seg_hi = np.array([s[1] for s in segments])
    seg_w = np.array([s[2] for s in segments])

    def construction_cdf(x: np.ndarray) -> np.ndarray:
        frac = (x[:, None] - seg_lo[None, :]) / (seg_hi - seg_lo)[None, :]
        return np.clip(frac, 0.0, 1.0) @ seg_w

    dist = exact_w_distribution(D)
    vals = dist.values
    ps = dist.probs
    sigma2 = float(ps @ vals**2)
    # E[W 1(W > t)] is constant between atoms; integrate it piece by piece
    tail_ev = np.concatenate((np.cumsum((ps * vals)[::-1])[::-1][1:], [0.0]))
    piece = tail_ev[:-1] * np.diff(vals)
    cum_piece = np.concatenate(([0.0], np.cumsum(piece)))

    def definition_cdf(x: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(vals, x, side="right") - 1, 0, len(vals) - 1)
        inside = cum_piece[idx] + tail_ev[idx] * (x - vals[idx])
        out = np.where(x <= vals[0], 0.0, np.where(x >= vals[-1], sigma2, inside))
        return out / sigma2

    grid = np.unique(np.concatenate((seg_lo, seg_hi, vals)))
    grid = np.unique(np.concatenate((grid, (grid[:-1] + grid[1:]) / 2.0)))
    return grid, construction_cdf(grid), definition_cdf(grid)


def exact_zero_bias_moments(
    D: CenteredArray, k_max: int, cap: int = SWEEP_CAP
) -> list[tuple[int, float, float]]:
    """(k, E[W^{k+1}], k E[(W*)^{k-1}]) for k = 1..k_max, both sides exact.

    The left side enumerates the involutions.  The right side enumerates the
    square-bias quadruples and, for each, the uniform completions with the
    planted cycles; the interpolation integral is in closed form
    ``int_0^1 (u a + (1-u) b)^m du = (a^{m+1} - b^{m+1}) / ((m+1)(a - b))``.
    """
    n = D.n
    if n > cap:
        raise CapExceeded(f"n={n} exceeds sweep cap {cap}")
    d = D.entries
    rows = np.arange(n)

    ws = [float(d[rows, inv.images].sum()) for inv in enumerate_involutions(n)]
    lhs = {
        k: math.fsum(w ** (k + 1) for w in ws) / len(ws) for k in range(1, k_max + 1)
    }

    quads, probs = square_bias_table(D).support()
    star_moment_terms: dict[int, list[float]] = {m: [] for m in range(0, k_max)}
    for (i, j, k, l), pq in zip(map(tuple, quads.tolist()), probs):
        rest = sorted(set(range(n)) - {i, j, k, l})
        completions = list(_sub_involutions(rest))
        share = pq / len(completions)
        base = np.arange(n, dtype=np.int64)
        for phi_rest in completions:
            phi = base.copy()
            phi[i], phi[k] = k, i
            phi[j], phi[l] = l, j
            for a, b in phi_rest:
                phi[a], phi[b] = b, a
            dag = Involution(n=n, images=phi)
            ddag = alpha_compose(dag, i, j)
            a_val = float(d[rows, dag.images].sum())
            b_val = float(d[rows, ddag.images].sum())
            for m in range(0, k_max):
                if m == 0:
                    seg = 1.0
                else:
                    seg = (a_val ** (m + 1) - b_val ** (m + 1)) / ((m + 1) * (a_val - b_val))
                star_moment_terms[m].append(share * seg)
    star = {m: math.fsum(terms) for m, terms in star_moment_terms.items()}
    return [(k, lhs[k], k * star[k - 1]) for k in range(1, k_max + 1)]
