"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time: set ``INVCLT_NO_NUMBA=1`` to force
the numpy path (the fallback also engages automatically when numba is not
importable).  Both implementations of every kernel consume identical inputs
and implement identical index semantics, so draws are reproducible across
backends; floating-point sums may differ in the last bits because the two
paths accumulate in different orders.

Kernel semantics shared by both backends:

* ``match_pairs(choices, n)``: sequential pairing.  Step ``t`` holds the
  sorted remaining indices; the smallest is matched to the ``(1+c)``-th
  smallest, where ``c = choices[:, t]`` lies in ``[0, n - 2t - 1)``.
* ``case_terms(d, images, quads)``: classify each (involution, quadruple)
  into the ten rewiring cases and return the short cycle sums ``T`` (before)
  and ``T_dag`` (after), plus ``delta = 2*(d_ik + d_jl - d_ij - d_kl)``,
  which equals both ``W - W'`` for the swap pair and ``Tdag - Tddag``.
* ``exact_gap(...)``: average of the closed-form segment integral
  ``int_0^1 |a - u*delta| du`` over every involution and every weighted
  quadruple; this is the exact mean coupling gap E|W - W*|.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised via backend() in tests
    if os.environ.get("INVCLT_NO_NUMBA", "").strip() not in ("", "0"):
        raise ImportError("numba disabled by INVCLT_NO_NUMBA")
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def backend() -> str:
    """Active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if _HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# sequential pairing
# ---------------------------------------------------------------------------


def match_pairs_np(choices: np.ndarray, n: int) -> np.ndarray:
    """Pure-numpy batch pairing; keeps the remaining set sorted per row."""
    choices = np.asarray(choices, dtype=np.int64)
    m = choices.shape[0]
    images = np.empty((m, n), dtype=np.int64)
    rem = np.broadcast_to(np.arange(n, dtype=np.int64), (m, n)).copy()
    rows = np.arange(m)
    length = n
    for t in range(n // 2):
        c = choices[:, t]
        i0 = rem[:, 0]
        j = rem[rows, 1 + c]
        images[rows, i0] = j
        images[rows, j] = i0
        if length > 2:
            keep = np.ones((m, length), dtype=bool)
            keep[:, 0] = False
            keep[rows, 1 + c] = False
            rem = rem[keep].reshape(m, length - 2)
        length -= 2
    return images


@njit(cache=True, nogil=True)
def _match_pairs_nb(choices: np.ndarray, n: int) -> np.ndarray:  # pragma: no cover
    m = choices.shape[0]
    images = np.empty((m, n), dtype=np.int64)
    rem = np.empty(n, dtype=np.int64)
    for r in range(m):
        for v in range(n):
            rem[v] = v
        length = n
        for t in range(n // 2):
            c = choices[r, t]
            i0 = rem[0]
            j = rem[1 + c]
            images[r, i0] = j
            images[r, j] = i0
            # drop positions 0 and 1+c, preserving sorted order
            w = 0
            for s in range(1, length):
                if s != 1 + c:
                    rem[w] = rem[s]
                    w += 1
            length -= 2
    return images


def _y_batch_np(d: np.ndarray, images: np.ndarray) -> np.ndarray:
    n = images.shape[1]
    return d[np.arange(n)[None, :], images].sum(axis=1)


@njit(cache=True, nogil=True)
def _y_batch_nb(d: np.ndarray, images: np.ndarray) -> np.ndarray:  # pragma: no cover
    m, n = images.shape
    out = np.empty(m, dtype=np.float64)
    for r in range(m):
        acc = 0.0
        for i in range(n):
            acc += d[i, images[r, i]]
        out[r] = acc
    return out


# ---------------------------------------------------------------------------
# ten-case rewiring terms
# ---------------------------------------------------------------------------


def case_terms_np(d: np.ndarray, images: np.ndarray, quads: np.ndarray):
    """Vectorized case classification and cycle sums.

    Returns (case_id, T, T_dag, delta) arrays, one entry per row of
    ``images``/``quads``.
    """
    rows = np.arange(images.shape[0])
    i, j, k, l = quads[:, 0], quads[:, 1], quads[:, 2], quads[:, 3]
    pi_i = images[rows, i]
    pi_j = images[rows, j]
    pi_k = images[rows, k]
    pi_l = images[rows, l]

    a1 = pi_i == k
    a2 = pi_j == l
    b1 = pi_i == l
    b2 = pi_j == k
    c1 = pi_i == j
    c2 = pi_k == l

    d_ik = d[i, k]
    d_jl = d[j, l]
    d_ij = d[i, j]
    d_kl = d[k, l]
    base = d_ik + d_jl
    delta = 2.0 * (base - (d_ij + d_kl))

    d_ipi = d[i, pi_i]
    d_jpj = d[j, pi_j]
    d_kpk = d[k, pi_k]
    d_lpl = d[l, pi_l]

    conds = [
        a1 & ~a2,
        ~a1 & a2,
        b1 & ~b2,
        ~b1 & b2,
        c1 & ~c2,
        ~c1 & c2,
        a1 & a2,
        c1 & c2,
        b1 & b2,
    ]
    t_vals = [
        2.0 * (d_ik + d_jpj + d_lpl),
        2.0 * (d_jl + d_ipi + d_kpk),
        2.0 * (d[i, l] + d_jpj + d_kpk),
        2.0 * (d[j, k] + d_ipi + d_lpl),
        2.0 * (d_ij + d_kpk + d_lpl),
        2.0 * (d_kl + d_ipi + d_jpj),
        2.0 * (d_ik + d_jl),
        2.0 * (d_ij + d_kl),
        2.0 * (d[i, l] + d[j, k]),
    ]
    tdag_vals = [
        2.0 * (base + d[pi_j, pi_l]),
        2.0 * (base + d[pi_i, pi_k]),
        2.0 * (base + d[pi_j, pi_k]),
        2.0 * (base + d[pi_i, pi_l]),
        2.0 * (base + d[pi_k, pi_l]),
        2.0 * (base + d[pi_i, pi_j]),
        2.0 * base,
        2.0 * base,
        2.0 * base,
    ]
    # case 10: all eight indices distinct
    t10 = 2.0 * (d_ipi + d_jpj + d_kpk + d_lpl)
    tdag10 = 2.0 * (base + d[pi_i, pi_k] + d[pi_j, pi_l])

    case = np.select(conds, np.arange(1, 10), default=10).astype(np.int64)
    t = np.select(conds, t_vals, default=0.0) + np.where(case == 10, t10, 0.0)
    tdag = np.select(conds, tdag_vals, default=0.0) + np.where(case == 10, tdag10, 0.0)
    return case, t, tdag, delta


@njit(cache=True, nogil=True, inline="always")
def _case_terms_scalar(d, i, j, k, l, pi_i, pi_j, pi_k, pi_l):  # pragma: no cover
    d_ik = d[i, k]
    d_jl = d[j, l]
    d_ij = d[i, j]
    d_kl = d[k, l]
    base = d_ik + d_jl
    delta = 2.0 * (base - (d_ij + d_kl))
    a1 = pi_i == k
    a2 = pi_j == l
    b1 = pi_i == l
    b2 = pi_j == k
    c1 = pi_i == j
    c2 = pi_k == l
    if a1 and not a2:
        case = 1
        t = 2.0 * (d_ik + d[j, pi_j] + d[l, pi_l])
        tdag = 2.0 * (base + d[pi_j, pi_l])
    elif (not a1) and a2:
        case = 2
        t = 2.0 * (d_jl + d[i, pi_i] + d[k, pi_k])
        tdag = 2.0 * (base + d[pi_i, pi_k])
    elif b1 and not b2:
        case = 3
        t = 2.0 * (d[i, l] + d[j, pi_j] + d[k, pi_k])
        tdag = 2.0 * (base + d[pi_j, pi_k])
    elif (not b1) and b2:
        case = 4
        t = 2.0 * (d[j, k] + d[i, pi_i] + d[l, pi_l])
        tdag = 2.0 * (base + d[pi_i, pi_l])
    elif c1 and not c2:
        case = 5
        t = 2.0 * (d_ij + d[k, pi_k] + d[l, pi_l])
        tdag = 2.0 * (base + d[pi_k, pi_l])
    elif (not c1) and c2:
        case = 6
        t = 2.0 * (d_kl + d[i, pi_i] + d[j, pi_j])
        tdag = 2.0 * (base + d[pi_i, pi_j])
    elif a1 and a2:
        case = 7
        t = 2.0 * base
        tdag = 2.0 * base
    elif c1 and c2:
        case = 8
        t = 2.0 * (d_ij + d_kl)
        tdag = 2.0 * base
    elif b1 and b2:
        case = 9
        t = 2.0 * (d[i, l] + d[j, k])
        tdag = 2.0 * base
    else:
        case = 10
        t = 2.0 * (d[i, pi_i] + d[j, pi_j] + d[k, pi_k] + d[l, pi_l])
        tdag = 2.0 * (base + d[pi_i, pi_k] + d[pi_j, pi_l])
    return case, t, tdag, delta


@njit(cache=True, nogil=True)
def _case_terms_nb(d, images, quads):  # pragma: no cover
    m = images.shape[0]
    case = np.empty(m, dtype=np.int64)
    t = np.empty(m, dtype=np.float64)
    tdag = np.empty(m, dtype=np.float64)
    delta = np.empty(m, dtype=np.float64)
    for r in range(m):
        i, j, k, l = quads[r, 0], quads[r, 1], quads[r, 2], quads[r, 3]
        c, tv, tdv, dv = _case_terms_scalar(
            d, i, j, k, l, images[r, i], images[r, j], images[r, k], images[r, l]
        )
        case[r] = c
        t[r] = tv
        tdag[r] = tdv
        delta[r] = dv
    return case, t, tdag, delta


# ---------------------------------------------------------------------------
# exact E|W - W*| sweep
# ---------------------------------------------------------------------------


def seg_abs_integral_np(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vectorized ``int_0^1 |a - u*c| du`` (c must be nonzero)."""
    b = a - c
    same = a * b >= 0.0
    return np.where(same, np.abs(a + b) / 2.0, (a * a + b * b) / (2.0 * np.abs(c)))


@njit(cache=True, nogil=True, inline="always")
def _seg_abs_integral(a: float, c: float) -> float:  # pragma: no cover
    b = a - c
    if a * b >= 0.0:
        return abs(a + b) / 2.0
    return (a * a + b * b) / (2.0 * abs(c))


def exact_gap_np(d, invs, quads, probs) -> float:
    """Mean coupling gap by full enumeration, vectorized over quadruples."""
    per_pi = np.empty(invs.shape[0], dtype=np.float64)
    for r in range(invs.shape[0]):
        _, t, tdag, delta = case_terms_np(
            d, np.broadcast_to(invs[r], (quads.shape[0], invs.shape[1])), quads
        )
        a = t - tdag + delta
        per_pi[r] = probs @ seg_abs_integral_np(a, delta)
    return float(per_pi.sum() / invs.shape[0])


@njit(cache=True, nogil=True)
def _exact_gap_nb(d, invs, quads, probs) -> float:  # pragma: no cover
    total = 0.0
    comp = 0.0  # Kahan compensation: 1.2e8 summands feed tolerance checks
    n_inv = invs.shape[0]
    n_q = quads.shape[0]
    for r in range(n_inv):
        acc = 0.0
        acc_c = 0.0
        for q in range(n_q):
            i, j, k, l = quads[q, 0], quads[q, 1], quads[q, 2], quads[q, 3]
            _, t, tdag, delta = _case_terms_scalar(
                d, i, j, k, l, invs[r, i], invs[r, j], invs[r, k], invs[r, l]
            )
            val = probs[q] * _seg_abs_integral(t - tdag + delta, delta)
            y = val - acc_c
            s = acc + y
            acc_c = (s - acc) - y
            acc = s
        y = acc - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total / n_inv


# ---------------------------------------------------------------------------
# dispatchers
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    def match_pairs(choices: np.ndarray, n: int) -> np.ndarray:
        return _match_pairs_nb(np.ascontiguousarray(choices, dtype=np.int64), n)

    def y_batch(d: np.ndarray, images: np.ndarray) -> np.ndarray:
        return _y_batch_nb(
            np.ascontiguousarray(d, dtype=np.float64),
            np.ascontiguousarray(images, dtype=np.int64),
        )

    def case_terms(d, images, quads):
        return _case_terms_nb(
            np.ascontiguousarray(d, dtype=np.float64),
            np.ascontiguousarray(images, dtype=np.int64),
            np.ascontiguousarray(quads, dtype=np.int64),
        )

    def exact_gap(d, invs, quads, probs) -> float:
        return float(
            _exact_gap_nb(
                np.ascontiguousarray(d, dtype=np.float64),
                np.ascontiguousarray(invs, dtype=np.int64),
                np.ascontiguousarray(quads, dtype=np.int64),
                np.ascontiguousarray(probs, dtype=np.float64),
            )
        )

else:
    match_pairs = match_pairs_np
    y_batch = _y_batch_np
    case_terms = case_terms_np
    exact_gap = exact_gap_np

# expose the numpy implementations under stable names for cross-checks
match_pairs_fallback = match_pairs_np
y_batch_fallback = _y_batch_np
case_terms_fallback = case_terms_np
exact_gap_fallback = exact_gap_np
