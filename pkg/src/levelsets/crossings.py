"""Level-crossing counts, sup-norms of derivatives and the Kac counter.

Counting works on batches: each row of a batch path is scanned on a uniform
grid, sign changes of X - u are bracketed and refined by bisection, and
cells where X - u stays small while X' points towards u from both ends are
subdivided before being declared root-free. A row is flagged when a
suspicious cell survives the subdivision budget or when two refined roots
lie closer than twice the grid step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .simulate.paths import BatchPath, FunctionPath, PathSample

MAX_SUBDIVISIONS = 8
#: rows are processed in fixed-size chunks so results never depend on threading
CHUNK_POINTS = 1 << 20


@dataclass
class CrossingCount:
    count: int
    refined_roots: np.ndarray
    resolution: float
    undercount_flag: bool
    degenerate: bool = False


@dataclass
class BatchCounts:
    counts: np.ndarray
    undercount: np.ndarray
    degenerate: np.ndarray
    resolution: np.ndarray
    roots: Optional[list] = None

    def row(self, i: int) -> CrossingCount:
        roots = self.roots[i] if self.roots is not None else np.zeros(0)
        return CrossingCount(int(self.counts[i]), roots, float(self.resolution[i]),
                             bool(self.undercount[i]), bool(self.degenerate[i]))


def _eval2(path, rows, t):
    if hasattr(path, "evaluate_upto"):
        out = path.evaluate_upto(rows, t, 1)
        return out[..., 0], out[..., 1]
    return path.evaluate(rows, t, 0), path.evaluate(rows, t, 1)


def _ffill_signs(S, periodic):
    """Replace zero signs by the previous nonzero sign along each row."""
    n = S.shape[1]
    idx = np.where(S != 0, np.arange(n), -1)
    idx = np.maximum.accumulate(idx, axis=1)
    rows = np.arange(S.shape[0])[:, None]
    filled = np.where(idx >= 0, S[rows, np.maximum(idx, 0)], 0)
    if periodic:
        fill = filled[:, -1:]
    else:
        # leading zeros take the first nonzero sign, so they never form a change
        first = np.argmax(S != 0, axis=1)
        fill = S[np.arange(S.shape[0]), first][:, None]
    return np.where(filled == 0, fill, filled)


def _bisect(path, rows, a, b, sa, u, tol):
    if len(rows) == 0:
        return np.zeros(0)
    width = float(np.max(b - a))
    n_iter = max(0, min(64, int(math.ceil(math.log2(max(width / tol, 1.0))))))
    for _ in range(n_iter):
        m = 0.5 * (a + b)
        sm = np.sign(path.evaluate(rows, m, 0) - u)
        left = sm == sa
        a = np.where(left, m, a)
        b = np.where(left, b, m)
    return 0.5 * (a + b)


def _suspicious(Fa, Fb, Da, Db, h):
    near = np.minimum(np.abs(Fa), np.abs(Fb)) < 0.5 * h * np.maximum(np.abs(Da), np.abs(Db))
    dip = (Fa * Da < 0) & (Fb * Db > 0)
    return near & dip & (np.sign(Fa) == np.sign(Fb)) & (Fa != 0) & (Fb != 0)


def _count_chunk(path, row_ids, lo, hi, u, base_step, refine_tol, periodic, want_roots):
    n_rows = len(row_ids)
    length = hi - lo
    n_cells = max(1, int(math.ceil(float(np.max(length)) / base_step)))
    h = length / n_cells
    n_pts = n_cells if periodic else n_cells + 1
    T = lo[:, None] + h[:, None] * np.arange(n_pts)[None, :]
    R = np.broadcast_to(row_ids[:, None], T.shape)
    X, D = _eval2(path, R, T)
    F = X - u

    scale = max(1.0, abs(u))
    degenerate = np.all(np.abs(F) <= 1e-12 * scale, axis=1)

    # a grid zero with nonzero slope takes the sign just after it (just
    # before it at a closed right endpoint, whose root is counted separately)
    S = np.sign(F)
    slope = np.sign(D)
    if not periodic:
        slope[:, -1] *= -1
    S = np.where(S == 0, slope, S).astype(np.int8)
    Sf = _ffill_signs(S, periodic)
    if periodic:
        Sa, Sb = Sf, np.roll(Sf, -1, axis=1)
        Fa, Fb = F, np.roll(F, -1, axis=1)
        Da, Db = D, np.roll(D, -1, axis=1)
        Ta = T
    else:
        Sa, Sb = Sf[:, :-1], Sf[:, 1:]
        Fa, Fb, Da, Db = F[:, :-1], F[:, 1:], D[:, :-1], D[:, 1:]
        Ta = T[:, :-1]
    change = (Sa != Sb) & (Sa != 0) & (Sb != 0)
    change &= ~degenerate[:, None]

    # brackets from grid sign changes
    r_idx, c_idx = np.nonzero(change)
    br_rows = r_idx
    br_a = Ta[r_idx, c_idx]
    br_b = br_a + h[r_idx]
    br_sa = Sa[r_idx, c_idx].astype(float)

    # endpoint roots count once
    extra_rows = []
    extra_roots = []
    if not periodic:
        for col, pos in ((0, lo), (-1, hi)):
            hit = (F[:, col] == 0) & ~degenerate
            extra_rows.append(np.flatnonzero(hit))
            extra_roots.append(pos[hit])

    # adaptive subdivision of suspicious cells
    flag = np.zeros(n_rows, dtype=bool)
    sus = _suspicious(Fa, Fb, Da, Db, h[:, None]) & ~change & ~degenerate[:, None]
    r_s, c_s = np.nonzero(sus)
    ca = Ta[r_s, c_s]
    cb = ca + h[r_s]
    cFa, cFb, cDa, cDb = Fa[r_s, c_s], Fb[r_s, c_s], Da[r_s, c_s], Db[r_s, c_s]
    new_rows, new_a, new_b, new_sa = [], [], [], []
    for _ in range(MAX_SUBDIVISIONS):
        if len(r_s) == 0:
            break
        m = 0.5 * (ca + cb)
        Xm, Dm = _eval2(path, row_ids[r_s], m)
        Fm = Xm - u
        opposite = np.sign(Fm) == -np.sign(cFa)
        # a sign flip at the midpoint reveals a pair of crossings
        new_rows += [r_s[opposite], r_s[opposite]]
        new_a += [ca[opposite], m[opposite]]
        new_b += [m[opposite], cb[opposite]]
        new_sa += [np.sign(cFa[opposite]), np.sign(Fm[opposite])]
        flag[r_s[Fm == 0]] = True
        keep = ~opposite & (Fm != 0)
        hh = 0.5 * (cb - ca)
        left = _suspicious(cFa, Fm, cDa, Dm, hh) & keep
        right = _suspicious(Fm, cFb, Dm, cDb, hh) & keep
        r_s = np.concatenate([r_s[left], r_s[right]])
        ca, cb = np.concatenate([ca[left], m[right]]), np.concatenate([m[left], cb[right]])
        cFa, cFb = np.concatenate([cFa[left], Fm[right]]), np.concatenate([Fm[left], cFb[right]])
        cDa, cDb = np.concatenate([cDa[left], Dm[right]]), np.concatenate([Dm[left], cDb[right]])
    flag[r_s] = True

    if new_rows:
        br_rows = np.concatenate([br_rows] + new_rows)
        br_a = np.concatenate([br_a] + new_a)
        br_b = np.concatenate([br_b] + new_b)
        br_sa = np.concatenate([br_sa] + new_sa)

    roots = _bisect(path, row_ids[br_rows], br_a, br_b, br_sa, u, refine_tol)
    all_rows = np.concatenate([br_rows] + extra_rows) if extra_rows else br_rows
    all_roots = np.concatenate([roots] + extra_roots) if extra_roots else roots
    counts = np.bincount(all_rows, minlength=n_rows)

    order = np.lexsort((all_roots, all_rows))
    sr, st = all_rows[order], all_roots[order]
    same = sr[1:] == sr[:-1]
    close = same & (np.diff(st) < 2 * h[sr[1:]])
    flag[sr[1:][close]] = True
    if periodic and len(sr):
        # wrap-around gap between the last and first root of each row
        firsts = np.flatnonzero(np.r_[True, ~same])
        lasts = np.r_[firsts[1:] - 1, len(sr) - 1]
        gap = st[firsts] + (hi - lo)[sr[firsts]] - st[lasts]
        wrap = (lasts > firsts) & (gap < 2 * h[sr[firsts]])
        flag[sr[firsts][wrap]] = True

    roots_list = None
    if want_roots:
        splits = np.searchsorted(sr, np.arange(1, n_rows))
        roots_list = np.split(st, splits)
    return counts, flag, degenerate, h, roots_list


def count_batch(path: BatchPath, lo, hi, u: float, base_step: float, refine_tol: float = 1e-10,
                periodic: bool = False, rows=None, want_roots: bool = False,
                executor=None) -> BatchCounts:
    """Count crossings of level ``u`` for many rows at once.

    ``lo`` and ``hi`` give per-row intervals (broadcast from scalars). With
    ``periodic=True`` each row is a closed loop of period ``hi - lo``.
    """
    if rows is None:
        rows = np.arange(path.n_rows)
    rows = np.asarray(rows)
    n = len(rows)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,)).copy()
    if not base_step > 0 or not refine_tol > 0:
        raise ValueError("base_step and refine_tol must be positive")
    if np.any(hi <= lo):
        raise ValueError("intervals must have positive length")
    n_cells = max(1, int(math.ceil(float(np.max(hi - lo)) / base_step))) if n else 1
    chunk = max(1, CHUNK_POINTS // (n_cells + 1))
    starts = list(range(0, n, chunk))

    def work(s):
        sl = slice(s, s + chunk)
        return _count_chunk(path, rows[sl], lo[sl], hi[sl], u, base_step, refine_tol, periodic, want_roots)

    results = list(executor.map(work, starts)) if executor is not None else [work(s) for s in starts]
    if not results:
        empty = np.zeros(0)
        return BatchCounts(empty.astype(int), empty.astype(bool), empty.astype(bool), empty, [] if want_roots else None)
    counts = np.concatenate([r[0] for r in results])
    flags = np.concatenate([r[1] for r in results])
    degen = np.concatenate([r[2] for r in results])
    res = np.concatenate([r[3] for r in results])
    roots = [x for r in results for x in r[4]] if want_roots else None
    return BatchCounts(counts, flags, degen, res, roots)


def _as_batch(path) -> BatchPath:
    if isinstance(path, BatchPath):
        return path
    if isinstance(path, (tuple, list)):
        return FunctionPath(list(path))
    raise TypeError("path must be a BatchPath or a sequence of derivative callables")


def count_crossings(path, interval, u: float, base_step: float, refine_tol: float = 1e-10,
                    row: int = 0, periodic: bool = False) -> CrossingCount:
    """Count crossings of level ``u`` by one path on ``interval``.

    ``path`` is a batch path (row ``row`` is used) or a sequence
    ``(f, f')`` of callables. Touch points without a sign change are not
    crossings; a root exactly at an endpoint counts once.
    """
    a, b = interval
    if not base_step < b - a:
        raise ValueError("base_step must be smaller than the interval length")
    res = count_batch(_as_batch(path), a, b, u, base_step, refine_tol, periodic, rows=[row], want_roots=True)
    return res.row(0)


@dataclass(frozen=True)
class SupNorm:
    value: float
    certified: bool


def sup_norm_derivative(sample: PathSample, k: int) -> SupNorm:
    """Grid maximum of |X^(k)|, certified by a Lipschitz correction when order k+1 is present."""
    if k > sample.order:
        raise ValueError(f"sample carries derivatives up to order {sample.order}, not {k}")
    value = float(np.max(np.abs(sample.derivatives[k])))
    if k + 1 <= sample.order:
        step = float(np.max(np.diff(sample.grid))) if len(sample.grid) > 1 else 0.0
        return SupNorm(value + 0.5 * step * float(np.max(np.abs(sample.derivatives[k + 1]))), True)
    return SupNorm(value, False)


def _clip_variation(Xa, Xb, lo, hi):
    return np.abs(np.clip(Xb, lo, hi) - np.clip(Xa, lo, hi))


def kac_integrals(path: BatchPath, lo, hi, u: float, deltas: Sequence[float], quad_step: float,
                  rows=None, rule: str = "exact") -> np.ndarray:
    """Kac counters (1/2 delta) int |X'| 1{|X-u| <= delta} for rows x deltas.

    ``rule="exact"`` integrates |X'| on each cell where X is monotone in
    closed form (the clipped increment of X), locating interior extrema of X
    by bisection on X'. ``rule="midpoint"`` is the plain midpoint rule.
    """
    if rows is None:
        rows = np.arange(path.n_rows)
    rows = np.asarray(rows)
    n = len(rows)
    deltas = np.asarray(deltas, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))
    n_cells = max(1, int(math.ceil(float(np.max(hi - lo)) / quad_step)))
    chunk = max(1, CHUNK_POINTS // (n_cells + 1))
    out = np.zeros((n, len(deltas)))
    for s in range(0, n, chunk):
        sl = slice(s, s + chunk)
        r = rows[sl]
        h = (hi[sl] - lo[sl]) / n_cells
        if rule == "midpoint":
            T = lo[sl, None] + h[:, None] * (np.arange(n_cells) + 0.5)
            X, D = _eval2(path, np.broadcast_to(r[:, None], T.shape), T)
            for j, d in enumerate(deltas):
                w = np.abs(D) * (np.abs(X - u) <= d)
                out[sl, j] = np.sum(w, axis=1) * h / (2 * d)
            continue
        if rule != "exact":
            raise ValueError(f"unknown quadrature rule {rule!r}")
        T = lo[sl, None] + h[:, None] * np.arange(n_cells + 1)
        R = np.broadcast_to(r[:, None], T.shape)
        X, D = _eval2(path, R, T)
        turn = np.sign(D[:, :-1]) * np.sign(D[:, 1:]) < 0
        ri, ci = np.nonzero(turn)
        a, b = T[ri, ci], T[ri, ci + 1]
        sa = np.sign(D[ri, ci])
        for _ in range(52):
            m = 0.5 * (a + b)
            sm = np.sign(path.evaluate(r[ri], m, 1))
            left = sm == sa
            a = np.where(left, m, a)
            b = np.where(left, b, m)
        Xe = path.evaluate(r[ri], 0.5 * (a + b), 0)
        for j, d in enumerate(deltas):
            lo_u, hi_u = u - d, u + d
            var = _clip_variation(X[:, :-1], X[:, 1:], lo_u, hi_u)
            # replace turning cells by the two monotone pieces
            var[ri, ci] = (_clip_variation(X[ri, ci], Xe, lo_u, hi_u)
                           + _clip_variation(Xe, X[ri, ci + 1], lo_u, hi_u))
            out[sl, j] = np.sum(var, axis=1) / (2 * d)
    return out


def kac_counter(path, interval, u: float, delta: float, quad_step: Optional[float] = None,
                rule: str = "exact", row: int = 0) -> float:
    """Kac's counter N_u^delta = (1/2 delta) int_I |X'(t)| 1{|X(t) - u| <= delta} dt."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if quad_step is None:
        quad_step = delta / 8
    if quad_step > delta / 4:
        raise ValueError("quad_step must not exceed delta / 4")
    a, b = interval
    return float(kac_integrals(_as_batch(path), a, b, u, [delta], quad_step, rows=[row], rule=rule)[0, 0])


class LineRestriction(BatchPath):
    """Rows are chords ``base[r] + t dirs[r]`` of a ball field."""

    def __init__(self, field, base, dirs):
        self.field = field
        self.base = np.atleast_2d(np.asarray(base, dtype=float))
        self.dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        self.n_rows = len(self.base)

    def evaluate_upto(self, rows, t, order):
        rows, t = np.broadcast_arrays(np.asarray(rows), np.asarray(t, dtype=float))
        v = self.dirs[rows]
        p = self.base[rows] + t[..., None] * v
        return self.field.directional_derivatives(p, v, order)

    def evaluate(self, rows, t, order=0):
        return self.evaluate_upto(rows, t, order)[..., order]


class CircleRestriction(BatchPath):
    """Rows are great circles theta -> cos(theta) e1[r] + sin(theta) e2[r]."""

    def __init__(self, field, e1, e2):
        self.field = field
        self.e1 = np.atleast_2d(np.asarray(e1, dtype=float))
        self.e2 = np.atleast_2d(np.asarray(e2, dtype=float))
        self.n_rows = len(self.e1)

    def evaluate_upto(self, rows, t, order):
        rows, t = np.broadcast_arrays(np.asarray(rows), np.asarray(t, dtype=float))
        c, s = np.cos(t)[..., None], np.sin(t)[..., None]
        e1, e2 = self.e1[rows], self.e2[rows]
        p = c * e1 + s * e2
        v = -s * e1 + c * e2
        # frames are orthonormal by construction, so tangency holds
        return self.field.directional_derivatives(p, v, order, check=False)

    def evaluate(self, rows, t, order=0):
        return self.evaluate_upto(rows, t, order)[..., order]


def chord_half_lengths(offsets, a: float) -> np.ndarray:
    r2 = np.sum(np.atleast_2d(offsets) ** 2, axis=-1)
    if np.any(r2 >= a * a):
        raise ValueError("chord offset must satisfy |y| < a")
    return np.sqrt(a * a - r2)


def count_on_chords(field, dirs, offsets, a: float, u: float, base_step: float,
                    refine_tol: float = 1e-10, want_roots=False, executor=None) -> BatchCounts:
    half = chord_half_lengths(offsets, a)
    if hasattr(field, "restrict_to_lines"):
        path = field.restrict_to_lines(offsets, dirs)
    else:
        path = LineRestriction(field, offsets, dirs)
    return count_batch(path, -half, half, u, base_step, refine_tol, want_roots=want_roots, executor=executor)


def crossings_along_line(field, v, y, a: float, u: float, base_step: float,
                         refine_tol: float = 1e-10) -> CrossingCount:
    """Crossings of level ``u`` along the chord y + t v of the ball of radius ``a``."""
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    if abs(np.linalg.norm(v) - 1) > 1e-8:
        raise ValueError("direction must be a unit vector")
    if abs(float(v @ y)) > 1e-8 * max(1.0, a):
        raise ValueError("offset must be orthogonal to the direction")
    res = count_on_chords(field, v[None], y[None], a, u, base_step, refine_tol, want_roots=True)
    return res.row(0)


def _check_frame(e1, e2):
    e1 = np.atleast_2d(e1)
    e2 = np.atleast_2d(e2)
    ok = (np.abs(np.sum(e1 * e1, -1) - 1) < 1e-8) & (np.abs(np.sum(e2 * e2, -1) - 1) < 1e-8) \
        & (np.abs(np.sum(e1 * e2, -1)) < 1e-8)
    if not np.all(ok):
        raise ValueError("plane must be given by an orthonormal pair (e1, e2)")


def count_on_great_circles(field, e1, e2, u: float, base_step: float, refine_tol: float = 1e-10,
                           want_roots=False, executor=None) -> BatchCounts:
    if hasattr(field, "restrict_to_great_circles"):
        path = field.restrict_to_great_circles(e1, e2)
    else:
        path = CircleRestriction(field, e1, e2)
    return count_batch(path, 0.0, 2 * math.pi, u, base_step, refine_tol, periodic=True,
                       want_roots=want_roots, executor=executor)


def crossings_along_great_circle(field, plane, u: float, base_step: float,
                                 refine_tol: float = 1e-10) -> CrossingCount:
    """Crossings of ``u`` by theta -> X(cos(theta) e1 + sin(theta) e2) on [0, 2 pi), periodic."""
    e1, e2 = (np.asarray(e, dtype=float) for e in plane)
    _check_frame(e1, e2)
    return count_on_great_circles(field, e1[None], e2[None], u, base_step, refine_tol, want_roots=True).row(0)
