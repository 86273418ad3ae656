"""Polyblock outer approximation for maximizing an increasing function over a normal set.

The feasible set is only accessed through a projection routine that, for a
vertex ``z``, returns a bracket ``lam <= lam* <= lam_upper`` of the largest
``lam`` with ``lam * z`` feasible.  Cuts are placed at ``lam_upper * z`` so the
upper bound stays valid even though ``lam*`` is only known to within the
bracket.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class PolyblockError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleAnswer:
    """Verdict for ``lam * z``; ``margin >= 0`` iff feasible when available.

    ``failed`` marks an undecided query (e.g. a numerical solver breakdown).
    It is never taken as evidence of infeasibility.
    """

    feasible: bool
    witness: Any = None
    margin: float | None = None
    failed: bool = False


Oracle = Callable[[np.ndarray, float], OracleAnswer]


@dataclass(frozen=True)
class Projection:
    lam: float  # largest certified-feasible scaling (0 if none)
    lam_upper: float  # smallest scaling known infeasible, or 1 if z feasible
    witness: Any = None
    calls: int = 0


# ------------------------------------------------------------------ vertices


def _lex_key(v: np.ndarray) -> tuple:
    return tuple(float(x) for x in v)


def best_vertex(vertices: Sequence[np.ndarray], objective: Callable[[np.ndarray], float]) -> np.ndarray:
    """Argmax of ``objective`` over the vertices; ties go to the lexicographically largest."""
    if len(vertices) == 0:
        raise PolyblockError("empty polyblock")
    best, best_val = None, -math.inf
    for v in vertices:
        val = float(objective(v))
        if val > best_val or (val == best_val and _lex_key(v) > _lex_key(best)):
            best, best_val = v, val
    return best


def prune(vertices: Sequence[np.ndarray], drop_improper: bool = True) -> list[np.ndarray]:
    """Remove duplicates, dominated vertices and (optionally) ones with a zero coordinate."""
    if len(vertices) == 0:
        return []
    arr = np.unique(np.array([np.asarray(v, dtype=float) for v in vertices]), axis=0)
    if drop_improper:
        arr = arr[np.all(arr > 0, axis=1)]
    if arr.shape[0] == 0:
        return []
    if arr.shape[1] == 2:
        # rows are sorted by (v1, v2); sweeping from the end, a row survives iff
        # its v2 beats every row with a larger v1 (and it is the last of its v1)
        keep = np.zeros(arr.shape[0], dtype=bool)
        best2 = -math.inf
        for i in range(arr.shape[0] - 1, -1, -1):
            last_of_v1 = i == arr.shape[0] - 1 or arr[i + 1, 0] != arr[i, 0]
            if last_of_v1 and arr[i, 1] > best2:
                keep[i] = True
            best2 = max(best2, arr[i, 1])
        return [row.copy() for row in arr[keep]]
    ge =np.all(arr[None, :, :] >= arr[:, None, :], axis=2)  # ge[i, j]: arr[j] >= arr[i]
    gt = np.any(arr[None, :, :] > arr[:, None, :], axis=2)
    dominated = np.any(ge & gt, axis=1)
    # np.unique already sorted rows lexicographically
    return [row.copy() for row in arr[~dominated]]


def cut_and_update(vertices: Sequence[np.ndarray], z_k: np.ndarray, o_k: np.ndarray,
                   drop_improper: bool = True) -> list[np.ndarray]:
    """Remove the region strictly above ``o_k`` from the polyblock.

    Every vertex ``v >= o_k`` is replaced by ``v - (v_i - o_i) e_i`` for each
    coordinate ``i``.
    """
    z_k = np.asarray(z_k, dtype=float)
    o_k = np.asarray(o_k, dtype=float)
    if np.any(o_k > z_k) or np.all(o_k == z_k):
        raise PolyblockError("cut point must satisfy o <= z and o != z")
    out = []
    for v in vertices:
        v = np.asarray(v, dtype=float)
        if np.all(v >= o_k):
            for i in range(v.size):
                w = v.copy()
                w[i] = o_k[i]
                out.append(w)
        else:
            out.append(v)
    return prune(out, drop_improper)


def in_polyblock(x: np.ndarray, vertices: Sequence[np.ndarray]) -> bool:
    x = np.asarray(x)
    return any(np.all(x <= v) for v in vertices)


# ---------------------------------------------------------------- projection


def bisect_project(z: np.ndarray, oracle: Oracle, eps: float, lam_hint: tuple | None = None,
                   max_failures: int = 4) -> Projection:
    """Bracket ``lam* = sup{lam : lam z feasible}`` to width ``eps``.

    Uses the oracle margin (when it reports one) for Illinois-modified
    regula falsi steps, with a bisection safeguard; otherwise plain bisection.
    Failed queries are retried at other points; the returned upper end is
    always a definite infeasibility verdict (or 1 when ``z`` is feasible).
    """
    z = np.asarray(z, dtype=float)
    calls = 0

    def ask(lam):
        nonlocal calls
        calls += 1
        ans = oracle(z, lam)
        if isinstance(ans, bool):
            ans = OracleAnswer(ans)
        return ans

    top = ask(1.0)
    if top.feasible:
        return Projection(1.0, 1.0, top.witness, calls)
    lo, hi = 0.0, 1.0
    hi_certified = not top.failed
    f_lo, f_hi = None, (None if top.failed else top.margin)
    witness = None
    # establish a feasible lower end
    if lam_hint is not None:
        lo_h = float(lam_hint[0])
        if 0 < lo_h < 1:
            ans = ask(lo_h)
            if ans.feasible:
                lo, f_lo, witness = lo_h, ans.margin, ans.witness
            elif not ans.failed:
                hi, f_hi, hi_certified = lo_h, ans.margin, True
    if lo == 0.0:
        # smallest probe first; climb by decades past undecided queries
        lam = min(eps, 0.5 * hi)
        while True:
            ans = ask(lam)
            if ans.feasible:
                lo, f_lo, witness = lam, ans.margin, ans.witness
                break
            if not ans.failed:
                return Projection(0.0, lam, None, calls)
            if 10 * lam >= hi:
                log.warning("projection oracle undecided on (0, %g)", hi)
                return Projection(0.0, hi if hi_certified else _below_one(hi), None, calls)
            lam *= 10

    side = 0  # which end moved last: -1 lo, +1 hi
    width_hist = [hi - lo]
    failures = 0
    while hi - lo > eps:
        have_margins = (f_lo is not None and f_hi is not None and np.isfinite(f_lo)
                        and np.isfinite(f_hi) and f_lo > f_hi)
        # safeguard: fall back to bisection if two steps did not halve the bracket
        stalled = len(width_hist) >= 3 and width_hist[-1] > 0.5 * width_hist[-3]
        use_falsi = have_margins and not stalled and failures == 0
        if use_falsi:
            w_lo, w_hi = f_lo, f_hi
            lam = (lo * (-w_hi) + hi * w_lo) / (w_lo - w_hi)
            # pinch the bracket from the side that has not moved
            nudge = 0.45 * eps
            lam = lam + nudge if side <= 0 else lam - nudge
            lam = min(max(lam, lo + 0.05 * eps), hi - 0.05 * eps)
        elif failures:
            # after an undecided query, try points off the midpoint
            lam = lo + (hi - lo) * (0.5 + (0.25 if failures % 2 else -0.25) / failures)
        else:
            lam = 0.5 * (lo + hi)
        ans = ask(lam)
        if ans.failed and not ans.feasible:
            failures += 1
            if failures >= max_failures:
                log.warning("projection oracle undecided inside [%g, %g]; stopping early", lo, hi)
                break
            continue
        failures = 0
        if ans.feasible:
            lo, f_lo, witness = lam, ans.margin, ans.witness
            if side == -1 and f_hi is not None:
                f_hi = 0.5 * f_hi  # Illinois
            side = -1
        else:
            hi, f_hi, hi_certified = lam, ans.margin, True
            if side == 1 and f_lo is not None:
                f_lo = 0.5 * f_lo
            side = 1
        width_hist.append(hi - lo)
    return Projection(lo, hi if hi_certified else _below_one(hi), witness, calls)


def _below_one(hi: float) -> float:
    # no query ever decided infeasibility: keep the cut strictly inside the box
    return min(hi, math.nextafter(1.0, 0.0))


# ----------------------------------------------------------------- the loop


@dataclass
class TraceRow:
    iteration: int
    r_upper: float
    r_lower: float
    lam: float
    vertex: tuple
    n_vertices: int
    oracle_calls: int
    lam_upper: float = math.nan
    vertices: tuple | None = None  # polyblock after the cut (only with keep_vertices)


@dataclass
class MonotonicTrace:
    rows: list = field(default_factory=list)
    incumbent: np.ndarray | None = None
    witness: Any = None
    converged: bool = False
    eps: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.rows)

    @property
    def r_upper(self) -> float:
        return self.rows[-1].r_upper if self.rows else math.inf

    @property
    def r_lower(self) -> float:
        return self.rows[-1].r_lower if self.rows else -math.inf

    @property
    def gap(self) -> float:
        return self.r_upper - self.r_lower

    def iterations_to_gap(self, gap: float) -> int | None:
        """First iteration (1-based) at which r_U - r_L < gap."""
        for row in self.rows:
            if row.r_upper - row.r_lower < gap:
                return row.iteration
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = len(self.rows[0].vertex) if self.rows else 0
        w.writerow(["iteration", "r_upper", "r_lower", "lambda"] + [f"v{i + 1}" for i in range(dim)])
        for r in self.rows:
            w.writerow([r.iteration, repr(r.r_upper), repr(r.r_lower), repr(r.lam)] + [repr(x) for x in r.vertex])
        return buf.getvalue()


Projector = Callable[[np.ndarray], Projection]


def run_monotonic(initial_vertex, objective: Callable[[np.ndarray], float], oracle: Oracle | None = None,
                  eps: float = 1e-5, max_iter: int = 500, project: Projector | None = None,
                  bisect_eps: float | None = None, drop_improper: bool = True,
                  keep_vertices: bool = False) -> MonotonicTrace:
    """Polyblock outer approximation.

    Either ``oracle`` (answered through :func:`bisect_project`) or a direct
    ``project`` routine must be given.  Stops once ``r_U - r_L < eps``.
    ``keep_vertices`` stores the vertex set of every iteration in the trace.
    """
    if (oracle is None) == (project is None):
        raise ValueError("give exactly one of oracle / project")
    v0 = np.asarray(initial_vertex, dtype=float)
    if np.any(v0 < 0) or not np.all(np.isfinite(v0)):
        raise ValueError("initial vertex must be finite and nonnegative")
    vertices = prune([v0], drop_improper)
    trace = MonotonicTrace(eps=eps)
    r_lower = -math.inf
    r_upper_prev = math.inf
    for k in range(1, max_iter + 1):
        if not vertices:
            # nothing left with positive objective; the incumbent is optimal
            trace.converged = trace.incumbent is not None
            if trace.incumbent is None:
                trace.incumbent = np.zeros_like(v0)
                trace.converged = True
                r_lower = max(r_lower, float(objective(trace.incumbent)))
            break
        z = best_vertex(vertices, objective)
        r_upper = min(float(objective(z)), r_upper_prev)
        if r_lower > -math.inf and r_upper - r_lower < eps:
            trace.rows.append(TraceRow(k, r_upper, r_lower, math.nan, _lex_key(z), len(vertices), 0))
            trace.converged = True
            break
        if project is not None:
            proj = project(z)
        else:
            be = bisect_eps if bisect_eps is not None else 0.1 * eps / max(1.0, abs(r_upper))
            proj = bisect_project(z, oracle, be)
        if proj.lam > 0:
            point = proj.lam * z
            val = float(objective(point))
            if val > r_lower:
                r_lower = val
                trace.incumbent = point
                trace.witness = proj.witness
        if proj.lam_upper >= 1.0:
            # z itself is feasible: it maximizes the objective over the polyblock
            if proj.lam < 1.0:
                raise PolyblockError("projection reported lam_upper = 1 without certifying z")
            r_upper = r_lower
            trace.rows.append(TraceRow(k, r_upper, r_lower, proj.lam, _lex_key(z), len(vertices), proj.calls))
            trace.converged = True
            break
        o = proj.lam_upper * z
        vertices = cut_and_update(vertices, z, o, drop_improper)
        snap = tuple(_lex_key(v) for v in vertices) if keep_vertices else None
        trace.rows.append(TraceRow(k, r_upper, r_lower, proj.lam, _lex_key(z), len(vertices), proj.calls,
                                   proj.lam_upper, snap))
        r_upper_prev = r_upper
    else:
        log.info("monotonic optimization hit the iteration cap (%d)", max_iter)
    if trace.incumbent is None:
        trace.incumbent = np.zeros_like(v0)
    return trace
