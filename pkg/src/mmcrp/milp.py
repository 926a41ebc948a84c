"""Embedded max-form LP solver with duals plus depth-first branch-and-bound.

The LP kernel is a two-phase revised simplex on bounded variables with a
dense basis inverse, adequate for desk-scale problems (a few thousand rows
and columns). Dantzig pricing with Bland's rule as an anti-cycling fallback
after a long degenerate streak. One solver instance per thread; problems and
solutions are value objects.

Tolerances shared across the package: feasibility 1e-7, reduced cost 1e-6,
integrality 1e-6. The simplex itself prices to 1e-9 so that callers checking
against the 1e-6 contract always see a strictly tighter master.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

TOL_FEAS = 1e-7
TOL_RC = 1e-6
TOL_INT = 1e-6

_TOL_PRICE = 1e-9
_TOL_PIVOT = 1e-10
_REFACTOR_EVERY = 120

LE = "<="
EQ = "="

_AT_LB, _AT_UB, _BASIC = 0, 1, 2


class MilpError(ValueError):
    pass


class MilpProblem:
    """Sparse column-wise max-form problem: rows are fixed at construction,
    columns are appended (the natural shape for column generation)."""

    def __init__(self, rows: Sequence[tuple[str, float]]):
        for i, (sense, rhs) in enumerate(rows):
            if sense not in (LE, EQ):
                raise MilpError(f"row {i}: unknown sense '{sense}'")
            if not math.isfinite(rhs):
                raise MilpError(f"row {i}: rhs must be finite")
        self.rows: list[tuple[str, float]] = list(rows)
        self.objective: list[float] = []
        self.col_entries: list[list[tuple[int, float]]] = []
        self.upper: list[float] = []
        self.integer: list[bool] = []

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.objective)

    def add_column(self, obj: float, entries: Sequence[tuple[int, float]],
                   upper: float = math.inf, integer: bool = False) -> int:
        for row, _ in entries:
            if not 0 <= row < self.n_rows:
                raise MilpError(f"column entry references unknown row {row}")
        self.objective.append(float(obj))
        self.col_entries.append([(int(r), float(v)) for r, v in entries])
        self.upper.append(float(upper))
        self.integer.append(bool(integer))
        return self.n_cols - 1

    def dense(self) -> np.ndarray:
        a = np.zeros((self.n_rows, self.n_cols))
        for j, entries in enumerate(self.col_entries):
            for r, v in entries:
                a[r, j] += v
        return a


@dataclass
class SimplexState:
    """Opaque warm-start snapshot (basis + variable statuses)."""

    n_cols: int
    basis: np.ndarray
    vstat: np.ndarray


@dataclass
class LpSolution:
    status: str                       # optimal | infeasible | unbounded
    objective: float
    x: np.ndarray
    duals: np.ndarray
    iterations: int = 0
    state: Optional[SimplexState] = None


@dataclass
class IpResult:
    status: str                       # optimal | infeasible | unbounded | time_limit | node_limit
    objective: float
    x: Optional[np.ndarray]
    bound: float
    nodes: int = 0
    gap: float = math.inf


class _Simplex:
    """Bounded-variable primal simplex over [structural | slack | artificial]."""

    def __init__(self, problem: MilpProblem,
                 bounds: Optional[dict[int, tuple[float, float]]] = None):
        m, n = problem.n_rows, problem.n_cols
        self.m, self.n = m, n
        n_slack = sum(1 for s, _ in problem.rows if s == LE)
        self.N = n + n_slack + m      # one artificial slot per row
        self.A = np.zeros((m, self.N))
        self.A[:, :n] = problem.dense()
        self.b = np.array([rhs for _, rhs in problem.rows], dtype=float)
        self.c = np.zeros(self.N)
        self.c[:n] = problem.objective
        self.lb = np.zeros(self.N)
        self.ub = np.full(self.N, np.inf)
        self.ub[:n] = problem.upper
        if bounds:
            for j, (lo, hi) in bounds.items():
                self.lb[j], self.ub[j] = lo, hi

        self.slack_of_row = np.full(m, -1, dtype=int)
        k = n
        for i, (sense, _) in enumerate(problem.rows):
            if sense == LE:
                self.slack_of_row[i] = k
                self.A[i, k] = 1.0
                k += 1
        self.art_of_row = np.arange(n + n_slack, self.N)
        self.art_cols = self.art_of_row.copy()

        self.basis = np.zeros(m, dtype=int)
        self.vstat = np.full(self.N, _AT_LB, dtype=np.int8)
        self.x = np.zeros(self.N)
        self.binv = np.eye(m)
        self.iterations = 0

    # -- state plumbing ------------------------------------------------------

    def load_state(self, state: SimplexState) -> str:
        """Adopt a previous basis (columns may have been appended since).

        Returns 'ok' when the loaded basis is primal feasible, 'repair' when
        it is regular but some basic variable violates a (changed) bound, and
        'fail' when it cannot be used at all."""
        shift = self.n - state.n_cols
        if shift < 0:
            return "fail"
        remap = lambda j: j if j < state.n_cols else j + shift
        basis = np.array([remap(j) for j in state.basis], dtype=int)
        if len(basis) != self.m or basis.max(initial=-1) >= self.N:
            return "fail"
        vstat = np.full(self.N, _AT_LB, dtype=np.int8)
        for j_old in range(len(state.vstat)):
            vstat[remap(j_old)] = state.vstat[j_old]
        art_lo = self.N - self.m
        for j in basis:
            if j >= art_lo:
                # basic artificial of a redundant row, pinned at zero; give its
                # column a unit coefficient so the basis matrix stays regular
                self.A[j - art_lo, j] = 1.0
        self.basis, self.vstat = basis, vstat
        try:
            self._refactor()
        except np.linalg.LinAlgError:
            return "fail"
        # clamp nonbasics onto (possibly changed) bounds, then check basics
        self._set_nonbasic_values()
        self._recompute_basics()
        if not bool(np.all(np.abs(self.x[self.art_cols]) <= TOL_FEAS)):
            return "fail"
        xb = self.x[self.basis]
        ok = bool(np.all(xb >= self.lb[self.basis] - TOL_FEAS)
                  and np.all(xb <= self.ub[self.basis] + TOL_FEAS))
        return "ok" if ok else "repair"

    def dual_repair(self, c: np.ndarray, max_iter: int = 20000) -> str:
        """Bounded dual simplex: restore primal feasibility after bound
        changes, starting from a dual-feasible (previously optimal) basis.
        Returns 'feasible', 'infeasible', or 'fail' (caller solves cold)."""
        it = 0
        while True:
            it += 1
            if it > max_iter:
                return "fail"
            xb = self.x[self.basis]
            below = self.lb[self.basis] - xb
            above = xb - self.ub[self.basis]
            viol = np.maximum(below, above)
            r = int(np.argmax(viol))
            if viol[r] <= TOL_FEAS:
                return "feasible"
            leaving = int(self.basis[r])
            exits_low = below[r] >= above[r]
            row = self.binv[r, :] @ self.A
            y = c[self.basis] @ self.binv
            d = c - y @ self.A
            # x_B[r] must rise when below its lower bound, drop when above
            # its upper bound; pick the entering column by the dual ratio test
            best_j = -1
            best_ratio = math.inf
            for j in range(self.N):
                if self.vstat[j] == _BASIC or (self.ub[j] - self.lb[j]) <= _TOL_PIVOT:
                    continue
                rj = row[j]
                if abs(rj) <= 1e-9:
                    continue
                at_lb = self.vstat[j] == _AT_LB
                if exits_low:
                    # need delta x_Br > 0: raise an AT_LB var with rj < 0 or
                    # lower an AT_UB var with rj > 0
                    usable = (at_lb and rj < 0) or (not at_lb and rj > 0)
                else:
                    usable = (at_lb and rj > 0) or (not at_lb and rj < 0)
                if not usable:
                    continue
                ratio = abs(d[j]) / abs(rj)
                if ratio < best_ratio - 1e-12 or (ratio < best_ratio + 1e-12
                                                  and (best_j < 0 or j < best_j)):
                    best_j = j
                    best_ratio = ratio
            if best_j < 0:
                return "infeasible"
            w = self.binv @ self.A[:, best_j]
            piv = w[r]
            if abs(piv) < _TOL_PIVOT:
                return "fail"
            self.vstat[leaving] = _AT_LB if exits_low else _AT_UB
            self.basis[r] = best_j
            self.vstat[best_j] = _BASIC
            rowv = self.binv[r, :] / piv
            self.binv -= np.outer(w, rowv)
            self.binv[r, :] = rowv
            self._set_nonbasic_values()
            self._recompute_basics()

    def snapshot(self) -> SimplexState:
        return SimplexState(self.n, self.basis.copy(), self.vstat.copy())

    # -- linear algebra ------------------------------------------------------

    def _refactor(self):
        self.binv = np.linalg.inv(self.A[:, self.basis])

    def _set_nonbasic_values(self):
        nb = self.vstat != _BASIC
        at_ub = nb & (self.vstat == _AT_UB) & np.isfinite(self.ub)
        self.x[nb] = self.lb[nb]
        self.x[at_ub] = self.ub[at_ub]

    def _recompute_basics(self):
        xfull = self.x.copy()
        xfull[self.basis] = 0.0
        resid = self.b - self.A @ xfull
        self.x[self.basis] = self.binv @ resid

    # -- core loop -------------------------------------------------------------

    def start_cold(self) -> bool:
        """Build the slack/artificial starting basis; returns True when a
        phase-1 run is required."""
        self.vstat[:] = _AT_LB
        self._set_nonbasic_values()
        xfull = self.x.copy()
        xfull[self.art_cols] = 0.0
        for i in range(self.m):
            if self.slack_of_row[i] >= 0:
                xfull[self.slack_of_row[i]] = 0.0
        resid = self.b - self.A @ xfull
        need_art = False
        for i in range(self.m):
            s = self.slack_of_row[i]
            if s >= 0 and resid[i] >= 0:
                self.basis[i] = s
                self.vstat[s] = _BASIC
            else:
                a = self.art_of_row[i]
                self.A[i, a] = 1.0 if resid[i] >= 0 else -1.0
                self.basis[i] = a
                self.vstat[a] = _BASIC
                need_art = True
        self._refactor()
        self._set_nonbasic_values()
        self._recompute_basics()
        return need_art

    def optimize(self, c: np.ndarray, max_iter: int = 200000) -> str:
        m = self.m
        fixed = (self.ub - self.lb) <= _TOL_PIVOT
        abs_a = np.abs(self.A)
        abs_c = np.abs(c)
        degen_streak = 0
        bland = False
        since_refactor = 0
        tol_boost = 1.0
        while True:
            self.iterations += 1
            if self.iterations > max_iter:
                raise MilpError("simplex iteration limit exceeded")
            y = c[self.basis] @ self.binv
            d = c - y @ self.A
            # entering tolerance scales with each column's own magnitude:
            # reduced costs of big-coefficient columns carry big float noise
            tol = tol_boost * (_TOL_PRICE + 1e-12 * (abs_c + np.abs(y) @ abs_a))
            nb_lb = (self.vstat == _AT_LB) & ~fixed
            nb_ub = (self.vstat == _AT_UB) & ~fixed
            score = np.where(nb_lb, d, np.where(nb_ub, -d, -np.inf))
            eligible = score > tol
            if not eligible.any():
                return "optimal"
            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(score - tol))
            sigma = 1.0 if self.vstat[j] == _AT_LB else -1.0

            w = self.binv @ self.A[:, j]
            step_dir = -sigma * w          # movement of basics per unit t
            xb = self.x[self.basis]
            lo = self.lb[self.basis]
            hi = self.ub[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t_lo = np.where(step_dir < -_TOL_PIVOT,
                                (xb - lo) / -step_dir, np.inf)
                t_hi = np.where(step_dir > _TOL_PIVOT,
                                (hi - xb) / step_dir, np.inf)
            t_rows = np.minimum(t_lo, t_hi)
            t_rows = np.maximum(t_rows, 0.0)
            t_flip = self.ub[j] - self.lb[j]
            t_min_rows = t_rows.min() if m else np.inf
            t = min(t_flip, t_min_rows)
            if not np.isfinite(t):
                return "unbounded"

            if np.isfinite(t_flip) and t_flip <= t_min_rows:
                # bound flip, basis unchanged
                self.x[j] = self.ub[j] if sigma > 0 else self.lb[j]
                self.vstat[j] = _AT_UB if sigma > 0 else _AT_LB
                self.x[self.basis] = xb + step_dir * t_flip
                degen_streak = 0
                continue

            cand = np.flatnonzero(t_rows <= t + 1e-9)
            if bland:
                leave_pos = int(cand[np.argmin(self.basis[cand])])
            else:
                leave_pos = int(cand[np.argmax(np.abs(w[cand]))])
            leaving = int(self.basis[leave_pos])

            self.x[self.basis] = xb + step_dir * t
            self.x[j] = self.x[j] + sigma * t
            # leaving variable lands exactly on the bound it hit
            self.vstat[leaving] = _AT_LB if step_dir[leave_pos] < 0 else _AT_UB
            self.x[leaving] = (self.lb[leaving] if step_dir[leave_pos] < 0
                               else self.ub[leaving])
            self.basis[leave_pos] = j
            self.vstat[j] = _BASIC

            piv = w[leave_pos]
            if abs(piv) < _TOL_PIVOT:
                self._refactor()
                self._recompute_basics()
                continue
            row = self.binv[leave_pos, :] / piv
            self.binv -= np.outer(w, row)
            self.binv[leave_pos, :] = row

            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                self._refactor()
                self._recompute_basics()
                since_refactor = 0

            if t <= 1e-10:
                degen_streak += 1
                if degen_streak > 3 * m:
                    bland = True
                if degen_streak > 6 * m + 50:
                    # numerical stalemate: refresh the factorization and relax
                    # the entering tolerance a notch
                    self._refactor()
                    self._recompute_basics()
                    tol_boost = min(tol_boost * 10.0, 1e4)
                    degen_streak = 0
                    bland = False
            else:
                degen_streak = 0
                bland = False

    def phase1(self) -> str:
        c1 = np.zeros(self.N)
        c1[self.art_cols] = -1.0
        status = self.optimize(c1)
        if status != "optimal":          # phase-1 objective is bounded by 0
            raise MilpError("phase 1 reported unbounded; problem is malformed")
        infeas = -(c1[self.basis] @ self.x[self.basis])
        if infeas > TOL_FEAS * max(1.0, np.abs(self.b).max(initial=0.0)):
            return "infeasible"
        self._pivot_out_artificials()
        self.ub[self.art_cols] = 0.0
        self.lb[self.art_cols] = 0.0
        return "feasible"

    def _pivot_out_artificials(self):
        for pos in range(self.m):
            j = self.basis[pos]
            if j not in self.art_cols:
                continue
            row = self.binv[pos, :] @ self.A
            pick = -1
            for jj in range(self.n + (self.N - self.n - self.m)):
                if self.vstat[jj] != _BASIC and abs(row[jj]) > 1e-8:
                    pick = jj
                    break
            if pick < 0:
                continue                  # redundant row: artificial stays at 0
            w = self.binv @ self.A[:, pick]
            piv = w[pos]
            self.vstat[j] = _AT_LB
            self.x[j] = 0.0
            self.basis[pos] = pick
            self.vstat[pick] = _BASIC
            rowv = self.binv[pos, :] / piv
            self.binv -= np.outer(w, rowv)
            self.binv[pos, :] = rowv
        self._recompute_basics()


def solve_lp(problem: MilpProblem, state: Optional[SimplexState] = None,
             bounds: Optional[dict[int, tuple[float, float]]] = None) -> LpSolution:
    """Solve the LP relaxation; on 'optimal' the solution carries row duals
    (>= 0 for <= rows in this max form, free for = rows) and a warm-start
    snapshot for subsequent calls with extra columns."""
    sx = _Simplex(problem, bounds)
    loaded = sx.load_state(state) if state is not None else "fail"
    if loaded != "fail":
        sx.ub[sx.art_cols] = 0.0
        sx.lb[sx.art_cols] = 0.0
    if loaded == "repair":
        repaired = sx.dual_repair(sx.c)
        if repaired == "infeasible":
            return LpSolution("infeasible", math.nan, np.zeros(problem.n_cols),
                              np.zeros(problem.n_rows), sx.iterations)
        if repaired == "fail":
            loaded = "fail"
    if loaded == "fail":
        sx = _Simplex(problem, bounds)
        if sx.start_cold() and sx.phase1() == "infeasible":
            return LpSolution("infeasible", math.nan, np.zeros(problem.n_cols),
                              np.zeros(problem.n_rows), sx.iterations)
        sx.ub[sx.art_cols] = 0.0
        sx.lb[sx.art_cols] = 0.0
    status = sx.optimize(sx.c)
    if status == "unbounded":
        return LpSolution("unbounded", math.inf, np.zeros(problem.n_cols),
                          np.zeros(problem.n_rows), sx.iterations)
    sx._refactor()
    sx._recompute_basics()
    x = sx.x[:problem.n_cols].copy()
    y = sx.c[sx.basis] @ sx.binv
    obj = float(np.array(problem.objective) @ x)
    return LpSolution("optimal", obj, x, y, sx.iterations, sx.snapshot())


def _most_fractional(x: np.ndarray, integer: Sequence[bool]) -> int:
    best_j, best_f = -1, TOL_INT
    for j, is_int in enumerate(integer):
        if not is_int:
            continue
        f = abs(x[j] - round(x[j]))
        if f > best_f + 1e-12:
            best_j, best_f = j, f
    return best_j


def solve_ip(problem: MilpProblem, time_limit_s: Optional[float] = None,
             node_limit: Optional[int] = None) -> IpResult:
    """Depth-first branch and bound on the most-fractional variable (ties by
    lowest index). Returns the incumbent and the best remaining bound; when
    the tree is exhausted the bound equals the incumbent (gap 0)."""
    t0 = time.perf_counter()
    c = np.array(problem.objective)

    root = solve_lp(problem)
    if root.status == "infeasible":
        return IpResult("infeasible", math.nan, None, math.nan, nodes=1)
    if root.status == "unbounded":
        return IpResult("unbounded", math.inf, None, math.inf, nodes=1)

    best_x = None
    best_obj = -math.inf
    nodes = 0
    # stack entries: (bounds dict, parent state, parent bound)
    stack: list[tuple[dict, Optional[SimplexState], float]] = [({}, None, root.objective)]
    hit_limit = None

    while stack:
        if time_limit_s is not None and time.perf_counter() - t0 > time_limit_s:
            hit_limit = "time_limit"
            break
        if node_limit is not None and nodes >= node_limit:
            hit_limit = "node_limit"
            break
        bnds, state, parent_bound = stack.pop()
        if parent_bound <= best_obj + 1e-9:
            continue
        nodes += 1
        sol = solve_lp(problem, state=state, bounds=bnds) if bnds else root
        if sol.status != "optimal" or sol.objective <= best_obj + 1e-9:
            continue
        j = _most_fractional(sol.x, problem.integer)
        if j < 0:
            x_int = sol.x.copy()
            for k, is_int in enumerate(problem.integer):
                if is_int:
                    x_int[k] = round(x_int[k])
            obj = float(c @ x_int)
            if obj > best_obj:
                best_obj, best_x = obj, x_int
            continue
        lo, hi = bnds.get(j, (0.0, problem.upper[j]))
        down = dict(bnds)
        down[j] = (lo, math.floor(sol.x[j] + TOL_INT))
        up = dict(bnds)
        up[j] = (math.ceil(sol.x[j] - TOL_INT), hi)
        stack.append((down, sol.state, sol.objective))
        stack.append((up, sol.state, sol.objective))   # explore 'up' first

    if best_x is None and hit_limit is None:
        return IpResult("infeasible", math.nan, None, math.nan, nodes=nodes)
    open_bound = max((pb for _, _, pb in stack), default=-math.inf)
    bound = max(best_obj, open_bound) if hit_limit else best_obj
    gap = 0.0 if not hit_limit else (
        (bound - best_obj) / max(abs(best_obj), 1e-9) if best_x is not None else math.inf
    )
    return IpResult(hit_limit or "optimal", best_obj, best_x, bound, nodes, gap)


def write_lp_file(problem: MilpProblem, path, name: str = "exported",
                  row_names: Optional[Sequence[str]] = None,
                  col_names: Optional[Sequence[str]] = None):
    """Text export (CPLEX LP dialect, MAX sense) for external cross-checks."""
    rn = row_names or [f"r{i}" for i in range(problem.n_rows)]
    cn = col_names or [f"x{j}" for j in range(problem.n_cols)]
    rows_terms: list[list[str]] = [[] for _ in range(problem.n_rows)]
    for j, entries in enumerate(problem.col_entries):
        for r, v in entries:
            rows_terms[r].append(f"{v:+.12g} {cn[j]}")
    with open(path, "w") as fh:
        fh.write(f"\\ {name}\nMaximize\n obj:")
        for j, obj in enumerate(problem.objective):
            fh.write(f" {obj:+.12g} {cn[j]}")
        fh.write("\nSubject To\n")
        for i, (sense, rhs) in enumerate(problem.rows):
            op = "<=" if sense == LE else "="
            fh.write(f" {rn[i]}: {' '.join(rows_terms[i]) or '0 ' + cn[0]} {op} {rhs:.12g}\n")
        fh.write("Bounds\n")
        for j in range(problem.n_cols):
            if math.isinf(problem.upper[j]):
                fh.write(f" 0 <= {cn[j]}\n")
            else:
                fh.write(f" 0 <= {cn[j]} <= {problem.upper[j]:.12g}\n")
        general = [cn[j] for j in range(problem.n_cols) if problem.integer[j]]
        if general:
            fh.write("General\n " + " ".join(general) + "\n")
        fh.write("End\n")
