"""Path formulation via delayed column generation.

The restricted master keeps one at-most-once row per task and one equality
row per depot for departures (W_d) and returns (W-bar_d). Pricing is a
longest-path pass over the topologically ordered time-space graph: one call
per start depot yields the best route to every end depot (and, on request,
every positive candidate). Four exact schemes control how many of those
candidates enter the master per iteration; a heuristic phase prices on a
reduced graph first and hands over to the exact graph once it dries up.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import milp
from .milp import EQ, LE, MilpProblem, TOL_RC
from .model import Instance
from .ridegraph import (
    RIDE,
    Caps,
    TimeSpaceGraph,
    VariantSet,
    build_graph,
    drop_negative,
    enumerate_variants,
    reduce_prune,
    reduce_statespace,
)
from .solution import Plan, VehicleRoute, build_plan

SCHEMES = ("best", "first", "firstdep", "multiple")
HEURISTICS = ("none", "heuredges", "heurprun", "statespace")

RELOCATION_PENALTY = 1e7


@dataclass(frozen=True)
class Route:
    """A master column: one vehicle day as the variants it drives."""

    id: int
    start_depot: int
    end_depot: int
    variant_ids: tuple[int, ...]
    covered: tuple[tuple[int, int], ...]
    saving_eur: float
    dummy: bool = False


@dataclass
class DualPrices:
    alpha: dict[int, float]       # per task, >= 0
    beta: dict[int, float]        # per depot start row, free
    delta: dict[int, float]       # per depot end row, free


def reduced_saving(route: Route, duals: DualPrices) -> float:
    """Route saving minus its coverage duals and both depot-inventory duals."""
    total = route.saving_eur
    total -= sum(duals.alpha.get(task, 0.0) for _, task in route.covered)
    total -= duals.beta.get(route.start_depot, 0.0)
    total -= duals.delta.get(route.end_depot, 0.0)
    return total


class RestrictedMaster:
    """Incrementally grown master problem with warm-started LP resolves.

    Columns get no explicit upper bound: any task-covering route is capped at
    one by its coverage rows and idle/relocation columns are capped by the
    depot equality rows, so the LP is unchanged while the duals stay free of
    bound contributions (which pricing relies on).
    """

    def __init__(self, instance: Instance, graph: TimeSpaceGraph):
        self.instance = instance
        self.graph = graph
        self.task_row: dict[int, int] = {}
        rows: list[tuple[str, float]] = []
        for t in sorted(t.id for t in instance.all_tasks()):
            self.task_row[t] = len(rows)
            rows.append((LE, 1.0))
        self.start_row: dict[int, int] = {}
        self.end_row: dict[int, int] = {}
        for d in sorted(dd.id for dd in instance.depots):
            self.start_row[d] = len(rows)
            rows.append((EQ, float(instance.depot(d).vehicles_start)))
        for d in sorted(dd.id for dd in instance.depots):
            self.end_row[d] = len(rows)
            rows.append((EQ, float(instance.depot(d).vehicles_end)))
        self.problem = MilpProblem(rows)
        self.routes: list[Route] = []
        self._identities: set = set()
        self._state = None
        self.last_objective: Optional[float] = None

    def add_route(self, start_depot: int, end_depot: int,
                  variant_ids: tuple[int, ...],
                  covered: tuple[tuple[int, int], ...],
                  saving_eur: float, dummy: bool = False) -> Optional[Route]:
        """Append a column; returns None for a duplicate (same coverage,
        depots and saving as an existing one).

        covered is a multiset: a task touched by two rides of the path gets
        coefficient 2, which keeps the column consistent with what pricing
        valued (its saving counts that leg twice) while the <=1 row makes it
        unusable in any integer solution."""
        covered = tuple(sorted(covered))
        identity = (start_depot, end_depot, covered, round(saving_eur, 9))
        if identity in self._identities:
            return None
        self._identities.add(identity)
        entries = [(self.task_row[task], 1.0) for _, task in covered]
        entries.append((self.start_row[start_depot], 1.0))
        entries.append((self.end_row[end_depot], 1.0))
        self.problem.add_column(saving_eur, entries, integer=True)
        route = Route(len(self.routes), start_depot, end_depot,
                      tuple(variant_ids), covered, saving_eur, dummy)
        self.routes.append(route)
        return route

    def solve_lp(self) -> tuple[float, DualPrices]:
        sol = milp.solve_lp(self.problem, state=self._state)
        if sol.status != "optimal":
            raise milp.MilpError(f"restricted master LP is {sol.status}")
        self._state = sol.state
        self.last_objective = sol.objective
        y = sol.duals
        duals = DualPrices(
            alpha={t: float(y[r]) for t, r in self.task_row.items()},
            beta={d: float(y[r]) for d, r in self.start_row.items()},
            delta={d: float(y[r]) for d, r in self.end_row.items()},
        )
        return sol.objective, duals

    def solve_ip(self, time_limit_s: Optional[float] = None) -> milp.IpResult:
        return milp.solve_ip(self.problem, time_limit_s=time_limit_s)


def init_master(instance: Instance, graph: TimeSpaceGraph) -> RestrictedMaster:
    """Master with one idle route per depot and one relocation dummy per
    ordered depot pair, which keeps the equality rows feasible for any depot
    inventory with matching totals."""
    if sum(d.vehicles_start for d in instance.depots) != \
            sum(d.vehicles_end for d in instance.depots):
        raise milp.MilpError("total start and end vehicle counts differ; "
                             "the depot equality rows are infeasible")
    master = RestrictedMaster(instance, graph)
    depot_ids = sorted(d.id for d in instance.depots)
    for d in depot_ids:
        master.add_route(d, d, (), (), 0.0)
    for d in depot_ids:
        for d2 in depot_ids:
            if d != d2:
                master.add_route(d, d2, (), (), -RELOCATION_PENALTY, dummy=True)
    return master


# --- pricing ---------------------------------------------------------------


@dataclass
class Candidate:
    reduced_saving: float
    start_depot: int
    end_depot: int
    variant_ids: tuple[int, ...]
    covered: tuple[tuple[int, int], ...]
    saving_eur: float


@dataclass
class PricingResult:
    start_depot: int
    best_per_end: dict[int, Candidate]
    candidates: list[Candidate]
    edges_relaxed: int


def _graph_arrays(graph: TimeSpaceGraph):
    arrays = getattr(graph, "_pricing_arrays", None)
    if arrays is not None:
        return arrays
    edges = graph.edges
    tails = np.array([e.tail for e in edges], dtype=np.int64)
    heads = np.array([e.head for e in edges], dtype=np.int64)
    base = np.array([e.saving if e.kind == RIDE else 0.0 for e in edges])
    task_ids = sorted({t for e in edges for t in e.covered_tasks})
    task_pos = {t: i for i, t in enumerate(task_ids)}
    flat_edge = []
    flat_task = []
    for e in edges:
        for t in e.covered_tasks:
            flat_edge.append(e.id)
            flat_task.append(task_pos[t])
    arrays = (
        tails, heads, np.array(graph.topo_edges, dtype=np.int64), base,
        np.array(flat_edge, dtype=np.int64), np.array(flat_task, dtype=np.int64),
        task_ids,
    )
    graph._pricing_arrays = arrays
    return arrays


def edge_weights(graph: TimeSpaceGraph, duals: DualPrices) -> np.ndarray:
    """Pricing weight per edge: saving minus coverage duals (0 for waiting)."""
    tails, heads, topo, base, flat_edge, flat_task, task_ids = _graph_arrays(graph)
    if len(task_ids) == 0 or len(flat_edge) == 0:
        return base.copy()
    alpha_vec = np.array([duals.alpha.get(t, 0.0) for t in task_ids])
    sums = np.bincount(flat_edge, weights=alpha_vec[flat_task],
                       minlength=len(graph.edges))
    return base - sums


def price(graph: TimeSpaceGraph, duals: DualPrices, start_depot: int,
          collect: str = "best", tol: float = TOL_RC,
          weights: Optional[np.ndarray] = None) -> PricingResult:
    """Label-setting longest path from (start_depot, sigma).

    One relaxation per edge in topological order (the exposed counter equals
    |E| on every call). Returns the best route per end depot; with
    collect='all' additionally every positive-reduced-saving candidate, one
    per distinct ride-edge set, extended to its sink along the waiting chain.
    """
    tails, heads, topo, base, _, _, _ = _graph_arrays(graph)
    w = weights if weights is not None else edge_weights(graph, duals)
    n = len(graph.nodes)
    neg_inf = -math.inf
    f = [neg_inf] * n
    parent = [-1] * n
    f[graph.source[start_depot]] = 0.0
    relaxed = 0
    edges = graph.edges
    for eid in topo:
        relaxed += 1
        ft = f[tails[eid]]
        if ft == neg_inf:
            continue
        cand = ft + w[eid]
        h = heads[eid]
        if cand > f[h] + 1e-12:
            f[h] = cand
            parent[h] = eid

    beta = duals.beta.get(start_depot, 0.0)

    def reconstruct(node: int) -> Candidate:
        vids: list[int] = []
        saving = 0.0
        covered: list = []
        v = node
        while parent[v] >= 0:
            e = edges[parent[v]]
            if e.kind == RIDE:
                vids.append(e.variant_id)
                saving += e.saving
                covered.extend(graph.variants[e.variant_id].covered)
            v = e.tail
        vids.reverse()
        end_d = graph.node_depot(node)
        rc = f[node] - beta - duals.delta.get(end_d, 0.0)
        # multiset on purpose: pricing valued a twice-touched task twice
        return Candidate(rc, start_depot, end_d, tuple(vids),
                         tuple(sorted(covered)), saving)

    best_per_end: dict[int, Candidate] = {}
    for d, sink in sorted(graph.sink.items()):
        if f[sink] > neg_inf:
            best_per_end[d] = reconstruct(sink)

    candidates: list[Candidate] = []
    if collect == "all":
        seen = set()
        for v in range(n):
            if f[v] == neg_inf:
                continue
            d = graph.node_depot(v)
            if f[v] - beta - duals.delta.get(d, 0.0) <= tol:
                continue
            cand = reconstruct(v)
            key = (frozenset(cand.variant_ids), d)
            if key in seen:
                continue
            seen.add(key)
            candidates.append(cand)
    else:
        candidates = [c for c in best_per_end.values() if c.reduced_saving > tol]

    return PricingResult(start_depot, best_per_end, candidates, relaxed)


# --- the column-generation loop ---------------------------------------------


@dataclass
class CgLimits:
    max_iterations: Optional[int] = None
    early_stop_iterations: Optional[int] = None
    time_limit_s: Optional[float] = None


@dataclass
class IterationLog:
    iteration: int
    lp_objective: float
    columns_added: int
    pricing_ms: float
    master_ms: float
    phase: str


@dataclass
class CgResult:
    lp_bound: float
    ip_value: float
    gap_pct: float
    iterations: int
    columns_generated: int
    log: list[IterationLog]
    plan: Optional[Plan]
    converged: bool
    certified: bool
    scheme: str
    heuristic: str
    ip_status: str
    pricing_s: float
    master_s: float
    ip_s: float
    total_s: float
    #: (edges relaxed, edge count of the graph priced) per pricing call
    edges_relaxed_per_call: list[tuple[int, int]] = field(default_factory=list)
    routes: list[Route] = field(default_factory=list)


def _chain_ok(variants, variant_ids: tuple[int, ...]) -> bool:
    """A route is real only if its variants chain in the original timeline:
    matching depots and non-decreasing depot times between consecutive rides.
    Reduced graphs can suggest chains that fail this; those are discarded."""
    prev = None
    for vid in variant_ids:
        v = variants[vid]
        if prev is not None and (prev.end_depot != v.start_depot
                                 or prev.arrive_s > v.depart_s):
            return False
        prev = v
    return True


def _reduced_graph(graph: TimeSpaceGraph, heuristic: str) -> Optional[TimeSpaceGraph]:
    if heuristic == "none":
        return None
    if heuristic == "heuredges":
        return drop_negative(graph)
    if heuristic == "heurprun":
        return reduce_prune(graph)
    if heuristic == "statespace":
        return reduce_statespace(graph)
    raise ValueError(f"unknown heuristic '{heuristic}'")


def _price_iteration(pgraph: TimeSpaceGraph, duals: DualPrices, scheme: str,
                     depot_ids: list[int],
                     relax_counts: list[tuple[int, int]]) -> list[Candidate]:
    weights = edge_weights(pgraph, duals)
    n_edges = len(pgraph.edges)
    picked: list[Candidate] = []
    if scheme == "first":
        for d0 in depot_ids:
            res = price(pgraph, duals, d0, collect="best", weights=weights)
            relax_counts.append((res.edges_relaxed, n_edges))
            hit = None
            for d1 in depot_ids:
                c = res.best_per_end.get(d1)
                if c is not None and c.reduced_saving > TOL_RC:
                    hit = c
                    break
            if hit is not None:
                picked.append(hit)
                break
        return picked

    results = []
    for d0 in depot_ids:
        res = price(pgraph, duals, d0,
                    collect="all" if scheme == "multiple" else "best",
                    weights=weights)
        relax_counts.append((res.edges_relaxed, n_edges))
        results.append(res)

    if scheme == "best":
        best = None
        for res in results:
            for d1 in depot_ids:
                c = res.best_per_end.get(d1)
                if c is None or c.reduced_saving <= TOL_RC:
                    continue
                if best is None or c.reduced_saving > best.reduced_saving + 1e-12:
                    best = c
        if best is not None:
            picked.append(best)
    elif scheme == "firstdep":
        for res in results:
            for d1 in depot_ids:
                c = res.best_per_end.get(d1)
                if c is not None and c.reduced_saving > TOL_RC:
                    picked.append(c)
    elif scheme == "multiple":
        for res in results:
            picked.extend(res.candidates)
        picked.sort(key=lambda c: (-c.reduced_saving, c.start_depot,
                                   c.end_depot, c.variant_ids))
    else:
        raise ValueError(f"unknown scheme '{scheme}'")
    return picked


def solve_restricted_ip(instance: Instance, graph: TimeSpaceGraph,
                        master: RestrictedMaster,
                        time_limit_s: Optional[float] = None
                        ) -> tuple[float, Optional[Plan], str]:
    """Integer-solve the master over the generated columns and decode the
    chosen routes into vehicle itineraries."""
    res = master.solve_ip(time_limit_s)
    if res.x is None:
        return math.nan, None, res.status
    routes: list[VehicleRoute] = []
    for j, route in enumerate(master.routes):
        count = int(round(res.x[j]))
        if count <= 0:
            continue
        for _ in range(count):
            routes.append(VehicleRoute(route.start_depot, route.end_depot,
                                       route.variant_ids, route.saving_eur,
                                       relocation_dummy=route.dummy))
    plan = build_plan(instance, graph.variants, routes)
    return float(res.objective), plan, res.status


def run(instance: Instance, scheme: str = "multiple", heuristic: str = "none",
        limits: Optional[CgLimits] = None, caps: Optional[Caps] = None,
        joint_k: bool = False, graph: Optional[TimeSpaceGraph] = None,
        variant_set: Optional[VariantSet] = None,
        initial_routes: Optional[Iterable[Route]] = None,
        shares_enabled: bool = True,
        ip_time_limit_s: Optional[float] = None) -> CgResult:
    """Delayed column generation followed by the restricted-master IP.

    Iterates: solve the restricted LP, price once per start depot on the
    current phase's graph, add columns according to the scheme, until no
    column prices above the threshold or a limit is hit. A heuristic phase
    never resumes once the exact phase has started.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme '{scheme}'")
    if heuristic not in HEURISTICS:
        raise ValueError(f"unknown heuristic '{heuristic}'")
    limits = limits or CgLimits()
    t_start = time.perf_counter()

    if graph is None:
        if variant_set is None:
            variant_set = enumerate_variants(instance, caps or Caps(),
                                             shares_enabled=shares_enabled,
                                             joint_k=joint_k)
        graph = build_graph(instance, variant_set)
    reduced = _reduced_graph(graph, heuristic)

    master = init_master(instance, graph)
    n_seed = len(master.routes)
    if initial_routes:
        for r in initial_routes:
            master.add_route(r.start_depot, r.end_depot, r.variant_ids,
                             r.covered, r.saving_eur, r.dummy)
    depot_ids = sorted(d.id for d in instance.depots)

    phase = "heuristic" if reduced is not None else "exact"
    log: list[IterationLog] = []
    relax_counts: list[tuple[int, int]] = []
    pricing_s = 0.0
    master_s = 0.0
    iterations = 0
    converged = False
    certified = False

    while True:
        t_m = time.perf_counter()
        lp_obj, duals = master.solve_lp()
        dt_master = time.perf_counter() - t_m
        master_s += dt_master
        iterations += 1

        pgraph = reduced if phase == "heuristic" else graph
        t_p = time.perf_counter()
        picked = _price_iteration(pgraph, duals, scheme, depot_ids, relax_counts)
        if phase == "heuristic":
            picked = [c for c in picked
                      if _chain_ok(graph.variants, c.variant_ids)]
        dt_pricing = time.perf_counter() - t_p
        pricing_s += dt_pricing

        added = 0
        for c in picked:
            if master.add_route(c.start_depot, c.end_depot, c.variant_ids,
                                c.covered, c.saving_eur) is not None:
                added += 1
        log.append(IterationLog(iterations, lp_obj, added,
                                round(dt_pricing * 1000.0, 3),
                                round(dt_master * 1000.0, 3), phase))

        if added == 0:
            if phase == "heuristic":
                phase = "exact"
                continue
            converged = True
            certified = not picked
            break
        if limits.early_stop_iterations and iterations >= limits.early_stop_iterations:
            break
        if limits.max_iterations and iterations >= limits.max_iterations:
            break
        if limits.time_limit_s and time.perf_counter() - t_start > limits.time_limit_s:
            break

    if not converged:
        # a limit stopped the loop after columns were added: refresh the LP
        # value over the final column set so lp_bound >= ip_value holds
        t_m = time.perf_counter()
        master.solve_lp()
        master_s += time.perf_counter() - t_m
    lp_bound = master.last_objective
    t0 = time.perf_counter()
    ip_value, plan, ip_status = solve_restricted_ip(instance, graph, master,
                                                    ip_time_limit_s)
    ip_s = time.perf_counter() - t0

    if math.isnan(ip_value):
        gap_pct = math.nan
    elif abs(ip_value) > 1e-9:
        gap_pct = 100.0 * (lp_bound - ip_value) / ip_value
    else:
        gap_pct = 0.0 if abs(lp_bound - ip_value) <= 1e-6 else math.nan

    return CgResult(
        lp_bound=lp_bound,
        ip_value=ip_value,
        gap_pct=gap_pct,
        iterations=iterations,
        columns_generated=len(master.routes) - n_seed,
        log=log,
        plan=plan,
        converged=converged,
        certified=certified,
        scheme=scheme,
        heuristic=heuristic,
        ip_status=ip_status,
        pricing_s=pricing_s,
        master_s=master_s,
        ip_s=ip_s,
        total_s=time.perf_counter() - t_start,
        edges_relaxed_per_call=relax_counts,
        routes=list(master.routes),
    )


def solve_single_assignment(instance: Instance, graph: TimeSpaceGraph,
                            base_variants, time_limit_s: Optional[float] = None
                            ) -> tuple[float, Optional[Plan], str]:
    """User-dependent baseline: a car, if assigned, is bound to one user's
    whole day, so routes are restricted to a single share-free trip."""
    master = init_master(instance, graph)
    for v in base_variants:
        master.add_route(v.start_depot, v.end_depot, (v.id,), v.covered,
                         v.saving_eur)
    return solve_restricted_ip(instance, graph, master, time_limit_s)
