"""Trip-variant enumeration and the time-space auxiliary graph.

Every depot-to-depot trip of a user, together with one optional co-rider
insertion per leg, becomes one ride edge between depot-time nodes. Waiting
edges chain consecutive times at each depot, so a path from some (d, sigma)
to some (d', tau) is exactly one vehicle's day. Three heuristic graph
reductions (time bucketing, per-user pruning, negative-edge removal) are
provided for heuristic pricing phases.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .model import (
    CAR,
    Instance,
    Task,
    UserTrip,
    leg_saving_plain,
    leg_saving_share,
    travel_time,
    trip_legs,
    trip_saving,
)


class GraphConstructionError(ValueError):
    pass


@dataclass
class Caps:
    """Enumeration limits; None disables a cap."""

    max_shares_per_trip: Optional[int] = 3
    max_variants_per_user: Optional[int] = 200


@dataclass(frozen=True)
class TripVariant:
    """One enumerated depot-to-depot trip with its ride-share insertions.

    covered lists (user_id, task_id) pairs: all of the driver's tasks plus,
    for each share, the real tasks at the rider leg's endpoints. shares lists
    (driver_leg_index, rider_id, rider_leg_index) triples.
    """

    id: int
    driver: int
    start_depot: int
    end_depot: int
    depart_s: int
    arrive_s: int
    saving_eur: float
    covered: tuple[tuple[int, int], ...]
    shares: tuple[tuple[int, int, int], ...]


@dataclass
class EnumStats:
    n_variants: int = 0
    truncated_users: tuple[int, ...] = ()
    feasibility_checks: int = 0


@dataclass
class VariantSet:
    by_user: dict[int, list[TripVariant]]
    stats: EnumStats

    @property
    def all(self) -> list[TripVariant]:
        return [v for vs in self.by_user.values() for v in vs]


def feasible_share(instance: Instance, driver: UserTrip, driver_leg: int,
                   rider: UserTrip, rider_leg: int) -> bool:
    """Can the driver cover the rider's leg inside their own leg by car?

    The rider's leg must connect two of their tasks (depot ends are not
    pick-up or drop-off points); any leg of the driver's trip may host it.
    Simulates the earliest car timeline: leave the leg origin at its earliest
    departure, detour to the pickup (waiting for the rider if early), drop the
    rider off by their deadline, then reach the driver's own destination in
    time. Coincident pickup/drop-off locations skip their detour leg.
    """
    if driver.user_id == rider.user_id:
        return False
    mots = instance.mots
    du, dv = trip_legs(instance, driver)[driver_leg]
    ru, rv = trip_legs(instance, rider)[rider_leg]
    if ru.is_depot_endpoint or rv.is_depot_endpoint:
        return False  # riders are served between two of their tasks only
    t = du.earliest_departure_s
    if du.loc != ru.loc:
        t += travel_time(du.loc, ru.loc, CAR, mots)
    t = max(t, ru.earliest_departure_s)
    t += travel_time(ru.loc, rv.loc, CAR, mots)
    if t > rv.latest_arrival_s:
        return False
    if rv.loc != dv.loc:
        t += travel_time(rv.loc, dv.loc, CAR, mots)
    return t <= dv.latest_arrival_s


@dataclass(frozen=True)
class _LegOption:
    saving: float
    rider_id: int = -1
    rider_leg: int = -1
    rider_u: Optional[Task] = None
    rider_v: Optional[Task] = None

    @property
    def is_share(self) -> bool:
        return self.rider_id >= 0


def _first_leg_departure(instance: Instance, du: Task, dv: Task,
                         opt: _LegOption) -> int:
    """Latest depot departure that still meets every deadline on the first leg."""
    mots = instance.mots
    if not opt.is_share:
        return dv.latest_arrival_s - travel_time(du.loc, dv.loc, CAR, mots)
    ru, rv = opt.rider_u, opt.rider_v
    t = dv.latest_arrival_s
    if rv.loc != dv.loc:
        t -= travel_time(rv.loc, dv.loc, CAR, mots)
    t = min(t, rv.latest_arrival_s)
    t -= travel_time(ru.loc, rv.loc, CAR, mots)
    if du.loc != ru.loc:
        t -= travel_time(du.loc, ru.loc, CAR, mots)
    return t


def _last_leg_arrival(instance: Instance, du: Task, dv: Task,
                      opt: _LegOption) -> int:
    """Arrival time at the end depot when leaving the last task on time."""
    mots = instance.mots
    t = du.earliest_departure_s
    if not opt.is_share:
        return t + travel_time(du.loc, dv.loc, CAR, mots)
    ru, rv = opt.rider_u, opt.rider_v
    if du.loc != ru.loc:
        t += travel_time(du.loc, ru.loc, CAR, mots)
    t = max(t, ru.earliest_departure_s)
    t += travel_time(ru.loc, rv.loc, CAR, mots)
    if rv.loc != dv.loc:
        t += travel_time(rv.loc, dv.loc, CAR, mots)
    return t


def enumerate_variants(instance: Instance, caps: Caps = None,
                       shares_enabled: bool = True,
                       joint_k: bool = False) -> VariantSet:
    """Enumerate, per user, the share-free base trip plus every capped
    combination of feasible one-rider-per-leg insertions.

    Variants are emitted deterministically: the base variant first, then the
    cross product of per-leg options with higher-saving options preferred
    (ties broken by rider id, then rider leg). Hitting a cap truncates and is
    recorded in the stats, never an error.
    """
    caps = caps or Caps()
    stats = EnumStats()
    truncated: list[int] = []
    by_user: dict[int, list[TripVariant]] = {}
    next_id = 0

    legs_of = {u.user_id: trip_legs(instance, u) for u in instance.users}

    for driver in instance.users:
        legs = legs_of[driver.user_id]
        options: list[list[_LegOption]] = []
        for leg_idx, (du, dv) in enumerate(legs):
            base = _LegOption(leg_saving_plain(driver, du, dv,
                                               instance.mots, instance.costs))
            shares: list[_LegOption] = []
            if shares_enabled:
                for rider in instance.users:
                    if rider.user_id == driver.user_id:
                        continue
                    for r_idx, (ru, rv) in enumerate(legs_of[rider.user_id]):
                        stats.feasibility_checks += 1
                        if not feasible_share(instance, driver, leg_idx,
                                              rider, r_idx):
                            continue
                        sav = leg_saving_share(driver, du, dv, rider, ru, rv,
                                               instance.mots, instance.costs,
                                               joint_k=joint_k)
                        shares.append(_LegOption(sav, rider.user_id, r_idx, ru, rv))
            shares.sort(key=lambda o: (-o.saving, o.rider_id, o.rider_leg))
            options.append([base] + shares)

        variants: list[TripVariant] = []
        max_v = caps.max_variants_per_user
        max_s = caps.max_shares_per_trip
        was_truncated = False
        for combo in itertools.product(*options):
            n_shares = sum(1 for o in combo if o.is_share)
            if max_s is not None and n_shares > max_s:
                continue
            if n_shares > 0:
                riders_used = {(o.rider_id, o.rider_leg) for o in combo if o.is_share}
                if len(riders_used) != n_shares:
                    continue  # same rider leg twice in one trip
            if max_v is not None and len(variants) >= max_v:
                was_truncated = True
                break
            variants.append(_make_variant(instance, driver, legs, combo, next_id))
            next_id += 1
        if was_truncated:
            truncated.append(driver.user_id)
        by_user[driver.user_id] = variants

    stats.n_variants = next_id
    stats.truncated_users = tuple(truncated)
    return VariantSet(by_user, stats)


def _make_variant(instance: Instance, driver: UserTrip,
                  legs: Sequence[tuple[Task, Task]],
                  combo: Sequence[_LegOption], variant_id: int) -> TripVariant:
    depart = _first_leg_departure(instance, *legs[0], combo[0])
    arrive = _last_leg_arrival(instance, *legs[-1], combo[-1])
    covered = {(driver.user_id, t.id) for t in driver.tasks}
    shares: list[tuple[int, int, int]] = []
    for leg_idx, opt in enumerate(combo):
        if not opt.is_share:
            continue
        shares.append((leg_idx, opt.rider_id, opt.rider_leg))
        for t in (opt.rider_u, opt.rider_v):
            if not t.is_depot_endpoint:
                covered.add((opt.rider_id, t.id))
    return TripVariant(
        id=variant_id,
        driver=driver.user_id,
        start_depot=driver.start_depot,
        end_depot=driver.end_depot,
        depart_s=depart,
        arrive_s=arrive,
        saving_eur=trip_saving(o.saving for o in combo),
        covered=tuple(sorted(covered)),
        shares=tuple(shares),
    )


def variant_leg_savings(instance: Instance, variant: TripVariant) -> list[float]:
    """Recompute the per-leg savings of a variant from scratch (for checks)."""
    driver = instance.user(variant.driver)
    legs = trip_legs(instance, driver)
    share_by_leg = {leg: (rid, rleg) for leg, rid, rleg in variant.shares}
    out = []
    for idx, (du, dv) in enumerate(legs):
        if idx in share_by_leg:
            rid, rleg = share_by_leg[idx]
            rider = instance.user(rid)
            ru, rv = trip_legs(instance, rider)[rleg]
            out.append(leg_saving_share(driver, du, dv, rider, ru, rv,
                                        instance.mots, instance.costs))
        else:
            out.append(leg_saving_plain(driver, du, dv,
                                        instance.mots, instance.costs))
    return out


# --- time-space graph -------------------------------------------------------

RIDE = "ride"
WAIT = "wait"


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    kind: str
    saving: float = 0.0
    variant_id: Optional[int] = None
    covered_tasks: tuple[int, ...] = ()


@dataclass
class TimeSpaceGraph:
    """DAG over depot-time nodes: ride edges (one per variant) plus the
    waiting chain of every depot. Edges in topo_edges are sorted by tail
    time, then tail depot, then edge id, which is a valid relaxation order
    because every edge strictly increases time."""

    nodes: list[tuple[int, int]]
    edges: list[Edge]
    source: dict[int, int]
    sink: dict[int, int]
    topo_edges: list[int]
    out_edges: list[list[int]]
    in_edges: list[list[int]]
    variants: dict[int, TripVariant]
    sigma_s: int
    tau_s: int

    @property
    def ride_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.kind == RIDE]

    @property
    def waiting_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.kind == WAIT]

    def node_depot(self, idx: int) -> int:
        return self.nodes[idx][0]

    def node_time(self, idx: int) -> int:
        return self.nodes[idx][1]


def _assemble(depot_ids: Sequence[int], sigma: int, tau: int,
              ride_specs: list[tuple[tuple[int, int], tuple[int, int], TripVariant, float]],
              variants: dict[int, TripVariant],
              extra_nodes: Iterable[tuple[int, int]] = ()) -> TimeSpaceGraph:
    keys = {(d, sigma) for d in depot_ids} | {(d, tau) for d in depot_ids}
    keys.update(extra_nodes)
    for tail, head, _, _ in ride_specs:
        keys.add(tail)
        keys.add(head)
    nodes = sorted(keys, key=lambda k: (k[1], k[0]))
    index = {k: i for i, k in enumerate(nodes)}

    edges: list[Edge] = []
    for tail, head, var, saving in ride_specs:
        covered = tuple(sorted({task for _, task in var.covered}))
        edges.append(Edge(len(edges), index[tail], index[head], RIDE,
                          saving, var.id, covered))
    for d in depot_ids:
        times = sorted({t for dd, t in keys if dd == d})
        for t0, t1 in zip(times[:-1], times[1:]):
            edges.append(Edge(len(edges), index[(d, t0)], index[(d, t1)], WAIT))

    out_edges = [[] for _ in nodes]
    in_edges = [[] for _ in nodes]
    for e in edges:
        out_edges[e.tail].append(e.id)
        in_edges[e.head].append(e.id)
    topo = sorted(
        (e.id for e in edges),
        key=lambda eid: (nodes[edges[eid].tail][1], nodes[edges[eid].tail][0], eid),
    )
    return TimeSpaceGraph(
        nodes=nodes,
        edges=edges,
        source={d: index[(d, sigma)] for d in depot_ids},
        sink={d: index[(d, tau)] for d in depot_ids},
        topo_edges=topo,
        out_edges=out_edges,
        in_edges=in_edges,
        variants=variants,
        sigma_s=sigma,
        tau_s=tau,
    )


def build_graph(instance: Instance,
                variants: VariantSet | Iterable[TripVariant]) -> TimeSpaceGraph:
    """Assemble the auxiliary graph from enumerated variants.

    One ride edge per variant between (start_depot, depart) and
    (end_depot, arrive); parallel edges are kept (it is a multigraph), and a
    variant whose times leave [sigma, tau] is a construction error.
    """
    flat = variants.all if isinstance(variants, VariantSet) else list(variants)
    sigma, tau = instance.sigma_s, instance.tau_s
    specs = []
    vmap = {}
    for v in flat:
        if not (sigma <= v.depart_s < v.arrive_s <= tau):
            raise GraphConstructionError(
                f"variant {v.id} times [{v.depart_s}, {v.arrive_s}] leave the "
                f"horizon [{sigma}, {tau}]"
            )
        specs.append(((v.start_depot, v.depart_s), (v.end_depot, v.arrive_s),
                      v, v.saving_eur))
        vmap[v.id] = v
    return _assemble([d.id for d in instance.depots], sigma, tau, specs, vmap)


def reduce_statespace(graph: TimeSpaceGraph, bucket_s: int = 600) -> TimeSpaceGraph:
    """Merge same-depot nodes falling in one time bucket; the merged node
    takes the latest original time in the bucket. Among parallel edges that
    collapse onto the same endpoints only the highest-saving one survives."""
    depot_ids = sorted(graph.source)
    merged_time: dict[tuple[int, int], int] = {}
    buckets: dict[tuple[int, int], int] = {}
    for d, t in graph.nodes:
        if t in (graph.sigma_s, graph.tau_s):
            continue
        key = (d, t // bucket_s)
        buckets[key] = max(buckets.get(key, t), t)
    for d, t in graph.nodes:
        if t in (graph.sigma_s, graph.tau_s):
            merged_time[(d, t)] = t
        else:
            merged_time[(d, t)] = buckets[(d, t // bucket_s)]

    best: dict[tuple, tuple] = {}
    for e in graph.ride_edges:
        td, tt = graph.nodes[e.tail]
        hd, ht = graph.nodes[e.head]
        tail = (td, merged_time[(td, tt)])
        head = (hd, merged_time[(hd, ht)])
        if tail[1] >= head[1]:
            continue  # would no longer strictly increase in time
        key = (tail, head)
        var = graph.variants[e.variant_id]
        if key not in best or (e.saving, -var.id) > (best[key][3], -best[key][2].id):
            best[key] = (tail, head, var, e.saving)

    specs = sorted(best.values(), key=lambda s: s[2].id)
    vmap = {var.id: var for _, _, var, _ in specs}
    return _assemble(depot_ids, graph.sigma_s, graph.tau_s, specs, vmap)


def reduce_prune(graph: TimeSpaceGraph) -> TimeSpaceGraph:
    """Keep, per user, only the highest-saving ride edge and collapse that
    user's departure/arrival times onto the times of their first variant."""
    depot_ids = sorted(graph.source)
    by_driver: dict[int, list[Edge]] = {}
    for e in graph.ride_edges:
        by_driver.setdefault(graph.variants[e.variant_id].driver, []).append(e)

    specs = []
    vmap = {}
    for driver in sorted(by_driver):
        edges = by_driver[driver]
        first = min(edges, key=lambda e: e.variant_id)
        kept = max(edges, key=lambda e: (e.saving, -e.variant_id))
        var = graph.variants[kept.variant_id]
        tail = graph.nodes[first.tail]
        head = graph.nodes[first.head]
        specs.append((tail, head, var, kept.saving))
        vmap[var.id] = var
    return _assemble(depot_ids, graph.sigma_s, graph.tau_s, specs, vmap)


def drop_negative(graph: TimeSpaceGraph) -> TimeSpaceGraph:
    """Remove ride edges with negative saving; waiting chain stays intact."""
    depot_ids = sorted(graph.source)
    specs = []
    vmap = {}
    for e in graph.ride_edges:
        if e.saving < 0:
            continue
        var = graph.variants[e.variant_id]
        specs.append((graph.nodes[e.tail], graph.nodes[e.head], var, e.saving))
        vmap[var.id] = var
    return _assemble(depot_ids, graph.sigma_s, graph.tau_s, specs, vmap,
                     extra_nodes=graph.nodes)


def dump_edges(graph: TimeSpaceGraph, path):
    """Debug CSV of the edge list (ride edges first, then waiting edges)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tail_depot", "tail_s", "head_depot", "head_s",
                    "variant_id", "saving_eur"])
        for e in graph.edges:
            if e.kind != RIDE:
                continue
            td, tt = graph.nodes[e.tail]
            hd, ht = graph.nodes[e.head]
            w.writerow([td, tt, hd, ht, e.variant_id, f"{e.saving:.6f}"])
        for e in graph.edges:
            if e.kind != WAIT:
                continue
            td, tt = graph.nodes[e.tail]
            hd, ht = graph.nodes[e.head]
            w.writerow([td, tt, hd, ht, "", "0.000000"])
