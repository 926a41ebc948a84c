"""The time-space auxiliary graph and its heuristic reductions.

Nodes are (depot, time) pairs; every trip variant is one ride edge, and
waiting edges chain consecutive times at a depot. A vehicle's feasible day
is exactly a path from some (depot, sigma) to some (depot, tau), so all
timing constraints live in the graph structure.
"""

from mmcrp import (
    GenParams,
    build_graph,
    drop_negative,
    dump_edges,
    enumerate_variants,
    generate,
    reduce_prune,
    reduce_statespace,
)

inst = generate(GenParams(n_users=15, seed=2))
graph = build_graph(inst, enumerate_variants(inst))


def describe(name, g):
    neg = sum(1 for e in g.ride_edges if e.saving < 0)
    print(f"{name:>12}: {len(g.nodes):5d} nodes, {len(g.ride_edges):5d} ride edges "
          f"({neg} negative), {len(g.waiting_edges):5d} waiting edges")


describe("full", graph)
describe("statespace", reduce_statespace(graph))   # 10-minute time buckets
describe("heurprun", reduce_prune(graph))          # one best ride per user
describe("heuredges", drop_negative(graph))        # drop money-losing rides

# sanity: every edge moves forward in time (the graph is a DAG)
assert all(graph.node_time(e.tail) < graph.node_time(e.head)
           for e in graph.edges)

dump_edges(graph, "graph_edges.csv")
print("\nwrote graph_edges.csv (tail_depot, tail_s, head_depot, head_s, "
      "variant_id, saving_eur)")
