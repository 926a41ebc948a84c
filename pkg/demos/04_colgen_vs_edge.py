"""Solve one instance three ways: exhaustive oracle, direct edge MILP, and
column generation, then compare bounds and plans.

The edge formulation is exact but only lives at desk scale; column
generation prices vehicle days as longest paths in the DAG and closes the
gap from both sides: the converged LP is an upper bound, the restricted IP
a feasible plan.
"""

from mmcrp import Caps, GenParams, build_graph, enumerate_variants, generate
from mmcrp import colgen
from mmcrp.edgeform import solve_edge
from mmcrp.oracle import brute_force

# small enough for the oracle
inst = generate(GenParams(n_users=3, seed=11, tasks_max=2,
                          vehicles_per_depot=1))
graph = build_graph(inst, enumerate_variants(
    inst, Caps(max_shares_per_trip=1, max_variants_per_user=4)))

oracle_value = brute_force(inst, graph)
edge = solve_edge(graph, inst)
cg = colgen.run(inst, graph=graph)

print(f"oracle  : {oracle_value:12.4f} EUR")
print(f"edge IP : {edge.objective:12.4f} EUR  ({edge.status})")
print(f"CG LP   : {cg.lp_bound:12.4f} EUR  (upper bound)")
print(f"CG IP   : {cg.ip_value:12.4f} EUR  (gap {cg.gap_pct:.4f}%)")

print("\nplan:")
for route in cg.plan.routes:
    rides = " -> ".join(f"variant {v}" for v in route.variant_ids) or "idle"
    print(f"  car {route.start_depot} -> {route.end_depot}: {rides}")
for task, (mot, cost) in sorted(cg.plan.uncovered.items()):
    print(f"  task {task}: falls back to {mot} ({cost:.2f} EUR)")

# a mid-size run, all pricing schemes agree on the LP bound
inst = generate(GenParams(n_users=20, seed=0))
graph = build_graph(inst, enumerate_variants(inst))
print("\nu=20 pricing schemes:")
for scheme in colgen.SCHEMES:
    r = colgen.run(inst, scheme=scheme, graph=graph)
    print(f"  {scheme:9s}: lp={r.lp_bound:12.4f} ip={r.ip_value:12.4f} "
          f"iters={r.iterations:3d} columns={r.columns_generated:4d} "
          f"{r.total_s:5.2f}s")
