"""Fleet sizing and what sharing buys: the savings curve flattens quickly in
the fleet size, and the full shared system beats both restricted baselines
(car-sharing without ride-sharing, and one-car-per-user assignment).
"""

from mmcrp import Caps, GenParams, build_graph, enumerate_variants, generate
from mmcrp import colgen
from mmcrp.cli import _with_fleet, compare_baselines

inst = generate(GenParams(n_users=20, seed=1))
variants = enumerate_variants(inst)

print("fleet sweep (u=20):")
print(f"{'m':>3} {'savings':>12} {'rides/car':>10} {'shares/ride':>12}")
prev = 0.0
for m in (0, 1, 2, 4, 8, 12):
    inst_m = _with_fleet(inst, m)
    r = colgen.run(inst_m, graph=build_graph(inst_m, variants))
    delta = r.ip_value - prev
    prev = r.ip_value
    plan = r.plan
    print(f"{m:>3} {r.ip_value:>12.2f} {plan.rides_per_car:>10.2f} "
          f"{plan.shares_per_ride:>12.2f}   (+{delta:.2f})")

print("\nbaselines at m=4:")
doc = compare_baselines(_with_fleet(inst, 4), Caps())
print(f"  full system     : {doc['mmcrp_ip']:12.2f} EUR")
print(f"  car-sharing only: {doc['carshare_ip']:12.2f} EUR "
      f"(ratio {doc['ratio_car_sharing']:.3f})")
print(f"  user-dependent  : {doc['userdep_ip']:12.2f} EUR "
      f"(ratio {doc['ratio_user_dependent']:.3f})")
