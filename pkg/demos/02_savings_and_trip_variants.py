"""From per-leg savings to enumerated trip variants.

The objective currency is the saving of serving a leg by (shared) car
instead of the cheapest other mode the user accepts. Every combination of
one-rider-per-leg detours that fits the time windows becomes one trip
variant; the variant's saving is the sum of its per-leg savings, and it
covers the driver's tasks plus the rider tasks at each shared leg's ends.
"""

from mmcrp import Caps, GenParams, enumerate_variants, generate
from mmcrp.model import leg_saving_plain, trip_legs
from mmcrp.ridegraph import variant_leg_savings

inst = generate(GenParams(n_users=10, seed=1))
vs = enumerate_variants(inst, Caps(max_shares_per_trip=2,
                                   max_variants_per_user=50))

print(f"{len(inst.users)} trips -> {len(vs.all)} variants "
      f"({vs.stats.feasibility_checks} share feasibility checks)")

# base (share-free) savings can be negative: the car is not always cheapest
base = [v for v in vs.all if not v.shares]
neg = [v for v in base if v.saving_eur < 0]
print(f"base variants: {len(base)}, of which {len(neg)} lose money by car")

# the densest driver
busiest = max(vs.by_user, key=lambda u: len(vs.by_user[u]))
print(f"\nuser {busiest} has {len(vs.by_user[busiest])} variants:")
for v in vs.by_user[busiest][:8]:
    tag = ", ".join(f"leg{leg}<-rider{r}/{rl}" for leg, r, rl in v.shares) or "no shares"
    print(f"  variant {v.id}: saving {v.saving_eur:8.2f} EUR "
          f"[{v.depart_s}s -> {v.arrive_s}s] {tag}")

# per-leg decomposition of the best variant
best = max(vs.all, key=lambda v: v.saving_eur)
print(f"\nbest variant overall (user {best.driver}, {best.saving_eur:.2f} EUR):")
for i, s in enumerate(variant_leg_savings(inst, best)):
    print(f"  leg {i}: {s:+9.2f} EUR")
