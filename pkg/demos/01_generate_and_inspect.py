"""Generate a benchmark company and look at what a day of demand looks like.

Each instance is one company: a couple of offices with shared cars, and
employees whose meetings form fixed depot-to-depot task sequences. A user
who returns to an office mid-day is split into separate "simple trips", so
the user count you ask for is a lower bound on the trips you get.
"""

import collections

from mmcrp import GenParams, generate, write_instance
from mmcrp.model import CAR, cheapest_other_mot, extended_sequence, travel_time

params = GenParams(n_users=20, n_depots=2, vehicles_per_depot=2, seed=0)
inst = generate(params)

print(f"depots: {len(inst.depots)}, fleet: {inst.fleet_size}")
print(f"simple trips: {len(inst.users)} (from {params.n_users} users)")
print(f"tasks: {len(inst.all_tasks())}")

hist = collections.Counter(len(u.tasks) for u in inst.users)
print("tasks per trip:", dict(sorted(hist.items())))

# what one trip looks like
u = inst.users[0]
print(f"\ntrip of user {u.user_id}: depot {u.start_depot} -> depot {u.end_depot}, "
      f"modes {sorted(u.allowed_mots)}")
seq = extended_sequence(inst, u)
for a, b in zip(seq[:-1], seq[1:]):
    tt = travel_time(a.loc, b.loc, CAR, inst.mots)
    mot, cost = cheapest_other_mot(u, a.loc, b.loc, a.earliest_departure_s,
                                   b.latest_arrival_s, inst.mots, inst.costs)
    def name(t):
        return f"depot@({t.loc.x_km:.1f},{t.loc.y_km:.1f})" if t.is_depot_endpoint \
            else f"task {t.id}"
    print(f"  {name(a):>22} -> {name(b):<22} car {tt:>5d}s | "
          f"fallback {mot:<6} {cost:8.2f} EUR")

write_instance(inst, "E_20_0.json")
print("\nwrote E_20_0.json")
