"""Synthetic instance generation and the JSON instance file format.

Companies are drawn on a square region: depots sit at fixed quantile
positions, users get a day of meetings each, and a user who returns to a
depot mid-day is split into separate artificial users (one per simple
depot-to-depot trip). Meeting start times are synthetic: uniform over the
workday with a mid-morning bump.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import (
    CAR,
    OTHER_MOTS,
    CostParams,
    Depot,
    Instance,
    Location,
    MotParams,
    Task,
    UserTrip,
    ValidationError,
    default_mots,
    travel_time,
)


class GenerationError(ValueError):
    """Raised when the requested parameters cannot produce a valid instance."""


class InstanceFormatError(ValueError):
    """Raised when an instance file is malformed; the message names the field."""


@dataclass
class GenParams:
    """Knobs of the generator; defaults give a Vienna-scale 20x20 km workday."""

    n_users: int
    n_depots: int = 2
    vehicles_per_depot: int | Sequence[int] = 2
    seed: int = 0
    region_km: float = 20.0
    tasks_min: int = 1
    tasks_max: int = 4
    sigma_s: int = 6 * 3600
    tau_s: int = 20 * 3600
    buffer_at_depot_s: int = 3600
    max_leg_time_s: int = 3600
    service_min_s: int = 1800
    service_max_s: int = 7200
    cluster_prob: float = 0.3
    cluster_radius_km: float = 1.0
    other_mot_prob: float = 0.8
    # P(a user makes 1, 2, 3 simple trips); mean ~1.55 trips per user.
    simple_trip_probs: tuple[float, float, float] = (0.55, 0.35, 0.10)
    same_depot_prob: float = 0.9
    car_emission_t_per_km: float = 0.0002
    costs: CostParams = field(default_factory=CostParams)

    def validate(self):
        if self.n_users < 1:
            raise GenerationError("n_users must be >= 1")
        if self.n_depots < 1:
            raise GenerationError("n_depots must be >= 1")
        if self.region_km <= 0:
            raise GenerationError("region_km must be > 0 (zero-area region)")
        if self.tasks_min < 1 or self.tasks_max < self.tasks_min:
            raise GenerationError("tasks_min/tasks_max malformed")
        if self.sigma_s >= self.tau_s:
            raise GenerationError("workday start must precede its end")
        if not isinstance(self.vehicles_per_depot, int):
            if len(self.vehicles_per_depot) != self.n_depots:
                raise GenerationError("vehicles_per_depot list length != n_depots")
            if any(v < 0 for v in self.vehicles_per_depot):
                raise GenerationError("vehicle counts must be >= 0")
        elif self.vehicles_per_depot < 0:
            raise GenerationError("vehicles_per_depot must be >= 0")


def _depot_locations(params: GenParams) -> list[Location]:
    # Fixed quantiles of the region diagonal; deterministic, seed-independent.
    r = params.region_km
    n = params.n_depots
    return [Location((i + 1) / (n + 1) * r, (i + 1) / (n + 1) * r) for i in range(n)]


def _max_car_leg_km(params: GenParams, mots) -> float:
    car = mots[CAR]
    return (params.max_leg_time_s - car.extra_time_s) * car.speed_kmh / 3600.0 / car.sloping


def _draw_location(rng, params: GenParams, prev_loc: Location, pool: list[Location],
                   max_km: float) -> Location:
    r = params.region_km
    for _ in range(64):
        if pool and rng.random() < params.cluster_prob:
            anchor = pool[int(rng.integers(len(pool)))]
            ang = rng.random() * 2 * math.pi
            rad = math.sqrt(rng.random()) * params.cluster_radius_km
            x = min(max(anchor.x_km + rad * math.cos(ang), 0.0), r)
            y = min(max(anchor.y_km + rad * math.sin(ang), 0.0), r)
        else:
            x = rng.random() * r
            y = rng.random() * r
        loc = Location(x, y)
        if math.hypot(loc.x_km - prev_loc.x_km, loc.y_km - prev_loc.y_km) <= max_km:
            return loc
    return prev_loc  # box smaller than reach; degenerate but always feasible


def generate(params: GenParams) -> Instance:
    """Draw one deterministic instance for the given parameter set and seed."""
    params.validate()
    rng = np.random.default_rng(params.seed)
    mots = default_mots(params.car_emission_t_per_km)
    costs = params.costs
    sigma, tau = params.sigma_s, params.tau_s

    depot_locs = _depot_locations(params)
    if isinstance(params.vehicles_per_depot, int):
        vehicles = [params.vehicles_per_depot] * params.n_depots
    else:
        vehicles = list(params.vehicles_per_depot)
    depots = tuple(
        Depot(i, depot_locs[i], vehicles[i], vehicles[i]) for i in range(params.n_depots)
    )

    max_km = _max_car_leg_km(params, mots)
    trip_counts = np.arange(1, 4)
    users: list[UserTrip] = []
    task_pool: list[Location] = []  # other users' meeting points, for clustering
    next_user = 0
    next_task = 0

    for _ in range(params.n_users):
        a_depot = int(rng.integers(params.n_depots))
        if params.n_depots > 1 and rng.random() >= params.same_depot_prob:
            b_depot = int(rng.choice([d for d in range(params.n_depots) if d != a_depot]))
        else:
            b_depot = a_depot
        n_trips = int(rng.choice(trip_counts, p=params.simple_trip_probs))
        allowed = frozenset(
            [CAR] + [k for k in OTHER_MOTS if rng.random() < params.other_mot_prob]
        )

        own_locs: list[Location] = []
        cursor = sigma  # earliest possible departure from the depot
        for trip_idx in range(n_trips):
            start_id = a_depot
            end_id = b_depot if trip_idx == n_trips - 1 else a_depot
            start_loc, end_loc = depot_locs[start_id], depot_locs[end_id]
            n_tasks = int(rng.integers(params.tasks_min, params.tasks_max + 1))

            tasks: list[Task] = []
            prev_loc, prev_ed = start_loc, cursor
            for k in range(n_tasks):
                loc = _draw_location(rng, params, prev_loc, task_pool, max_km)
                tt = travel_time(prev_loc, loc, CAR, mots)
                if k == 0 and trip_idx == 0:
                    slack = int(rng.triangular(0, 2.5 * 3600, 5.5 * 3600))
                else:
                    slack = int(rng.integers(300, 2700))
                latest_arrival = prev_ed + tt + slack
                duration = int(rng.integers(params.service_min_s, params.service_max_s + 1))
                earliest_departure = latest_arrival + duration
                # keep room to return to the depot within the workday
                back = travel_time(loc, end_loc, CAR, mots)
                if earliest_departure + back > tau:
                    break
                tasks.append(Task(next_task, next_user, len(tasks) + 1, loc,
                                  latest_arrival, earliest_departure))
                next_task += 1
                prev_loc, prev_ed = loc, earliest_departure
            if not tasks:
                continue  # no room left in the day; drop this simple trip
            users.append(UserTrip(next_user, start_id, end_id, tuple(tasks), allowed))
            next_user += 1
            own_locs.extend(t.loc for t in tasks)
            cursor = prev_ed + travel_time(prev_loc, end_loc, CAR, mots) \
                + params.buffer_at_depot_s
        task_pool.extend(own_locs)

    if not users:
        raise GenerationError(
            "no user trip fits the workday; widen the horizon or shrink travel times"
        )

    instance = Instance(depots, tuple(users), mots, costs, sigma, tau)
    instance.validate()
    return instance


# --- instance file format -------------------------------------------------

_MOT_FIELDS = ("speed_kmh", "extra_time_s", "sloping", "per_km_cost_eur",
               "emission_t_per_km")


def instance_to_dict(instance: Instance) -> dict:
    return {
        "horizon": {"sigma_s": instance.sigma_s, "tau_s": instance.tau_s},
        "mots": [
            {"mot": p.mot, "speed_kmh": p.speed_kmh, "extra_time_s": p.extra_time_s,
             "sloping": p.sloping, "per_km_cost_eur": p.per_km_cost_eur,
             "emission_t_per_km": p.emission_t_per_km}
            for _, p in sorted(instance.mots.items())
        ],
        "costs": {
            "wage_eur_per_h": instance.costs.wage_eur_per_h,
            "co2_eur_per_t": instance.costs.co2_eur_per_t,
            "penalty_eur": instance.costs.penalty_eur,
        },
        "depots": [
            {"id": d.id, "x_km": d.loc.x_km, "y_km": d.loc.y_km,
             "vehicles_start": d.vehicles_start, "vehicles_end": d.vehicles_end}
            for d in instance.depots
        ],
        "users": [
            {"id": u.user_id, "start_depot": u.start_depot, "end_depot": u.end_depot,
             "allowed_mots": sorted(u.allowed_mots),
             "tasks": [
                 {"x_km": t.loc.x_km, "y_km": t.loc.y_km,
                  "latest_arrival_s": t.latest_arrival_s,
                  "earliest_departure_s": t.earliest_departure_s}
                 for t in u.tasks
             ]}
            for u in instance.users
        ],
    }


def write_instance(instance: Instance, path):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise InstanceFormatError(f"{where}: missing key '{key}'")
    return mapping[key]


def instance_from_dict(doc: dict) -> Instance:
    horizon = _require(doc, "horizon", "instance")
    sigma = int(_require(horizon, "sigma_s", "horizon"))
    tau = int(_require(horizon, "tau_s", "horizon"))

    mots: dict[str, MotParams] = {}
    for i, entry in enumerate(_require(doc, "mots", "instance")):
        name = _require(entry, "mot", f"mots[{i}]")
        kwargs = {f: _require(entry, f, f"mots[{i}]") for f in _MOT_FIELDS}
        try:
            mots[name] = MotParams(name, **kwargs)
        except ValidationError as exc:
            raise InstanceFormatError(f"mots[{i}]: {exc}") from exc

    costs_doc = _require(doc, "costs", "instance")
    costs = CostParams(
        wage_eur_per_h=_require(costs_doc, "wage_eur_per_h", "costs"),
        co2_eur_per_t=_require(costs_doc, "co2_eur_per_t", "costs"),
        penalty_eur=_require(costs_doc, "penalty_eur", "costs"),
    )

    depots = []
    for i, entry in enumerate(_require(doc, "depots", "instance")):
        where = f"depots[{i}]"
        depots.append(Depot(
            int(_require(entry, "id", where)),
            Location(float(_require(entry, "x_km", where)),
                     float(_require(entry, "y_km", where))),
            int(_require(entry, "vehicles_start", where)),
            int(_require(entry, "vehicles_end", where)),
        ))

    users = []
    next_task = 0
    for i, entry in enumerate(_require(doc, "users", "instance")):
        where = f"users[{i}]"
        user_id = int(_require(entry, "id", where))
        tasks = []
        for j, tdoc in enumerate(_require(entry, "tasks", where)):
            twhere = f"{where}.tasks[{j}]"
            task = Task(
                next_task, user_id, j + 1,
                Location(float(_require(tdoc, "x_km", twhere)),
                         float(_require(tdoc, "y_km", twhere))),
                int(_require(tdoc, "latest_arrival_s", twhere)),
                int(_require(tdoc, "earliest_departure_s", twhere)),
            )
            try:
                task.validate()
            except ValidationError as exc:
                raise InstanceFormatError(f"{twhere}: {exc}") from exc
            tasks.append(task)
            next_task += 1
        users.append(UserTrip(
            user_id,
            int(_require(entry, "start_depot", where)),
            int(_require(entry, "end_depot", where)),
            tuple(tasks),
            frozenset(_require(entry, "allowed_mots", where)),
        ))

    instance = Instance(tuple(depots), tuple(users), mots, costs, sigma, tau)
    try:
        instance.validate()
    except ValidationError as exc:
        raise InstanceFormatError(str(exc)) from exc
    return instance


def read_instance(path) -> Instance:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(doc)
