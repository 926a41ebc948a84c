"""Decoded plans: vehicle itineraries, fallback assignments and usage metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .model import Instance, cheapest_other_mot, extended_sequence
from .ridegraph import TripVariant


@dataclass(frozen=True)
class VehicleRoute:
    """One vehicle's day: depot-to-depot rides in time order (may be empty)."""

    start_depot: int
    end_depot: int
    variant_ids: tuple[int, ...]
    saving_eur: float
    relocation_dummy: bool = False


@dataclass
class Plan:
    routes: list[VehicleRoute]
    total_saving: float
    covered: frozenset[tuple[int, int]]
    uncovered: dict[int, tuple[str, float]]
    rides_per_car: float
    shares_per_ride: float
    uses_dummy: bool = False


def fallback_assignment(instance: Instance,
                        covered_tasks: set[int]) -> dict[int, tuple[str, float]]:
    """Cheapest-other annotation for every task not reached by a car: the mode
    and cost of the leg arriving at the task from its predecessor."""
    out: dict[int, tuple[str, float]] = {}
    for user in instance.users:
        seq = extended_sequence(instance, user)
        for prev, task in zip(seq[:-1], seq[1:]):
            if task.is_depot_endpoint or task.id in covered_tasks:
                continue
            out[task.id] = cheapest_other_mot(
                user, prev.loc, task.loc,
                prev.earliest_departure_s, task.latest_arrival_s,
                instance.mots, instance.costs,
            )
    return out


def build_plan(instance: Instance, variants: Mapping[int, TripVariant],
               routes: Iterable[VehicleRoute]) -> Plan:
    routes = list(routes)
    covered: set[tuple[int, int]] = set()
    for r in routes:
        for vid in r.variant_ids:
            covered.update(variants[vid].covered)
    task_ids = {t for _, t in covered}

    n_rides = sum(len(r.variant_ids) for r in routes)
    n_shares = sum(len(variants[vid].shares)
                   for r in routes for vid in r.variant_ids)
    fleet = instance.fleet_size
    return Plan(
        routes=routes,
        total_saving=sum(r.saving_eur for r in routes),
        covered=frozenset(covered),
        uncovered=fallback_assignment(instance, task_ids),
        rides_per_car=n_rides / fleet if fleet else 0.0,
        shares_per_ride=n_shares / n_rides if n_rides else 0.0,
        uses_dummy=any(r.relocation_dummy for r in routes),
    )
