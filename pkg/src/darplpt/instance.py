"""Problem data for the dial-a-ride problem with limited pickups per trip.

Locations are indexed 0..2n+1: 0 is the origin depot, 1..n the pickups,
n+1..2n the matching deliveries and 2n+1 the destination depot.  Multi-depot
instances append one origin and one destination location per vehicle after
index 2n+1 and record them in ``vehicle_depots``.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

EPS = 1e-6


class InstanceError(ValueError):
    """Raised for malformed instance files or inconsistent instance data."""


@dataclass(frozen=True)
class Location:
    id: int
    x: float
    y: float
    service: float
    load_change: int
    e: float
    l: float


@dataclass(frozen=True)
class Driver:
    """A vehicle with its own origin and destination location."""
    origin: int
    destination: int
    earliest: float
    latest: float


@dataclass(frozen=True)
class MdarpConfig:
    drivers: tuple[Driver, ...]
    passengers: tuple[int, ...]
    """Customer ids of the source instance that remain as passengers."""


@dataclass(frozen=True, eq=False)
class Instance:
    n: int
    locations: tuple[Location, ...]
    Q: int
    L: int
    num_vehicles: int
    R0: float
    ride_limit: float
    travel_time: np.ndarray = field(repr=False)
    travel_cost: np.ndarray = field(repr=False)
    name: str = ""
    vehicle_depots: Optional[tuple[tuple[int, int], ...]] = None

    # -- index helpers ------------------------------------------------------
    @property
    def origin(self) -> int:
        return 0

    @property
    def destination(self) -> int:
        return 2 * self.n + 1

    @property
    def P(self) -> range:
        return range(1, self.n + 1)

    @property
    def D(self) -> range:
        return range(self.n + 1, 2 * self.n + 1)

    @property
    def N(self) -> range:
        return range(0, 2 * self.n + 2)

    @property
    def is_multi_depot(self) -> bool:
        return self.vehicle_depots is not None

    def is_pickup(self, i: int) -> bool:
        return 1 <= i <= self.n

    def is_delivery(self, i: int) -> bool:
        return self.n < i <= 2 * self.n

    def is_depot(self, i: int) -> bool:
        return not (1 <= i <= 2 * self.n)

    def customer(self, i: int) -> int:
        """Customer id served at location ``i`` (pickup or delivery)."""
        return i if i <= self.n else i - self.n

    def delivery_of(self, i: int) -> int:
        return i + self.n

    def pickup_of(self, i: int) -> int:
        return i - self.n

    def q(self, i: int) -> int:
        return self.locations[i].load_change

    def service(self, i: int) -> float:
        return self.locations[i].service

    def e(self, i: int) -> float:
        return self.locations[i].e

    def l(self, i: int) -> float:
        return self.locations[i].l

    def depots(self, v: int) -> tuple[int, int]:
        """Origin and destination location of vehicle ``v``."""
        if self.vehicle_depots is None:
            return self.origin, self.destination
        return self.vehicle_depots[v]

    def all_origins(self) -> list[int]:
        if self.vehicle_depots is None:
            return [self.origin]
        return [o for o, _ in self.vehicle_depots]

    def all_destinations(self) -> list[int]:
        if self.vehicle_depots is None:
            return [self.destination]
        return [d for _, d in self.vehicle_depots]

    def with_windows(self, windows: Sequence[tuple[float, float]]) -> "Instance":
        locs = tuple(replace(loc, e=w[0], l=w[1]) for loc, w in zip(self.locations, windows))
        return replace(self, locations=locs)

    def vehicle_view(self, v: int) -> "Instance":
        """Single-vehicle instance whose depots 0 and 2n+1 are vehicle ``v``'s.

        Customer indices are unchanged, so fragments and routes built on the
        view can be compared directly with those of the full instance.
        """
        if self.vehicle_depots is None:
            return replace(self, num_vehicles=1)
        o, d = self.vehicle_depots[v]
        dest = self.destination
        idx = list(range(2 * self.n + 2))
        idx[0], idx[dest] = o, d
        locs = list(self.locations[: 2 * self.n + 2])
        locs[0] = replace(self.locations[o], id=0, load_change=0)
        locs[dest] = replace(self.locations[d], id=dest, load_change=0)
        tt = self.travel_time[np.ix_(idx, idx)].copy()
        tc = self.travel_cost[np.ix_(idx, idx)].copy()
        # an idle vehicle costs nothing
        tc[0, dest] = 0.0
        return replace(self, locations=tuple(locs), travel_time=tt, travel_cost=tc,
                       num_vehicles=1, vehicle_depots=None, name=f"{self.name}/v{v}")

    def validate(self) -> None:
        n = self.n
        if len(self.locations) < 2 * n + 2:
            raise InstanceError(f"expected at least {2 * n + 2} locations, got {len(self.locations)}")
        for i in self.N:
            if self.is_depot(i) and self.q(i) != 0:
                raise InstanceError(f"depot location {i} has non-zero load")
        for i in self.P:
            if self.q(i) <= 0 or self.q(i) != -self.q(i + n):
                raise InstanceError(f"customer {i}: pickup load {self.q(i)} does not match delivery load {self.q(i + n)}")
        for loc in self.locations:
            if loc.e > loc.l + EPS:
                raise InstanceError(f"location {loc.id}: empty time window ({loc.e}, {loc.l})")
        if self.L < 1:
            raise InstanceError("pickup limit must be at least 1")
        if n and self.Q < max(self.q(i) for i in self.P):
            raise InstanceError("capacity smaller than a single customer's load")
        m = len(self.locations)
        for mat in (self.travel_time, self.travel_cost):
            if mat.shape != (m, m) or (mat < -EPS).any() or np.abs(np.diag(mat)).max(initial=0.0) > EPS:
                raise InstanceError("travel matrices must be square, nonnegative and zero on the diagonal")


def euclidean_matrix(locations: Sequence[Location]) -> np.ndarray:
    xy = np.array([(loc.x, loc.y) for loc in locations], dtype=float).reshape(-1, 2)
    diff = xy[:, None, :] - xy[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def min_fixed_vehicles(inst: Instance) -> int:
    """Fewest vehicles able to serve every customer under the pickup limit."""
    return math.ceil(inst.n / inst.L)


def parse_instance(text: str, name: str = "", L: Optional[int] = None) -> Instance:
    """Parse a benchmark file in the Cordeau dial-a-ride format.

    The header is ``<vehicles> <locations> <R0> <Q> <ride_limit>`` where the
    second field is the number of customer locations (2n).  Files that omit
    the destination depot line reuse the origin depot.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.strip():
            rows.append((lineno, raw.split()))
    if not rows:
        raise InstanceError("empty instance file")
    hdr_line, hdr = rows[0]
    if len(hdr) < 5:
        raise InstanceError(f"line {hdr_line}: header needs 5 fields, got {len(hdr)}")
    try:
        vehicles = int(hdr[0])
        header_count = int(hdr[1])
        R0, Q, ride = float(hdr[2]), int(float(hdr[3])), float(hdr[4])
    except ValueError as exc:
        raise InstanceError(f"line {hdr_line}: malformed header: {exc}") from None

    locs: list[Location] = []
    for lineno, tok in rows[1:]:
        if len(tok) < 7:
            raise InstanceError(f"line {lineno}: expected 7 fields, got {len(tok)}")
        try:
            loc = Location(id=len(locs), x=float(tok[1]), y=float(tok[2]), service=float(tok[3]),
                           load_change=int(float(tok[4])), e=float(tok[5]), l=float(tok[6]))
        except ValueError as exc:
            raise InstanceError(f"line {lineno}: {exc}") from None
        if loc.e > loc.l + EPS:
            raise InstanceError(f"line {lineno}: inverted time window ({loc.e}, {loc.l})")
        locs.append(loc)

    if len(locs) % 2 == 1:
        # destination depot line omitted
        locs.append(replace(locs[0], id=len(locs)))
    n = (len(locs) - 2) // 2
    if header_count not in (n, 2 * n):
        raise InstanceError(f"line {hdr_line}: header announces {header_count} locations but file has {2 * n}")
    for i in range(1, n + 1):
        if locs[i].load_change <= 0 or locs[i].load_change != -locs[i + n].load_change:
            lineno = rows[1 + i + n][0]
            raise InstanceError(f"line {lineno}: delivery load {locs[i + n].load_change} "
                                f"does not match pickup load {locs[i].load_change} of customer {i}")
    dist = euclidean_matrix(locs)
    inst = Instance(n=n, locations=tuple(locs), Q=Q, L=L if L is not None else n, num_vehicles=vehicles,
                    R0=R0, ride_limit=ride, travel_time=dist, travel_cost=dist.copy(), name=name)
    inst.validate()
    return inst


def load_instance(path: str | Path, L: Optional[int] = None) -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(), name=path.stem, L=L)


def format_instance(inst: Instance) -> str:
    """Inverse of :func:`parse_instance` for single-depot instances."""
    lines = [f"{inst.num_vehicles} {2 * inst.n} {inst.R0:g} {inst.Q} {inst.ride_limit:g}"]
    for loc in inst.locations[: 2 * inst.n + 2]:
        lines.append(f"{loc.id} {loc.x!r} {loc.y!r} {loc.service:g} {loc.load_change} {loc.e!r} {loc.l!r}")
    return "\n".join(lines) + "\n"


def configure_darplpt(inst: Instance, L: int) -> Instance:
    """Install pickup limit ``L`` and the fleet size ceil(n / (L - 1))."""
    if L < 2:
        raise InstanceError("DARP-LPT configuration needs L >= 2")
    return replace(inst, L=L, num_vehicles=math.ceil(inst.n / (L - 1)))


def derive_mdarp(inst: Instance, L: Optional[int] = None) -> tuple[Instance, MdarpConfig]:
    """Turn the first ceil(n/3) customers into drivers with their own depots.

    Drivers' pickup and delivery locations become the vehicle origin and
    destination; their earliest departure becomes 0 while the latest arrival
    at the destination is kept.  Remaining customers are renumbered 1..m as
    passengers with unit demand; capacity becomes 4.
    """
    n = inst.n
    k = math.ceil(n / 3)
    passengers = tuple(range(k + 1, n + 1))
    m = len(passengers)
    src = inst.locations

    def passenger_loc(new_id: int, old: int, load: int) -> Location:
        return replace(src[old], id=new_id, load_change=load)

    locs: list[Location] = [replace(src[0], id=0)]
    locs += [passenger_loc(a + 1, p, 1) for a, p in enumerate(passengers)]
    locs += [passenger_loc(m + a + 1, p + n, -1) for a, p in enumerate(passengers)]
    locs.append(replace(src[2 * n + 1], id=2 * m + 1))

    drivers = []
    depots = []
    for v in range(1, k + 1):
        latest = src[v + n].l
        o_id, d_id = len(locs), len(locs) + 1
        locs.append(replace(src[v], id=o_id, load_change=0, e=0.0, l=latest))
        locs.append(replace(src[v + n], id=d_id, load_change=0, e=0.0, l=latest))
        drivers.append(Driver(origin=o_id, destination=d_id, earliest=0.0, latest=latest))
        depots.append((o_id, d_id))

    dist = euclidean_matrix(locs)
    out = Instance(n=m, locations=tuple(locs), Q=4, L=inst.L if L is None else L, num_vehicles=k,
                   R0=inst.R0, ride_limit=inst.ride_limit, travel_time=dist, travel_cost=dist.copy(),
                   name=f"{inst.name}-md" if inst.name else "", vehicle_depots=tuple(depots))
    out.validate()
    return out, MdarpConfig(drivers=tuple(drivers), passengers=passengers)


def random_instance(n: int, seed: int, L: int = 3, Q: int = 3, num_vehicles: Optional[int] = None,
                    ride_limit: float = 30.0, horizon: float = 240.0, width: float = 30.0,
                    service: float = 3.0, multi_depot: int = 0) -> Instance:
    """Small random instance in the style of the type-A benchmarks.

    Used by tests and the ``--seed`` option; windows are built around a
    direct trip so that instances are feasible but not trivially so.
    ``multi_depot`` > 0 adds that many vehicles with their own depots.
    """
    rng = random.Random(seed)
    pts = [(rng.uniform(-10, 10), rng.uniform(-10, 10)) for _ in range(2 * n)]
    depot = (0.0, 0.0)
    locs = [Location(0, *depot, 0.0, 0, 0.0, horizon)]
    windows = []
    for i in range(n):
        (px, py), (dx, dy) = pts[i], pts[n + i]
        direct = math.hypot(px - dx, py - dy)
        lead = math.hypot(px - depot[0], py - depot[1])
        start = rng.uniform(lead, horizon - 60.0)
        if rng.random() < 0.5:
            e_p, l_p = start, start + width
            e_d, l_d = 0.0, horizon
        else:
            e_d = start + service + direct
            e_p, l_p = 0.0, horizon
            l_d = e_d + width
        windows.append(((e_p, min(l_p, horizon)), (e_d, min(l_d, horizon))))
    for i in range(n):
        (px, py) = pts[i]
        locs.append(Location(i + 1, px, py, service, 1, *windows[i][0]))
    for i in range(n):
        (dx, dy) = pts[n + i]
        locs.append(Location(n + i + 1, dx, dy, service, -1, *windows[i][1]))
    locs.append(Location(2 * n + 1, *depot, 0.0, 0, 0.0, horizon))
    depots = None
    if multi_depot:
        depots = []
        for _ in range(multi_depot):
            o = Location(len(locs), rng.uniform(-10, 10), rng.uniform(-10, 10), 0.0, 0, 0.0, horizon)
            d = Location(len(locs) + 1, rng.uniform(-10, 10), rng.uniform(-10, 10), 0.0, 0, 0.0, horizon)
            locs += [o, d]
            depots.append((o.id, d.id))
        depots = tuple(depots)
    dist = euclidean_matrix(locs)
    if num_vehicles is None:
        num_vehicles = multi_depot or max(1, math.ceil(n / max(L - 1, 1)))
    inst = Instance(n=n, locations=tuple(locs), Q=Q, L=L, num_vehicles=num_vehicles, R0=horizon,
                    ride_limit=ride_limit, travel_time=dist, travel_cost=dist.copy(),
                    name=f"rand-n{n}-s{seed}", vehicle_depots=depots)
    inst.validate()
    return inst
