"""Content-derived row IDs through per-type prefix spaces.

Every node type owns ``m`` prefix spaces of capacity ``V``. A space has a
prefix code ``p`` and hands out suffixes ``0 <= s < V``; a node's new row ID
is ``p*V + s``. Placement only depends on digests and the type census, so
collisions are resolved identically in every run and each space can be
filled independently.
"""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

from .graph import ModelGraph
from .hashing import NodeDigest, djb, resolve_threads
from .step import EntityInstance, Ref, transform_refs

__all__ = [
    "IdConfig",
    "PrefixSpacePlan",
    "CapacityError",
    "SCALING_MODES",
    "space_count",
    "plan_spaces",
    "assign_prefix_codes",
    "dispatch",
    "assign_suffixes",
    "assign_ids",
    "renumber",
    "overflow_probability",
]

SCALING_MODES = ("linear", "power_of_two")
CODE_BITS = 32


class CapacityError(RuntimeError):
    """Not enough prefix spaces or suffix slots; retry with a larger capacity."""


@dataclass(frozen=True)
class IdConfig:
    capacity: int = 65536
    spare_rate: float = 2.0
    scaling: str = "power_of_two"

    def __post_init__(self):
        if not isinstance(self.capacity, int) or self.capacity < 1:
            raise ValueError("capacity must be a positive integer")
        if self.bound < 2:
            raise ValueError(f"capacity {self.capacity} leaves fewer than 2 prefix codes")
        if not self.spare_rate > 1.0:
            raise ValueError("spare_rate must be greater than 1.0")
        if self.scaling not in SCALING_MODES:
            raise ValueError(f"scaling must be one of {SCALING_MODES}")

    @property
    def bound(self) -> int:
        """Number of prefix codes ``U = floor(2**32 / V)``; code 0 is never used."""
        return (1 << CODE_BITS) // self.capacity


@dataclass
class PrefixSpacePlan:
    config: IdConfig
    spaces: dict[str, int]  # type name -> m
    codes: dict[str, list[int]] = field(default_factory=dict)  # type name -> prefix code per serial
    placement: dict[int, tuple[int, int]] = field(default_factory=dict)  # node -> (p, s)
    overflowed: list[tuple[str, int]] = field(default_factory=list)  # spaces that spilled
    spilled: int = 0

    @property
    def total_spaces(self) -> int:
        return sum(self.spaces.values())


def space_count(n: int, config: IdConfig) -> int:
    need = max(1, math.ceil(config.spare_rate * n / config.capacity))
    if config.scaling == "linear":
        return need
    return 1 << (need - 1).bit_length()


def plan_spaces(type_counts: Mapping[str, int], config: IdConfig = IdConfig()) -> PrefixSpacePlan:
    spaces = {t: space_count(n, config) for t, n in type_counts.items() if n > 0}
    total = sum(spaces.values())
    if total > config.bound - 1:
        raise CapacityError(
            f"{total} prefix spaces needed but only {config.bound - 1} available with "
            f"capacity {config.capacity}; use a larger capacity"
        )
    return PrefixSpacePlan(config, spaces)


def assign_prefix_codes(plan: PrefixSpacePlan) -> PrefixSpacePlan:
    """Give every space a code by probing from ``djb(name) mod U`` in name order.

    Space names are ``<TYPE>_<serial>``, sorted byte-wise, so the outcome only
    depends on the set of names.
    """
    bound = plan.config.bound
    names = sorted(
        ((f"{t}_{i}".encode("latin-1"), t, i) for t, m in plan.spaces.items() for i in range(m)),
    )
    used = {0}
    codes: dict[str, list[int]] = {t: [0] * m for t, m in plan.spaces.items()}
    for name, type_name, serial in names:
        p = djb(name) % bound
        while p in used:
            p = (p + 1) % bound
        used.add(p)
        codes[type_name][serial] = p
    plan.codes = codes
    return plan


def dispatch(nodes, m: int) -> list[list]:
    """Split ``(hash_code, hash_string, id)`` triples into ``m`` spaces by ``hash_code mod m``."""
    spaces: list[list] = [[] for _ in range(m)]
    for item in nodes:
        spaces[item[0] % m].append(item)
    return spaces


def assign_suffixes(space, capacity: int, occupied=None) -> tuple[dict, list, set]:
    """Linear-probe suffixes for one space.

    Nodes are taken in (hash_code, hash_string) order; each starts probing at
    ``hash_code mod capacity``. Returns the assignment, the nodes that did not
    fit, and the set of used suffixes.
    """
    used = set() if occupied is None else occupied
    assigned: dict = {}
    surplus = []
    for item in sorted(space):
        if len(used) >= capacity:
            surplus.append(item)
            continue
        s = item[0] % capacity
        while s in used:
            s = (s + 1) % capacity
        used.add(s)
        assigned[item[2]] = s
    return assigned, surplus, used


def assign_ids(
    graph: ModelGraph,
    digests: Mapping[int, NodeDigest],
    config: IdConfig = IdConfig(),
    threads: int = 1,
) -> tuple[dict[int, int], PrefixSpacePlan]:
    """New row ID for every node of ``graph`` (normally the merged graph)."""
    by_type: dict[str, list] = defaultdict(list)
    for ident, inst in graph.nodes.items():
        d = digests[ident]
        by_type[inst.type_name].append((d.hash_code, d.hash_string, ident))
    plan = assign_prefix_codes(plan_spaces({t: len(v) for t, v in by_type.items()}, config))
    capacity = config.capacity

    jobs = []
    for type_name in sorted(by_type):
        for serial, space in enumerate(dispatch(by_type[type_name], plan.spaces[type_name])):
            jobs.append((type_name, serial, space))

    n = resolve_threads(threads)
    if n > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(lambda job: assign_suffixes(job[2], capacity), jobs))
    else:
        results = [assign_suffixes(job[2], capacity) for job in jobs]

    placement: dict[int, tuple[int, int]] = {}
    used: dict[tuple[str, int], set] = {}
    spill: dict[str, list] = defaultdict(list)
    for (type_name, serial, _), (assigned, surplus, occupied) in zip(jobs, results):
        p = plan.codes[type_name][serial]
        for ident, s in assigned.items():
            placement[ident] = (p, s)
        used[type_name, serial] = occupied
        if surplus:
            plan.overflowed.append((type_name, serial))
            spill[type_name].extend((serial, item) for item in surplus)

    # overflow goes to the following spaces of the same type, after all primary passes
    for type_name in sorted(spill):
        m = plan.spaces[type_name]
        for serial, item in spill[type_name]:
            for step in range(1, m + 1):
                target = (serial + step) % m
                occupied = used[type_name, target]
                if len(occupied) < capacity:
                    assigned, _, _ = assign_suffixes([item], capacity, occupied)
                    placement[item[2]] = (plan.codes[type_name][target], assigned[item[2]])
                    plan.spilled += 1
                    break
            else:
                raise CapacityError(f"all {m} prefix spaces of {type_name} are full; use a larger capacity")
    plan.placement = placement

    new_ids = {ident: p * capacity + s for ident, (p, s) in placement.items()}
    if len(set(new_ids.values())) != len(new_ids):  # pragma: no cover - guarded by construction
        raise AssertionError("duplicate row IDs assigned")
    return new_ids, plan


def renumber(graph: ModelGraph, plan: PrefixSpacePlan) -> list[EntityInstance]:
    """Rows of ``graph`` under their new IDs, references rewritten, ascending."""
    capacity = plan.config.capacity
    new_ids = {ident: p * capacity + s for ident, (p, s) in plan.placement.items()}
    if len(set(new_ids.values())) != len(new_ids):
        raise AssertionError("duplicate row IDs in plan")
    lookup = lambda target: Ref(new_ids[target])  # noqa: E731
    rows = [
        EntityInstance(new_ids[ident], inst.type_name, tuple(transform_refs(v, lookup) for v in inst.attributes))
        for ident, inst in graph.nodes.items()
    ]
    rows.sort(key=lambda r: r.id)
    return rows


def overflow_probability(n: int, m: int, capacity: int) -> float:
    """Normal-approximation chance that one of ``m`` spaces gets more than ``capacity`` of ``n`` nodes.

    Nodes land in a space with probability ``1/m``, so the count is
    approximately normal with mean ``n/m`` and variance ``n(m-1)/m**2``;
    the tail beyond ``capacity`` is ``1 - Phi(z)`` with
    ``z = (m*capacity - n) / sqrt((m-1)*n)``.
    """
    if n < 1 or m < 1 or capacity < 1:
        raise ValueError("n, m and capacity must be positive")
    if m == 1:
        return 0.0 if n <= capacity else 1.0
    z = (m * capacity - n) / math.sqrt((m - 1) * n)
    return 0.5 * math.erfc(z / math.sqrt(2.0))
