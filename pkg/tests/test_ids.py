import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ifcnorm.graph import build_graph
from ifcnorm.hashing import HashOptions, compute_all_digests, djb
from ifcnorm.ids import (
    CapacityError,
    IdConfig,
    PrefixSpacePlan,
    assign_ids,
    assign_prefix_codes,
    assign_suffixes,
    dispatch,
    overflow_probability,
    plan_spaces,
    renumber,
    space_count,
)
from ifcnorm.step import EntityInstance, Ref
from ifcnorm.synthetic import generate_model


def test_space_count_examples():
    assert space_count(100, IdConfig()) == 1
    assert space_count(100_000, IdConfig(scaling="linear")) == 4
    assert space_count(100_000, IdConfig()) == 4
    assert space_count(200_000, IdConfig(scaling="linear")) == 7
    assert space_count(200_000, IdConfig()) == 8
    assert space_count(0, IdConfig()) == 1


@given(st.integers(min_value=0, max_value=10**7), st.integers(min_value=0, max_value=10**6))
def test_space_count_is_monotone(n, extra):
    for scaling in ("linear", "power_of_two"):
        config = IdConfig(scaling=scaling)
        assert space_count(n, config) <= space_count(n + extra, config)
        assert space_count(n, config) * config.capacity >= config.spare_rate * n


def test_id_config_validation():
    assert IdConfig().bound == 65536
    with pytest.raises(ValueError):
        IdConfig(capacity=0)
    with pytest.raises(ValueError):
        IdConfig(capacity=2**32)
    with pytest.raises(ValueError):
        IdConfig(spare_rate=1.0)
    with pytest.raises(ValueError):
        IdConfig(scaling="cubic")


def test_plan_refuses_too_many_spaces():
    config = IdConfig(capacity=2**30)  # codes 1..3 only
    with pytest.raises(CapacityError, match="larger capacity"):
        plan_spaces({"A": 1, "B": 1, "C": 1, "D": 1}, config)
    assert plan_spaces({"A": 1, "B": 1, "C": 1}, config).total_spaces == 3


def test_prefix_codes_probe_past_collisions():
    config = IdConfig(capacity=2**30)
    plan = assign_prefix_codes(plan_spaces({"A": 1, "B": 1, "C": 1}, config))
    # oracle: walk the names in byte order, probing upward and skipping code 0
    used, expected = {0}, {}
    for name in sorted([b"A_0", b"B_0", b"C_0"]):
        p = djb(name) % 4
        while p in used:
            p = (p + 1) % 4
        used.add(p)
        expected[name.decode()[0]] = [p]
    assert plan.codes == expected
    assert sorted(c for codes in plan.codes.values() for c in codes) == [1, 2, 3]


def test_prefix_codes_do_not_depend_on_census_order():
    config = IdConfig(capacity=2**20)
    a = assign_prefix_codes(plan_spaces({"IFCWALL": 3_000_000, "IFCSLAB": 10}, config))
    b = assign_prefix_codes(plan_spaces({"IFCSLAB": 10, "IFCWALL": 3_000_000}, config))
    assert a.codes == b.codes and len(a.codes["IFCWALL"]) == 8


def test_dispatch_uses_hash_code_modulo_m():
    spaces = dispatch([(7, "x", 1), (8, "y", 2)], 4)
    assert spaces[3] == [(7, "x", 1)] and spaces[0] == [(8, "y", 2)]


def test_suffix_examples():
    assigned, surplus, used = assign_suffixes([(5, "a", 1)], 65536)
    assert assigned == {1: 5} and surplus == []
    assigned, _, _ = assign_suffixes([(5, "b", 2), (5, "a", 1)], 65536)
    assert assigned == {1: 5, 2: 6}
    assigned, _, used = assign_suffixes([(3, "a", 1), (3, "b", 2)], 4)
    assert assigned == {1: 3, 2: 0} and used == {0, 3}


def test_full_space_reports_surplus():
    items = [(i, f"{i:02d}", i) for i in range(6)]
    assigned, surplus, used = assign_suffixes(items, 4)
    assert len(assigned) == 4 and [s[2] for s in surplus] == [4, 5]
    assert used == {0, 1, 2, 3}


def test_row_id_is_prefix_times_capacity_plus_suffix():
    config = IdConfig()
    plan = PrefixSpacePlan(config, {"T": 1}, {"T": [3]}, {1: (3, 17)})
    (row,) = renumber(build_graph([EntityInstance(1, "T", ())]), plan)
    assert row.id == 3 * 65536 + 17 == 196625


def digests_for(n: int, seed: int = 0) -> tuple:
    rows = [EntityInstance(i + 1, "IFCCARTESIANPOINT", ((float(i), float(seed)),)) for i in range(n)]
    graph = build_graph(rows)
    return graph, compute_all_digests(graph, HashOptions())


def test_ids_are_unique_and_above_capacity():
    graph = build_graph(generate_model(20, seed=4).parse())
    digests = compute_all_digests(graph, HashOptions())
    config = IdConfig(capacity=256)
    new_ids, plan = assign_ids(graph, digests, config)
    assert len(set(new_ids.values())) == len(new_ids) == len(graph.nodes)
    assert min(new_ids.values()) >= config.capacity
    rows = renumber(graph, plan)
    assert [r.id for r in rows] == sorted(new_ids.values())
    targets = {ref.id for r in rows for ref in _refs(r.attributes)}
    assert targets <= set(new_ids.values())


def _refs(value):
    if type(value) is Ref:
        yield value
    elif type(value) is tuple:
        for v in value:
            yield from _refs(v)


def forced_overflow():
    """Ten points whose hash codes are all even, so they pile into one of two spaces."""
    graph, digests = digests_for(200)
    chosen = [i for i in graph.nodes if digests[i].hash_code % 2 == 0][:10]
    sub = build_graph([graph.nodes[i] for i in chosen])
    return sub, {i: digests[i] for i in chosen}


def test_spill_is_deterministic_and_fills_the_next_space():
    graph, digests = forced_overflow()
    config = IdConfig(capacity=8, spare_rate=1.5)
    one, plan = assign_ids(graph, digests, config, threads=1)
    assert plan.spaces == {"IFCCARTESIANPOINT": 2}
    assert plan.overflowed == [("IFCCARTESIANPOINT", 0)] and plan.spilled == 2
    second = plan.codes["IFCCARTESIANPOINT"][1]
    assert sum(1 for p, _ in plan.placement.values() if p == second) == 2
    four, _ = assign_ids(graph, digests, config, threads=4)
    assert one == four
    assert len(set(one.values())) == 10


def test_capacity_error_when_prefix_codes_run_out():
    rows = [EntityInstance(i + 1, f"T{i}", ()) for i in range(4)]
    graph = build_graph(rows)
    digests = compute_all_digests(graph, HashOptions())
    with pytest.raises(CapacityError):
        assign_ids(graph, digests, IdConfig(capacity=2**30))


def test_overflow_probability_examples():
    assert overflow_probability(1000, 4, 250) == pytest.approx(0.5, abs=1e-9)
    assert overflow_probability(10, 1, 10) == 0.0
    assert overflow_probability(11, 1, 10) == 1.0
    assert overflow_probability(1000, 2, 1000) < 1e-100
    with pytest.raises(ValueError):
        overflow_probability(0, 1, 1)


def test_overflow_probability_matches_normal_tail():
    n, m, v = 10_000, 128, 100
    z = (m * v - n) / math.sqrt((m - 1) * n)
    expected = 1 - 0.5 * (1 + math.erf(z / math.sqrt(2)))
    assert overflow_probability(n, m, v) == pytest.approx(expected, rel=1e-9)


def test_placement_ignores_input_names():
    graph, digests = digests_for(300)
    a, _ = assign_ids(graph, digests, IdConfig(capacity=256))
    rnd = random.Random(3)
    names = rnd.sample(range(1, 10**6), 300)
    rename = dict(zip(graph.nodes, names))
    graph2 = build_graph([EntityInstance(rename[i], r.type_name, r.attributes) for i, r in graph.nodes.items()])
    digests2 = {rename[i]: d for i, d in digests.items()}
    b, _ = assign_ids(graph2, digests2, IdConfig(capacity=256))
    assert {rename[i]: v for i, v in a.items()} == b
