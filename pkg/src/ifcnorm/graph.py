"""Reference graph over the instances of a parsed file."""

from __future__ import annotations

from dataclasses import dataclass, field

from .step import EntityInstance, RawFile, Ref, Typed

__all__ = [
    "ModelGraph",
    "GraphError",
    "DanglingReferenceError",
    "CycleError",
    "build_graph",
    "compute_layers",
    "forward_refs",
]


class GraphError(ValueError):
    pass


class DanglingReferenceError(GraphError):
    def __init__(self, source: int, target: int):
        self.source = source
        self.target = target
        super().__init__(f"#{source} references #{target}, which does not exist")


class CycleError(GraphError):
    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        path = " -> ".join(f"#{i}" for i in cycle + cycle[:1])
        super().__init__(f"reference cycle: {path}")


@dataclass
class ModelGraph:
    """Instances plus forward/inverse adjacency and longest-path layers.

    ``layers[i]`` lists the IDs whose layer is ``i``, ascending.
    """

    nodes: dict[int, EntityInstance]
    forward: dict[int, list[int]]
    inverse: dict[int, set[int]]
    layer: dict[int, int] = field(default_factory=dict)
    layers: list[list[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)

    def ancestors(self, start) -> set[int]:
        """All IDs that reach any of ``start`` through forward edges (excluding ``start``)."""
        seen: set[int] = set()
        stack = list(start)
        inverse = self.inverse
        while stack:
            for parent in inverse[stack.pop()]:
                if parent not in seen:
                    seen.add(parent)
                    stack.append(parent)
        return seen

    def descendants(self, start) -> set[int]:
        seen: set[int] = set()
        stack = list(start)
        forward = self.forward
        while stack:
            for child in forward[stack.pop()]:
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return seen

    def in_layer_order(self, ids) -> list[int]:
        """``ids`` sorted by (layer, id)."""
        layer = self.layer
        return sorted(ids, key=lambda i: (layer[i], i))


def _collect(values, out: list) -> None:
    for v in values:
        t = type(v)
        if t is Ref:
            out.append(v.id)
        elif t is tuple:
            _collect(v, out)
        elif t is Typed:
            _collect((v.value,), out)


def forward_refs(instance: EntityInstance) -> list[int]:
    """Referenced instance names in attribute order, duplicates kept."""
    out: list[int] = []
    _collect(instance.attributes, out)
    return out


def build_graph(nodes) -> ModelGraph:
    """Resolve references and layer the graph.

    ``nodes`` is a :class:`RawFile`, an iterable of instances, or a mapping
    of ID to instance.
    """
    if isinstance(nodes, RawFile):
        nodes = {row.id: row for row in nodes.data_rows}
    elif not isinstance(nodes, dict):
        nodes = {row.id: row for row in nodes}
    forward: dict[int, list[int]] = {}
    inverse: dict[int, set[int]] = {ident: set() for ident in nodes}
    # rows parsed from identical reference-free text share one tuple
    no_refs: set[int] = set()
    for ident, inst in nodes.items():
        key = id(inst.attributes)
        if key in no_refs:
            forward[ident] = []
            continue
        refs = []
        _collect(inst.attributes, refs)
        if not refs:
            no_refs.add(key)
        forward[ident] = refs
        for target in refs:
            try:
                inverse[target].add(ident)
            except KeyError:
                raise DanglingReferenceError(ident, target) from None
    graph = ModelGraph(nodes, forward, inverse)
    graph.layer, graph.layers = compute_layers(graph)
    return graph


def compute_layers(graph: ModelGraph) -> tuple[dict[int, int], list[list[int]]]:
    """Leaves are layer 0; any other node sits one above its highest child."""
    forward, inverse = graph.forward, graph.inverse
    pending = {ident: len(set(children)) for ident, children in forward.items()}
    layer: dict[int, int] = {}
    wave = sorted(ident for ident, count in pending.items() if count == 0)
    layers: list[list[int]] = []
    depth = 0
    while wave:
        layers.append(wave)
        for ident in wave:
            layer[ident] = depth
        ready = []
        for ident in wave:
            for parent in inverse[ident]:
                pending[parent] -= 1
                if pending[parent] == 0:
                    ready.append(parent)
        wave = sorted(ready)
        depth += 1
    if len(layer) != len(forward):
        raise CycleError(_find_cycle(forward, layer))
    return layer, layers


def _find_cycle(forward: dict[int, list[int]], done: dict[int, int]) -> list[int]:
    # every unfinished node has an unfinished child, so walking always closes a loop
    start = min(i for i in forward if i not in done)
    path: list[int] = []
    index: dict[int, int] = {}
    node = start
    while node not in index:
        index[node] = len(path)
        path.append(node)
        node = min(c for c in forward[node] if c not in done)
    return path[index[node]:]
