"""Content digests for every node of a model graph.

A node's digest is the SHA-256 of its canonical content: the row rendered
without its own ID, with each reference replaced by ``#`` plus the target's
64-hex digest. Leaves are hashed first, then each layer in turn, so equal
subtrees get equal digests regardless of row order or instance names.

The IFC-specific passes live here as well: owner-history handling, the
"important inverse edge" augmentation that keeps differently styled twins
apart, content-derived GlobalIds, and the merge of redundant nodes.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import ModelGraph, compute_layers, forward_refs
from .ifcschema import (
    ELEMENT_TYPES,
    OWNER_HISTORY,
    OWNER_HISTORY_TIMESTAMPS,
    STYLED_BY_ITEM,
    UNORDERED_ATTRIBUTES,
    is_root_type,
)
from .step import NULL, EntityInstance, Ref, Text, iter_refs, render_attributes, render_value, transform_refs

__all__ = [
    "HashOptions",
    "NodeDigest",
    "HashingError",
    "OWNER_HISTORY_MODES",
    "djb",
    "djb_many",
    "hash_string",
    "canonical_content",
    "compute_all_digests",
    "augment_important_inverse",
    "reencode_guids",
    "encode_guid",
    "apply_owner_history",
    "merge_redundant",
    "sort_unordered",
    "resolve_threads",
]

OWNER_HISTORY_MODES = ("keep", "inline", "drop")
GUID_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_$"
INVERSE_SEPARATOR = "|INV|"

_MASK32 = 0xFFFFFFFF


class HashingError(ValueError):
    pass


@dataclass(frozen=True)
class HashOptions:
    owner_history_mode: str = "drop"
    unordered_attributes: frozenset = UNORDERED_ATTRIBUTES
    important_inverse_edges: frozenset = frozenset({STYLED_BY_ITEM})
    reencode_guids: bool = True
    element_types: frozenset = ELEMENT_TYPES

    def __post_init__(self):
        if self.owner_history_mode not in OWNER_HISTORY_MODES:
            raise ValueError(
                f"owner_history_mode must be one of {OWNER_HISTORY_MODES}, got {self.owner_history_mode!r}"
            )
        for name in ("unordered_attributes", "important_inverse_edges", "element_types"):
            value = getattr(self, name)
            if not isinstance(value, frozenset):
                object.__setattr__(self, name, frozenset(value))
        for type_name, index in self.unordered_attributes | self.important_inverse_edges:
            if not isinstance(index, int) or index < 0:
                raise ValueError(f"attribute position for {type_name} must be a non-negative integer")

    def fingerprint(self) -> str:
        """Short digest identifying every option that influences hash strings."""
        payload = {
            "owner_history_mode": self.owner_history_mode,
            "unordered_attributes": sorted(map(list, self.unordered_attributes)),
            "important_inverse_edges": sorted(map(list, self.important_inverse_edges)),
            "reencode_guids": self.reencode_guids,
            "element_types": sorted(self.element_types),
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("ascii")).hexdigest()[:16]


@dataclass(frozen=True, slots=True)
class NodeDigest:
    hash_string: str
    hash_code: int
    # concatenated contributor digests from important inverse edges, "" if none
    inverse_tag: str = field(default="", compare=False)


def djb(s) -> int:
    """Bernstein hash, ``h = h*33 + c`` from 5381, wrapped to 32 bits."""
    data = s.encode("latin-1") if isinstance(s, str) else s
    h = 5381
    for c in data:
        h = (h * 33 + c) & _MASK32
    return h


@lru_cache(maxsize=None)
def _djb_weights(length: int) -> tuple[int, np.ndarray]:
    weights = np.empty(length, dtype=np.uint64)
    w = 1
    for i in range(length - 1, -1, -1):
        weights[i] = w
        w = (w * 33) & _MASK32
    return (5381 * w) & _MASK32, weights


def djb_many(strings: Sequence[str]) -> list[int]:
    """``[djb(s) for s in strings]``, vectorised over equal-length strings."""
    if not strings:
        return []
    length = len(strings[0])
    if length == 0 or any(len(s) != length for s in strings):
        return [djb(s) for s in strings]
    offset, weights = _djb_weights(length)
    chars = np.frombuffer("".join(strings).encode("latin-1"), dtype=np.uint8)
    # each product is < 2**40 and a row sums to < 2**47, so uint64 never wraps
    sums = chars.reshape(len(strings), length).astype(np.uint64) @ weights
    return ((sums + np.uint64(offset)) & np.uint64(_MASK32)).tolist()


def hash_string(content: str) -> str:
    return hashlib.sha256(content.encode("latin-1")).hexdigest()


def encode_guid(hex_digest: str) -> str:
    """22-character IFC base-64 form of the first 128 bits of ``hex_digest``."""
    n = int(hex_digest[:32], 16)
    chars = []
    for _ in range(22):
        chars.append(GUID_ALPHABET[n & 63])
        n >>= 6
    return "".join(reversed(chars))


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ValueError("threads must be >= 0")
    return threads or os.cpu_count() or 1


# --------------------------------------------------------------------------
# Canonical content


@lru_cache(maxsize=64)
def _positions_by_type(pairs: frozenset) -> dict[str, frozenset]:
    table: dict[str, set] = defaultdict(set)
    for type_name, index in pairs:
        table[type_name].add(index)
    return {k: frozenset(v) for k, v in table.items()}


class _Hasher:
    """Shared state for one hashing run: reference tokens and per-type tables."""

    def __init__(self, graph: ModelGraph, options: HashOptions, digests: Mapping[int, NodeDigest] = None):
        self.graph = graph
        self.options = options
        self.unordered = _positions_by_type(options.unordered_attributes)
        nodes = graph.nodes
        self.owner_histories = frozenset(i for i, inst in nodes.items() if inst.type_name == OWNER_HISTORY)
        self.mask_owner_history = options.owner_history_mode != "keep"
        self.inline = options.owner_history_mode == "inline"
        self.tokens: dict[int, str] = {}
        # the parser shares one attribute tuple between rows with identical
        # reference-free text, so identity is a safe memo key for leaves
        self._leaves: dict[tuple[str, int], tuple[tuple, str]] = {}
        self._forward = graph.forward
        if digests:
            for ident, d in digests.items():
                self.set_token(ident, d.hash_string)

    def set_token(self, ident: int, hex_digest: str) -> None:
        if self.mask_owner_history and ident in self.owner_histories:
            self.tokens[ident] = "$"
        else:
            self.tokens[ident] = "#" + hex_digest

    def content(self, inst: EntityInstance, blank_guid: bool = False) -> str:
        ref = self.tokens.__getitem__
        unordered = self.unordered.get(inst.type_name)
        masked = OWNER_HISTORY_TIMESTAMPS if self.inline and inst.type_name == OWNER_HISTORY else None
        try:
            if unordered is None and masked is None and not blank_guid:
                return inst.type_name + render_attributes(inst.attributes, ref)
            attrs = inst.attributes
            if unordered:
                for index in unordered:
                    if index >= len(attrs):
                        raise HashingError(
                            f"#{inst.id}: {inst.type_name} has no attribute at position {index} "
                            "named in the unordered attribute table"
                        )
            parts = []
            for i, value in enumerate(attrs):
                if (masked and i in masked) or (blank_guid and i == 0):
                    parts.append("$")
                elif unordered and i in unordered and type(value) is tuple:
                    members = sorted({render_value(v, ref) for v in value})
                    parts.append("(" + ",".join(members) + ")")
                else:
                    parts.append(render_value(value, ref))
            return inst.type_name + "(" + ",".join(parts) + ")"
        except KeyError as exc:
            raise HashingError(f"#{inst.id}: no digest for referenced node #{exc.args[0]}") from None

    def digest(self, inst: EntityInstance, inverse_tag: str = "", blank_guid: bool = False) -> str:
        if not inverse_tag and not blank_guid and self._forward.get(inst.id) == []:
            key = (inst.type_name, id(inst.attributes))
            hit = self._leaves.get(key)
            if hit is None:
                hit = self._leaves[key] = (inst.attributes, hash_string(self.content(inst)))
            return hit[1]
        h = hash_string(self.content(inst, blank_guid))
        if inverse_tag:
            h = hash_string(h + INVERSE_SEPARATOR + inverse_tag)
        return h


def canonical_content(
    node: EntityInstance,
    child_digest: Mapping[int, str],
    options: HashOptions = HashOptions(),
    owner_history_ids: Iterable[int] = (),
) -> str:
    """Hash input for ``node`` given the hex digests of the nodes it references.

    References to ``owner_history_ids`` print as ``$`` unless the owner
    history mode is ``keep``.
    """
    hasher = _Hasher(ModelGraph({}, {}, {}), options)
    hasher.owner_histories = frozenset(owner_history_ids)
    for ident, hex_digest in child_digest.items():
        hasher.set_token(ident, hex_digest)
    return hasher.content(node)


def _parallel_map(fn, items: list, pool) -> list:
    if pool is None or len(items) < 64:
        return [fn(x) for x in items]
    size = -(-len(items) // (pool._max_workers * 4))
    chunks = [items[i : i + size] for i in range(0, len(items), size)]
    out: list = []
    for part in pool.map(lambda chunk: [fn(x) for x in chunk], chunks):
        out.extend(part)
    return out


def _pool(threads: int):
    n = resolve_threads(threads)
    return ThreadPoolExecutor(max_workers=n) if n > 1 else None


def _finish(strings: dict[int, str], tags: Mapping[int, str] = None) -> dict[int, NodeDigest]:
    idents = list(strings)
    codes = djb_many([strings[i] for i in idents])
    tags = tags or {}
    return {i: NodeDigest(strings[i], c, tags.get(i, "")) for i, c in zip(idents, codes)}


def compute_all_digests(graph: ModelGraph, options: HashOptions = HashOptions(), threads: int = 1) -> dict[int, NodeDigest]:
    """Digest every node, one layer at a time from the leaves up.

    Nodes of one layer only depend on lower layers, so each layer is hashed
    in parallel; the result does not depend on ``threads``.
    """
    hasher = _Hasher(graph, options)
    nodes = graph.nodes
    strings: dict[int, str] = {}
    pool = _pool(threads)
    try:
        for layer in graph.layers:
            hexes = _parallel_map(lambda i: hasher.digest(nodes[i]), layer, pool)
            for ident, hx in zip(layer, hexes):
                strings[ident] = hx
                hasher.set_token(ident, hx)
    finally:
        if pool is not None:
            pool.shutdown()
    return _finish(strings)


def _recompute(
    graph: ModelGraph,
    digests: Mapping[int, NodeDigest],
    options: HashOptions,
    affected: set,
    tags: Mapping[int, str],
    threads: int,
    rewrite=None,
) -> dict[int, NodeDigest]:
    """Re-derive the digests of ``affected`` bottom-up from current child digests.

    ``rewrite(inst, hasher)`` may return a replacement instance before hashing.
    """
    hasher = _Hasher(graph, options, digests)
    nodes = graph.nodes
    strings = {i: d.hash_string for i, d in digests.items()}
    by_layer: dict[int, list[int]] = defaultdict(list)
    for ident in affected:
        by_layer[graph.layer[ident]].append(ident)
    all_tags = {i: d.inverse_tag for i, d in digests.items() if d.inverse_tag}
    all_tags.update(tags)
    pool = _pool(threads)

    def one(ident):
        inst = nodes[ident]
        tag = all_tags.get(ident, "")
        if rewrite is not None:
            inst = rewrite(inst, hasher, tag)
        return inst, hasher.digest(inst, tag)

    try:
        for depth in sorted(by_layer):
            layer = sorted(by_layer[depth])
            results = _parallel_map(one, layer, pool)
            for ident, (inst, hx) in zip(layer, results):
                nodes[ident] = inst
                strings[ident] = hx
                hasher.set_token(ident, hx)
    finally:
        if pool is not None:
            pool.shutdown()
    unchanged = {i: d for i, d in digests.items() if i not in affected}
    fresh = _finish({i: strings[i] for i in affected}, all_tags)
    unchanged.update(fresh)
    return {i: unchanged[i] for i in digests}


def augment_important_inverse(
    graph: ModelGraph, digests: Mapping[int, NodeDigest], options: HashOptions = HashOptions(), threads: int = 1
) -> dict[int, NodeDigest]:
    """Fold the digests of important inverse referrers into their targets.

    For each target ``n`` the new digest is
    ``sha256(old + "|INV|" + sorted referrer digests)``, using the referrer
    digests from before this pass; every ancestor of a target is then
    rehashed so the change propagates upwards.
    """
    edges = _positions_by_type(options.important_inverse_edges)
    contributors: dict[int, set] = defaultdict(set)
    for ident, inst in graph.nodes.items():
        positions = edges.get(inst.type_name)
        if not positions:
            continue
        for index in positions:
            if index < len(inst.attributes):
                for target in iter_refs(inst.attributes[index]):
                    contributors[target].add(digests[ident].hash_string)
    if not contributors:
        return dict(digests)
    tags = {n: "".join(sorted(c)) for n, c in contributors.items()}
    affected = set(tags) | graph.ancestors(tags)
    return _recompute(graph, digests, options, affected, tags, threads)


def _guid_target(inst: EntityInstance, options: HashOptions) -> bool:
    return (
        is_root_type(inst.type_name)
        and inst.type_name not in options.element_types
        and bool(inst.attributes)
        and type(inst.attributes[0]) is Text
    )


def reencode_guids(
    graph: ModelGraph, digests: Mapping[int, NodeDigest], options: HashOptions = HashOptions(), threads: int = 1
) -> tuple[ModelGraph, dict[int, NodeDigest]]:
    """Replace unstable GlobalIds with ones derived from node content.

    Applies to IfcRoot-derived instances that are not IfcElements. The new
    GlobalId encodes the digest of the node with its GlobalId slot blanked,
    so exports that differ only in random GUIDs converge. Nodes are rewritten
    in place in a copy of ``graph``.
    """
    nodes = dict(graph.nodes)
    out = ModelGraph(nodes, graph.forward, graph.inverse, graph.layer, graph.layers)
    if not options.reencode_guids:
        return out, dict(digests)
    targets = {i for i, inst in nodes.items() if _guid_target(inst, options)}
    if not targets:
        return out, dict(digests)
    affected = targets | out.ancestors(targets)

    def rewrite(inst, hasher, tag):
        if inst.id not in targets:
            return inst
        guid = encode_guid(hasher.digest(inst, tag, blank_guid=True))
        return inst.replace(attributes=(Text(guid),) + inst.attributes[1:])

    return out, _recompute(out, digests, options, affected, {}, threads, rewrite)


# --------------------------------------------------------------------------
# Owner history


def apply_owner_history(graph: ModelGraph, mode: str) -> tuple[ModelGraph, list[tuple[int, int]]]:
    """Prepare ``graph`` for the chosen owner-history mode.

    ``keep`` and ``inline`` leave the graph alone; for ``inline`` the list of
    (referrer, owner history) pairs that hashing will ignore is returned.
    ``drop`` nulls every such reference and removes the owner histories plus
    anything reachable only through them.
    """
    if mode not in OWNER_HISTORY_MODES:
        raise ValueError(f"unknown owner history mode {mode!r}")
    owners = {i for i, inst in graph.nodes.items() if inst.type_name == OWNER_HISTORY}
    deferred = sorted((r, o) for o in owners for r in graph.inverse[o] if r not in owners)
    if mode == "keep" or not owners:
        return graph, []
    if mode == "inline":
        return graph, deferred

    nodes = dict(graph.nodes)
    referrers = {r for r, _ in deferred}

    def drop(target):
        return NULL if target in owners else Ref(target)

    for ident in referrers:
        inst = nodes[ident]
        nodes[ident] = inst.replace(attributes=tuple(transform_refs(v, drop) for v in inst.attributes))

    removed = set(owners)
    candidates = graph.descendants(owners) - owners
    # parents sit in higher layers, so visiting top-down settles them first
    for ident in sorted(candidates, key=lambda i: -graph.layer[i]):
        if graph.inverse[ident] <= removed:
            removed.add(ident)
    for ident in removed:
        del nodes[ident]
    # only the dropped references and the removed nodes change, so patch the
    # adjacency instead of rescanning every row
    forward = {i: c for i, c in graph.forward.items() if i not in removed}
    for ident in referrers:
        forward[ident] = [c for c in forward[ident] if c not in owners]
    inverse = {i: r for i, r in graph.inverse.items() if i not in removed}
    for ident in removed:
        for child in set(graph.forward[ident]):
            if child not in removed:
                inverse[child] = inverse[child] - removed
    out = ModelGraph(nodes, forward, inverse)
    out.layer, out.layers = compute_layers(out)
    return out, []


# --------------------------------------------------------------------------
# Merging


def merge_redundant(graph: ModelGraph, digests: Mapping[int, NodeDigest]) -> tuple[ModelGraph, dict[int, int]]:
    """Keep one node per distinct digest and point every reference at it.

    Within a group the survivor is the node whose full rendering (references
    as digests, owner-history references included) sorts first, so the kept
    content never depends on input order. Returns the merged graph and the
    old-ID to survivor-ID map for every node of ``graph``.
    """
    groups: dict[str, list[int]] = defaultdict(list)
    for ident in graph.nodes:
        groups[digests[ident].hash_string].append(ident)

    full_tokens = {i: "#" + d.hash_string for i, d in digests.items()}.__getitem__
    remap: dict[int, int] = {}
    source = graph.nodes
    for members in groups.values():
        if len(members) == 1:
            survivor = members[0]
        elif len({id(source[i].attributes) for i in members}) == 1:
            # one shared attribute tuple renders identically for every member
            survivor = min(members)
        else:
            survivor = min(members, key=lambda i: (render_attributes(source[i].attributes, full_tokens), i))
        for ident in members:
            remap[ident] = survivor

    survivors = {s for s in remap.values()}
    if len(survivors) == len(graph.nodes):
        return graph, remap

    to_survivor = lambda target: Ref(remap[target])  # noqa: E731
    nodes: dict[int, EntityInstance] = {}
    forward: dict[int, list[int]] = {}
    inverse: dict[int, set[int]] = {s: set() for s in survivors}
    for ident in sorted(survivors):
        inst = graph.nodes[ident]
        children = graph.forward[ident]
        if any(remap[c] != c for c in children):
            inst = inst.replace(attributes=tuple(transform_refs(v, to_survivor) for v in inst.attributes))
            children = [remap[c] for c in children]
        nodes[ident] = inst
        forward[ident] = children
        for c in children:
            inverse[c].add(ident)
    # equal digests imply equal subtree depth, so layers carry over
    layer = {i: graph.layer[i] for i in survivors}
    layers = [[i for i in group if i in survivors] for group in graph.layers]
    return ModelGraph(nodes, forward, inverse, layer, [g for g in layers if g]), remap


def sort_unordered(graph: ModelGraph, digests: Mapping[int, NodeDigest], options: HashOptions = HashOptions()) -> ModelGraph:
    """Order (and de-duplicate) members of unordered aggregates by content.

    The sort key is the member's canonical content form, the same one used
    for hashing, so shuffled sets serialise identically.
    """
    table = _positions_by_type(options.unordered_attributes)
    hasher = _Hasher(graph, options, digests)
    ref = hasher.tokens.__getitem__
    nodes = dict(graph.nodes)
    forward = graph.forward
    for ident, inst in graph.nodes.items():
        positions = table.get(inst.type_name)
        if not positions:
            continue
        attrs = list(inst.attributes)
        changed = False
        for index in positions:
            if index >= len(attrs) or type(attrs[index]) is not tuple:
                continue
            keyed = {}
            for member in attrs[index]:
                keyed.setdefault(render_value(member, ref), member)
            ordered = tuple(keyed[k] for k in sorted(keyed))
            if ordered != attrs[index]:
                attrs[index] = ordered
                changed = True
        if changed:
            nodes[ident] = inst.replace(attributes=tuple(attrs))
            if forward is graph.forward:
                forward = dict(forward)
            forward[ident] = forward_refs(nodes[ident])
    return ModelGraph(nodes, forward, graph.inverse, graph.layer, graph.layers)
