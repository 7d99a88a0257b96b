"""End-to-end normalization: parse, hash, merge, renumber, write."""

from __future__ import annotations

import gc
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Union

from .diffkit import HashSetManifest, export_hash_set
from .graph import ModelGraph, build_graph
from .hashing import (
    HashOptions,
    NodeDigest,
    apply_owner_history,
    augment_important_inverse,
    compute_all_digests,
    merge_redundant,
    reencode_guids,
    sort_unordered,
)
from .ids import IdConfig, PrefixSpacePlan, assign_ids
from .step import RawFile, parse, render_attributes, strip_timestamp

__all__ = ["NormalizeOptions", "NormalizeResult", "normalize", "normalize_file", "hash_model"]


@dataclass(frozen=True)
class NormalizeOptions:
    hashing: HashOptions = HashOptions()
    ids: IdConfig = IdConfig()
    strip_header_timestamp: bool = False
    threads: int = 1


@dataclass
class NormalizeResult:
    output: bytes
    source: RawFile
    graph: ModelGraph  # merged graph, still keyed by input IDs
    digests: dict[int, NodeDigest]  # every input node that survived owner-history handling
    remap: dict[int, int]  # input ID -> surviving input ID
    new_ids: dict[int, int]  # surviving input ID -> output ID
    plan: PrefixSpacePlan
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def input_rows(self) -> int:
        return len(self.source.data_rows)

    @property
    def output_rows(self) -> int:
        return len(self.graph.nodes)

    @property
    def merged(self) -> int:
        return len(self.remap) - len(self.graph.nodes)

    def output_id(self, input_id: int) -> int:
        return self.new_ids[self.remap[input_id]]

    def manifest(self, options: HashOptions = None) -> HashSetManifest:
        fingerprint = options.fingerprint() if options is not None else ""
        return export_hash_set(self.graph, self.digests, self.source.schema_name, fingerprint)

    def summary(self) -> str:
        lines = [
            f"input rows:   {self.input_rows}",
            f"output rows:  {self.output_rows}",
            f"merged:       {self.merged}",
            f"spaces:       {self.plan.total_spaces} (V={self.plan.config.capacity}, k={self.plan.config.spare_rate})",
        ]
        if self.plan.spilled:
            lines.append(f"spilled:      {self.plan.spilled} nodes from {len(self.plan.overflowed)} full spaces")
        lines.extend(f"time {stage + ':':<13} {seconds:.3f}s" for stage, seconds in self.timings.items())
        return "\n".join(lines)


class _Stopwatch:
    def __init__(self):
        self.timings: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        yield
        self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start


@contextmanager
def _cyclic_gc_paused():
    """The pipeline allocates millions of acyclic containers; skip the cycle scans."""
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def hash_model(source: RawFile, options: NormalizeOptions = NormalizeOptions(), watch: _Stopwatch = None):
    """Graph, final digests (before merging) and the merged graph for ``source``."""
    watch = watch or _Stopwatch()
    hopts = options.hashing
    with watch.stage("graph"):
        graph = build_graph(source)
        graph, _ = apply_owner_history(graph, hopts.owner_history_mode)
    with watch.stage("hash"):
        digests = compute_all_digests(graph, hopts, options.threads)
        digests = augment_important_inverse(graph, digests, hopts, options.threads)
        if hopts.reencode_guids:
            graph, digests = reencode_guids(graph, digests, hopts, options.threads)
    with watch.stage("merge"):
        merged, remap = merge_redundant(graph, digests)
        merged = sort_unordered(merged, digests, hopts)
    return graph, digests, merged, remap


def normalize(data: Union[bytes, str, RawFile], options: NormalizeOptions = NormalizeOptions()) -> NormalizeResult:
    with _cyclic_gc_paused():
        return _normalize(data, options)


def _normalize(data, options: NormalizeOptions) -> NormalizeResult:
    watch = _Stopwatch()
    if isinstance(data, RawFile):
        source = data
    else:
        with watch.stage("parse"):
            source = parse(data)
    _, digests, merged, remap = hash_model(source, options, watch)
    with watch.stage("assign ids"):
        new_ids, plan = assign_ids(merged, digests, options.ids, options.threads)
    with watch.stage("write"):
        output = _write(source, merged, new_ids, options)
    return NormalizeResult(output, source, merged, digests, remap, new_ids, plan, watch.timings)


def _write(source: RawFile, graph: ModelGraph, new_ids: dict[int, int], options: NormalizeOptions) -> bytes:
    lines = ["ISO-10303-21;", "HEADER;"]
    for keyword, args in source.header_records:
        if keyword == "FILE_NAME" and options.strip_header_timestamp:
            args = strip_timestamp(args)
        lines.append(f"{keyword}({args});")
    lines += ["ENDSEC;", "DATA;"]
    tokens = {old: f"#{new}" for old, new in new_ids.items()}.__getitem__
    nodes = graph.nodes
    for old in sorted(new_ids, key=new_ids.__getitem__):
        inst = nodes[old]
        lines.append(f"#{new_ids[old]}={inst.type_name}{render_attributes(inst.attributes, tokens)};")
    lines += ["ENDSEC;", "END-ISO-10303-21;", ""]
    return "\n".join(lines).encode("latin-1")


def normalize_file(path, options: NormalizeOptions = NormalizeOptions()) -> NormalizeResult:
    with open(path, "rb") as fh:
        return normalize(fh.read(), options)

