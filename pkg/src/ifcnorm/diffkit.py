"""Hash-set manifests and set-difference comparison of model versions.

A manifest is the sorted set of node digests of a merged model. Two files
describe the same graph exactly when their manifests agree, and the set
difference names the nodes that really changed, even when prefix-space
counts moved between versions and row IDs shifted.

The ``.ifchash`` file format is plain text::

    schema: IFC4
    options: 3f2a9c0d5e6b7a81
    <64-hex digest>
    ...
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .hashing import NodeDigest

__all__ = [
    "HashSetManifest",
    "ManifestError",
    "export_hash_set",
    "diff_hash_sets",
    "format_manifest",
    "parse_manifest",
    "read_manifest",
    "write_manifest",
]

_HEX64 = re.compile(r"[0-9a-f]{64}\Z")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class HashSetManifest:
    schema_name: str
    options_fingerprint: str
    hashes: tuple[str, ...]

    def __post_init__(self):
        for a, b in zip(self.hashes, self.hashes[1:]):
            if not a < b:
                raise ManifestError("manifest digests must be strictly ascending")

    def __len__(self) -> int:
        return len(self.hashes)


def export_hash_set(
    graph, digests: Mapping[int, NodeDigest], schema_name: str = "", options_fingerprint: str = ""
) -> HashSetManifest:
    """Manifest of the digests of every node in ``graph``."""
    unique = {digests[ident].hash_string for ident in graph.nodes}
    return HashSetManifest(schema_name, options_fingerprint, tuple(sorted(unique)))


def diff_hash_sets(a: HashSetManifest, b: HashSetManifest) -> tuple[list[str], list[str]]:
    """``(added, removed)`` going from ``a`` to ``b``, both sorted."""
    if a.options_fingerprint != b.options_fingerprint:
        warnings.warn(
            f"manifests were hashed with different options ({a.options_fingerprint} vs "
            f"{b.options_fingerprint}); every node may appear changed",
            stacklevel=2,
        )
    left, right = set(a.hashes), set(b.hashes)
    return sorted(right - left), sorted(left - right)


def format_manifest(manifest: HashSetManifest) -> str:
    lines = [f"schema: {manifest.schema_name}", f"options: {manifest.options_fingerprint}"]
    lines.extend(manifest.hashes)
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> HashSetManifest:
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith("schema:") or not lines[1].startswith("options:"):
        raise ManifestError("manifest must start with 'schema:' and 'options:' lines")
    hashes = []
    for number, line in enumerate(lines[2:], start=3):
        if not _HEX64.match(line):
            raise ManifestError(f"line {number}: expected a 64-character lowercase hex digest")
        hashes.append(line)
    return HashSetManifest(lines[0][7:].strip(), lines[1][8:].strip(), tuple(hashes))


def read_manifest(path) -> HashSetManifest:
    return parse_manifest(Path(path).read_text(encoding="ascii"))


def write_manifest(manifest: HashSetManifest, path) -> None:
    Path(path).write_text(format_manifest(manifest), encoding="ascii", newline="\n")


def looks_like_manifest(head: bytes) -> bool:
    return head.startswith(b"schema:")


def summarize(added: Iterable[str], removed: Iterable[str]) -> str:
    return f"added: {len(list(added))}, removed: {len(list(removed))}"
