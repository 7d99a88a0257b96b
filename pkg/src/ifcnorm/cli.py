"""Command-line front end.

Subcommands::

    ifcnorm normalize in.ifc -o out.ifc
    ifcnorm hash in.ifc -o in.ifchash
    ifcnorm diff old.ifc new.ifc --list
    ifcnorm check in.ifc

Exit codes: 0 success, 1 unreadable model (parse, graph or manifest
error), 2 prefix-space capacity exhausted, 3 I/O failure, 4 the compared
files or internal check runs differ, 64 bad command line.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .diffkit import (
    ManifestError,
    diff_hash_sets,
    export_hash_set,
    format_manifest,
    looks_like_manifest,
    parse_manifest,
)
from .graph import GraphError
from .hashing import OWNER_HISTORY_MODES, HashingError, HashOptions
from .ids import SCALING_MODES, CapacityError, IdConfig
from .pipeline import NormalizeOptions, _cyclic_gc_paused, hash_model, normalize
from .step import StepError, parse
from .synthetic import rename_ids, serialize, shuffle_rows, shuffle_unordered

__all__ = ["CliConfig", "cmd_normalize", "cmd_hash", "cmd_diff", "cmd_check", "main"]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CAPACITY = 2
EXIT_IO = 3
EXIT_DIFFERENT = 4
EXIT_USAGE = 64

MIN_CAPACITY = 256


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    subcommand: str
    inputs: list[str] = field(default_factory=list)
    output: str = "-"
    owner_history_mode: str = "drop"
    strip_header_timestamp: bool = False
    threads: int = 1
    capacity: int = 65536
    spare_rate: float = 2.0
    scaling: str = "power_of_two"
    reencode_guids: bool = True
    unordered_table: Optional[str] = None
    list_changes: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.capacity < MIN_CAPACITY:
            raise UsageError(f"--capacity must be at least {MIN_CAPACITY}")
        if not self.spare_rate > 1.0:
            raise UsageError("--spare-rate must be greater than 1")
        if self.threads < 0:
            raise UsageError("--threads must be 0 (auto) or positive")
        if self.owner_history_mode not in OWNER_HISTORY_MODES:
            raise UsageError(f"--owner-history must be one of {', '.join(OWNER_HISTORY_MODES)}")
        if self.scaling not in SCALING_MODES:
            raise UsageError(f"--scaling must be one of {', '.join(SCALING_MODES)}")

    def hash_options(self) -> HashOptions:
        extra = {}
        if self.unordered_table is not None:
            extra["unordered_attributes"] = load_unordered_table(self.unordered_table)
        return HashOptions(
            owner_history_mode=self.owner_history_mode, reencode_guids=self.reencode_guids, **extra
        )

    def normalize_options(self) -> NormalizeOptions:
        return NormalizeOptions(
            hashing=self.hash_options(),
            ids=IdConfig(self.capacity, self.spare_rate, self.scaling),
            strip_header_timestamp=self.strip_header_timestamp,
            threads=self.threads,
        )


def load_unordered_table(path: str) -> frozenset:
    """Read ``{"IFCTYPE": [zero-based positions]}``; replaces the built-in table."""
    try:
        table = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(table, dict):
        raise UsageError(f"{path}: expected an object mapping type names to position lists")
    pairs = set()
    for type_name, positions in table.items():
        if not isinstance(positions, list) or not all(isinstance(p, int) and p >= 0 for p in positions):
            raise UsageError(f"{path}: positions for {type_name} must be a list of non-negative integers")
        pairs.update((type_name.upper(), p) for p in positions)
    return frozenset(pairs)


# --------------------------------------------------------------------------
# I/O


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str, data: bytes) -> None:
    """Write ``data`` atomically: a failed run leaves an existing file untouched."""
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _say(*lines: str) -> None:
    for line in lines:
        print(line, file=sys.stderr)


# --------------------------------------------------------------------------
# Subcommands


def cmd_normalize(config: CliConfig) -> int:
    start = time.perf_counter()
    result = normalize(_read(config.inputs[0]), config.normalize_options())
    _write(config.output, result.output)
    _say(result.summary(), f"time total:        {time.perf_counter() - start:.3f}s")
    return EXIT_OK


def _manifest_of(path: str, config: CliConfig):
    data = _read(path)
    if looks_like_manifest(data[:16]):
        return parse_manifest(data.decode("ascii"))
    options = config.normalize_options()
    with _cyclic_gc_paused():
        raw = parse(data)
        _, digests, merged, _ = hash_model(raw, options)
    return export_hash_set(merged, digests, raw.schema_name, options.hashing.fingerprint())


def cmd_hash(config: CliConfig) -> int:
    manifest = _manifest_of(config.inputs[0], config)
    _write(config.output, format_manifest(manifest).encode("ascii"))
    _say(f"nodes: {len(manifest)}", f"options: {manifest.options_fingerprint}")
    return EXIT_OK


def cmd_diff(config: CliConfig) -> int:
    a = _manifest_of(config.inputs[0], config)
    b = _manifest_of(config.inputs[1], config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        added, removed = diff_hash_sets(a, b)
    for w in caught:
        _say(f"warning: {w.message}")
    print(f"added: {len(added)}, removed: {len(removed)}")
    if config.list_changes:
        for h in added:
            print(f"+ {h}")
        for h in removed:
            print(f"- {h}")
    return EXIT_OK if not added and not removed else EXIT_DIFFERENT


def _first_difference(a: bytes, b: bytes) -> str:
    left, right = a.split(b"\n"), b.split(b"\n")
    for number, (x, y) in enumerate(zip(left, right), start=1):
        if x != y:
            return f"line {number}:\n  expected {x.decode('latin-1')}\n  got      {y.decode('latin-1')}"
    number = min(len(left), len(right)) + 1
    return f"line {number}: one output ends early ({len(left)} vs {len(right)} lines)"


def cmd_check(config: CliConfig) -> int:
    """Re-normalize the input under equivalent transformations and compare."""
    data = _read(config.inputs[0])
    options = config.normalize_options()
    reference = normalize(data, options)
    raw = reference.source
    rng = random.Random(config.seed)
    threads = max(2, os.cpu_count() or 1) if config.threads == 1 else 1
    variants = [
        ("idempotence", lambda: reference.output),
        ("row order", lambda: serialize(shuffle_rows(raw, rng))),
        ("instance names", lambda: serialize(rename_ids(raw, rng))),
        ("set member order", lambda: serialize(shuffle_unordered(raw, rng, options.hashing.unordered_attributes))),
        ("all of the above", lambda: serialize(shuffle_unordered(rename_ids(shuffle_rows(raw, rng), rng), rng))),
    ]
    failed = False
    for name, make in variants:
        got = normalize(make(), options).output
        if got == reference.output:
            _say(f"ok    {name}")
        else:
            failed = True
            _say(f"FAIL  {name}: {_first_difference(reference.output, got)}")
    threaded = normalize(data, NormalizeOptions(options.hashing, options.ids, options.strip_header_timestamp, threads))
    if threaded.output == reference.output:
        _say(f"ok    threads {options.threads} vs {threads}")
    else:
        failed = True
        _say(f"FAIL  threads {options.threads} vs {threads}: {_first_difference(reference.output, threaded.output)}")
    if data == reference.output:
        _say("info  input is already normalized under these options")
    else:
        _say("info  input is not a fixed point under these options (first change at "
             + _first_difference(data, reference.output).split(":", 1)[0] + ")")
    return EXIT_DIFFERENT if failed else EXIT_OK


COMMANDS = {"normalize": cmd_normalize, "hash": cmd_hash, "diff": cmd_diff, "check": cmd_check}


# --------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--owner-history", dest="owner_history_mode", choices=OWNER_HISTORY_MODES, default="drop")
    common.add_argument("--strip-header-timestamp", action="store_true")
    common.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")
    common.add_argument("--capacity", type=int, default=65536, help="suffix slots per prefix space (V)")
    common.add_argument("--spare-rate", type=float, default=2.0, help="prefix-space spare rate (k)")
    common.add_argument("--scaling", choices=SCALING_MODES, default="power_of_two")
    common.add_argument("--no-reencode-guids", dest="reencode_guids", action="store_false")
    common.add_argument("--unordered-table", metavar="PATH", help="JSON object TYPE -> [positions]")

    parser = _Parser(prog="ifcnorm", description="Canonical, Git-friendly normalization of IFC files.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    p = sub.add_parser("normalize", parents=[common], help="write the normalized model")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="-")
    p = sub.add_parser("hash", parents=[common], help="write the .ifchash manifest")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="-")
    p = sub.add_parser("diff", parents=[common], help="compare two models or manifests")
    p.add_argument("old")
    p.add_argument("new")
    p.add_argument("--list", dest="list_changes", action="store_true", help="print every added and removed digest")
    p = sub.add_parser("check", parents=[common], help="self-test idempotence and invariance on a file")
    p.add_argument("input")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _config(args: argparse.Namespace) -> CliConfig:
    values = vars(args).copy()
    if args.subcommand == "diff":
        inputs = [values.pop("old"), values.pop("new")]
    else:
        inputs = [values.pop("input")]
    return CliConfig(inputs=inputs, **values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config(args)
        return COMMANDS[config.subcommand](config)
    except UsageError as exc:
        _say(f"ifcnorm: error: {exc}")
        return EXIT_USAGE
    except CapacityError as exc:
        _say(f"ifcnorm: {exc}")
        return EXIT_CAPACITY
    except (StepError, GraphError, HashingError, ManifestError) as exc:
        _say(f"ifcnorm: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        _say(f"ifcnorm: {exc}")
        return EXIT_IO
