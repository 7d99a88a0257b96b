"""Shared helpers, the test corpus and the acceptance-criteria report."""

from __future__ import annotations

import difflib
from contextlib import contextmanager
from pathlib import Path

import pytest

from ifcnorm.synthetic import duplicate_subtrees, generate_model, serialize

CORPUS_DIR = Path(__file__).parent / "corpus"

_ACCEPTANCE = pytest.StashKey[list]()


def ifc_text(rows: str, schema: str = "IFC4", timestamp: str = "2024-01-01T00:00:00") -> bytes:
    """A complete exchange structure around ``rows`` (one ``#id=...;`` per line)."""
    body = "\n".join(line.strip(" ") for line in rows.strip(" \n").split("\n"))
    return (
        "ISO-10303-21;\nHEADER;\n"
        "FILE_DESCRIPTION(('ViewDefinition [CoordinationView]'),'2;1');\n"
        f"FILE_NAME('t.ifc','{timestamp}',(''),(''),'','','');\n"
        f"FILE_SCHEMA(('{schema}'));\nENDSEC;\nDATA;\n{body}\nENDSEC;\nEND-ISO-10303-21;\n"
    ).encode("latin-1")


def data_lines(output: bytes) -> list[bytes]:
    lines = output.split(b"\n")
    start = lines.index(b"DATA;") + 1
    return lines[start : lines.index(b"ENDSEC;", start)]


def changed_lines(a: bytes, b: bytes) -> tuple[list[bytes], list[bytes]]:
    """Lines removed from ``a`` and added in ``b`` by a line diff."""
    left, right = a.split(b"\n"), b.split(b"\n")
    removed, added = [], []
    for tag, i1, i2, j1, j2 in difflib.SequenceMatcher(None, left, right, autojunk=False).get_opcodes():
        if tag in ("replace", "delete"):
            removed.extend(left[i1:i2])
        if tag in ("replace", "insert"):
            added.extend(right[j1:j2])
    return removed, added


def _synthetic_corpus() -> dict[str, bytes]:
    import random

    small = generate_model(12, seed=3)
    dup, _ = duplicate_subtrees(small.parse(), 0.2, random.Random(9), max_layer=2)
    return {
        "synthetic_small": small.text,
        "synthetic_storeys": generate_model(45, seed=11, storeys=3, export_seed=2).text,
        "synthetic_duplicated": serialize(dup),
    }


def corpus() -> dict[str, bytes]:
    files = {p.stem: p.read_bytes() for p in sorted(CORPUS_DIR.glob("*.ifc"))}
    files.update(_synthetic_corpus())
    return files


@pytest.fixture(scope="session")
def corpus_files() -> dict[str, bytes]:
    return corpus()


# --------------------------------------------------------------------------
# acceptance report: one PASS/FAIL line per criterion


class _Criterion:
    def __init__(self, number: str, title: str):
        self.number = number
        self.title = title
        self.detail = ""


@pytest.fixture
def criterion(request):
    log = request.config.stash[_ACCEPTANCE]

    @contextmanager
    def run(number: str, title: str):
        c = _Criterion(number, title)
        try:
            yield c
        except BaseException as exc:
            reason = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
            log.append(f"FAIL  criterion {number:>2}: {title} ({reason})")
            print(log[-1])
            raise
        log.append(f"PASS  criterion {number:>2}: {title}" + (f" ({c.detail})" if c.detail else ""))
        print(log[-1])

    return run


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
