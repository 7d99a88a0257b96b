"""Synthetic IFC4 models and equivalence-preserving file transformations.

The generator writes the kind of file a BIM authoring tool exports: one
owner history shared by every rooted entity, spatial structure, elements with
placements, swept or tessellated geometry, surface styles and property sets.
Like real exporters it repeats identical leaf rows (directions, origins,
colours) instead of sharing them, and writes random GlobalIds for
everything except the elements themselves.

Each element is generated from its own key, so two exports that share a key
share that element's content while instance names shift around it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable

from .graph import build_graph, forward_refs
from .hashing import GUID_ALPHABET
from .ifcschema import OWNER_HISTORY, STYLED_BY_ITEM, UNORDERED_ATTRIBUTES
from .step import EntityInstance, RawFile, Ref, canonical_row, parse, transform_refs

__all__ = [
    "SyntheticModel",
    "generate_model",
    "generate_bytes",
    "serialize",
    "shuffle_rows",
    "rename_ids",
    "duplicate_subtrees",
    "shuffle_unordered",
    "set_owner_history_timestamp",
]

DEFAULT_TIMESTAMP = 1675245600
HEADER_TIME = "2023-02-01T10:00:00"

_PALETTE = [
    (0.8, 0.8, 0.8),
    (0.6, 0.3, 0.2),
    (0.2, 0.4, 0.7),
    (0.9, 0.9, 0.6),
    (0.3, 0.3, 0.3),
    (0.55, 0.75, 0.35),
]
_WINDOW_FAMILIES = 4


@dataclass
class SyntheticModel:
    text: bytes
    # element key -> instance names written only for that element
    element_rows: dict[str, set[int]] = field(default_factory=dict)
    element_ids: dict[str, int] = field(default_factory=dict)

    def parse(self) -> RawFile:
        return parse(self.text)


def _guid(rng: random.Random) -> str:
    return rng.choice("0123") + "".join(rng.choice(GUID_ALPHABET) for _ in range(21))


def _real(x: float) -> str:
    text = repr(float(x))
    return text[:-1] if text.endswith(".0") else text


class _Rows:
    def __init__(self):
        self.lines: list[str] = []
        self.next_id = 1
        self.capture: set | None = None

    def add(self, type_name: str, args: str) -> int:
        ident = self.next_id
        self.next_id += 1
        self.lines.append(f"#{ident}={type_name}({args});")
        if self.capture is not None:
            self.capture.add(ident)
        return ident


def _header(timestamp: str, schema: str = "IFC4") -> str:
    return (
        "ISO-10303-21;\nHEADER;\n"
        "FILE_DESCRIPTION(('ViewDefinition [ReferenceView_V1.2]'),'2;1');\n"
        f"FILE_NAME('model.ifc','{timestamp}',('Architect'),('Building Designer Office'),"
        "'The EXPRESS Data Manager Version 5.02.0100.07','Autodesk Revit 2023 (ENU)','');\n"
        f"FILE_SCHEMA(('{schema}'));\nENDSEC;\nDATA;\n"
    )


def _point(rows: _Rows, *coords: float) -> int:
    return rows.add("IFCCARTESIANPOINT", "(" + ",".join(_real(c) for c in coords) + ")")


def _direction(rows: _Rows, *coords: float) -> int:
    return rows.add("IFCDIRECTION", "(" + ",".join(_real(c) for c in coords) + ")")


def _placement3d(rows: _Rows, location=(0.0, 0.0, 0.0), axes: bool = True) -> int:
    pt = _point(rows, *location)
    if axes:
        z = _direction(rows, 0.0, 0.0, 1.0)
        x = _direction(rows, 1.0, 0.0, 0.0)
        return rows.add("IFCAXIS2PLACEMENT3D", f"#{pt},#{z},#{x}")
    return rows.add("IFCAXIS2PLACEMENT3D", f"#{pt},$,$")


def _style(rows: _Rows, item: int, colour, name: str) -> None:
    c = rows.add("IFCCOLOURRGB", "$," + ",".join(_real(v) for v in colour))
    shading = rows.add("IFCSURFACESTYLESHADING", f"#{c},0.")
    style = rows.add("IFCSURFACESTYLE", f"'{name}',.BOTH.,(#{shading})")
    rows.add("IFCSTYLEDITEM", f"#{item},(#{style}),$")


def _extrusion(rows: _Rows, length: float, width: float, height: float) -> int:
    origin2d = _point(rows, 0.0, 0.0)
    ax2d = rows.add("IFCAXIS2PLACEMENT2D", f"#{origin2d},$")
    profile = rows.add("IFCRECTANGLEPROFILEDEF", f".AREA.,$,#{ax2d},{_real(length)},{_real(width)}")
    position = _placement3d(rows, axes=False)
    up = _direction(rows, 0.0, 0.0, 1.0)
    return rows.add("IFCEXTRUDEDAREASOLID", f"#{profile},#{position},#{up},{_real(height)}")


def _mesh(rows: _Rows, family: int) -> int:
    w = 600.0 + 300.0 * family
    h = 1200.0 + 150.0 * family
    d = 80.0 + 10.0 * family
    corners = [(0, 0, 0), (w, 0, 0), (w, d, 0), (0, d, 0), (0, 0, h), (w, 0, h), (w, d, h), (0, d, h)]
    points = rows.add(
        "IFCCARTESIANPOINTLIST3D",
        "(" + ",".join("(" + ",".join(_real(c) for c in p) + ")" for p in corners) + ")",
    )
    faces = [(1, 2, 3), (1, 3, 4), (5, 6, 7), (5, 7, 8), (1, 2, 6), (1, 6, 5), (2, 3, 7), (2, 7, 6),
             (3, 4, 8), (3, 8, 7), (4, 1, 5), (4, 5, 8)]
    index = "(" + ",".join("(" + ",".join(map(str, f)) + ")" for f in faces) + ")"
    return rows.add("IFCTRIANGULATEDFACESET", f"#{points},$,.T.,{index},$")


def _psets(rows: _Rows, rng: random.Random, guids: random.Random, oh: int, element: int, kind: str) -> None:
    for name, count in ((f"Pset_{kind.title()}Common", 4), ("Identity Data", 3)):
        props = []
        for j in range(count):
            roll = rng.random()
            if roll < 0.4:
                value = f"IFCLABEL('{kind}-{rng.randrange(10_000)}')"
            elif roll < 0.7:
                value = f"IFCLENGTHMEASURE({_real(round(rng.uniform(10, 5000), 1))})"
            elif roll < 0.85:
                value = f"IFCBOOLEAN(.{'T' if rng.random() < 0.5 else 'F'}.)"
            else:
                value = f"IFCINTEGER({rng.randrange(100)})"
            props.append(rows.add("IFCPROPERTYSINGLEVALUE", f"'Prop{j}',$,{value},$"))
        pset = rows.add("IFCPROPERTYSET", f"'{_guid(guids)}',#{oh},'{name}',$,(" + ",".join(f"#{p}" for p in props) + ")")
        rows.add("IFCRELDEFINESBYPROPERTIES", f"'{_guid(guids)}',#{oh},$,$,(#{element}),#{pset}")


def _element(rows, key, seed, guids, oh, ctx, storey_placement):
    rng = random.Random(f"{seed}:{key}")
    kind = rng.choices(["wall", "slab", "column", "window", "door"], weights=[5, 2, 2, 3, 1])[0]
    location = (round(rng.uniform(0, 60000), 1), round(rng.uniform(0, 40000), 1), 0.0)
    axes = _placement3d(rows, location)
    placement = rows.add("IFCLOCALPLACEMENT", f"#{storey_placement},#{axes}")
    reps = []
    if kind in ("window", "door"):
        family = rng.randrange(_WINDOW_FAMILIES)
        item = _mesh(rows, family)
        # a few family members get an odd colour: same shape, different style
        colour = _PALETTE[family] if rng.random() < 0.8 else rng.choice(_PALETTE)
        body = rows.add("IFCSHAPEREPRESENTATION", f"#{ctx},'Body','Tessellation',(#{item})")
    else:
        if kind == "wall":
            dims = (round(rng.uniform(1000, 8000), 1), rng.choice([100.0, 200.0, 300.0]), 3000.0)
        elif kind == "slab":
            dims = (round(rng.uniform(3000, 9000), 1), round(rng.uniform(3000, 9000), 1), 250.0)
        else:
            dims = (400.0, 400.0, 3000.0)
        item = _extrusion(rows, *dims)
        colour = rng.choice(_PALETTE)
        body = rows.add("IFCSHAPEREPRESENTATION", f"#{ctx},'Body','SweptSolid',(#{item})")
        if kind == "wall":
            a = _point(rows, 0.0, 0.0)
            b = _point(rows, dims[0], 0.0)
            line = rows.add("IFCPOLYLINE", f"(#{a},#{b})")
            reps.append(rows.add("IFCSHAPEREPRESENTATION", f"#{ctx},'Axis','Curve2D',(#{line})"))
    _style(rows, item, colour, f"Material {_PALETTE.index(colour)}")
    reps.insert(0, body)
    shape = rows.add("IFCPRODUCTDEFINITIONSHAPE", "$,$,(" + ",".join(f"#{r}" for r in reps) + ")")
    entity = {"wall": "IFCWALL", "slab": "IFCSLAB", "column": "IFCCOLUMN", "window": "IFCWINDOW", "door": "IFCDOOR"}[kind]
    tail = {
        "IFCWALL": "'{tag}',.STANDARD.",
        "IFCSLAB": "'{tag}',.FLOOR.",
        "IFCCOLUMN": "'{tag}',.COLUMN.",
        "IFCWINDOW": "'{tag}',$,$,.WINDOW.,.NOTDEFINED.,$",
        "IFCDOOR": "'{tag}',$,$,.DOOR.,.NOTDEFINED.,$",
    }[entity].format(tag=rng.randrange(100_000, 999_999))
    element = rows.add(entity, f"'{_guid(rng)}',#{oh},'{kind.title()}:{key}',$,$,#{placement},#{shape},{tail}")
    _psets(rows, rng, guids, oh, element, kind)
    return element


def generate_model(
    n_elements: int = 150,
    seed: int = 0,
    *,
    export_seed: int = 0,
    timestamp: int = DEFAULT_TIMESTAMP,
    header_time: str = HEADER_TIME,
    exclude: Iterable[str] = (),
    extra: Iterable[str] = (),
    storeys: int | None = None,
) -> SyntheticModel:
    """A model with elements ``E0..E{n-1}`` minus ``exclude`` plus the ``extra`` keys.

    ``export_seed`` drives everything an exporter would vary between runs:
    non-element GlobalIds and the order of contained elements.
    """
    guids = random.Random(f"export:{export_seed}")
    rows = _Rows()
    person = rows.add("IFCPERSON", "$,'Doe','Jane',$,$,$,$,$")
    org = rows.add("IFCORGANIZATION", "$,'Building Designer Office',$,$,$")
    po = rows.add("IFCPERSONANDORGANIZATION", f"#{person},#{org},$")
    app = rows.add("IFCAPPLICATION", f"#{org},'2023','Autodesk Revit 2023 (ENU)','Revit'")
    oh = rows.add(OWNER_HISTORY, f"#{po},#{app},$,.ADDED.,{timestamp},#{po},#{app},{timestamp}")
    units = [
        rows.add("IFCSIUNIT", "*,.LENGTHUNIT.,.MILLI.,.METRE."),
        rows.add("IFCSIUNIT", "*,.AREAUNIT.,$,.SQUARE_METRE."),
        rows.add("IFCSIUNIT", "*,.VOLUMEUNIT.,$,.CUBIC_METRE."),
        rows.add("IFCSIUNIT", "*,.PLANEANGLEUNIT.,$,.RADIAN."),
    ]
    unit_assignment = rows.add("IFCUNITASSIGNMENT", "(" + ",".join(f"#{u}" for u in units) + ")")
    world = _placement3d(rows)
    ctx = rows.add("IFCGEOMETRICREPRESENTATIONCONTEXT", f"$,'Model',3,1.E-05,#{world},$")
    project = rows.add("IFCPROJECT", f"'{_guid(guids)}',#{oh},'Project',$,$,'Synthetic',$,(#{ctx}),#{unit_assignment}")
    site_place = rows.add("IFCLOCALPLACEMENT", f"$,#{_placement3d(rows)}")
    site = rows.add("IFCSITE", f"'{_guid(guids)}',#{oh},'Site',$,$,#{site_place},$,$,.ELEMENT.,$,$,0.,$,$")
    building_place = rows.add("IFCLOCALPLACEMENT", f"#{site_place},#{_placement3d(rows)}")
    building = rows.add("IFCBUILDING", f"'{_guid(guids)}',#{oh},'Building',$,$,#{building_place},$,$,.ELEMENT.,$,$,$")
    rows.add("IFCRELAGGREGATES", f"'{_guid(guids)}',#{oh},$,$,#{project},(#{site})")
    rows.add("IFCRELAGGREGATES", f"'{_guid(guids)}',#{oh},$,$,#{site},(#{building})")

    keys = [f"E{i}" for i in range(n_elements)]
    excluded = set(exclude)
    keys = [k for k in keys if k not in excluded] + list(extra)
    levels = storeys or max(1, min(20, n_elements // 40))
    storey_ids, storey_places = [], []
    for level in range(levels):
        place = rows.add("IFCLOCALPLACEMENT", f"#{building_place},#{_placement3d(rows, (0.0, 0.0, 3000.0 * level))}")
        storey_places.append(place)
        storey_ids.append(
            rows.add("IFCBUILDINGSTOREY", f"'{_guid(guids)}',#{oh},'Level {level}',$,$,#{place},$,$,.ELEMENT.,{_real(3000.0 * level)}")
        )
    rows.add("IFCRELAGGREGATES", f"'{_guid(guids)}',#{oh},$,$,#{building},(" + ",".join(f"#{s}" for s in storey_ids) + ")")

    model = SyntheticModel(b"")
    contained: list[list[int]] = [[] for _ in range(levels)]
    for key in keys:
        level = int(key[1:]) % levels if key[1:].isdigit() else random.Random(key).randrange(levels)
        rows.capture = set()
        element = _element(rows, key, seed, guids, oh, ctx, storey_places[level])
        model.element_rows[key] = rows.capture
        model.element_ids[key] = element
        rows.capture = None
        contained[level].append(element)
    for level, members in enumerate(contained):
        if not members:
            continue
        guids.shuffle(members)
        rows.add(
            "IFCRELCONTAINEDINSPATIALSTRUCTURE",
            f"'{_guid(guids)}',#{oh},$,$,(" + ",".join(f"#{m}" for m in members) + f"),#{storey_ids[level]}",
        )
    body = "\n".join(rows.lines)
    model.text = (_header(header_time) + body + "\nENDSEC;\nEND-ISO-10303-21;\n").encode("latin-1")
    return model


def generate_bytes(target_bytes: int, seed: int = 0, **kwargs) -> SyntheticModel:
    """A model of roughly ``target_bytes`` bytes."""
    probe = generate_model(200, seed, **kwargs)
    per_element = len(probe.text) / 200
    return generate_model(max(1, int(target_bytes / per_element)), seed, **kwargs)


# --------------------------------------------------------------------------
# Equivalent transformations on parsed files


def serialize(raw: RawFile) -> bytes:
    """Write ``raw`` in its current row order and under its current names."""
    lines = ["ISO-10303-21;", "HEADER;"]
    lines += [f"{k}({a});" for k, a in raw.header_records]
    lines += ["ENDSEC;", "DATA;"]
    lines += [canonical_row(row) for row in raw.data_rows]
    lines += ["ENDSEC;", "END-ISO-10303-21;", ""]
    return "\n".join(lines).encode("latin-1")


def _with_rows(raw: RawFile, rows: list) -> RawFile:
    return RawFile(list(raw.header_records), rows, raw.schema_name)


def shuffle_rows(raw: RawFile, rng: random.Random) -> RawFile:
    rows = list(raw.data_rows)
    rng.shuffle(rows)
    return _with_rows(raw, rows)


def rename_ids(raw: RawFile, rng: random.Random) -> RawFile:
    """Consistently give every instance a fresh random name."""
    n = len(raw.data_rows)
    fresh = rng.sample(range(1, 10 * n + 10), n)
    mapping = {row.id: new for row, new in zip(raw.data_rows, fresh)}
    lookup = lambda target: Ref(mapping[target])  # noqa: E731
    rows = [
        EntityInstance(mapping[row.id], row.type_name, tuple(transform_refs(v, lookup) for v in row.attributes))
        for row in raw.data_rows
    ]
    return _with_rows(raw, rows)


def duplicate_subtrees(raw: RawFile, fraction: float, rng: random.Random, max_layer: int = 0) -> tuple[RawFile, int]:
    """Copy ``fraction`` of the referenced nodes up to ``max_layer`` together with their subtrees.

    Each referrer of a copied node is redirected to the copy with
    probability one half. Subtrees holding the target of a styling edge are
    left alone: a copy would lose its style, which changes meaning. So is
    everything under the owner history, where an unreferenced copy would
    outlive the original once owner history is dropped. Returns
    the new file and the number of rows added.
    """
    graph = build_graph(raw)
    styled = {
        i for i in graph.nodes if any(graph.nodes[r].type_name == STYLED_BY_ITEM[0] for r in graph.inverse[i])
    }
    owner = graph.descendants([i for i, inst in graph.nodes.items() if inst.type_name == OWNER_HISTORY])
    candidates = [
        i
        for i, d in graph.layer.items()
        if d <= max_layer
        and graph.inverse[i]
        and i not in owner
        and i not in styled
        and not styled & graph.descendants([i])
    ]
    candidates.sort()
    chosen = rng.sample(candidates, int(round(fraction * len(candidates))))
    nodes = dict(graph.nodes)
    next_id = max(nodes) + 1
    added = 0

    def copy(ident):
        nonlocal next_id, added
        inst = nodes[ident]
        children = {c: copy(c) for c in set(forward_refs(inst))}
        new = next_id
        next_id += 1
        added += 1
        nodes[new] = EntityInstance(
            new, inst.type_name, tuple(transform_refs(v, lambda t: Ref(children[t])) for v in inst.attributes)
        )
        return new

    for ident in chosen:
        twin = copy(ident)
        for parent in sorted(graph.inverse[ident]):
            if rng.random() < 0.5:
                inst = nodes[parent]
                nodes[parent] = inst.replace(
                    attributes=tuple(transform_refs(v, lambda t: Ref(twin if t == ident else t)) for v in inst.attributes)
                )
    order = [row.id for row in raw.data_rows] + sorted(set(nodes) - {row.id for row in raw.data_rows})
    return _with_rows(raw, [nodes[i] for i in order]), added


def shuffle_unordered(raw: RawFile, rng: random.Random, table=UNORDERED_ATTRIBUTES) -> RawFile:
    """Permute the members of every aggregate the schema declares as a SET."""
    positions: dict[str, list[int]] = {}
    for type_name, index in table:
        positions.setdefault(type_name, []).append(index)
    rows = []
    for row in raw.data_rows:
        slots = positions.get(row.type_name)
        if slots:
            attrs = list(row.attributes)
            for index in slots:
                if index < len(attrs) and type(attrs[index]) is tuple:
                    members = list(attrs[index])
                    rng.shuffle(members)
                    attrs[index] = tuple(members)
            row = row.replace(attributes=tuple(attrs))
        rows.append(row)
    return _with_rows(raw, rows)


def set_owner_history_timestamp(raw: RawFile, timestamp: int) -> RawFile:
    rows = []
    for row in raw.data_rows:
        if row.type_name == OWNER_HISTORY:
            attrs = list(row.attributes)
            attrs[4] = timestamp
            attrs[7] = timestamp
            row = row.replace(attributes=tuple(attrs))
        rows.append(row)
    return _with_rows(raw, rows)
