import json
import subprocess
import sys

import pytest

from ifcnorm.cli import main
from ifcnorm.pipeline import normalize
from ifcnorm.synthetic import generate_model

from conftest import ifc_text


@pytest.fixture
def model(tmp_path):
    path = tmp_path / "model.ifc"
    path.write_bytes(generate_model(6, seed=1).text)
    return path


def test_normalize_writes_output_and_summary(model, tmp_path, capsys):
    out = tmp_path / "out.ifc"
    assert main(["normalize", str(model), "-o", str(out)]) == 0
    assert out.read_bytes() == normalize(model.read_bytes()).output
    err = capsys.readouterr().err
    assert "input rows:" in err and "time total:" in err


def test_normalize_to_stdout(model, capfdbinary):
    assert main(["normalize", str(model)]) == 0
    assert capfdbinary.readouterr().out == normalize(model.read_bytes()).output


def test_thread_counts_agree(model, tmp_path):
    a, b = tmp_path / "a.ifc", tmp_path / "b.ifc"
    assert main(["normalize", str(model), "-o", str(a), "--threads", "1"]) == 0
    assert main(["normalize", str(model), "-o", str(b), "--threads", "16"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_malformed_input_leaves_existing_output_alone(tmp_path, capsys):
    bad, out = tmp_path / "bad.ifc", tmp_path / "out.ifc"
    bad.write_bytes(ifc_text("#1=T(#1);"))
    out.write_bytes(b"previous")
    assert main(["normalize", str(bad), "-o", str(out)]) == 1
    assert out.read_bytes() == b"previous"
    assert "cycle" in capsys.readouterr().err
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bad.ifc", "out.ifc"]


@pytest.mark.parametrize(
    "rows, code",
    [("#1=T(#9);", 1), ("#1=T($);\n#1=T($);", 1), ("#1=T('open);", 1)],
)
def test_input_errors_exit_one(tmp_path, rows, code):
    path = tmp_path / "in.ifc"
    path.write_bytes(ifc_text(rows))
    assert main(["normalize", str(path)]) == code


def test_missing_file_exits_three(tmp_path, capsys):
    assert main(["normalize", str(tmp_path / "absent.ifc")]) == 3
    assert "absent.ifc" in capsys.readouterr().err


def test_capacity_exhaustion_exits_two(tmp_path, capsys):
    # 300 types need 300 prefix spaces; V = 2**24 leaves only 255 codes
    path = tmp_path / "many.ifc"
    path.write_bytes(ifc_text("\n".join(f"#{i}=T{i}($);" for i in range(1, 301))))
    assert main(["normalize", str(path), "--capacity", str(2**24)]) == 2
    assert "larger capacity" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["normalize"],
        ["frobnicate", "x"],
        ["normalize", "x", "--capacity", "16"],
        ["normalize", "x", "--spare-rate", "1"],
        ["normalize", "x", "--threads", "-1"],
        ["normalize", "x", "--owner-history", "sometimes"],
    ],
)
def test_usage_errors_exit_64(argv, capsys):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 64


def test_hash_and_diff(tmp_path, capsys):
    old, new = tmp_path / "old.ifc", tmp_path / "new.ifc"
    before = generate_model(8, seed=2)
    after = generate_model(8, seed=2, exclude=["E3"], extra=["N0"])
    old.write_bytes(before.text)
    new.write_bytes(after.text)
    manifest = tmp_path / "old.ifchash"
    assert main(["hash", str(old), "-o", str(manifest)]) == 0
    assert manifest.read_text().startswith("schema: IFC4\noptions: ")
    capsys.readouterr()

    assert main(["diff", str(manifest), str(old)]) == 0
    assert capsys.readouterr().out == "added: 0, removed: 0\n"

    assert main(["diff", str(manifest), str(new), "--list"]) == 4
    out = capsys.readouterr().out.splitlines()
    added, removed = (int(x.split(": ")[1]) for x in out[0].split(", "))
    # the element's own rows, less those shared with other elements, plus
    # the storey containment relation that lists it
    assert 0 < removed <= len(before.element_rows["E3"]) + 1
    assert 0 < added <= len(after.element_rows["N0"]) + 1
    assert sum(1 for line in out if line.startswith("+ ")) == added
    assert sum(1 for line in out if line.startswith("- ")) == removed


def test_diff_warns_on_option_mismatch(tmp_path, model, capsys):
    a, b = tmp_path / "a.ifchash", tmp_path / "b.ifchash"
    main(["hash", str(model), "-o", str(a)])
    main(["hash", str(model), "-o", str(b), "--owner-history", "inline"])
    capsys.readouterr()
    assert main(["diff", str(a), str(b)]) == 4
    assert "different options" in capsys.readouterr().err


def test_bad_manifest_exits_one(tmp_path, model):
    bad = tmp_path / "bad.ifchash"
    bad.write_text("schema: IFC4\noptions: x\nzzz\n")
    assert main(["diff", str(bad), str(model)]) == 1


def test_check_passes_on_a_generated_model(model, capsys):
    assert main(["check", str(model)]) == 0
    err = capsys.readouterr().err
    assert err.count("ok    ") == 6 and "FAIL" not in err
    assert "not a fixed point" in err


def test_check_reports_fixed_points(model, tmp_path, capsys):
    out = tmp_path / "n.ifc"
    main(["normalize", str(model), "-o", str(out)])
    capsys.readouterr()
    assert main(["check", str(out)]) == 0
    assert "already normalized" in capsys.readouterr().err


def test_check_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "dup.ifc"
    path.write_bytes(ifc_text("#1=T($);\n#1=T(1);"))
    assert main(["check", str(path)]) == 1


def test_unordered_table_file(tmp_path, capsys):
    table = tmp_path / "table.json"
    table.write_text(json.dumps({"ifcpolyline": [0]}))
    path = tmp_path / "p.ifc"
    rows = "#1=IFCCARTESIANPOINT((0.,0.));\n#2=IFCCARTESIANPOINT((1.,0.));\n#3=IFCPOLYLINE(({}));"
    outs = []
    for order in ("#1,#2", "#2,#1"):
        path.write_bytes(ifc_text(rows.format(order)))
        main(["normalize", str(path), "-o", str(tmp_path / f"{order[1]}.ifc"), "--unordered-table", str(table)])
        outs.append((tmp_path / f"{order[1]}.ifc").read_bytes())
    assert outs[0] == outs[1]
    table.write_text("[1, 2]")
    assert main(["normalize", str(path), "--unordered-table", str(table)]) == 64


def test_module_entry_point(model, tmp_path):
    out = tmp_path / "o.ifc"
    proc = subprocess.run(
        [sys.executable, "-m", "ifcnorm", "normalize", str(model), "-o", str(out)], capture_output=True
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_bytes() == normalize(model.read_bytes()).output
