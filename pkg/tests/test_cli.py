import pytest

from zygote.cli import EXIT_INPUT, EXIT_OK, EXIT_SEARCH, EXIT_VERIFY, main


def _records(text):
    return dict(line.split(" ", 1) for line in text.splitlines() if line)


def test_panelize_sheet(capsys):
    assert main(["panelize", "--sheet", "12x12"]) == EXIT_OK
    rec = _records(capsys.readouterr().out)
    assert rec["N"] == "144" and rec["E"] == "264"


def test_panelize_cube_file(tmp_path, capsys):
    f = tmp_path / "cube.txt"
    f.write_text("0 0 0\n")
    assert main(["panelize", "--voxels", str(f)]) == EXIT_OK
    rec = _records(capsys.readouterr().out)
    assert rec["N"] == "6" and rec["DEGREES"] == "4:6"


def test_panelize_mesh(tmp_path, capsys):
    f = tmp_path / "cube.obj"
    v = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    lines = [f"v {x} {y} {z}" for x, y, z in v]
    lines += [f"f {a + 1} {b + 1} {c + 1} {d + 1}" for a, b, c, d in quads]
    f.write_text("\n".join(lines) + "\n")
    assert main(["panelize", "--mesh", str(f), "--res", "2"]) == EXIT_OK
    assert _records(capsys.readouterr().out)["N"] == "24"
    assert main(["panelize", "--mesh", str(f)]) == EXIT_INPUT


def test_nonmanifold_voxels_rejected(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("0 0 0\n1 1 0\n")
    assert main(["panelize", "--voxels", str(f)]) == EXIT_INPUT


def test_bad_sheet_size():
    assert main(["panelize", "--sheet", "12by12"]) == EXIT_INPUT


def test_stack_then_check_everything(tmp_path, capsys):
    seq = tmp_path / "s.txt"
    assert main(["stack", "--sheet", "12x12", "--piles", "4", "--seed", "7", "--out", str(seq)]) == EXIT_OK
    first = seq.read_text()
    assert first.startswith("ZYGOTE v1\nN 144 K 4\n")
    assert main(["stack", "--sheet", "12x12", "--piles", "4", "--seed", "7", "--out", str(seq)]) == EXIT_OK
    assert seq.read_text() == first
    capsys.readouterr()

    assert main(["verify", str(seq), "--sheet", "12x12"]) == EXIT_OK
    rec = _records(capsys.readouterr().out)
    assert rec["OK"] == "1" and rec["STACKED_HEIGHTS"] == "36,36,36,36"

    assert main(["flatten", str(seq)]) == EXIT_OK
    assert _records(capsys.readouterr().out)["MAX_COUNT"] == "1"

    obj = tmp_path / "d.obj"
    assert main(["deploy", str(seq), "--out", str(obj)]) == EXIT_OK
    assert obj.read_text().count("g panel_") == 144

    assert main(["verify", str(seq), "--sheet", "6x24"]) == EXIT_VERIFY


def test_stack_rejects_indivisible():
    assert main(["stack", "--sheet", "12x12", "--piles", "5"]) == EXIT_INPUT


def test_cube_stack_and_ver(tmp_path, capsys):
    cube = tmp_path / "cube.txt"
    cube.write_text("0 0 0\n")
    seq = tmp_path / "c.txt"
    assert main(["stack", "--voxels", str(cube), "--piles", "2", "--seed", "1", "--out", str(seq)]) == EXIT_OK
    capsys.readouterr()
    assert main(["ver", str(seq)]) == EXIT_OK
    ver = float(_records(capsys.readouterr().out)["VER"])
    assert ver == pytest.approx(16.7, rel=0.02)
    assert main(["flatten", str(seq)]) == EXIT_OK
    assert _records(capsys.readouterr().out)["MAX_COUNT"] == "1"


def test_search_failure_exit_code(tmp_path, caplog):
    cube = tmp_path / "cube.txt"
    cube.write_text("0 0 0\n")
    assert main(["stack", "--voxels", str(cube), "--piles", "3", "--max-restarts", "2"]) == EXIT_SEARCH
    assert "stacking failed" in caplog.text


def test_garbled_sequence(tmp_path):
    seq = tmp_path / "junk.txt"
    seq.write_text("hello\n")
    assert main(["flatten", str(seq)]) == EXIT_INPUT
    assert main(["ver", str(tmp_path / "missing.txt")]) == EXIT_INPUT


def test_panelize_out_round_trips(tmp_path, capsys):
    saved = tmp_path / "sheet.txt"
    assert main(["panelize", "--sheet", "3x4", "--out", str(saved)]) == EXIT_OK
    assert main(["panelize", "--voxels", str(saved)]) == EXIT_OK
    out = capsys.readouterr().out.split("N ")
    assert out[1].startswith("12\n") and out[2].startswith("12\n")
