import pytest

from mvquad import Frame, GridGeometry, MotionField, store_pgm
from mvquad import container
from mvquad.bitio import StreamError
from mvquad.cli import main
from mvquad.inter_intra import read_decisions
from mvquad.motion import read_field, write_field
from mvquad.synthetic import table2_field, table3_field

from conftest import noise_frame


@pytest.fixture
def frames(tmp_path):
    ref = noise_frame(21, 64, 64)
    store_pgm(ref, tmp_path / "a.pgm")
    return tmp_path, ref


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_container_header_layout():
    g = GridGeometry(256, 128, 16, 64)
    data = container.pack(g, 7, "mixed", True, b"\xAB")
    assert data == b"MVQ1" + bytes([1, 0, 0, 128, 0, 16, 0, 64, 0, 7, 1, 1, 0xAB])
    box = container.unpack(data)
    assert (box.geom, box.d_max, box.mode, box.with_flag, box.payload) == (g, 7, "mixed", True, b"\xAB")
    with pytest.raises(StreamError):
        container.unpack(b"MVQ2" + data[4:])
    with pytest.raises(StreamError):
        container.unpack(data[:10])


def test_estimate_identical_frames(frames, capsys):
    tmp, ref = frames
    code, out, _ = run(capsys, "estimate", tmp / "a.pgm", tmp / "a.pgm", "-o", tmp / "f.txt")
    assert code == 0
    assert "frame MAD after prediction:     0.0000" in out
    assert read_field(tmp / "f.txt") == MotionField.uniform(GridGeometry(64, 64, 16, 64))


def test_estimate_256_gives_256_vectors(tmp_path, capsys):
    store_pgm(noise_frame(1, 256, 256), tmp_path / "a.pgm")
    store_pgm(noise_frame(2, 256, 256), tmp_path / "b.pgm")
    code, out, _ = run(capsys, "estimate", tmp_path / "a.pgm", tmp_path / "b.pgm", "-o", tmp_path / "f.txt")
    assert code == 0 and "blocks: 256" in out
    assert len(read_field(tmp_path / "f.txt")) == 256


def test_estimate_raw_and_mixed(tmp_path, capsys):
    a, b = noise_frame(3, 64, 64), noise_frame(4, 64, 64)
    (tmp_path / "s.y").write_bytes(a.pixels.tobytes() + b.pixels.tobytes())
    code, out, _ = run(capsys, "estimate", tmp_path / "s.y", tmp_path / "s.y", "--raw", "--width", 64,
                       "--height", 64, "--mode", "mixed", "--search", "full", "-o", tmp_path / "d.txt")
    assert code == 0
    decisions, g, _ = read_decisions(tmp_path / "d.txt")
    assert g.base_blocks == 16


def test_estimate_bad_geometry(tmp_path, capsys):
    store_pgm(noise_frame(1, 100, 100), tmp_path / "a.pgm")
    code, _, err = run(capsys, "estimate", tmp_path / "a.pgm", tmp_path / "a.pgm", "-o", tmp_path / "f.txt")
    assert code != 0 and "multiple of max_block" in err


def test_encode_table2_prints_table(tmp_path, capsys):
    write_field(table2_field(), tmp_path / "t2.txt")
    code, out, _ = run(capsys, "encode", tmp_path / "t2.txt", "-o", tmp_path / "t2.mvq")
    assert code == 0
    lines = out.splitlines()
    rows = [ln.split() for ln in lines[1:4]]
    assert rows == [["16x16", "68", "68"], ["32x32", "15", "60"], ["64x64", "8", "128"]]
    assert lines[4].split() == ["256"]
    assert "tree bits:    48" in out and "vector bytes: 91" in out
    assert "total bytes:  97 vs 256" in out and "100:37.9" in out
    assert len((tmp_path / "t2.mvq").read_bytes()) == 16 + 97


def test_encode_table3(tmp_path, capsys):
    code, out, _ = run(capsys, "report", "--table", 3)
    assert code == 0
    assert "tree bits:    268" in out and "vector bytes: 514" in out
    assert "1024" in out.splitlines()[5]


def test_encode_uniform_single_row(tmp_path, capsys):
    write_field(MotionField.uniform(GridGeometry(128, 128, 16, 64), (1, 1)), tmp_path / "u.txt")
    code, out, _ = run(capsys, "report", tmp_path / "u.txt")
    lines = out.splitlines()
    assert lines[1].split() == ["64x64", "4", "64"] and lines[2].split() == ["64"]


@pytest.mark.parametrize("extra", [[], ["--flag"], ["--merge-t", "0"]])
def test_encode_decode_round_trip(tmp_path, capsys, extra):
    write_field(table3_field(1), tmp_path / "f.txt")
    assert run(capsys, "encode", tmp_path / "f.txt", "--max-block", 64, "-o", tmp_path / "a.mvq", *extra)[0] == 0
    assert run(capsys, "decode", tmp_path / "a.mvq", "-o", tmp_path / "g.txt")[0] == 0
    assert read_field(tmp_path / "g.txt") == read_field(tmp_path / "f.txt")
    assert run(capsys, "encode", tmp_path / "g.txt", "-o", tmp_path / "b.mvq", *extra)[0] == 0
    assert (tmp_path / "a.mvq").read_bytes() == (tmp_path / "b.mvq").read_bytes()


def test_relaxed_encode_idempotent(tmp_path, capsys):
    import random
    from conftest import random_field
    write_field(random_field(GridGeometry(128, 128, 8, 64), random.Random(5)), tmp_path / "f.txt")
    run(capsys, "encode", tmp_path / "f.txt", "--merge-t", 1, "-o", tmp_path / "a.mvq")
    run(capsys, "decode", tmp_path / "a.mvq", "-o", tmp_path / "g.txt")
    run(capsys, "encode", tmp_path / "g.txt", "-o", tmp_path / "b.mvq")
    assert (tmp_path / "a.mvq").read_bytes() == (tmp_path / "b.mvq").read_bytes()


def test_decode_truncated(tmp_path, capsys):
    write_field(table2_field(), tmp_path / "f.txt")
    run(capsys, "encode", tmp_path / "f.txt", "-o", tmp_path / "a.mvq")
    data = (tmp_path / "a.mvq").read_bytes()
    (tmp_path / "cut.mvq").write_bytes(data[:-1])
    code, _, err = run(capsys, "decode", tmp_path / "cut.mvq", "-o", tmp_path / "g.txt")
    assert code != 0 and "exhausted" in err


def test_mixed_container_round_trip(tmp_path, capsys, frames):
    tmp, ref = frames
    tgt = ref.pixels.copy()
    tgt[:, 32:] = 90
    store_pgm(Frame(tgt), tmp / "b.pgm")
    run(capsys, "estimate", tmp / "a.pgm", tmp / "b.pgm", "--mode", "mixed", "-o", tmp / "d.txt")
    assert run(capsys, "encode", tmp / "d.txt", "--mode", "mixed", "--flag", "-o", tmp / "m.mvq")[0] == 0
    assert container.unpack((tmp / "m.mvq").read_bytes()).mode == "mixed"
    assert run(capsys, "decode", tmp / "m.mvq", "-o", tmp / "d2.txt")[0] == 0
    assert (tmp / "d2.txt").read_text() == (tmp / "d.txt").read_text()
    assert "intra" in (tmp / "d.txt").read_text()


def test_3d_container_round_trip(tmp_path, capsys):
    import random
    from conftest import random_field
    g = GridGeometry(128, 64, 16, 64)
    e = random_field(g, random.Random(1))
    write_field(e, tmp_path / "e.txt")
    write_field(e, tmp_path / "l.txt")
    code, out, _ = run(capsys, "encode", tmp_path / "e.txt", tmp_path / "l.txt", "--mode", "3d",
                       "-o", tmp_path / "p.mvq")
    assert code == 0
    run(capsys, "decode", tmp_path / "p.mvq", "-o", tmp_path / "e2.txt", "--output2", tmp_path / "l2.txt")
    assert read_field(tmp_path / "e2.txt") == e == read_field(tmp_path / "l2.txt")


def test_reconstruct(frames, capsys):
    tmp, ref = frames
    write_field(MotionField.uniform(GridGeometry(64, 64, 16, 64)), tmp / "z.txt")
    code, out, _ = run(capsys, "reconstruct", tmp / "a.pgm", tmp / "z.txt", "-o", tmp / "p.pgm",
                       "--target", tmp / "a.pgm")
    assert code == 0 and "holes: 0" in out and "0.0000" in out
    from mvquad import load_pgm
    assert load_pgm(tmp / "p.pgm") == ref
    write_field(MotionField.uniform(GridGeometry(64, 64, 16, 64), (5, 0)), tmp / "s.txt")
    code, out, _ = run(capsys, "reconstruct", tmp / "a.pgm", tmp / "s.txt", "-o", tmp / "q.pgm")
    assert "holes: 320" in out  # 5 columns of 64 pixels vacated at the left edge


@pytest.mark.parametrize("argv,expect", [
    (["--width", 256, "--height", 128], ["100:7 (N:9)", "100:104 (N:133)"]),
    (["--width", 256, "--height", 128, "--flag"], ["100:8 (N:10)"]),
    (["--width", 64, "--height", 64, "--mode", "mixed"], ["100:12 (16:2)", "100:131 (16:21)"]),
    (["--width", 64, "--height", 64, "--mode", "mixed", "--flag"], ["100:19 (16:3)"]),
])
def test_bounds(capsys, argv, expect):
    code, out, _ = run(capsys, "bounds", *argv)
    assert code == 0
    for e in expect:
        assert e in out


def test_deterministic_output(tmp_path, capsys):
    write_field(table2_field(), tmp_path / "f.txt")
    outs = []
    for i in range(2):
        outs.append(run(capsys, "encode", tmp_path / "f.txt", "-o", tmp_path / f"{i}.mvq")[1])
    assert outs[0] == outs[1]
    assert (tmp_path / "0.mvq").read_bytes() == (tmp_path / "1.mvq").read_bytes()
