import json
import subprocess
import sys

import numpy as np
import pytest

from edist.cli import BenchConfig, main, read_dist, run_bench
from edist.exact import ed
from edist.sampling import SampleTree
from edist.text import decode


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_bytes(data)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exact_examples(tmp_path, capsys):
    a = write(tmp_path, "a", b"kitten")
    b = write(tmp_path, "b", b"sitting")
    e = write(tmp_path, "e", b"")
    c = write(tmp_path, "c", b"abc")
    assert run(capsys, "exact", a, b)[1].split("\t")[:2] == ["ed", "3"]
    assert run(capsys, "exact", e, c)[1].split("\t")[:2] == ["ed", "3"]
    assert run(capsys, "exact", a, a)[1].split("\t")[:2] == ["ed", "0"]
    assert run(capsys, "exact", a, b, "--metric", "lcs")[1].split("\t")[:2] == ["lcs", "4"]


def test_hex16_codec(tmp_path, capsys):
    a = write(tmp_path, "a", np.array([1, 300, 2], dtype=">u2").tobytes())
    b = write(tmp_path, "b", np.array([1, 2], dtype=">u2").tobytes())
    assert run(capsys, "exact", a, b, "--codec", "hex16")[1].startswith("ed\t1\t")
    code, _, err = run(capsys, "exact", write(tmp_path, "odd", b"abc"), b, "--codec", "hex16")
    assert code != 0 and "error" in err


def test_edist_command(tmp_path, capsys):
    a = write(tmp_path, "a", b"ab")
    b = write(tmp_path, "b", b"ba")
    code, out, _ = run(capsys, "edist", a, b, "--b", "2")
    assert code == 0 and out.startswith("edist\t2\t")


def test_sample_round_trip(tmp_path, capsys):
    out = tmp_path / "tree.txt"
    code, _, _ = run(capsys, "sample", "--n", "4096", "--b", "16", "--seed", "4",
                     "--c-p", "1e-3", "--out", str(out))
    assert code == 0
    tree = SampleTree.from_text(out.read_text())
    assert tree.params.n == 4096 and tree.params.seed == 4
    code, _, err = run(capsys, "sample", "--n", "100", "--b", "16", "--seed", "1")
    assert code != 0 and "power" in err


def parse_record(text):
    head, body = text.splitlines()
    assert head == "#edist-approx v1"
    return dict(kv.split("=", 1) for kv in body.split("\t"))


def test_approx_identical_close(tmp_path, capsys):
    rng = np.random.default_rng(0)
    data = rng.integers(0, 4, 1000).astype(np.uint8).tobytes()
    a = write(tmp_path, "a", data)
    rec = parse_record(run(capsys, "approx", a, a, "--b", "4", "--seed", "1", "--beta", "2")[1])
    assert rec["decision"] == "close" and float(rec["estimate"]) <= 1024 / 2
    assert int(rec["queries"]) <= 1024


def test_approx_full_scan(tmp_path, capsys):
    rng = np.random.default_rng(1)
    x = rng.integers(0, 4, 1024).astype(np.uint8)
    y = x.copy()
    y[rng.choice(1024, 60, replace=False)] = 9
    a, b = write(tmp_path, "a", x.tobytes()), write(tmp_path, "b", y.tobytes())
    rec = parse_record(run(capsys, "approx", a, b, "--b", "4", "--seed", "3",
                           "--c-p", "1e-3")[1])
    d = ed(x, y)
    h, bb = 5, 4
    assert 1 / (12 * h * bb) <= float(rec["estimate"]) / d <= 12 * h * bb
    assert int(rec["queries"]) <= 1024


def test_dtep_command(tmp_path, capsys):
    rng = np.random.default_rng(2)
    a = write(tmp_path, "a", rng.integers(0, 256, 4096).astype(np.uint8).tobytes())
    b = write(tmp_path, "b", rng.integers(0, 256, 4096).astype(np.uint8).tobytes())
    rec = parse_record(run(capsys, "dtep", a, b, "--b", "16", "--beta", "8", "--seed", "5",
                           "--c-p", "1e-3")[1])
    assert rec["decision"] == "far" and rec["seed"] == "5"


def test_seed_is_mandatory(tmp_path):
    a = write(tmp_path, "a", b"abcd")
    for cmd in (["approx", a, a], ["dtep", a, a, "--beta", "2"], ["sample", "--n", "16"],
                ["gen-hard", "--which", "same", "--out", str(tmp_path / "h")], ["bench"]):
        with pytest.raises(SystemExit) as exc:
            main(cmd)
        assert exc.value.code != 0


def test_missing_file_fails(tmp_path, capsys):
    code, _, err = run(capsys, "exact", str(tmp_path / "nope"), str(tmp_path / "nope"))
    assert code != 0 and "cannot read" in err


def test_gen_hard(tmp_path, capsys):
    prefix = tmp_path / "out" / "pair"
    code, _, _ = run(capsys, "gen-hard", "--which", "cross", "--seed", "7", "--block-len", "16",
                     "--levels", "2", "--bin-len", "4", "--out", str(prefix))
    assert code == 0
    x = decode((tmp_path / "out" / "pair.x").read_bytes())
    y = decode((tmp_path / "out" / "pair.y").read_bytes())
    assert len(x) == len(y) == 16 * 16 * 4
    assert set(np.unique(x.symbols)) <= {0, 1}
    man = json.loads((tmp_path / "out" / "pair.manifest.json").read_text())
    assert man["which"] == "cross" and man["seed"] == 7 and len(man["base_digests"]) == 8
    run(capsys, "gen-hard", "--which", "cross", "--seed", "7", "--block-len", "16",
        "--levels", "2", "--bin-len", "4", "--out", str(tmp_path / "again"))
    assert (tmp_path / "again.x").read_bytes() == (tmp_path / "out" / "pair.x").read_bytes()


def test_similarity_command(tmp_path, capsys):
    d0 = tmp_path / "d0"
    d0.write_text("# two rotations\n0.5 0101\n0.5 1010\n")
    d1 = tmp_path / "d1"
    d1.write_text("1.0 0101\n")
    code, out, _ = run(capsys, "similarity", str(d0), str(d1))
    lines = dict(line.split("\t") for line in out.splitlines())
    assert code == 0 and float(lines["alpha"]) == 1.0 and "uniform_alpha" in lines
    assert read_dist(str(d0)).n == 4
    bad = tmp_path / "bad"
    bad.write_text("x 0101\n")
    assert run(capsys, "similarity", str(bad))[0] != 0


def test_bench_header_only(capsys):
    code, out, _ = run(capsys, "bench", "--seed", "1", "--trials", "0")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2
    assert lines[0].startswith("#edist-bench v1 ") and lines[1].startswith("n\tb\tbeta")


def test_bench_deterministic_and_sane(tmp_path):
    cfg = BenchConfig(sizes=[256], b=[4], beta=[2.0, 8.0], trials=4, seed=3, workers=1)
    text = run_bench(cfg)

    def body(t):
        # drop the timing column, which is not reproducible
        return [line.rsplit("\t", 1)[0] for line in t.splitlines() if not line.startswith("#")]

    assert body(text) == body(run_bench(cfg))
    rows = [line.split("\t") for line in text.splitlines()[2:] if not line.startswith("#")]
    assert len(rows) == 8
    summaries = [line for line in text.splitlines() if line.startswith("#summary")]
    assert len(summaries) == 2
    for s in summaries:
        med = float(s.split("median_ratio=")[1].split("\t")[0])
        assert np.isfinite(med) and med >= 1 / (12 * 4 * 4)


def test_bench_pool_matches_serial(tmp_path):
    cfg = BenchConfig(sizes=[64], b=[4], beta=[2.0], trials=3, seed=9, workers=1)
    serial = run_bench(cfg)
    cfg.workers = 2
    pooled = run_bench(cfg)
    strip = lambda t: [l.rsplit("\t", 1)[0] for l in t.splitlines()[2:] if not l.startswith("#")]
    assert strip(serial) == strip(pooled)


def test_bench_config_file_and_append(tmp_path, capsys):
    conf = tmp_path / "bench.json"
    conf.write_text(json.dumps({"sizes": [64], "b": [2], "beta": [4.0], "trials": 1,
                                "family": "rotations"}))
    out = tmp_path / "report.tsv"
    for _ in range(2):
        assert run(capsys, "bench", "--config", str(conf), "--seed", "2", "--workers", "1",
                   "--out", str(out))[0] == 0
    assert out.read_text().count("#edist-bench v1") == 2
    with pytest.raises(ValueError):
        BenchConfig(family="nope").validate()


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "edist.cli", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and "gen-hard" in res.stdout
