import csv
import io
import json

import pytest

from stslab import complete_to_sts, load_res, load_sts, to_sts_text
from stslab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_table(text):
    lines = text.splitlines()
    assert lines[0].startswith("# schema=stslab.")
    return lines[0], list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


@pytest.fixture(scope="module")
def host21(tmp_path_factory):
    path = tmp_path_factory.mktemp("hosts") / "sts21.sts"
    path.write_text(to_sts_text(complete_to_sts(21, 1)), encoding="ascii")
    return str(path)


@pytest.fixture(scope="module")
def host9(tmp_path_factory):
    path = tmp_path_factory.mktemp("hosts") / "sts9.sts"
    path.write_text(to_sts_text(complete_to_sts(9, 0)), encoding="ascii")
    return str(path)


class TestGen:
    def test_single_file_then_resolve(self, capsys, tmp_path):
        out = tmp_path / "a.sts"
        code, _, _ = run(capsys, "gen", "--n", "9", "--out", str(out))
        assert code == 0
        system = load_sts(str(out), kind="sts")
        assert system.n == 9 and len(system.edges) == 12
        code, stdout, _ = run(capsys, "resolve", "--in", str(out))
        assert code == 0
        assert "resolvable: 4 classes" in stdout

    def test_inadmissible_n_fails_cleanly(self, capsys):
        code, _, err = run(capsys, "gen", "--n", "8")
        assert code == 1
        assert "error: n must be congruent to 1 or 3 (mod 6)" in err

    def test_trial_table_layout(self, capsys, tmp_path):
        out = tmp_path / "t.csv"
        code, _, _ = run(
            capsys, "gen", "--mode", "trp", "--n", "15", "--m", "20",
            "--trials", "4", "--out", str(out),
        )
        assert code == 0
        schema, rows = parse_table(out.read_text())
        assert schema == "# schema=stslab.gen.trp.v1"
        assert len(rows) == 4
        assert [r["trial"] for r in rows] == ["0", "1", "2", "3"]
        assert all(r["m"] == "20" for r in rows)
        assert set(rows[0]) == {
            "trial", "seed", "n", "m", "steps_completed", "aborted", "leave_pairs"
        }

    def test_byte_identical_reruns_even_threaded(self, capsys, tmp_path):
        a, b, c = (tmp_path / name for name in ("a.csv", "b.csv", "c.csv"))
        base = ["gen", "--mode", "binomial", "--n", "30", "--alpha", "0.5", "--trials", "6"]
        assert run(capsys, *base, "--out", str(a))[0] == 0
        assert run(capsys, *base, "--out", str(b))[0] == 0
        assert run(capsys, *base, "--threads", "3", "--out", str(c))[0] == 0
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()

    def test_timing_column_is_opt_in(self, capsys, tmp_path):
        out = tmp_path / "t.csv"
        run(capsys, "gen", "--mode", "couple", "--n", "24", "--out", str(out))
        assert "wall_time" not in out.read_text()
        run(capsys, "gen", "--mode", "couple", "--n", "24", "--timing", "--out", str(out))
        _, rows = parse_table(out.read_text())
        assert "wall_time" in rows[0]

    def test_json_format(self, capsys, tmp_path):
        out = tmp_path / "t.json"
        run(capsys, "gen", "--mode", "sts", "--n", "13", "--format", "json",
            "--out", str(out))
        payload = json.loads(out.read_text())
        assert payload[0]["n"] == 13 and payload[0]["success"] is True


class TestAudit:
    def test_quasi_on_sts_leave_is_trivially_regular(self, capsys, host9):
        code, out, _ = run(capsys, "audit", "--in", host9, "--check", "quasi")
        assert code == 0
        schema, rows = parse_table(out)
        assert schema == "# schema=stslab.audit.v1"
        row = rows[0]
        assert row["check"] == "quasi"
        assert row["passed"] == "true" and row["exact"] == "true"
        assert float(row["value"]) == 0.0  # empty leave graph deviates nowhere

    def test_disc_reports_exact_float_repr(self, capsys, tmp_path):
        path = tmp_path / "fano.sts"
        path.write_text(
            "n=7\n1 2 3\n1 4 5\n1 6 7\n2 4 6\n2 5 7\n3 4 7\n3 5 6\n", encoding="ascii"
        )
        code, out, _ = run(capsys, "audit", "--in", str(path), "--check", "disc")
        assert code == 0
        _, rows = parse_table(out)
        assert rows[0]["value"] == repr(64 / 7)
        assert rows[0]["exact"] == "true"

    def test_upper_with_explicit_beta(self, capsys, host21):
        code, out, _ = run(
            capsys, "audit", "--in", host21, "--check", "upper", "--beta", "0.5"
        )
        assert code == 0
        _, rows = parse_table(out)
        assert rows[0]["passed"] in ("true", "false")
        assert float(rows[0]["beta_hat"] if "beta_hat" in rows[0] else rows[0]["value"]) >= 0

    def test_missing_input_file(self, capsys):
        code, _, err = run(capsys, "audit", "--in", "/no/such/file.sts", "--check", "disc")
        assert code == 1
        assert "error: cannot read" in err


class TestMatchingCommands:
    def test_pack_writes_res(self, capsys, host9, tmp_path):
        out = tmp_path / "p.res"
        code, stdout, _ = run(capsys, "pack", "--in", host9, "--out", str(out))
        assert code == 0
        assert "packed 4 disjoint perfect matchings" in stdout
        n, classes = load_res(str(out))
        assert n == 9 and len(classes) == 4

    def test_pack_handles_unmatchable_n(self, capsys, tmp_path):
        path = tmp_path / "fano.sts"
        path.write_text(
            "n=7\n1 2 3\n1 4 5\n1 6 7\n2 4 6\n2 5 7\n3 4 7\n3 5 6\n", encoding="ascii"
        )
        code, stdout, _ = run(capsys, "pack", "--in", str(path))
        assert code == 0
        assert "packed 0 disjoint perfect matchings" in stdout

    def test_decompose(self, capsys, host21, tmp_path):
        out = tmp_path / "d.res"
        code, stdout, _ = run(capsys, "decompose", "--in", host21, "--out", str(out))
        assert code == 0
        assert "classes (sizes" in stdout
        n, classes = load_res(str(out))
        assert n == 21 and classes


class TestAbsorb:
    def test_template_file(self, capsys, tmp_path):
        out = tmp_path / "t.sts"
        code, stdout, _ = run(
            capsys, "absorb", "--mode", "template", "--q", "2",
            "--samples", "50", "--out", str(out),
        )
        assert code == 0
        assert "template q=2: max degree" in stdout
        text = out.read_text()
        assert text.startswith("# resilient template q=2 flexible=1..4\n")
        assert "# verified_removals=6 exhaustive=true" in text.lower()
        system = load_sts(str(out), kind="general")
        assert system.n == 20

    def test_sub_and_full_search(self, capsys, host21, tmp_path):
        out = tmp_path / "sub.sts"
        code, stdout, _ = run(
            capsys, "absorb", "--mode", "sub", "--in", host21,
            "--roots", "2,9,17", "--out", str(out),
        )
        assert code == 0 and "sub-absorber found" in stdout
        text = out.read_text()
        assert text.startswith("# sub-absorber roots: 2 9 17\n")
        assert len(load_sts(str(out)).edges) == 5

        out2 = tmp_path / "full.sts"
        code, stdout, _ = run(
            capsys, "absorb", "--mode", "full", "--in", host21,
            "--roots", "2,9,17", "--out", str(out2),
        )
        assert code == 0 and "absorber found" in stdout
        text = out2.read_text()
        assert "# covering:" in text and "# noncovering:" in text
        assert len(load_sts(str(out2)).edges) == 13

    def test_search_miss_still_exits_zero(self, capsys, host21):
        code, stdout, _ = run(
            capsys, "absorb", "--mode", "sub", "--in", host21,
            "--roots", "1,2,3", "--budget", "2",
        )
        assert code == 0
        assert "no sub-absorber found" in stdout

    def test_structure_miss_and_validation(self, capsys, host21):
        code, stdout, _ = run(
            capsys, "absorb", "--mode", "structure", "--in", host21,
            "--flexible", "1,2",
        )
        assert code == 0 and "no absorbing structure assembled" in stdout
        assert run(capsys, "absorb", "--mode", "structure", "--in", host21)[0] == 1
        assert run(capsys, "absorb", "--mode", "sub", "--roots", "1,2,3")[0] == 1
        assert run(capsys, "absorb", "--mode", "full", "--in", host21)[0] == 1
        code, _, err = run(
            capsys, "absorb", "--mode", "sub", "--in", host21, "--roots", "1,2"
        )
        assert code == 1 and "exactly three" in err


class TestPartition:
    def test_manifest_json(self, capsys, host21, tmp_path):
        out = tmp_path / "m.json"
        code, _, _ = run(
            capsys, "partition", "--in", host21, "--delta", "0.16", "--out", str(out)
        )
        assert code == 0
        manifest = json.loads(out.read_text())
        assert manifest["n"] == 21 and manifest["m"] == 70
        assert manifest["ell"] == 1 and manifest["cap_binding"] is True
        assert len(manifest["audit"]["properties"]) == 6
        assert manifest["audit"]["partition_exact"] is True
        sizes = manifest["part_sizes"]
        assert sum(sizes["G"]) + sum(sizes["H"]) + sum(sizes["F"]) + sizes["Q"] == 70

    def test_part_files(self, capsys, host21, tmp_path):
        prefix = str(tmp_path / "parts")
        code, stdout, _ = run(
            capsys, "partition", "--in", host21, "--delta", "0.16",
            "--out-prefix", prefix,
        )
        assert code == 0
        assert "wrote 4 part files and manifest" in stdout
        for name in ("G0", "H0", "F0", "Q"):
            part = load_sts(f"{prefix}.{name}.sts")
            assert part.n == 21
        manifest = json.loads(open(f"{prefix}.manifest.json").read())
        host = load_sts(host21)
        g0 = load_sts(f"{prefix}.G0.sts")
        assert len(g0.edges) == manifest["part_sizes"]["G"][0]
        for t in g0.edges:
            assert t in host


class TestPipeline:
    def test_gen_trials_table(self, capsys, tmp_path):
        out = tmp_path / "p.csv"
        code, _, _ = run(
            capsys, "pipeline", "--gen", "9", "--trials", "2", "--out", str(out)
        )
        assert code == 0
        schema, rows = parse_table(out.read_text())
        assert schema == "# schema=stslab.pipeline.v1"
        assert list(rows[0]) == [
            "trial", "seed", "n", "delta", "budget", "pms", "coverage",
            "classes_considered", "classes_direct", "bridge_edges_used",
            "bridge_misses", "absorb_attempted", "absorb_cap_binding",
            "absorb_completed", "absorb_failed", "fallback_exact_attempts",
            "fallback_exact_success", "fallback_drop", "residual_pms", "rounds",
        ]
        assert [r["pms"] for r in rows] == ["4", "4"]
        assert [r["coverage"] for r in rows] == ["1.0", "1.0"]

    def test_single_trial_res_dump(self, capsys, host9, tmp_path):
        out = tmp_path / "p.res"
        code, stdout, _ = run(capsys, "pipeline", "--in", host9, "--out", str(out))
        assert code == 0
        assert "pipeline packed 4 matchings" in stdout
        n, classes = load_res(str(out))
        assert n == 9 and len(classes) == 4

    def test_requires_exactly_one_source(self, capsys, host9):
        assert run(capsys, "pipeline")[0] == 1
        assert run(capsys, "pipeline", "--in", host9, "--gen", "9")[0] == 1


class TestCoupleTest:
    def test_summary_row(self, capsys, tmp_path):
        out = tmp_path / "c.csv"
        code, _, _ = run(
            capsys, "couple-test", "--n", "30", "--alpha", "0.3",
            "--trials", "4", "--out", str(out),
        )
        assert code == 0
        schema, rows = parse_table(out.read_text())
        assert schema == "# schema=stslab.couple_test.v1"
        row = rows[0]
        assert row["n"] == "30" and row["trials"] == "4"
        assert 0.0 <= float(row["empirical_survival"]) <= 1.0
        assert float(row["predicted_survival"]) > 0.0
        out2 = tmp_path / "c2.csv"
        run(capsys, "couple-test", "--n", "30", "--alpha", "0.3",
            "--trials", "4", "--out", str(out2))
        assert out.read_bytes() == out2.read_bytes()
