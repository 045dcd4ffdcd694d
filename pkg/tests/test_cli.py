"""End-to-end tests of the command line surface."""

import numpy as np
import pytest

from xvecanon import read_embeddings
from xvecanon.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A tiny synth -> train pipeline shared by the command tests."""
    root = tmp_path_factory.mktemp("cli")
    pop = root / "pop.csv"
    model = root / "model_{gender}.json"
    assert main(["synth", "--speakers", "40", "--utts", "3", "--dim", "16",
                 "--modes", "3", "--seed", "1", "--out", str(pop)]) == 0
    assert main(["train", "--input", str(pop), "--variance", "0.9",
                 "--components", "3", "--seed", "2", "--out", str(model)]) == 0
    return root


class TestSynth:
    def test_row_count_and_header(self, tmp_path):
        out = tmp_path / "pop.csv"
        assert main(["synth", "--speakers", "10", "--utts", "4", "--dim", "8",
                     "--seed", "9", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# seed=9 version=")
        assert lines[1].split(",")[:3] == ["utt_id", "spk_id", "gender"]
        assert len(lines) == 2 + 40

    def test_reruns_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["synth", "--speakers", "8", "--utts", "2", "--dim", "6", "--seed", "3"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_default_scale_row_count(self, tmp_path):
        out = tmp_path / "pop.csv"
        assert main(["synth", "--speakers", "500", "--utts", "4", "--dim", "64",
                     "--seed", "9", "--out", str(out)]) == 0
        data_rows = [l for l in out.read_text().splitlines()
                     if l and not l.startswith(("#", "utt_id"))]
        assert len(data_rows) == 2000


class TestTrain:
    def test_writes_one_model_per_gender(self, workdir):
        assert (workdir / "model_male.json").exists()
        assert (workdir / "model_female.json").exists()

    def test_rerun_byte_identical(self, workdir, tmp_path):
        out = tmp_path / "m_{gender}.json"
        for _ in range(2):
            assert main(["train", "--input", str(workdir / "pop.csv"),
                         "--variance", "0.9", "--components", "3",
                         "--seed", "2", "--out", str(out)]) == 0
        assert (tmp_path / "m_male.json").read_bytes() == \
            (workdir / "model_male.json").read_bytes()

    def test_zero_components_is_usage_error(self, workdir, capsys):
        code = main(["train", "--input", str(workdir / "pop.csv"),
                     "--components", "0", "--out", "x.json"])
        capsys.readouterr()
        assert code == 2

    def test_missing_input_exits_2(self, tmp_path, capsys):
        code = main(["train", "--input", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "m.json")])
        capsys.readouterr()
        assert code == 2

    def test_gender_suffix_without_placeholder(self, workdir, tmp_path):
        out = tmp_path / "model.json"
        assert main(["train", "--input", str(workdir / "pop.csv"),
                     "--variance", "0.9", "--components", "2",
                     "--seed", "4", "--out", str(out)]) == 0
        assert (tmp_path / "model_male.json").exists()
        assert (tmp_path / "model_female.json").exists()


class TestAnonymize:
    def test_per_speaker_shares_fakes(self, workdir, tmp_path):
        out = tmp_path / "anon.csv"
        assert main(["anonymize", "--input", str(workdir / "pop.csv"),
                     "--model", str(workdir / "model_{gender}.json"),
                     "--seed", "5", "--out", str(out)]) == 0
        fakes = read_embeddings(out)
        rows = {}
        for emb in fakes:
            rows.setdefault(emb.speaker_id, []).append(emb.vector)
        assert all(
            all(np.array_equal(v, vecs[0]) for v in vecs)
            for vecs in rows.values()
        )

    def test_per_utterance_differs(self, workdir, tmp_path):
        out = tmp_path / "anon_utt.csv"
        assert main(["anonymize", "--input", str(workdir / "pop.csv"),
                     "--model", str(workdir / "model_{gender}.json"),
                     "--per-utterance", "--seed", "5", "--out", str(out)]) == 0
        fakes = read_embeddings(out)
        by_spk = {}
        for emb in fakes:
            by_spk.setdefault(emb.speaker_id, []).append(emb.vector)
        some = next(iter(by_spk.values()))
        assert not np.array_equal(some[0], some[1])

    def test_fd_threshold_enforced(self, workdir, tmp_path):
        out = tmp_path / "anon_fd.csv"
        assert main(["anonymize", "--input", str(workdir / "pop.csv"),
                     "--model", str(workdir / "model_{gender}.json"),
                     "--fd", "--fd-threshold", "0.8",
                     "--seed", "5", "--out", str(out)]) == 0
        originals = read_embeddings(workdir / "pop.csv")
        fakes = read_embeddings(out)
        first_of = {}
        for emb in originals:
            first_of.setdefault(emb.speaker_id, emb.vector)
        from xvecanon import cosine_similarity
        for emb in fakes:
            anchor = first_of[emb.speaker_id]
            assert cosine_similarity(emb.vector, anchor) < 0.8

    def test_fd_threshold_one_matches_plain(self, workdir, tmp_path):
        plain, fd = tmp_path / "p.csv", tmp_path / "f.csv"
        base = ["anonymize", "--input", str(workdir / "pop.csv"),
                "--model", str(workdir / "model_{gender}.json"), "--seed", "6"]
        assert main(base + ["--out", str(plain)]) == 0
        assert main(base + ["--fd", "--fd-threshold", "1.0", "--out", str(fd)]) == 0
        assert plain.read_bytes() == fd.read_bytes()

    def test_unsatisfiable_fd_exits_4(self, workdir, tmp_path, capsys):
        code = main(["anonymize", "--input", str(workdir / "pop.csv"),
                     "--model", str(workdir / "model_{gender}.json"),
                     "--fd", "--fd-threshold", "-0.999999", "--max-attempts", "3",
                     "--seed", "5", "--out", str(tmp_path / "x.csv")])
        capsys.readouterr()
        assert code == 4

    def test_dimension_mismatch_exits_2(self, workdir, tmp_path, capsys):
        other = tmp_path / "other.csv"
        main(["synth", "--speakers", "6", "--utts", "1", "--dim", "9",
              "--seed", "0", "--out", str(other)])
        code = main(["anonymize", "--input", str(other),
                     "--model", str(workdir / "model_{gender}.json"),
                     "--seed", "1", "--out", str(tmp_path / "x.csv")])
        capsys.readouterr()
        assert code == 2


class TestBaseline:
    def test_runs_and_writes(self, workdir, tmp_path):
        out = tmp_path / "base.csv"
        assert main(["baseline", "--pool", str(workdir / "pop.csv"),
                     "--input", str(workdir / "pop.csv"),
                     "--n-far", "30", "--n-avg", "10",
                     "--seed", "3", "--out", str(out)]) == 0
        fakes = read_embeddings(out)
        assert len(fakes) == 120

    def test_pool_too_small_exits_2(self, workdir, tmp_path, capsys):
        code = main(["baseline", "--pool", str(workdir / "pop.csv"),
                     "--input", str(workdir / "pop.csv"),
                     "--n-far", "1000", "--n-avg", "10",
                     "--seed", "3", "--out", str(tmp_path / "x.csv")])
        capsys.readouterr()
        assert code == 2


class TestEvalKs:
    def test_report_schema_and_figure(self, workdir, tmp_path):
        out = tmp_path / "ks.csv"
        assert main(["eval-ks", "--a", str(workdir / "pop.csv"),
                     "--b", str(workdir / "pop.csv"),
                     "--seed", "0", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# seed=0 version=")
        assert lines[1] == "gender,ks,n_pairs_a,n_pairs_b"
        for line in lines[2:]:
            gender, ks, _, _ = line.split(",")
            assert float(ks) == 0.0  # identical inputs
        assert (tmp_path / "ks.png").exists()

    def test_no_figures_flag(self, workdir, tmp_path):
        out = tmp_path / "ks2.csv"
        assert main(["eval-ks", "--a", str(workdir / "pop.csv"),
                     "--b", str(workdir / "pop.csv"), "--no-figures",
                     "--seed", "0", "--out", str(out)]) == 0
        assert not (tmp_path / "ks2.png").exists()

    def test_ecdf_dumps(self, workdir, tmp_path):
        out = tmp_path / "ks3.csv"
        prefix = tmp_path / "ecdf"
        assert main(["eval-ks", "--a", str(workdir / "pop.csv"),
                     "--b", str(workdir / "pop.csv"), "--no-figures",
                     "--ecdf-prefix", str(prefix),
                     "--seed", "0", "--out", str(out)]) == 0
        dump = tmp_path / "ecdf_a_male.csv"
        assert dump.exists()
        lines = dump.read_text().splitlines()
        assert lines[1] == "x,F"
        last = lines[-1].split(",")
        assert float(last[1]) == 1.0


class TestSweep:
    def test_grid_rows(self, workdir, tmp_path):
        out = tmp_path / "grid.csv"
        assert main(["sweep", "--input", str(workdir / "pop.csv"),
                     "--variances", "0.8,0.95", "--components", "1,2",
                     "--seed", "0", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[1] == "gender,variance,components,ks"
        assert len(lines) == 2 + 2 * 2 * 2  # genders x variances x components
        assert (tmp_path / "grid.png").exists()

    def test_failed_cells_recorded_not_fatal(self, workdir, tmp_path, capsys):
        out = tmp_path / "grid2.csv"
        # 40 components cannot be trained on a 60-vector train half
        assert main(["sweep", "--input", str(workdir / "pop.csv"),
                     "--variances", "0.9", "--components", "2,40",
                     "--no-figures", "--seed", "0", "--out", str(out)]) == 0
        captured = capsys.readouterr()
        assert "failed" in captured.err
        rows = [l for l in out.read_text().splitlines()[2:]]
        assert any(",nan" in row for row in rows)
        assert any(",nan" not in row for row in rows)


class TestAsvSim:
    def test_metrics_schema(self, workdir, tmp_path):
        out = tmp_path / "metrics.csv"
        assert main(["asv-sim", "--enroll", str(workdir / "pop.csv"),
                     "--trial", str(workdir / "pop.csv"),
                     "--scenario", "aa",
                     "--strategy", "ours", "--strategy", "baseline",
                     "--model", str(workdir / "model_{gender}.json"),
                     "--pool", str(workdir / "pop.csv"),
                     "--n-far", "30", "--n-avg", "10",
                     "--seed", "0", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[1] == "scenario,strategy,gender,eer,cllr,cllr_min,n_genuine,n_impostor"
        rows = [l.split(",") for l in lines[2:]]
        assert len(rows) == 4  # 2 strategies x 2 genders
        assert {r[1] for r in rows} == {"ours", "baseline"}
        assert (tmp_path / "metrics.png").exists()

    def test_ours_fd_strategy(self, workdir, tmp_path):
        out = tmp_path / "metrics_fd.csv"
        assert main(["asv-sim", "--enroll", str(workdir / "pop.csv"),
                     "--trial", str(workdir / "pop.csv"),
                     "--scenario", "aa", "--strategy", "ours_fd",
                     "--model", str(workdir / "model_{gender}.json"),
                     "--no-figures", "--seed", "0", "--out", str(out)]) == 0
        rows = [l.split(",") for l in out.read_text().splitlines()[2:]]
        assert all(r[1] == "ours_fd" for r in rows) and len(rows) == 2

    def test_literal_model_path_with_gender_filter(self, workdir, tmp_path):
        out = tmp_path / "anon_one.csv"
        assert main(["anonymize", "--input", str(workdir / "pop.csv"),
                     "--model", str(workdir / "model_male.json"),
                     "--gender", "male", "--seed", "1", "--out", str(out)]) == 0
        fakes = read_embeddings(out)
        assert set(fakes.genders) == {"male"}

    def test_none_strategy_oa_equals_oo(self, workdir, tmp_path):
        outs = []
        for scenario in ("oa", "oo"):
            out = tmp_path / f"m_{scenario}.csv"
            assert main(["asv-sim", "--enroll", str(workdir / "pop.csv"),
                         "--trial", str(workdir / "pop.csv"),
                         "--scenario", scenario, "--strategy", "none",
                         "--no-figures", "--seed", "0", "--out", str(out)]) == 0
            rows = out.read_text().splitlines()[2:]
            outs.append([r.split(",")[3:] for r in rows])
        assert outs[0] == outs[1]

    def test_missing_model_is_input_error(self, workdir, tmp_path, capsys):
        code = main(["asv-sim", "--enroll", str(workdir / "pop.csv"),
                     "--trial", str(workdir / "pop.csv"),
                     "--scenario", "aa", "--strategy", "ours",
                     "--seed", "0", "--out", str(tmp_path / "x.csv")])
        capsys.readouterr()
        assert code == 2
