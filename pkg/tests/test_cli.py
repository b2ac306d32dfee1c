"""End-to-end subcommand behavior and exit codes."""

import json

import numpy as np
import pytest

from conftest import build_session, utterance
from revspeech import parse_report, read_wav, write_wav
from revspeech.cli import run
from revspeech.gmm import load_model

WORDS = ("accept", "reject", "update", "login")


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Utterance and session WAVs plus trained model files."""
    root = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(77)

    takes = {}
    for word in WORDS:
        paths = []
        for i in range(6):
            path = root / f"{word}_{i}.wav"
            write_wav(utterance(word, rng), path)
            paths.append(path)
        takes[word] = paths

    models = {}
    for word in WORDS:
        model_path = root / f"{word}.gmm"
        argv = ["train", "--label", word, "--components", "2",
                "--out", str(model_path)]
        for p in takes[word]:
            argv += ["--in", str(p)]
        assert run(argv) == 0
        models[word] = model_path

    session, spans = build_session(np.random.default_rng(202))
    session_path = root / "session.wav"
    write_wav(session, session_path)

    lexicon_path = root / "lexicon.csv"
    lexicon_path.write_text("# project word relations\naccept, antonym-of, reject\n")

    return {
        "root": root,
        "takes": takes,
        "models": models,
        "session": session_path,
        "spans": spans,
        "lexicon": lexicon_path,
    }


def model_args(workspace):
    args = []
    for path in workspace["models"].values():
        args += ["--model", str(path)]
    return args


class TestReverseCommand:
    def test_double_reverse_restores_payload(self, workspace, tmp_path):
        source = workspace["takes"]["update"][0]
        once = tmp_path / "once.wav"
        twice = tmp_path / "twice.wav"
        assert run(["reverse", "--in", str(source), "--out", str(once)]) == 0
        assert run(["reverse", "--in", str(once), "--out", str(twice)]) == 0
        original = read_wav(source)
        roundtrip = read_wav(twice)
        np.testing.assert_array_equal(roundtrip.samples, original.samples)


class TestEnhanceCommand:
    def test_writes_output_and_noise_profile(self, workspace, tmp_path):
        out = tmp_path / "clean.wav"
        profile = tmp_path / "noise.txt"
        code = run(
            ["enhance", "--in", str(workspace["session"]), "--out", str(out),
             "--noise-out", str(profile)]
        )
        assert code == 0
        cleaned = read_wav(out)
        noisy = read_wav(workspace["session"])
        assert len(cleaned.samples) == len(noisy.samples)
        lines = profile.read_text().splitlines()
        assert lines[0] == "noise-profile-v1"
        assert lines[1].startswith("frames_used:")
        assert lines[2] == "bins: 512"
        magnitudes = [float(v) for v in lines[3:]]
        assert len(magnitudes) == 512
        assert all(m >= 0 for m in magnitudes)

    def test_wiener_method_flag(self, workspace, tmp_path):
        out = tmp_path / "clean_w.wav"
        code = run(
            ["enhance", "--method", "wiener", "--in", str(workspace["session"]),
             "--out", str(out)]
        )
        assert code == 0
        assert out.exists()


class TestFeaturesCommand:
    def test_json_output(self, workspace, tmp_path):
        out = tmp_path / "feats.json"
        source = workspace["takes"]["login"][0]
        assert run(["features", "--in", str(source), "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["dim"] == 39
        assert payload["num_frames"] == len(payload["rows"])
        assert len(payload["rows"][0]) == 39

    def test_csv_output(self, workspace, tmp_path):
        out = tmp_path / "feats.csv"
        source = workspace["takes"]["login"][0]
        assert run(
            ["features", "--format", "csv", "--in", str(source), "--out", str(out)]
        ) == 0
        lines = out.read_text().splitlines()
        assert lines[0].split(",")[:2] == ["frame", "f0"]
        cells = lines[1].split(",")
        assert len(cells) == 40
        assert cells[0] == "0"
        assert all(np.isfinite(float(c)) for c in cells[1:])


class TestTrainCommand:
    def test_model_file_loads(self, workspace):
        model = load_model(workspace["models"]["accept"])
        assert model.label == "accept"
        assert model.dim == 39

    def test_same_seed_is_byte_identical(self, workspace, tmp_path):
        first = tmp_path / "m1.gmm"
        second = tmp_path / "m2.gmm"
        base = ["train", "--label", "update", "--components", "2", "--seed", "5"]
        inputs = []
        for p in workspace["takes"]["update"]:
            inputs += ["--in", str(p)]
        assert run(base + inputs + ["--out", str(first)]) == 0
        assert run(base + inputs + ["--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_mixed_sample_rates_rejected(self, workspace, tmp_path):
        from revspeech import AudioBuffer

        other_rate = tmp_path / "slow.wav"
        write_wav(AudioBuffer(np.zeros(8000) + 0.01, 8000), other_rate)
        argv = ["train", "--label", "x", "--components", "2",
                "--out", str(tmp_path / "x.gmm"),
                "--in", str(workspace["takes"]["update"][0]),
                "--in", str(other_rate)]
        assert run(argv) == 2

    def test_different_seed_changes_model(self, workspace, tmp_path):
        first = tmp_path / "s1.gmm"
        second = tmp_path / "s2.gmm"
        inputs = []
        for p in workspace["takes"]["update"]:
            inputs += ["--in", str(p)]
        run(["train", "--label", "u", "--components", "2", "--seed", "1",
             "--out", str(first)] + inputs)
        run(["train", "--label", "u", "--components", "2", "--seed", "2",
             "--out", str(second)] + inputs)
        # models may coincide numerically, but both must load cleanly
        assert load_model(first).label == load_model(second).label == "u"


class TestRecognizeCommand:
    def test_transcript_lines(self, workspace, tmp_path, capsys):
        out = tmp_path / "transcript.txt"
        code = run(
            ["recognize", "--in", str(workspace["session"]), "--out", str(out)]
            + model_args(workspace)
        )
        assert code == 0
        printed = capsys.readouterr().out
        assert printed == out.read_text()
        lines = printed.splitlines()
        assert lines[0].startswith("transcript direction=forward")
        labels = [line.split("\t")[2] for line in lines[1:]]
        assert labels == [w for w, _, _ in workspace["spans"]]

    def test_reverse_direction(self, workspace, capsys):
        code = run(
            ["recognize", "--direction", "reverse", "--in", str(workspace["session"])]
            + model_args(workspace)
        )
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("transcript direction=reverse")
        labels = [line.split("\t")[2] for line in lines[1:]]
        assert labels == ["login", "update", "reject"]


class TestAnalyzeCommand:
    def analyze(self, workspace, out_dir, extra=()):
        argv = (
            ["analyze", "--in", str(workspace["session"]),
             "--lexicon", str(workspace["lexicon"]), "--out-dir", str(out_dir)]
            + model_args(workspace)
            + list(extra)
        )
        return run(argv)

    def test_report_files_and_flagged_pair(self, workspace, tmp_path):
        out_dir = tmp_path / "report"
        assert self.analyze(workspace, out_dir) == 0
        report = parse_report((out_dir / "report.json").read_text())
        assert [r.text for r in report.requirements] == ["accept", "update", "login"]
        assert len(report.flagged) == 1
        assert report.flagged[0].reverse_segment.label == "reject"
        markdown = (out_dir / "report.md").read_text()
        assert "## Flagged Inconsistencies" in markdown
        assert "None detected." not in markdown

    def test_byte_identical_across_runs(self, workspace, tmp_path):
        first = tmp_path / "run1"
        second = tmp_path / "run2"
        assert self.analyze(workspace, first) == 0
        assert self.analyze(workspace, second) == 0
        assert (first / "report.json").read_bytes() == (second / "report.json").read_bytes()
        assert (first / "report.md").read_bytes() == (second / "report.md").read_bytes()

    def test_timestamp_recorded(self, workspace, tmp_path):
        out_dir = tmp_path / "stamped"
        assert self.analyze(workspace, out_dir, ["--timestamp", "2026-08-08T12:00:00Z"]) == 0
        report = parse_report((out_dir / "report.json").read_text())
        assert report.timestamp == "2026-08-08T12:00:00Z"


class TestConfigAndErrors:
    def test_config_file_changes_behavior(self, workspace, tmp_path):
        cfg_path = tmp_path / "tool.cfg"
        cfg_path.write_text("features.num_ceps = 10\n")
        out = tmp_path / "feats10.json"
        source = workspace["takes"]["login"][0]
        code = run(
            ["--config", str(cfg_path), "features", "--in", str(source),
             "--out", str(out)]
        )
        assert code == 0
        assert json.loads(out.read_text())["dim"] == 30

    def test_verbose_prints_effective_config(self, workspace, tmp_path, capsys):
        out = tmp_path / "f.json"
        source = workspace["takes"]["login"][0]
        code = run(
            ["--verbose", "--seed", "123", "features", "--in", str(source),
             "--out", str(out)]
        )
        assert code == 0
        err = capsys.readouterr().err
        assert "seed = 123" in err
        assert "features.num_ceps = 13" in err
        assert "enhance.method = spectral_subtraction" in err

    def test_unknown_flag_is_usage_error(self, workspace):
        assert run(["reverse", "--nope", "x"]) == 1

    def test_missing_subcommand_is_usage_error(self):
        assert run([]) == 1

    def test_missing_input_is_data_error(self, tmp_path):
        code = run(
            ["reverse", "--in", str(tmp_path / "ghost.wav"),
             "--out", str(tmp_path / "out.wav")]
        )
        assert code == 2

    def test_malformed_wav_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"RIFFxxxxJUNK")
        assert run(["reverse", "--in", str(bad), "--out", str(tmp_path / "o.wav")]) == 2

    def test_bad_model_is_data_error(self, workspace, tmp_path):
        bad = tmp_path / "bad.gmm"
        bad.write_text("gmm-v9\n")
        code = run(
            ["recognize", "--in", str(workspace["session"]), "--model", str(bad),
             "--model", str(bad)]
        )
        assert code == 2

    def test_bad_config_is_data_error(self, workspace, tmp_path):
        cfg_path = tmp_path / "broken.cfg"
        cfg_path.write_text("nonsense.key = 1\n")
        out = tmp_path / "o.wav"
        source = workspace["takes"]["login"][0]
        code = run(
            ["--config", str(cfg_path), "reverse", "--in", str(source),
             "--out", str(out)]
        )
        assert code == 2

    def test_help_exits_zero(self, capsys):
        assert run(["--help"]) == 0
        capsys.readouterr()
