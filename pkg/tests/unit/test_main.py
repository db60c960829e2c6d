"""Tests for aumos_dubbing.main.

Covers:
- Exit codes: 0 on success, 1 on usage errors, 2 on data errors
- Flag-to-settings overrides
- Subcommand delegation to the services
- End-to-end toy, prepare, analyze and vad commands
"""
from __future__ import annotations

import json
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest
from pytest_mock import MockerFixture

from aumos_dubbing.adapters.wav import write_wav
from aumos_dubbing.main import EXIT_DATA_ERROR, EXIT_OK, EXIT_USAGE, build_parser, main, overrides_from_args
from aumos_dubbing.observability import configure_logging
from aumos_dubbing.settings import Settings


@pytest.fixture(autouse=True)
def _restore_logging() -> Iterator[None]:
    """main() reconfigures logging against the current stderr; reset it after capture ends."""
    yield
    configure_logging()


class TestOverrides:
    """Global and subcommand flags."""

    def test_only_given_flags_are_overrides(self) -> None:
        """Absent flags leave the config file and environment in charge."""
        args = build_parser().parse_args(["toy", "--out", "toy.jsonl"])
        assert overrides_from_args(args) == {}

    def test_flags_map_to_nested_settings(self) -> None:
        """Noise and epoch flags land in their sections."""
        argv = "--seed 3 --mode Txt2Phn --sigma 0.2 --bins 20 --preset base train --prepared p --out o --epochs 4"
        args = build_parser().parse_args([*argv.split(), "--oversample", "2"])
        assert overrides_from_args(args) == {
            "seed": 3,
            "mode": "Txt2Phn",
            "bins": 20,
            "model_preset": "base",
            "noise": {"sigma": 0.2, "oversample": 2},
            "model": {"max_epochs": 4},
        }


class TestExitCodes:
    """Process exit codes."""

    def test_missing_subcommand_is_usage_error(self) -> None:
        """argparse failures exit with 1."""
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == EXIT_USAGE

    def test_bad_system_spec_is_usage_error(self) -> None:
        """--system needs NAME=PATH."""
        with pytest.raises(SystemExit) as info:
            main(["evaluate", "--refs", "refs.jsonl", "--system", "nameonly"])
        assert info.value.code == EXIT_USAGE

    def test_non_positive_toy_size_is_usage_error(self, tmp_path: Path) -> None:
        """--n must be at least 1."""
        with pytest.raises(SystemExit) as info:
            main(["toy", "--n", "0", "--out", str(tmp_path / "toy.jsonl")])
        assert info.value.code == EXIT_USAGE

    def test_missing_input_is_data_error(self, tmp_path: Path) -> None:
        """Toolkit errors exit with 2."""
        code = main(["prepare", str(tmp_path / "absent.jsonl"), "--out", str(tmp_path / "out")])
        assert code == EXIT_DATA_ERROR

    def test_invalid_configuration_is_data_error(self, tmp_path: Path) -> None:
        """Settings errors are reported, not raised."""
        config = tmp_path / "bad.conf"
        config.write_text("bins = many\n", encoding="utf-8")
        assert main(["--config", str(config), "toy", "--out", str(tmp_path / "toy.jsonl")]) == EXIT_DATA_ERROR


class TestDelegation:
    """Handlers pass parsed arguments and settings to the services."""

    def test_train_passes_resume(self, mocker: MockerFixture, tmp_path: Path) -> None:
        """train --resume reaches TrainService.run."""
        service = mocker.patch("aumos_dubbing.main.TrainService")
        service.return_value.run.return_value = mocker.Mock(best_epoch=1, best_bleu=None, checkpoint="c.pt")
        code = main(["--seed", "9", "train", "--prepared", "p", "--out", "o", "--resume"])
        assert code == EXIT_OK
        settings = service.call_args.args[0]
        assert isinstance(settings, Settings)
        assert settings.seed == 9
        service.return_value.run.assert_called_once_with(Path("p"), Path("o"), resume=True)

    def test_translate(self, mocker: MockerFixture) -> None:
        """translate forwards checkpoint, prepared, input and output paths."""
        service = mocker.patch("aumos_dubbing.main.TranslateService")
        code = main(["translate", "--checkpoint", "c.pt", "--prepared", "p", "--input", "in.jsonl", "--out", "h.jsonl"])
        assert code == EXIT_OK
        service.return_value.run.assert_called_once_with(Path("c.pt"), Path("p"), Path("in.jsonl"), Path("h.jsonl"))

    def test_evaluate_collects_systems(self, mocker: MockerFixture) -> None:
        """Repeated --system flags become (name, path) pairs in order."""
        service = mocker.patch("aumos_dubbing.main.EvaluateService")
        service.return_value.run.return_value = []
        code = main(["evaluate", "--refs", "test.jsonl", "--system", "a=a.jsonl", "--system", "b=b.jsonl"])
        assert code == EXIT_OK
        service.return_value.run.assert_called_once_with(
            Path("test.jsonl"), [("a", Path("a.jsonl")), ("b", Path("b.jsonl"))], None
        )


class TestCommands:
    """Real runs of the lightweight subcommands."""

    def test_toy_prepare_analyze(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """A toy corpus prepares and analyzes from the command line."""
        alignments = tmp_path / "toy.jsonl"
        assert main(["--seed", "4", "toy", "--n", "40", "--out", str(alignments)]) == EXIT_OK
        assert len(alignments.read_text(encoding="utf-8").splitlines()) == 40

        assert main(["--bins", "4", "prepare", str(alignments), "--out", str(tmp_path / "prepared")]) == EXIT_OK
        assert (tmp_path / "prepared" / "manifest.json").exists()
        assert "train" in capsys.readouterr().out

        lexicon = tmp_path / "prepared" / "lexicon.txt"
        code = main(["analyze", str(alignments), "--thresholds", "200", "400", "--lexicon", str(lexicon)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "200ms" in out
        assert "400ms" in out
        assert "lexicon recovery:" in out

    def test_vad_to_stdout(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """vad prints segment JSON when no output file is given."""
        rate = 16000
        t = np.arange(rate // 2) / rate
        tone = 8000.0 * np.sin(2 * np.pi * 440.0 * t)
        samples = np.concatenate([np.zeros(rate // 5), tone, np.zeros(rate // 5)])
        wav = tmp_path / "clip.wav"
        write_wav(wav, np.round(samples).astype(np.int16), rate)
        assert main(["vad", str(wav)]) == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert len(result["segments"]) == 1
        assert abs(result["segments"][0]["dur_ms"] - 500) <= 30
