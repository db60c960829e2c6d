"""Shared fixtures and path setup for aumos-dubbing tests."""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Any

import pytest

# Ensure the src directory is on the Python path when tests are run without
# the package being installed in editable mode.
_repo_root = Path(__file__).parent.parent
_src_path = str(_repo_root / "src")
if _src_path not in sys.path:
    sys.path.insert(0, _src_path)

from aumos_dubbing.adapters.jsonl import row_from_utterance, write_jsonl  # noqa: E402
from aumos_dubbing.core.config import ModelConfig  # noqa: E402
from aumos_dubbing.core.toy import ToyCorpus, generate_toy_corpus  # noqa: E402
from aumos_dubbing.settings import Settings  # noqa: E402

TINY_MODEL = {
    "enc_layers": 1,
    "dec_layers": 1,
    "d_model": 16,
    "heads": 2,
    "d_ffn": 32,
    "dropout": 0.0,
    "max_epochs": 2,
    "batch_size": 16,
    "beam": 2,
    "max_decode_len": 40,
    "val_max_samples": 4,
    "max_positions": 128,
}


def tiny_settings(**overrides: Any) -> Settings:
    """Settings for fast end-to-end runs on the toy corpus."""
    model = {**TINY_MODEL, **overrides.pop("model", {})}
    values: dict[str, Any] = {
        "seed": 7,
        "bins": 8,
        "source_bpe_size": 200,
        "target_bpe_size": 200,
        "valid_fraction": 0.1,
        "test_fraction": 0.1,
        "model": ModelConfig(**model),
    }
    values.update(overrides)
    return Settings(**values)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep AUMOS_DUBBING_* variables of the host out of the tests."""
    import os

    for key in list(os.environ):
        if key.startswith("AUMOS_DUBBING_"):
            monkeypatch.delenv(key)


@pytest.fixture(scope="session")
def toy_corpus() -> ToyCorpus:
    """Sixty toy utterances, enough for every split and a few duration bins."""
    return generate_toy_corpus(60, seed=3)


@pytest.fixture()
def alignments_file(tmp_path: Path, toy_corpus: ToyCorpus) -> Path:
    """The toy corpus written as alignment JSONL."""
    path = tmp_path / "alignments.jsonl"
    write_jsonl(path, (row_from_utterance(utt) for utt in toy_corpus.utterances))
    return path


@pytest.fixture(scope="session")
def make_settings() -> Any:
    """Factory for tiny-model settings; keyword arguments override fields."""
    return tiny_settings
