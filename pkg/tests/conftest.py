import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gutek.builtin import train_builtin_classifier

STUB = Path(__file__).parent / "stub_model.py"


def stub_command(*extra: str) -> str:
    parts = [sys.executable, str(STUB), *extra]
    return " ".join(parts)


@pytest.fixture(scope="session")
def tiny_model():
    return train_builtin_classifier([("good", "pos"), ("bad", "neg")])


@pytest.fixture(scope="session")
def toy_corpus_path():
    return str(
        Path(__file__).parent.parent / "src" / "gutek" / "data" / "toy_corpus.jsonl"
    )
