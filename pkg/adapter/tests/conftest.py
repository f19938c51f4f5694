"""Builds a tiny random-weight BERT checkpoint once per session."""

import pytest

_VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "a", "movie", "film", "was", "is", "good", "bad",
    "great", "awful", "fine", "plot", "acting", "boring", "and",
    "not", "very", ".", ",", "!",
    "##s", "##ing", "##ed",
] + list("abcdefghijklmnopqrstuvwxyz")


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    import torch
    from transformers import BertConfig, BertForSequenceClassification, BertTokenizerFast

    root = tmp_path_factory.mktemp("tiny-bert")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(_VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)

    config = BertConfig(
        vocab_size=len(_VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        num_labels=2,
        id2label={0: "neg", 1: "pos"},
        label2id={"neg": 0, "pos": 1},
    )
    torch.manual_seed(0)
    model = BertForSequenceClassification(config)

    out = root / "checkpoint"
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)
