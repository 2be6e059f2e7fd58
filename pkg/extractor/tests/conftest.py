import json
import os

import pytest
import torch

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

TOY_VOCAB = {"<|endoftext|>": 0, "a": 1, "b": 2, "c": 3, "d": 4, "e": 5, "Ġ": 6, "f": 7}


def _build_toy_model(model_dir, n_layer: int) -> str:
    from transformers import GPT2Config, GPT2LMHeadModel, GPT2Tokenizer

    config = GPT2Config(
        vocab_size=len(TOY_VOCAB),
        n_positions=16,
        n_embd=8,
        n_layer=n_layer,
        n_head=2,
        bos_token_id=0,
        eos_token_id=0,
    )
    torch.manual_seed(1234)
    model = GPT2LMHeadModel(config)
    model.save_pretrained(model_dir)

    (model_dir / "vocab.json").write_text(json.dumps(TOY_VOCAB))
    (model_dir / "merges.txt").write_text("#version: 0.2\n")
    tokenizer = GPT2Tokenizer(
        str(model_dir / "vocab.json"),
        str(model_dir / "merges.txt"),
        unk_token="<|endoftext|>",
    )
    tokenizer.save_pretrained(model_dir)
    return str(model_dir)


@pytest.fixture(scope="session")
def toy_model_dir(tmp_path_factory) -> str:
    """A 2-layer, 2-head causal transformer with a char-level tokenizer,
    saved locally so everything loads offline."""
    return _build_toy_model(tmp_path_factory.mktemp("toy_model"), n_layer=2)


@pytest.fixture(scope="session")
def deep_toy_model_dir(tmp_path_factory) -> str:
    """4 layers: enough depth for the downstream multi-scale analysis,
    whose smallest target count is 3."""
    return _build_toy_model(tmp_path_factory.mktemp("toy_model_deep"), n_layer=4)
