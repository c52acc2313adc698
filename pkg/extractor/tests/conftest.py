import json

import pytest
import torch
from tokenizers import Tokenizer, decoders
from tokenizers.models import BPE
from tokenizers.pre_tokenizers import ByteLevel
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast


def _byte_level_tokenizer():
    alphabet = sorted(ByteLevel.alphabet())
    vocab = {tok: i for i, tok in enumerate(alphabet)}
    vocab["<|endoftext|>"] = len(vocab)
    bpe = BPE(vocab=vocab, merges=[])
    t = Tokenizer(bpe)
    t.pre_tokenizer = ByteLevel(add_prefix_space=False)
    t.decoder = decoders.ByteLevel()
    return (
        PreTrainedTokenizerFast(
            tokenizer_object=t,
            eos_token="<|endoftext|>",
            bos_token="<|endoftext|>",
            unk_token="<|endoftext|>",
        ),
        vocab,
    )


def _save_tiny_model(path, deterministic_token: str | None = None):
    """Tiny byte-level GPT2 saved to ``path``.

    With ``deterministic_token`` set, the final layer norm bias and that
    token's embedding row share a large common direction, so sampling emits
    that token essentially always.
    """
    tok, vocab = _byte_level_tokenizer()
    tok.save_pretrained(path)
    cfg = GPT2Config(
        vocab_size=len(vocab), n_positions=96, n_embd=32, n_layer=2, n_head=2,
        bos_token_id=vocab["<|endoftext|>"], eos_token_id=vocab["<|endoftext|>"],
    )
    torch.manual_seed(0)
    model = GPT2LMHeadModel(cfg)
    if deterministic_token is not None:
        token_id = tok.convert_tokens_to_ids(deterministic_token)
        u = torch.zeros(32)
        u[0] = 1.0
        with torch.no_grad():
            model.transformer.ln_f.bias[:] = 5.0 * u
            model.transformer.wte.weight[token_id] = 50.0 * u
    model.save_pretrained(path)
    return path


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    return str(_save_tiny_model(tmp_path_factory.mktemp("tiny_lm")))


@pytest.fixture(scope="session")
def always_z_model_dir(tmp_path_factory):
    return str(_save_tiny_model(tmp_path_factory.mktemp("det_lm"), deterministic_token="z"))


def write_prompts(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return str(path)


@pytest.fixture
def ten_prompts(tmp_path):
    rows = [
        {"id": f"q{i:02d}", "prompt": f"user {i} likes jazz; recommend: ", "target": "alpha"}
        for i in range(10)
    ]
    return write_prompts(tmp_path / "prompts.jsonl", rows)
