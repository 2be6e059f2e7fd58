"""Forward-pass activation dumping for causal transformers.

Runs inference (no parameter updates) over a prompt file, one prompt per
line, and writes per-sample RACT files: every layer's token hidden
states plus the post-softmax attention each layer's heads assign from
the last non-pad token to the whole sequence.  Head averaging is left to
the analysis side so the dump stays maximal-fidelity.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import torch

from .ract import write_manifest, write_ract


@dataclass(frozen=True)
class ExtractionJob:
    """One dumping run over a prompt file."""

    model: str
    prompts: str
    max_len: int = 512
    out_dir: str = "ract_out"
    limit: int | None = None
    post_block: bool = True  # residual-stream output of each layer; pre-block for ablation

    def __post_init__(self):
        if self.max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {self.max_len}")


def _load_model(model_id: str):
    from transformers import AutoModelForCausalLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_id)
    # eager attention keeps per-head attention tensors available
    model = AutoModelForCausalLM.from_pretrained(model_id, attn_implementation="eager")
    model.eval()
    return tokenizer, model


@torch.no_grad()
def _dump_sample(model, tokenizer, prompt: str, max_len: int, post_block: bool):
    enc = tokenizer(prompt, return_tensors="pt", truncation=True, max_length=max_len)
    outputs = model(**enc, output_hidden_states=True, output_attentions=True)
    # hidden_states: embeddings + one entry per layer
    states = outputs.hidden_states[1:] if post_block else outputs.hidden_states[:-1]
    last = int(enc["attention_mask"][0].sum().item()) - 1
    hidden = torch.stack([h[0] for h in states]).float().cpu().numpy()  # (L, T, D)
    attn_last = (
        torch.stack([a[0, :, last, :] for a in outputs.attentions]).float().cpu().numpy()
    )  # (L, K_h, T)
    truncated = enc["input_ids"].shape[1] == max_len and len(tokenizer(prompt)["input_ids"]) > max_len
    return hidden, attn_last, truncated


def extract(job: ExtractionJob) -> int:
    """Run the job; returns the number of samples successfully written.

    The manifest records one object per prompt line: successes carry
    ``{"sample_id", "path"}`` (plus token count and truncation flag),
    empty lines a ``"warning"``, failures an ``"error"``.  The model is
    never modified.
    """
    prompt_path = Path(job.prompts)
    lines = prompt_path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"prompt file {prompt_path} is empty")

    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tokenizer, model = _load_model(job.model)

    records: list[dict] = []
    written = 0
    for idx, prompt in enumerate(lines):
        sample_id = f"sample_{idx:04d}"
        if job.limit is not None and written >= job.limit:
            break
        if not prompt.strip():
            records.append({"sample_id": sample_id, "warning": "empty prompt line, skipped"})
            continue
        try:
            hidden, attn_last, truncated = _dump_sample(
                model, tokenizer, prompt, job.max_len, job.post_block
            )
            fname = f"{sample_id}.ract"
            write_ract(out_dir / fname, hidden, attn_last, sample_id)
            records.append(
                {
                    "sample_id": sample_id,
                    "path": fname,
                    "n_tokens": int(hidden.shape[1]),
                    "truncated": bool(truncated),
                }
            )
            written += 1
        except Exception as exc:  # per-sample failures stay in the manifest
            records.append({"sample_id": sample_id, "error": f"{type(exc).__name__}: {exc}"})

    write_manifest(out_dir / "manifest.jsonl", records)
    return written
