"""Initial script generation and extraction of clean Bash from raw LLM text.

Models wrap scripts in prose and markdown fences; extraction applies a fixed
rule cascade (shell-tagged fence, untagged fence, first-of-many, whole-text
fallback) and always yields fence-free, newline-normalized script text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .config import PipelineConfig
from .errors import EmptyCompletion, NoScriptContent
from .gateway import CompletionText, PromptRequest

SHELL_TAGS = frozenset({"bash", "sh", "shell"})

FENCE = "```"


class ExtractionRule(str, Enum):
    FENCED_BLOCK = "fenced_block"
    FENCED_BLOCK_WITH_TAG = "fenced_block_with_tag"
    FIRST_FENCE_OF_MANY = "first_fence_of_many"
    WHOLE_TEXT_FALLBACK = "whole_text_fallback"


@dataclass(frozen=True)
class BashScript:
    """Bash source text, normalized to exactly one trailing newline.

    Internal whitespace is untouched (scripts are whitespace-sensitive); the
    constructor rejects fence markers so the no-fence invariant holds for
    every instance, however it was built.
    """

    text: str

    def __post_init__(self):
        if FENCE in self.text:
            raise ValueError("script text must not contain code-fence markers")
        normalized = self.text.rstrip()
        object.__setattr__(self, "text", normalized + "\n" if normalized else "")

    def is_empty(self) -> bool:
        return not self.text


@dataclass(frozen=True)
class GeneratedScript:
    raw: CompletionText
    script: BashScript
    extraction_rule: ExtractionRule


def _fenced_blocks(raw: str) -> list[tuple[str | None, str]]:
    """Return (tag, body) for each complete fenced block, in order."""
    blocks: list[tuple[str | None, str]] = []
    lines = raw.split("\n")
    i = 0
    while i < len(lines):
        stripped = lines[i].strip()
        if stripped.startswith(FENCE):
            tag = stripped[3:].strip().lower() or None
            body: list[str] = []
            i += 1
            while i < len(lines) and not lines[i].strip().startswith(FENCE):
                body.append(lines[i])
                i += 1
            if i >= len(lines):
                break  # opener without closer: not a complete block
            blocks.append((tag, "\n".join(body)))
        i += 1
    return blocks


_PROSE_COLON = re.compile(r":\s*$")


def _fallback_text(raw: str) -> str:
    """Strip fence remnants (and prose lines introducing them) from raw text."""
    lines = raw.split("\n")
    is_remnant = [line.strip().startswith(FENCE) for line in lines]
    keep: list[str] = []
    for idx, line in enumerate(lines):
        if is_remnant[idx]:
            continue
        if _PROSE_COLON.search(line):
            nxt = idx + 1
            while nxt < len(lines) and not lines[nxt].strip():
                nxt += 1
            if nxt < len(lines) and is_remnant[nxt]:
                continue  # "Here is the script:" style lead-in
        keep.append(line.replace(FENCE, ""))
    return "\n".join(keep)


def extract_script(raw: str) -> tuple[BashScript, ExtractionRule]:
    """Extract clean script text from a raw completion.

    Rule cascade: a single shell-tagged fenced block, a single fence of any
    other kind, the best of several fences (shell-tagged preferred, then
    first), and finally the whole text with fence remnants stripped.
    Extraction is idempotent: re-extracting its own non-empty output is a
    no-op, since that output contains no fences.
    """
    if not raw.strip():
        raise NoScriptContent("raw completion contains only whitespace")

    blocks = _fenced_blocks(raw)
    if len(blocks) == 1:
        tag, body = blocks[0]
        rule = (ExtractionRule.FENCED_BLOCK_WITH_TAG if tag in SHELL_TAGS
                else ExtractionRule.FENCED_BLOCK)
        return BashScript(body), rule
    if len(blocks) > 1:
        tagged = [b for b in blocks if b[0] in SHELL_TAGS]
        _, body = tagged[0] if tagged else blocks[0]
        return BashScript(body), ExtractionRule.FIRST_FENCE_OF_MANY
    return BashScript(_fallback_text(raw)), ExtractionRule.WHOLE_TEXT_FALLBACK


def generate_script(gateway, task: str, cfg: PipelineConfig) -> GeneratedScript:
    """Ask the generator role for a script and extract it from the raw output."""
    req = PromptRequest(
        template_id="gen.initial",
        bindings={"task": task},
        max_tokens=cfg.max_tokens,
        temperature=cfg.temperature,
    )
    completion = gateway.complete(req, cfg.roles.generator)
    if not completion.text.strip():
        raise EmptyCompletion(f"generator returned empty output for task: {task!r}")
    script, rule = extract_script(completion.text)
    return GeneratedScript(raw=completion, script=script, extraction_rule=rule)
