#!/usr/bin/env python3
"""Rebuild the demo cassette directory from the scripted responses below.

Run from anywhere: python demo/regenerate.py
The cassette keys depend on the exact prompts the harness builds, so this
script goes through the same prompt/request code path the evaluate command
uses.
"""

from pathlib import Path

from videval.benchmark import build_question_prompt, load_dataset
from videval.config import load_config, load_transcripts
from videval.providers import (
    CassetteStore,
    ModelRequest,
    ModelResponse,
    request_fingerprint,
    request_key,
)

DEMO_DIR = Path(__file__).resolve().parent

# (question_id, condition index) -> (raw_text, status, latency_ms)
SCRIPTED: dict[tuple[str, int], tuple[str, str, int]] = {
    ("001-2", 0): ("The answer is A.", "ok", 1420),
    ("001-2", 1): ("Answer: A", "ok", 1510),
    ("002-1", 0): ("B", "ok", 980),
    ("002-1", 1): ("The answer is B.", "ok", 1015),
    ("003-1", 0): ("the options are unclear from the frames provided", "ok", 2230),
    ("003-1", 1): ("Answer: C", "ok", 2180),
    ("004-1", 0): ("Answer: B", "ok", 1340),
    ("004-1", 1): ("Answer: C", "ok", 1395),
    ("005-1", 0): ("Answer: A", "ok", 3620),
    ("005-1", 1): ("", "oom", 540),
    ("006-1", 0): ("I think the answer is C.", "ok", 4115),
    ("006-1", 1): ("Answer: B", "ok", 4230),
    ("007-1", 0): ("Answer: D", "ok", 760),
    ("007-1", 1): ("Answer: D", "ok", 812),
    ("008-1", 0): ("", "timeout", 300000),
    ("008-1", 1): ("Answer: A", "ok", 1890),
    ("009-1", 0): ("Answer: A", "ok", 3980),
    ("009-1", 1): ("Answer: C", "ok", 4050),
    ("010-1", 0): ("Answer: B", "ok", 4490),
    ("010-1", 1): ("Answer: B", "ok", 4555),
}


def main() -> None:
    cassette_dir = DEMO_DIR / "cassettes"
    cassette_dir.mkdir(exist_ok=True)  # replay config validation wants it present
    config = load_config(DEMO_DIR / "config.json")
    items = load_dataset(config.dataset)
    transcripts = load_transcripts(config.transcripts) if config.transcripts else {}

    for stale in cassette_dir.glob("*.json"):
        stale.unlink()
    store = CassetteStore(cassette_dir)

    written = 0
    for item in items:
        for cond_idx, (tag, provider) in enumerate(config.conditions):
            transcript = transcripts.get(item.video_id) if tag.with_transcript else None
            prompt = build_question_prompt(item, transcript, config.mcq_template)
            request = ModelRequest(
                provider_id=provider, modality="vlm", prompt=prompt, condition=tag
            )
            raw_text, status, latency_ms = SCRIPTED[(item.question_id, cond_idx)]
            response = ModelResponse(raw_text, latency_ms, status).validate()
            store.put(request_key(request), request_fingerprint(request), response)
            written += 1

    print(f"wrote {written} cassette entries to {cassette_dir}")


if __name__ == "__main__":
    main()
