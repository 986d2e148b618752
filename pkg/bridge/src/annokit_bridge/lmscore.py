"""pool + demonstrations -> confidence table, via an LM completion endpoint.

Speaks the same wire protocol annokit's remote scorer expects on the other
side (POST {prompt, max_tokens, temperature} -> {text, token_logprobs}) and
writes the same table schema it loads ({"version": 1, "scores": {...}}).
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import requests

from .embed import InputError

EXAMPLE_PATTERN = "Input: {input}\nOutput: {output}"
QUERY_PATTERN = "Input: {input}\nOutput:"
SEPARATOR = "\n\n"


class ScoringError(Exception):
    pass


def read_demos(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"demos file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a JSON list of {{input, output}} objects")
    for i, demo in enumerate(data):
        if not isinstance(demo, dict) or not demo.get("input") or not demo.get("output"):
            raise InputError(f"{path}: demo {i} needs non-empty input and output")
    return data


def render_prompt(demos: list[dict], query_text: str) -> str:
    parts = [
        EXAMPLE_PATTERN.replace("{input}", d["input"]).replace("{output}", d["output"])
        for d in demos
    ]
    parts.append(QUERY_PATTERN.replace("{input}", query_text))
    return SEPARATOR.join(parts)


def score_pool_remote(
    pool_path: str | Path,
    demos_path: str | Path,
    out_path: str | Path,
    url: str | None = None,
    token: str | None = None,
    max_tokens: int = 64,
    timeout: float = 60.0,
) -> int:
    """Score every pool instance against the endpoint; returns the count."""
    url = url or os.environ.get("ANNOKIT_LM_URL")
    if not url:
        raise ScoringError("no endpoint (flag --lm-url or ANNOKIT_LM_URL)")
    token = token or os.environ.get("ANNOKIT_LM_TOKEN")
    demos = read_demos(demos_path)

    pool_path = Path(pool_path)
    if not pool_path.exists():
        raise InputError(f"pool file not found: {pool_path}")

    headers = {"Content-Type": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"

    scores: dict[str, float] = {}
    with open(pool_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            instance_id = record.get("id", f"line{lineno}")
            prompt = render_prompt(demos, record.get("text") or str(instance_id))
            body = {"prompt": prompt, "max_tokens": max_tokens, "temperature": 0}
            try:
                response = requests.post(url, json=body, headers=headers, timeout=timeout)
                response.raise_for_status()
                payload = response.json()
            except requests.RequestException as exc:
                raise ScoringError(f"id {instance_id!r}: request failed: {exc}") from exc
            except ValueError as exc:
                raise ScoringError(f"id {instance_id!r}: non-JSON response: {exc}") from exc
            logprobs = payload.get("token_logprobs")
            if not isinstance(logprobs, list) or not logprobs:
                raise ScoringError(f"id {instance_id!r}: empty or missing token_logprobs")
            scores[str(instance_id)] = sum(float(x) for x in logprobs) / len(logprobs)

    Path(out_path).write_text(
        json.dumps({"version": 1, "scores": scores}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return len(scores)
