"""Chat-completion reasoner client, offline fixture replay, and scoring."""

from __future__ import annotations

import base64
import hashlib
import io
import logging
import os
import re
import string
import time
from dataclasses import dataclass
from pathlib import Path

from .. import raster
from . import maze as maze_mod

log = logging.getLogger(__name__)

RETRIES = 3
BACKOFF_BASE_S = 1.0


class ReasonerError(Exception):
    pass


@dataclass
class EndpointConfig:
    base_url: str
    model: str
    key_env: str = "PVDKIT_API_KEY"
    timeout_s: float = 120.0

    def api_key(self) -> str:
        key = os.environ.get(self.key_env, "")
        if not key:
            raise ReasonerError(f"environment variable {self.key_env} is not set")
        return key


def prompt_fingerprint(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


def _encode_image(img: raster.RasterImage) -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def query_reasoner(
    cfg: EndpointConfig,
    prompt: str,
    image: raster.RasterImage | None = None,
) -> str:
    """One chat-completion request; retries with exponential backoff."""
    import requests

    if image is None:
        content = prompt
    else:
        content = [
            {"type": "text", "text": prompt},
            {
                "type": "image_url",
                "image_url": {"url": f"data:image/png;base64,{_encode_image(image)}"},
            },
        ]
    payload = {
        "model": cfg.model,
        "messages": [{"role": "user", "content": content}],
        "temperature": 0,
    }
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    headers = {"Authorization": f"Bearer {cfg.api_key()}"}
    last_error = None
    for attempt in range(RETRIES):
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=cfg.timeout_s)
            if resp.status_code == 200:
                data = resp.json()
                return data["choices"][0]["message"]["content"]
            last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
        except requests.RequestException as exc:
            last_error = str(exc)
        if attempt < RETRIES - 1:
            time.sleep(BACKOFF_BASE_S * 2**attempt)
    raise ReasonerError(f"reasoner request failed after {RETRIES} attempts: {last_error}")


class OfflineFixtures:
    """Replay recorded responses keyed by prompt hash: <hash>.txt files."""

    def __init__(self, directory):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise ReasonerError(f"fixture directory not found: {directory}")

    def path_for(self, prompt: str) -> Path:
        return self.directory / f"{prompt_fingerprint(prompt)}.txt"

    def store(self, prompt: str, response: str) -> None:
        self.path_for(prompt).write_text(response, encoding="utf-8")

    def query(self, prompt: str, image=None) -> str:
        path = self.path_for(prompt)
        if not path.exists():
            raise ReasonerError(f"no fixture for prompt hash {prompt_fingerprint(prompt)}")
        return path.read_text(encoding="utf-8")


_ANSWER_RE = re.compile(r"answer\s*[:=]\s*(.+)", re.IGNORECASE | re.DOTALL)
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> str:
    """Lowercase, extract the answer tag if present, strip punctuation."""
    m = _ANSWER_RE.search(text)
    if m:
        text = m.group(1)
    text = text.strip().splitlines()[0] if text.strip() else ""
    text = text.lower().translate(_PUNCT_TABLE)
    return " ".join(text.split())


def score_answers(instances, predictions, normalizer=None) -> float:
    """Exact-match accuracy; maze instances are scored by simulation."""
    instances = list(instances)
    if not instances:
        raise ValueError("no instances to score")
    norm = normalizer or normalize_answer
    correct = 0
    for k, inst in enumerate(instances):
        pred = predictions[k] if k < len(predictions) else ""
        meta = inst.meta if hasattr(inst, "meta") else inst.get("meta", {})
        gold = inst.gold if hasattr(inst, "gold") else inst["gold"]
        if str(meta.get("task", "")).startswith("maze"):
            spec = maze_mod.MazeSpec.from_dict(meta["maze"])
            if maze_mod.eval_maze(spec, pred):
                correct += 1
        else:
            if norm(pred) == norm(gold) and norm(pred):
                correct += 1
    return correct / len(instances)
