"""Generic chat-completions client.

Provider specifics (URL, model name, key) live in configuration; the
code knows only the messages-in/text-out shape. Transport errors retry
with exponential backoff; a hard failure aborts the episode (recorded as
an abort, never as reward 0).
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass

import httpx

from ..errors import EpisodeAbort
from .policy import Messages

logger = logging.getLogger(__name__)


@dataclass
class ModelClientConfig:
    base_url: str
    model_name: str
    api_key_env_var: str = "MODEL_API_KEY"
    temperature: float = 0.0
    top_p: float = 1.0
    max_output_tokens: int = 512
    request_timeout: float = 120.0
    retries: int = 3

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")


class ChatModelClient:
    def __init__(self, config: ModelClientConfig, client: httpx.Client | None = None):
        self.config = config
        self._client = client or httpx.Client(timeout=config.request_timeout)

    def __call__(self, messages: Messages) -> str:
        payload = {
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature,
            "top_p": self.config.top_p,
            "max_tokens": self.config.max_output_tokens,
            "n": 1,
        }
        headers = {}
        key = os.environ.get(self.config.api_key_env_var, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.config.retries):
            try:
                response = self._client.post(url, json=payload, headers=headers)
                if response.status_code >= 500:
                    raise httpx.TransportError(f"server error {response.status_code}")
                if response.status_code >= 400:
                    raise EpisodeAbort(
                        f"model endpoint rejected the request ({response.status_code}): "
                        f"{response.text[:200]}"
                    )
                doc = response.json()
                return doc["choices"][0]["message"]["content"]
            except (httpx.TransportError, KeyError, ValueError) as exc:
                last_error = exc
                wait = 2.0**attempt
                logger.warning("model call failed (%s); retrying in %.0fs", exc, wait)
                time.sleep(wait)
        raise EpisodeAbort(f"model endpoint unreachable after retries: {last_error}")

    def close(self) -> None:
        self._client.close()
