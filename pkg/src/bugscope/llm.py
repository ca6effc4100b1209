"""Model backends behind one completion interface, prompt rendering,
and code extraction from responses.

Two backends ship in-tree: an HTTP chat-completion client and a
deterministic mock that replays a scripted list of response texts keyed
by request ordinal. Everything that must run offline (tests, CI, the
repair-loop acceptance suite) uses the mock.
"""

from __future__ import annotations

import json
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import httpx

from .model import ExtractionMethod, GenerationParams, Task


class ModelUnavailable(RuntimeError):
    """Backend could not produce a completion (transport failure after
    retries, or an exhausted mock script)."""


class AuthMissing(RuntimeError):
    """The endpoint's auth environment variable is not set."""


class ResponseTooLarge(RuntimeError):
    pass


class MalformedResponse(RuntimeError):
    """Response arrived but did not carry the expected shape."""


@dataclass(frozen=True)
class ModelEndpoint:
    """Connection settings for one hosted model.

    A base_url of the form ``mock:<path>`` selects the scripted mock
    backend, reading an ordered JSON list of response texts from path.
    """

    id: str
    base_url: str
    auth_env_var: str = ""
    request_shape: str = "chat_completion"
    timeout_seconds: float = 60.0
    max_retries: int = 2
    max_response_bytes: int = 8 << 20
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.timeout_seconds <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @property
    def is_mock(self) -> bool:
        return self.base_url.startswith("mock:")


@dataclass(frozen=True)
class ModelResponse:
    text: str
    finish_reason: str
    latency: float


class Backend(Protocol):
    def complete(self, prompt: str, params: GenerationParams) -> ModelResponse: ...


class MockBackend:
    """Replays scripted response texts in order; deterministic by design.

    Raises ModelUnavailable once the script is exhausted unless `cycle`
    is set, which makes the script repeat forever.
    """

    def __init__(self, responses: list[str], cycle: bool = False) -> None:
        self._responses = list(responses)
        self._cycle = cycle
        self._lock = threading.Lock()
        self.call_count = 0

    @classmethod
    def from_script(cls, path: str | Path, cycle: bool = False) -> "MockBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
            raise ValueError(f"mock script {path} must be a JSON list of strings")
        return cls(data, cycle=cycle)

    def complete(self, prompt: str, params: GenerationParams) -> ModelResponse:
        with self._lock:
            ordinal = self.call_count
            self.call_count += 1
        if self._cycle and self._responses:
            text = self._responses[ordinal % len(self._responses)]
        elif ordinal < len(self._responses):
            text = self._responses[ordinal]
        else:
            raise ModelUnavailable(f"mock script exhausted after {len(self._responses)} responses")
        return ModelResponse(text=text, finish_reason="stop", latency=0.0)


class HttpBackend:
    """Chat-completion client: system+user messages, bearer auth from the
    endpoint's environment variable, exponential backoff with jitter on
    transport failures."""

    def __init__(self, endpoint: ModelEndpoint, system_prompt: str = "") -> None:
        self.endpoint = endpoint
        self.system_prompt = system_prompt
        self._permits = threading.BoundedSemaphore(endpoint.max_concurrency)

    def complete(self, prompt: str, params: GenerationParams) -> ModelResponse:
        ep = self.endpoint
        token = None
        if ep.auth_env_var:
            token = os.environ.get(ep.auth_env_var)
            if not token:
                raise AuthMissing(f"environment variable {ep.auth_env_var} is not set")

        messages = []
        if self.system_prompt:
            messages.append({"role": "system", "content": self.system_prompt})
        messages.append({"role": "user", "content": prompt})
        payload = {
            "model": ep.id,
            "messages": messages,
            "temperature": params.temperature,
            "top_k": params.top_k,
            "max_tokens": params.max_tokens,
        }
        headers = {"Authorization": f"Bearer {token}"} if token else {}

        last_exc: Optional[Exception] = None
        for attempt in range(ep.max_retries + 1):
            if attempt:
                time.sleep(0.5 * (2 ** (attempt - 1)) + random.uniform(0, 0.25))
            start = time.monotonic()
            try:
                with self._permits:
                    resp = httpx.post(
                        ep.base_url, json=payload, headers=headers,
                        timeout=ep.timeout_seconds,
                    )
                if resp.status_code >= 500:
                    last_exc = ModelUnavailable(f"server error {resp.status_code}")
                    continue
                if len(resp.content) > ep.max_response_bytes:
                    raise ResponseTooLarge(
                        f"{len(resp.content)} bytes exceeds cap {ep.max_response_bytes}"
                    )
                resp.raise_for_status()
                body = resp.json()
                choice = body["choices"][0]
                text = choice["message"]["content"]
                finish = choice.get("finish_reason", "stop")
            except (httpx.TransportError, httpx.TimeoutException) as exc:
                last_exc = exc
                continue
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise MalformedResponse(f"unexpected response shape: {exc}") from exc
            except httpx.HTTPStatusError as exc:
                raise ModelUnavailable(f"request rejected: {exc}") from exc
            if text is None:
                raise MalformedResponse("response carried no message content")
            return ModelResponse(
                text=text, finish_reason=finish, latency=time.monotonic() - start
            )
        raise ModelUnavailable(f"transport failed after {ep.max_retries + 1} attempts: {last_exc}")


def backend_for(endpoint: ModelEndpoint) -> Backend:
    if endpoint.is_mock:
        return MockBackend.from_script(endpoint.base_url[len("mock:"):])
    return HttpBackend(endpoint)


def complete(backend: Backend, prompt: str, params: GenerationParams) -> ModelResponse:
    return backend.complete(prompt, params)


GENERATION_TEMPLATE = (
    "Please provide a self-contained Python script that solves the following "
    "problem in a markdown code block:\n\n"
    "{problem}\n\n"
    "Below is a Python script with a self-contained function that solves the "
    "problem and passes corresponding tests:"
)


def render_generation_prompt(task: Task) -> str:
    """Fill the generation template with the task description (and the
    function signature when the task carries one). No import hints are
    added: the model must pick its own libraries."""
    problem = task.description
    if task.signature:
        problem = f"{problem}\n\n{task.signature}"
    return GENERATION_TEMPLATE.format(problem=problem)


REPAIR_TEMPLATE = (
    "You previously attempted the programming problem below and the submitted "
    "code is incorrect.\n\n"
    "Problem description:\n"
    "{doc_string}\n\n"
    "Incorrect code:\n"
    "{incorrect_code}\n\n"
    "Bug categories (with their interpretations):\n"
    "{bug_category}\n\n"
    "Execution feedback:\n"
    "{compiler_feedback}\n\n"
    "Critique the incorrect code: analyze the root cause of the bug against "
    "the bug categories above and point out the location of the bug in the "
    "code. Then provide the corrected code in a markdown code block."
)


def render_repair_prompt(
    task: Task, incorrect_code: str, feedback: str, taxonomy_listing: str
) -> str:
    return REPAIR_TEMPLATE.format(
        doc_string=task.description,
        incorrect_code=incorrect_code,
        bug_category=taxonomy_listing,
        compiler_feedback=feedback,
    )


@dataclass(frozen=True)
class Extraction:
    code: str
    method: ExtractionMethod


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_CODE_LINE_RE = re.compile(
    r"^(?:\s+\S|@|(?:def|class|import|from|return|if|elif|else|for|while|try|"
    r"except|finally|with|pass|break|continue|assert|raise|yield|print|async)\b)"
)


def extract_code(response_text: str) -> Extraction:
    """Pull code out of a model response.

    The first fenced block wins (language tag ignored). Without fences,
    fall back to the longest contiguous region of code-looking lines and
    flag the result as heuristic; if nothing looks like code, flag the
    extraction as failed.
    """
    m = _FENCE_RE.search(response_text)
    if m:
        body = m.group(1)
        if body.endswith("\n"):
            body = body[:-1]
        return Extraction(body, ExtractionMethod.FENCED)

    best: list[str] = []
    current: list[str] = []
    has_code = False
    for line in response_text.splitlines() + [""]:
        if not line.strip():
            if current:
                current.append(line)
            continue
        if _is_code_line(line):
            current.append(line)
            has_code = True
        else:
            if _block_weight(current) > _block_weight(best):
                best = current
            current = []
    if _block_weight(current) > _block_weight(best):
        best = current
    while best and not best[-1].strip():
        best.pop()
    if not best or not has_code:
        return Extraction("", ExtractionMethod.FAILED)
    return Extraction("\n".join(best), ExtractionMethod.HEURISTIC)


def _is_code_line(line: str) -> bool:
    if _CODE_LINE_RE.match(line):
        return True
    stripped = line.strip()
    # bare expressions/assignments still look like code
    return bool(re.match(r"^[\w.\[\]()'\"]+\s*(?:=[^=]|\+=|-=|\()", stripped))


def _block_weight(block: list[str]) -> int:
    return sum(1 for line in block if line.strip())
