"""Few-shot prompting for a minimal invented schema, and parsing of the reply into probes."""

from __future__ import annotations

import hashlib
import json
import os
import re
import sqlite3
import threading
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .embed import RateLimiter, post_with_retries

DEFAULT_INSTRUCTION = (
    "Hallucinate a minimal schema of a relational database that can be used to answer "
    "the natural language question. Here are some examples:"
)

FREEFORM_TABLE = "_freeform"


class LLMError(RuntimeError):
    pass


class FixtureMiss(LLMError):
    """No recorded response for the requested question."""


@dataclass(frozen=True)
class PromptTemplate:
    instruction: str = DEFAULT_INSTRUCTION
    shots: tuple[tuple[str, str], ...] = ()
    temperature: float = 0.0
    max_shots: int = 6

    def __post_init__(self):
        if not self.instruction.strip():
            raise ValueError("prompt instruction must be non-empty")
        if len(self.shots) > self.max_shots:
            raise ValueError(f"{len(self.shots)} shots exceed max_shots={self.max_shots}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def with_shots(self, n: int) -> "PromptTemplate":
        """Keep the first ``n`` shots (0 gives the zero-shot prompt)."""
        return replace(self, shots=self.shots[:n])

    @classmethod
    def from_dict(cls, data: dict) -> "PromptTemplate":
        shots = tuple((s["x"], s["k"]) for s in data.get("shots", []))
        return cls(
            instruction=data.get("instruction", DEFAULT_INSTRUCTION),
            shots=shots,
            temperature=float(data.get("temperature", 0.0)),
            max_shots=int(data.get("max_shots", max(6, len(shots)))),
        )

    def to_dict(self) -> dict:
        return {
            "instruction": self.instruction,
            "shots": [{"x": x, "k": k} for x, k in self.shots],
            "temperature": self.temperature,
            "max_shots": self.max_shots,
        }


def load_template(path: str | Path) -> PromptTemplate:
    return PromptTemplate.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def builtin_template(name: str) -> PromptTemplate:
    """Shipped few-shot libraries: ``spider``, ``bird`` or ``socialdb``."""
    text = resources.files("schemaprobe").joinpath(f"data/prompts/{name}.json").read_text(encoding="utf-8")
    return PromptTemplate.from_dict(json.loads(text))


def build_prompt(template: PromptTemplate, question: str) -> str:
    if not question.strip():
        raise ValueError("question must be non-empty")
    lines = [template.instruction.strip(), ""]
    for x, k in template.shots:
        lines += [f"x: {x.strip()}", f"K: {k.strip()}", ""]
    lines += [f"x: {question.strip()}", "K:"]
    return "\n".join(lines)


# --- parsing -----------------------------------------------------------------

_ENTRY_RE = re.compile(r"([^(),\n]+)\(([^()]*)\)")
_FENCE_RE = re.compile(r"^\s*```[\w-]*\s*$", re.MULTILINE)
_BULLET_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s+", re.MULTILINE)
_PREFIX_RE = re.compile(r"^\s*K\s*:\s*", re.MULTILINE)
_TRAIL = " \t\r\n.;:,`*\"'"


def _clean_name(name: str) -> str:
    name = " ".join(name.split())
    return name.strip(_TRAIL)


def _preclean(text: str) -> str:
    text = _FENCE_RE.sub("", text)
    text = _PREFIX_RE.sub("", text)
    text = _BULLET_RE.sub("", text)
    return text


def _gap_fragments(gap: str) -> list[str]:
    return [f for f in (_clean_name(p) for p in re.split(r"[,\n]", gap)) if f]


def parse_schema(text: str) -> tuple[list[tuple[str, list[str]]], list[str]]:
    """Parse ``T1(c1, c2), T2(c3)`` into ``[(T1, [c1, c2]), (T2, [c3])]``.

    Entries are separated by commas or newlines. Malformed fragments are
    skipped and returned as the second element.
    """
    text = _preclean(text)
    tables: list[tuple[str, list[str]]] = []
    skipped: list[str] = []
    pos = 0
    for m in _ENTRY_RE.finditer(text):
        skipped += _gap_fragments(text[pos : m.start()])
        pos = m.end()
        name = _clean_name(m.group(1))
        cols = [_clean_name(c) for c in m.group(2).split(",")]
        if not name or not cols or any(not c for c in cols):
            skipped.append(" ".join(m.group(0).split()))
            continue
        tables.append((name, cols))
    skipped += _gap_fragments(text[pos:])
    return tables, skipped


def serialize_schema(tables) -> str:
    return ", ".join(f"{t}({', '.join(cols)})" for t, cols in tables)


@dataclass
class HallucinatedSchema:
    tables: list[tuple[str, list[str]]]
    raw_response: str = ""
    skipped: list[str] = field(default_factory=list)
    fallback: bool = False
    cache_key: str = ""

    @property
    def probes(self) -> list[str]:
        return [f"{t}.{c}" for t, cols in self.tables for c in cols]


def freeform_schema(response: str, question: str = "") -> HallucinatedSchema:
    frags = _gap_fragments(_preclean(response))
    if not frags:
        # nothing usable at all; the question itself becomes the lone probe
        frags = [" ".join(question.split())] if question.strip() else ["unknown"]
    return HallucinatedSchema([(FREEFORM_TABLE, frags)], raw_response=response, fallback=True)


# --- LLM clients -------------------------------------------------------------


def completion_key(model: str, prompt: str, temperature: float) -> str:
    payload = json.dumps([model, prompt, float(temperature)], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CompletionCache:
    """Write-once sqlite store of raw completions keyed by (model, prompt, temperature)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(str(self.path), check_same_thread=False)
        with self._conn:
            self._conn.execute("CREATE TABLE IF NOT EXISTS completions (key TEXT PRIMARY KEY, text TEXT)")

    def get(self, key: str) -> str | None:
        with self._lock:
            row = self._conn.execute("SELECT text FROM completions WHERE key = ?", (key,)).fetchone()
        return None if row is None else row[0]

    def put(self, key: str, text: str) -> str:
        with self._lock, self._conn:
            self._conn.execute("INSERT OR IGNORE INTO completions (key, text) VALUES (?, ?)", (key, text))
        return self.get(key)

    def close(self) -> None:
        self._conn.close()


class HttpLLM:
    """Completion-style or chat-style JSON endpoint."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        auth_env: str | None = None,
        style: str = "completion",
        max_tokens: int = 256,
        auth_header: str = "Authorization",
        auth_prefix: str = "Bearer ",
        retries: int = 3,
        backoff: float = 0.5,
        requests_per_second: float | None = None,
        timeout: float = 60.0,
        client=None,
    ):
        import httpx

        if style not in ("completion", "chat"):
            raise ValueError("style must be 'completion' or 'chat'")
        self.endpoint = endpoint
        self.model = model
        self.auth_env = auth_env
        self.style = style
        self.max_tokens = max_tokens
        self.auth_header = auth_header
        self.auth_prefix = auth_prefix
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.limiter = RateLimiter(requests_per_second)
        self.client = client or httpx.Client()

    def complete(self, prompt: str, temperature: float = 0.0, question: str | None = None) -> str:
        headers = {}
        if self.auth_env:
            key = os.environ.get(self.auth_env)
            if not key:
                raise LLMError(f"environment variable {self.auth_env} is not set")
            headers[self.auth_header] = f"{self.auth_prefix}{key}"
        if self.style == "chat":
            payload = {
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": temperature,
                "max_tokens": self.max_tokens,
            }
        else:
            payload = {"model": self.model, "prompt": prompt, "temperature": temperature, "max_tokens": self.max_tokens}
        body = post_with_retries(
            self.client, self.endpoint, payload, headers,
            retries=self.retries, backoff=self.backoff, limiter=self.limiter, timeout=self.timeout,
        )
        try:
            choice = body["choices"][0]
            return choice["message"]["content"] if self.style == "chat" else choice["text"]
        except (KeyError, IndexError, TypeError) as exc:
            raise LLMError(f"unexpected completion response shape: {exc!r}") from exc


class FixtureLLM:
    """Replays recorded replies from ``<dir>/responses.jsonl`` (``{"question", "response"}`` lines)."""

    def __init__(self, directory: str | Path, model: str = "fixture"):
        self.directory = Path(directory)
        self.model = model
        self.responses: dict[str, str] = {}
        path = self.directory / "responses.jsonl"
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    self.responses[" ".join(rec["question"].split())] = rec["response"]

    def complete(self, prompt: str, temperature: float = 0.0, question: str | None = None) -> str:
        if question is None:
            question = prompt.rsplit("x:", 1)[-1].rsplit("K:", 1)[0]
        try:
            return self.responses[" ".join(question.split())]
        except KeyError:
            raise FixtureMiss(f"no recorded response for question {question!r}") from None


class StubLLM:
    """Returns a fixed reply, or looks it up in a dict by question."""

    def __init__(self, reply: str | dict, model: str = "stub"):
        self.reply = reply
        self.model = model
        self.calls = 0

    def complete(self, prompt: str, temperature: float = 0.0, question: str | None = None) -> str:
        self.calls += 1
        if isinstance(self.reply, dict):
            return self.reply[question]
        return self.reply


def hallucinate(client, template: PromptTemplate, question: str, cache: CompletionCache | None = None) -> HallucinatedSchema:
    prompt = build_prompt(template, question)
    key = completion_key(getattr(client, "model", ""), prompt, template.temperature)
    raw = cache.get(key) if cache is not None else None
    if raw is None:
        raw = client.complete(prompt, template.temperature, question=question)
        if cache is not None:
            raw = cache.put(key, raw)
    tables, skipped = parse_schema(raw)
    if not tables:
        schema = freeform_schema(raw, question)
    else:
        schema = HallucinatedSchema(tables, raw_response=raw, skipped=skipped)
    schema.cache_key = key
    return schema
