"""Generative-model grounding for the hybrid pipeline.

A grounding client supplies four components that replace feature heuristics:
salience ratings (for availability weights), verbal schemas (for the prior),
simulated recall (for the availability sample) and literal plausibility.

Every client renders a request, obtains raw text and parses it with the same
strict parsers, so the deterministic stub, the HTTP client and the response
cache are interchangeable. Parsers reject out-of-range numbers and wrong
cardinalities instead of repairing them.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _rng
from .config import GroundingConfig
from .features import ValenceLexicon, valence
from .inference import (
    AgentProfile,
    CompressedPrior,
    Mode,
    PosteriorResult,
    RecallItem,
    bpl_posterior,
    compress_prior,
)

SCHEMA_CONFIDENCE_FLOOR = 0.01
OPERATIONS = ("salience", "schema", "recall", "plausibility")
SALIENCE_KEYS = ("emotional_intensity", "novelty", "memorability", "sharability")


class GroundingError(RuntimeError):
    pass


class MalformedResponse(GroundingError):
    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class RateLimited(GroundingError):
    def __init__(self, message: str, retry_after: Optional[float] = None):
        super().__init__(message)
        self.retry_after = retry_after


class Transport(GroundingError):
    pass


@dataclass(frozen=True)
class SalienceProfile:
    emotional_intensity: float
    novelty: float
    memorability: float
    sharability: float

    def __post_init__(self):
        for key in SALIENCE_KEYS:
            v = getattr(self, key)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise ValueError(f"salience {key} must be in [0, 1], got {v!r}")


@dataclass(frozen=True)
class Schema:
    text: str
    p_true: float
    confidence: float

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("schema text must be non-empty")
        for key in ("p_true", "confidence"):
            v = getattr(self, key)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise ValueError(f"schema {key} must be in [0, 1], got {v!r}")


def phi_from_salience(s: SalienceProfile) -> float:
    """Availability weight from the four ratings: 1 + their sum, in [1, 5]."""
    return 1.0 + s.emotional_intensity + s.novelty + s.memorability + s.sharability


def schema_prior(schema: Schema, beta: float) -> CompressedPrior:
    """Compressed prior from a schema; low confidence shrinks the effective beta."""
    beta_eff = beta * max(SCHEMA_CONFIDENCE_FLOOR, schema.confidence)
    return compress_prior(schema.p_true, beta_eff, 1.0)


# ------------------------------------------------------------------ parsing


def _text_of(claim) -> str:
    return claim if isinstance(claim, str) else claim.text


def _load_json(raw: str) -> dict:
    text = raw.strip()
    if text.startswith("```"):
        # tolerate a fenced block, nothing else
        text = text.strip("`")
        text = text[4:] if text.lower().startswith("json") else text
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"response is not valid JSON: {exc}", raw) from None
    if not isinstance(obj, dict):
        raise MalformedResponse("response must be a JSON object", raw)
    return obj


def _prob(obj: dict, key: str, raw: str) -> float:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedResponse(f"field {key!r} missing or not a number", raw)
    v = float(v)
    if not (math.isfinite(v) and 0.0 <= v <= 1.0):
        raise MalformedResponse(f"field {key!r} = {v} outside [0, 1]", raw)
    return v


def parse_salience(raw: str) -> SalienceProfile:
    obj = _load_json(raw)
    return SalienceProfile(*(_prob(obj, k, raw) for k in SALIENCE_KEYS))


def parse_schema(raw: str) -> Schema:
    obj = _load_json(raw)
    text = obj.get("schema")
    if not isinstance(text, str) or not text.strip():
        raise MalformedResponse("field 'schema' missing or empty", raw)
    return Schema(text.strip(), _prob(obj, "p_true", raw), _prob(obj, "confidence", raw))


def parse_recall(raw: str, n: int) -> list[RecallItem]:
    obj = _load_json(raw)
    items = obj.get("items")
    if not isinstance(items, list):
        raise MalformedResponse("field 'items' missing or not a list", raw)
    if len(items) != n:
        raise MalformedResponse(f"expected {n} recall items, got {len(items)}", raw)
    out = []
    for i, it in enumerate(items):
        if not isinstance(it, dict):
            raise MalformedResponse(f"recall item {i} is not an object", raw)
        ver = str(it.get("veracity", "")).strip().lower()
        if ver not in ("true", "false"):
            raise MalformedResponse(f"recall item {i} veracity must be true|false, got {it.get('veracity')!r}", raw)
        text = it.get("text")
        if not isinstance(text, str):
            raise MalformedResponse(f"recall item {i} text missing", raw)
        sal = SalienceProfile(*(_prob(it, k, raw) for k in SALIENCE_KEYS))
        out.append(RecallItem(text, ver == "true", phi_from_salience(sal)))
    return out


def parse_plausibility(raw: str) -> float:
    return _prob(_load_json(raw), "p_true", raw)


# -------------------------------------------------------------------- cache


def request_key(op: str, request: dict) -> str:
    blob = json.dumps({"op": op, "request": request}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only JSON-lines store of raw responses keyed by request hash.

    Parsed values are kept for inspection, but hits are re-parsed from the
    raw text so cached and live paths go through the same validation.
    """

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for n, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        rec = json.loads(line)
                        self._entries[rec["key"]] = rec
                    except (json.JSONDecodeError, KeyError):
                        raise ValueError(f"{self.path}:{n}: corrupt cache record") from None

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> Optional[str]:
        with self._lock:
            rec = self._entries.get(key)
            if rec is None:
                self.misses += 1
                return None
            self.hits += 1
            return rec["raw"]

    def put(self, key: str, op: str, request: dict, raw: str, parsed) -> None:
        rec = {"key": key, "op": op, "request": request, "raw": raw, "parsed": _jsonable(parsed),
               "timestamp": time.time()}
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = rec
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _jsonable(value):
    if isinstance(value, (SalienceProfile, Schema)):
        return vars(value)
    if isinstance(value, list):
        return [{"text": it.text, "veracity": it.recalled_veracity, "phi": it.phi} for it in value]
    return value


# ------------------------------------------------------------------ clients


_PARSERS = {
    "salience": lambda raw, fields: parse_salience(raw),
    "schema": lambda raw, fields: parse_schema(raw),
    "recall": lambda raw, fields: parse_recall(raw, int(fields["n"])),
    "plausibility": lambda raw, fields: parse_plausibility(raw),
}


class GroundingClient:
    """Shared request/parse/cache plumbing; subclasses implement ``render`` and ``complete``."""

    name = "base"

    def __init__(self, cache: Optional[ResponseCache] = None):
        self.cache = cache

    def render(self, op: str, fields: dict) -> dict:
        raise NotImplementedError

    def complete(self, op: str, request: dict) -> str:
        raise NotImplementedError

    def _run(self, op: str, fields: dict):
        request = self.render(op, fields)
        key = request_key(op, request)
        raw = self.cache.get(key) if self.cache is not None else None
        if raw is not None:
            return _PARSERS[op](raw, fields)
        raw = self.complete(op, request)
        parsed = _PARSERS[op](raw, fields)
        if self.cache is not None:
            self.cache.put(key, op, request, raw, parsed)
        return parsed

    def rate_salience(self, claim) -> SalienceProfile:
        return self._run("salience", {"claim": _text_of(claim)})

    def make_schema(self, source: str, topic: str) -> Schema:
        return self._run("schema", {"source": source, "topic": topic})

    def simulate_recall(self, claim, n: int) -> list[RecallItem]:
        if n < 1:
            raise ValueError("recall size must be >= 1")
        return self._run("recall", {"claim": _text_of(claim), "n": int(n)})

    def plausibility(self, claim) -> float:
        return self._run("plausibility", {"claim": _text_of(claim)})


def _load_recall_bank() -> list[dict]:
    text = resources.files("bpl").joinpath("data/recall_corpus.jsonl").read_text(encoding="utf-8")
    return [json.loads(line) for line in text.splitlines() if line.strip()]


class StubClient(GroundingClient):
    """Offline deterministic client.

    Outputs are functions of a stable hash of (operation, input, seed). The
    emotional-intensity, memorability and sharability ratings rise with the
    claim's lexicon valence plus hash noise, so the stub's availability weight
    correlates positively with valence by construction. Recall items are drawn
    from a bundled bank of synthetic statements with their own veracity tags.
    """

    name = "stub"

    def __init__(self, seed: int = 0, cache: Optional[ResponseCache] = None, lexicon: Optional[ValenceLexicon] = None):
        super().__init__(cache)
        self.seed = int(seed)
        self.lexicon = lexicon or ValenceLexicon.load()
        self.bank = _load_recall_bank()

    def render(self, op: str, fields: dict) -> dict:
        return {"client": "stub", "seed": self.seed, **fields}

    def _u(self, op: str, text: str, count: int) -> np.ndarray:
        s = _rng.derive_seed(self.seed, op, text)
        return _rng.uniforms(s, np.arange(count))

    def _salience(self, text: str) -> dict:
        v = valence(text, self.lexicon)
        u = self._u("salience", text, 4)
        vals = (0.15 + 0.7 * v + 0.3 * (u[0] - 0.5), u[1], 0.3 + 0.4 * v + 0.3 * (u[2] - 0.5),
                0.2 + 0.5 * v + 0.3 * (u[3] - 0.5))
        return {k: round(min(1.0, max(0.0, x)), 3) for k, x in zip(SALIENCE_KEYS, vals)}

    def complete(self, op: str, request: dict) -> str:
        if op == "salience":
            body = self._salience(request["claim"])
        elif op == "schema":
            u = self._u("schema", f"{request['source']}\x1f{request['topic']}", 2)
            p = round(0.2 + 0.6 * u[0], 3)
            verdict = "usually accurate" if p >= 0.5 else "often inaccurate"
            body = {"schema": f"Statements by {request['source']} about {request['topic']} are {verdict}.",
                    "p_true": p, "confidence": round(float(u[1]), 3)}
        elif op == "recall":
            n = int(request["n"])
            u = self._u("recall", request["claim"], n)
            picks = (u * len(self.bank)).astype(np.int64)
            body = {"items": [
                {"text": self.bank[i]["text"], "veracity": self.bank[i]["veracity"], **self._salience(self.bank[i]["text"])}
                for i in picks
            ]}
        elif op == "plausibility":
            v = valence(request["claim"], self.lexicon)
            u = self._u("plausibility", request["claim"], 1)[0]
            body = {"p_true": round(min(1.0, max(0.0, 0.55 - 0.25 * v + 0.2 * (u - 0.5))), 3)}
        else:
            raise ValueError(f"unknown operation {op!r}")
        return json.dumps(body, sort_keys=True)


class HttpClient(GroundingClient):
    """Provider-agnostic JSON-over-HTTP client.

    Sends ``{"model", "prompt", "temperature": 0}`` to ``endpoint`` and reads
    the model text from ``text``, ``output`` or an OpenAI-style
    ``choices[0].message.content`` field. Rate limits and transport failures
    are retried with exponential backoff; malformed answers are not.
    """

    name = "http"

    def __init__(self, config: GroundingConfig, cache: Optional[ResponseCache] = None, transport=None):
        super().__init__(cache)
        if not config.endpoint or not config.model:
            raise ValueError("http grounding needs [grounding] endpoint and model")
        self.config = config
        self.templates = {op: self._template(op) for op in OPERATIONS}
        self._transport = transport
        self._client = None
        self._limit = threading.Semaphore(max(1, config.max_in_flight))

    def _template(self, op: str) -> str:
        if self.config.template_dir:
            return (Path(self.config.template_dir) / f"{op}.txt").read_text(encoding="utf-8")
        return resources.files("bpl").joinpath(f"data/prompts/{op}.txt").read_text(encoding="utf-8")

    def render(self, op: str, fields: dict) -> dict:
        values = {"claim": "", "source": "", "topic": "", "n": "", **fields}
        return {"model": self.config.model, "prompt": self.templates[op].format(**values), "temperature": 0}

    def _http(self):
        if self._client is None:
            import httpx

            key = os.environ.get(self.config.api_key_env, "")
            headers = {"Authorization": f"Bearer {key}"} if key else {}
            self._client = httpx.Client(timeout=self.config.timeout_seconds, headers=headers,
                                        transport=self._transport)
        return self._client

    def _post(self, request: dict) -> str:
        import httpx

        try:
            resp = self._http().post(self.config.endpoint, json=request)
        except httpx.HTTPError as exc:
            raise Transport(f"request to {self.config.endpoint} failed: {exc}") from exc
        if resp.status_code == 429:
            after = resp.headers.get("retry-after")
            raise RateLimited("rate limited (HTTP 429)", float(after) if after and after.isdigit() else None)
        if resp.status_code >= 500:
            raise Transport(f"server error HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise GroundingError(f"request rejected HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
        except ValueError:
            raise MalformedResponse("endpoint did not return JSON", resp.text) from None
        for path in (("text",), ("output",), ("choices", 0, "message", "content")):
            node = body
            try:
                for step in path:
                    node = node[step]
            except (KeyError, IndexError, TypeError):
                continue
            if isinstance(node, str):
                return node
        raise MalformedResponse("no model text in response body", resp.text)

    def complete(self, op: str, request: dict) -> str:
        attempt = 0
        while True:
            try:
                with self._limit:
                    return self._post(request)
            except (RateLimited, Transport) as exc:
                if attempt >= self.config.max_retries:
                    raise
                delay = self.config.backoff_seconds * (2 ** attempt)
                if isinstance(exc, RateLimited) and exc.retry_after is not None:
                    delay = max(delay, exc.retry_after)
                time.sleep(delay)
                attempt += 1


def make_client(config: GroundingConfig, cache_path: Optional[str] = None) -> Optional[GroundingClient]:
    """Client for ``config.mode``; None in feature mode."""
    path = cache_path or config.cache_path or None
    cache = ResponseCache(path) if path else None
    if config.mode == "stub":
        return StubClient(config.stub_seed, cache)
    if config.mode == "http":
        return HttpClient(config, cache)
    return None


# ---------------------------------------------------------- hybrid pipeline


@dataclass
class GroundedClaim:
    """All client outputs for one claim."""

    salience: SalienceProfile
    schema: Schema
    recall: list
    plausibility: float

    @property
    def phi(self) -> float:
        return phi_from_salience(self.salience)

    @property
    def false_recall_rate(self) -> float:
        return sum(not it.recalled_veracity for it in self.recall) / len(self.recall)


def schema_source(claim) -> tuple[str, str]:
    """(source, topic): LIAR uses speaker and subject, MultiFC the domain for both."""
    if getattr(claim, "speaker", None):
        return claim.speaker, claim.subject or "general"
    dom = getattr(claim, "domain", None) or "unknown"
    return dom, dom


def ground_claims(client: GroundingClient, claims: Sequence, n_recall: int, max_in_flight: int = 1) -> dict:
    """Query the client for every claim; results keyed by claim id."""

    def one(claim):
        source, topic = schema_source(claim)
        return claim.id, GroundedClaim(
            client.rate_salience(claim),
            client.make_schema(source, topic),
            client.simulate_recall(claim, n_recall),
            client.plausibility(claim),
        )

    if max_in_flight <= 1:
        pairs = [one(c) for c in claims]
    else:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            pairs = list(pool.map(one, claims))
    return dict(pairs)


class _Plausibility:
    """Adapter so bpl_posterior reads a precomputed grounded plausibility."""

    def __init__(self, value: float):
        self.value = value

    def plausibility(self, claim) -> float:
        return self.value


def hybrid_posteriors(claims, feats, agent: AgentProfile, grounded: dict, global_seed: int = 0,
                      band: tuple = (0.05, 0.95), eps: float = 1e-12, agent_index: int = 0) -> list[PosteriorResult]:
    """Run the standard chain with schema prior, grounded plausibility and simulated recall.

    Seeds follow the population runner: ``derive_seed(global_seed, claim_id, agent_index)``.
    """
    out = []
    for claim, f in zip(claims, feats):
        g = grounded[claim.id]
        a = replace(agent, seed=_rng.derive_seed(global_seed, claim.id, agent_index))
        out.append(bpl_posterior(f, a, g.recall, Mode.GROUNDED, _Plausibility(g.plausibility), claim,
                                 prior=schema_prior(g.schema, agent.beta), band=band, eps=eps))
    return out
