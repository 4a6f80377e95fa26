"""Policy/value evaluators feeding the tree search.

Every evaluator maps a synthesis state plus its legal-action mask to a
probability distribution supported exactly on the legal indices and a value
in [-1, 1].  The uniform and heuristic evaluators run in-process; the remote
evaluator speaks a line-delimited JSON protocol to a policy server:

    request:  {"id": int, "n": int, "tables": [hex, ...], "target": hex,
               "legal": [int, ...]}
    response: {"id": int, "policy": [[int, float], ...], "value": float}

one response line per request line, matched by id.
"""

from __future__ import annotations

import json
import math
import socket
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .env import SynthState, enumerate_candidates
from .truthtable import TruthTable

DEFAULT_BETA = 8.0
DEFAULT_TIMEOUT = 30.0


class EvaluatorUnavailableError(RuntimeError):
    """Remote evaluator failed; the episode must abort rather than degrade."""


@dataclass(frozen=True)
class Evaluation:
    policy: dict[int, float]
    value: float


class Evaluator(Protocol):
    def evaluate(self, state: SynthState, legal: Sequence[int]) -> Evaluation: ...


def _check_legal(legal: Sequence[int]) -> list[int]:
    if not legal:
        raise ValueError("evaluation requires a non-empty legal set")
    return list(legal)


class UniformEvaluator:
    """Equal probability on every legal action, value 0."""

    def evaluate(self, state: SynthState, legal: Sequence[int]) -> Evaluation:
        legal = _check_legal(legal)
        p = 1.0 / len(legal)
        return Evaluation({idx: p for idx in legal}, 0.0)


class HeuristicEvaluator:
    """Distance-guided stand-in for a learned model.

    Scores each candidate by the negation-aware Hamming distance between its
    table and the target, normalized by 2^n, and softmaxes -beta * score.
    The value estimate is 1 - 4 * d_min / 2^n clamped to [-1, 1], where d_min
    is the best negation-aware distance among the existing node tables.
    """

    def __init__(self, beta: float = DEFAULT_BETA):
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.beta = beta

    def evaluate(self, state: SynthState, legal: Sequence[int]) -> Evaluation:
        legal = _check_legal(legal)
        width = state.target.width
        tbits = state.target.bits
        mask = state.target.mask
        candidates = dict(enumerate_candidates(state))
        scores = []
        for idx in legal:
            bits = candidates.get(idx)
            if bits is None:
                raise ValueError(f"action {idx} is not legal in this state")
            h = (bits ^ tbits).bit_count()
            scores.append(min(h, width - h) / width)
        top = max(-self.beta * sc for sc in scores)
        weights = [math.exp(-self.beta * sc - top) for sc in scores]
        total = sum(weights)
        policy = {idx: w / total for idx, w in zip(legal, weights)}
        d_min = min(
            min((t.bits ^ tbits).bit_count(), width - (t.bits ^ tbits).bit_count())
            for t in state.tables
        )
        value = max(-1.0, min(1.0, 1.0 - 4.0 * d_min / width))
        return Evaluation(policy, value)


def encode_request(request_id: int, state: SynthState, legal: Sequence[int]) -> str:
    payload = {
        "id": request_id,
        "n": state.n,
        "tables": [t.to_hex() for t in state.tables],
        "target": state.target.to_hex(),
        "legal": list(legal),
    }
    return json.dumps(payload, separators=(",", ":"))


def normalize_response(raw: dict, legal: Sequence[int]) -> Evaluation:
    """Restrict a server policy to the legal set, renormalize, clamp value."""
    try:
        pairs = raw["policy"]
        value = float(raw["value"])
    except (KeyError, TypeError, ValueError) as exc:
        raise EvaluatorUnavailableError(f"malformed response: {exc}") from exc
    legal_set = set(legal)
    policy = {}
    for entry in pairs:
        idx, p = int(entry[0]), float(entry[1])
        if idx in legal_set and p > 0:
            policy[idx] = policy.get(idx, 0.0) + p
    total = sum(policy.values())
    if total <= 0:
        raise EvaluatorUnavailableError("response policy has no mass on the legal set")
    policy = {idx: p / total for idx, p in sorted(policy.items())}
    return Evaluation(policy, max(-1.0, min(1.0, value)))


def parse_endpoint(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint {address!r} is not HOST:PORT")
    return host or "127.0.0.1", int(port)


class RemoteEvaluator:
    """Client for the line-delimited JSON policy protocol over TCP.

    Maintains one connection per instance; instances must not be shared
    across concurrent searches.
    """

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._reader = None
        self._next_id = 0

    def _connect(self):
        if self._sock is None:
            host, port = parse_endpoint(self.endpoint)
            try:
                self._sock = socket.create_connection((host, port), timeout=self.timeout)
                self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                self._reader = self._sock.makefile("r", encoding="utf-8")
            except OSError as exc:
                raise EvaluatorUnavailableError(f"cannot reach {self.endpoint}: {exc}") from exc

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None
                self._reader = None

    def evaluate(self, state: SynthState, legal: Sequence[int]) -> Evaluation:
        legal = _check_legal(legal)
        self._connect()
        request_id = self._next_id
        self._next_id += 1
        line = encode_request(request_id, state, legal)
        try:
            self._sock.sendall(line.encode("utf-8") + b"\n")
            while True:
                reply = self._reader.readline()
                if not reply:
                    raise EvaluatorUnavailableError("connection closed by policy server")
                raw = json.loads(reply)
                if raw.get("id") == request_id:
                    break
        except (OSError, json.JSONDecodeError) as exc:
            self.close()
            raise EvaluatorUnavailableError(f"policy server failure: {exc}") from exc
        if "error" in raw:
            raise EvaluatorUnavailableError(f"policy server error: {raw['error']}")
        return normalize_response(raw, legal)


@dataclass(frozen=True)
class EvaluatorConfig:
    kind: str = "heuristic"
    beta: float = DEFAULT_BETA
    endpoint: str = ""
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "heuristic", "remote"):
            raise ValueError(f"unknown evaluator kind {self.kind!r}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


def parse_evaluator_spec(spec: str) -> EvaluatorConfig:
    """Parse CLI-style specs: uniform | heuristic | remote:HOST:PORT."""
    if spec == "uniform":
        return EvaluatorConfig(kind="uniform")
    if spec == "heuristic":
        return EvaluatorConfig(kind="heuristic")
    if spec.startswith("remote:"):
        return EvaluatorConfig(kind="remote", endpoint=spec[len("remote:"):])
    raise ValueError(f"unknown evaluator spec {spec!r}")


def make_evaluator(config: EvaluatorConfig) -> Evaluator:
    if config.kind == "uniform":
        return UniformEvaluator()
    if config.kind == "heuristic":
        return HeuristicEvaluator(config.beta)
    return RemoteEvaluator(config.endpoint, config.timeout)
