"""Line-delimited JSON serving loop.

Reads one request object per line from stdin, invokes the hosted callable,
and writes exactly one reply line per request. A callable exception or a
malformed request yields an error reply carrying the request id (when one
could be parsed) and the session continues; EOF ends the loop cleanly.
Requests are handled strictly sequentially: user callables are commonly not
thread-safe, and the client side paces serial oracles anyway.
"""

from __future__ import annotations

import hashlib
import json
import sys
from typing import Callable, IO

__all__ = ["serve", "prediction_handler", "checksum_handler", "canonical_payload"]

_SUM_TOL = 1e-6


def canonical_payload(doc: object) -> str:
    """Key-sorted compact JSON; both ends hash this to compare payloads."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _validate_scores(scores, mode: str, num_classes: int, num_nodes: int) -> list:
    def check_row(row):
        row = [float(x) for x in row]
        if len(row) != num_classes:
            raise ValueError(f"score row has {len(row)} entries, expected {num_classes}")
        if any(x < -_SUM_TOL for x in row) or abs(sum(row) - 1.0) > _SUM_TOL:
            raise ValueError("score row is not a probability vector")
        return row

    if mode == "graph":
        return check_row(scores)
    rows = [check_row(row) for row in scores]
    if len(rows) != num_nodes:
        raise ValueError(f"got {len(rows)} score rows for a {num_nodes}-node graph")
    return rows


def prediction_handler(
    model: Callable[[dict], object], mode: str, num_classes: int
) -> Callable[[object, dict], str]:
    """Wrap a callable mapping a graph document to class scores."""

    def handle(request_id, graph: dict) -> str:
        scores = model(graph)
        validated = _validate_scores(scores, mode, num_classes, int(graph["num_nodes"]))
        return json.dumps({"id": request_id, "mode": mode, "scores": validated})

    return handle


def checksum_handler() -> Callable[[object, dict], str]:
    """Verification mode: reply with a digest of the received graph payload.

    Lets the client confirm the callable sees a value-identical graph.
    """

    def handle(request_id, graph: dict) -> str:
        digest = hashlib.sha256(canonical_payload(graph).encode()).hexdigest()
        return json.dumps({"id": request_id, "checksum": digest})

    return handle


def serve(
    handler: Callable[[object, dict], str],
    stdin: IO[str] | None = None,
    stdout: IO[str] | None = None,
) -> int:
    """Run the request loop until stdin closes; returns the exit status (0)."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        request_id = None
        try:
            doc = json.loads(line)
            request_id = doc.get("id") if isinstance(doc, dict) else None
            reply = handler(request_id, doc["graph"])
        except Exception as e:  # isolate the session from any single failure
            reply = json.dumps({"id": request_id, "error": f"{type(e).__name__}: {e}"})
        # one whole line per reply, flushed before the next read
        stdout.write(reply + "\n")
        stdout.flush()
    return 0
