"""Command dispatch, the single-shot runner and the daemon.

The response to a request is a pure function of (buffer, command,
arguments).  The daemon keeps one cached buffer state per filename to make
re-analysis after edits cheap; dropping that cache can only make answers
slower, never different, which is what makes the cache safe and the
single-shot mode (`minimerlin single ...`, no cache at all) a reliable
cross-check.

Wire protocol of the daemon: a connection carries length-prefixed frames
(4-byte big-endian length, then UTF-8 JSON `{"command":..., "args":{...},
"buffer":...}`); each response is framed the same way.  One request is
processed at a time per connection; concurrent connections are served in
parallel, sessions are keyed by filename and never talk to each other.
"""
from __future__ import annotations

import json
import socket
import socketserver
import struct
import sys
import threading
from dataclasses import dataclass, field
from typing import Optional

from . import analysis as AN
from . import queries as Q
from .positions import Diagnostic, Position

COMMANDS = (
    "type-enclosing",
    "errors",
    "complete-prefix",
    "locate",
    "destruct",
    "type-expression",
    "polarity-search",
    "parse-tree",
)

_REQUIRED_FLAGS = {
    "type-enclosing": ("position",),
    "errors": (),
    "complete-prefix": ("position",),
    "locate": ("position",),
    "destruct": ("position",),
    "type-expression": ("expression", "position"),
    "polarity-search": ("query",),
    "parse-tree": (),
}


@dataclass(frozen=True)
class Request:
    command: str
    args: dict[str, str]
    buffer: str


@dataclass
class Response:
    klass: str  # "return" | "error"
    value: object
    notifications: int = 0

    def to_json(self) -> str:
        payload = {"class": self.klass, "value": self.value}
        if self.klass == "return":
            payload["notifications"] = self.notifications
        return json.dumps(payload, separators=(",", ":"))


@dataclass
class Session:
    lock: threading.Lock = field(default_factory=threading.Lock)
    state: Optional[AN.BufferState] = None


class SessionCache:
    """Per-filename buffer states.  Purely a performance device: presence or
    absence never changes any response payload."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def session(self, filename: str) -> Session:
        with self._lock:
            return self._sessions.setdefault(filename, Session())


def analyze(buffer: str, state: Optional[AN.BufferState] = None) -> tuple[AN.Analysis, AN.BufferState]:
    """Full pipeline over one buffer; `state` is the optional warm cache."""
    return AN.build(buffer, previous=state)


def _parse_position(text: str) -> Position:
    try:
        line_s, col_s = text.split(":")
        line, col = int(line_s), int(col_s)
    except ValueError:
        raise Q.QueryError(f"bad -position {text!r}, want LINE:COL") from None
    if line < 1 or col < 0:
        raise Q.QueryError(f"bad -position {text!r}: line is 1-based, col 0-based")
    return Position(line, col, -1)


def _locate_offset(a: AN.Analysis, pos: Position) -> Position:
    """Resolve a protocol line:col pair against the buffer."""
    starts = [0]
    for i, ch in enumerate(a.buffer):
        if ch == "\n":
            starts.append(i + 1)
    if pos.line > len(starts):
        return a.line_table.position(len(a.buffer))
    offset = min(starts[pos.line - 1] + pos.col, len(a.buffer))
    return a.line_table.position(offset)


def _pos_json(p: Position) -> dict:
    return {"line": p.line, "col": p.col}


def _diag_json(d: Diagnostic) -> dict:
    return {
        "start": _pos_json(d.start),
        "end": _pos_json(d.end),
        "type": d.phase,
        "message": d.message,
    }


def _tree_json(node) -> dict:
    out: dict = {"symbol": node.symbol}
    if node.synthesized:
        out["synthesized"] = True
    if node.payload is not None:
        out["payload"] = node.payload
    if node.children:
        out["children"] = [_tree_json(c) for c in node.children]
    out["start"] = _pos_json(node.range[0])
    out["end"] = _pos_json(node.range[1])
    return out


def _entries_json(entries: list[Q.CompletionEntry]) -> dict:
    return {
        "entries": [
            {"name": e.name, "type": e.type_text, "kind": e.kind} for e in entries
        ]
    }


def _dispatch(req: Request, a: AN.Analysis) -> object:
    args = req.args
    if req.command == "type-enclosing":
        pos = _locate_offset(a, _parse_position(args["position"]))
        index = int(args.get("index", "0"))
        verbosity = int(args.get("verbosity", "0"))
        chain = Q.type_enclosing(a, pos, index, verbosity)
        return [
            {
                "start": _pos_json(e.start),
                "end": _pos_json(e.end),
                "type": e.type_text,
                "tail": e.tail,
            }
            for e in chain
        ]
    if req.command == "errors":
        return [_diag_json(d) for d in Q.errors(a)]
    if req.command == "complete-prefix":
        pos = _locate_offset(a, _parse_position(args["position"]))
        return _entries_json(Q.complete_prefix(a, pos, args.get("prefix", "")))
    if req.command == "locate":
        pos = _locate_offset(a, _parse_position(args["position"]))
        out = Q.locate(a, pos)
        if isinstance(out, Q.Builtin):
            return {"kind": "builtin", "name": out.name}
        if isinstance(out, Q.NotFound):
            return {"kind": "not_found"}
        return {"kind": "position", "pos": _pos_json(out)}
    if req.command == "destruct":
        pos = _locate_offset(a, _parse_position(args["position"]))
        edit = Q.destruct(a, pos, pos)
        return {
            "start": _pos_json(edit.start),
            "end": _pos_json(edit.end),
            "text": edit.text,
        }
    if req.command == "type-expression":
        pos = _locate_offset(a, _parse_position(args["position"]))
        return Q.type_expression(a, args["expression"], pos)
    if req.command == "polarity-search":
        return _entries_json(Q.polarity_search(a, args["query"]))
    assert req.command == "parse-tree"
    return _tree_json(a.tree)


def handle(req: Request, cache: Optional[SessionCache]) -> Response:
    """Process one request; every failure becomes a class-"error" response,
    the daemon must survive anything."""
    if req.command not in COMMANDS:
        return Response("error", f"unknown command {req.command!r}")
    if "filename" not in req.args:
        return Response("error", "missing -filename")
    for flag in _REQUIRED_FLAGS[req.command]:
        if flag not in req.args:
            return Response("error", f"missing -{flag} for {req.command}")
    try:
        if cache is None:
            a, _state = analyze(req.buffer, None)
        else:
            session = cache.session(req.args["filename"])
            with session.lock:
                a, state = analyze(req.buffer, session.state)
                session.state = state
        value = _dispatch(req, a)
        return Response("return", value, notifications=len(a.diagnostics))
    except Q.QueryError as exc:
        return Response("error", str(exc))
    except Exception as exc:  # never crash the daemon
        return Response("error", f"internal error: {type(exc).__name__}: {exc}")


# ---------------------------------------------------------------------------
# single-shot mode


class UsageError(Exception):
    pass


def parse_flags(argv: list[str]) -> dict[str, str]:
    args: dict[str, str] = {}
    i = 0
    while i < len(argv):
        flag = argv[i]
        if not flag.startswith("-") or len(flag) < 2:
            raise UsageError(f"expected a -flag, got {flag!r}")
        if i + 1 >= len(argv):
            raise UsageError(f"flag {flag} needs a value")
        args[flag[1:]] = argv[i + 1]
        i += 2
    return args


def run_single(argv: list[str], stdin_text: str) -> tuple[str, int]:
    """`single <command> <flags>` with the buffer on stdin.  Exit 0 even for
    protocol-level errors (they are class-"error" responses); nonzero only
    for usage faults."""
    if not argv:
        raise UsageError("single needs a command")
    command = argv[0]
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r} (one of: {', '.join(COMMANDS)})")
    args = parse_flags(argv[1:])
    response = handle(Request(command, args, stdin_text), cache=None)
    return response.to_json() + "\n", 0


# ---------------------------------------------------------------------------
# daemon mode


def _read_exact(conn: socket.socket, n: int) -> Optional[bytes]:
    buf = b""
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def read_frame(conn: socket.socket) -> Optional[bytes]:
    header = _read_exact(conn, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    return _read_exact(conn, length)


def write_frame(conn: socket.socket, payload: bytes) -> None:
    conn.sendall(struct.pack(">I", len(payload)) + payload)


def _serve_connection(conn: socket.socket, cache: SessionCache) -> None:
    with conn:
        while True:
            frame = read_frame(conn)
            if frame is None:
                return
            try:
                data = json.loads(frame.decode("utf-8"))
                req = Request(
                    command=str(data["command"]),
                    args={str(k): str(v) for k, v in dict(data.get("args", {})).items()},
                    buffer=str(data.get("buffer", "")),
                )
            except Exception as exc:
                resp = Response("error", f"malformed frame: {exc}")
                write_frame(conn, resp.to_json().encode("utf-8"))
                continue
            resp = handle(req, cache)
            write_frame(conn, resp.to_json().encode("utf-8"))


class _Server(socketserver.ThreadingUnixStreamServer):
    daemon_threads = True
    allow_reuse_address = False


def run_daemon(channel_path: str, ready: Optional[threading.Event] = None) -> None:
    """Serve until killed.  The channel path must be unused; lifecycle is
    explicit (no auto-spawn, no idle shutdown)."""
    cache = SessionCache()

    class Handler(socketserver.BaseRequestHandler):
        def handle(self) -> None:
            _serve_connection(self.request, cache)

    with _Server(channel_path, Handler) as server:
        if ready is not None:
            ready.set()
        server.serve_forever(poll_interval=0.05)
