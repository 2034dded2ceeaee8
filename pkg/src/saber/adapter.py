"""Run external black-box timing strategies as subprocesses.

Transport is newline-delimited JSON over the child's stdin/stdout (protocol
v1): ``hello``/``hello_ack`` handshake, then one ``observe`` out and one
``action`` back per decision day, then ``end``. Faults never abort an
experiment: malformed or missing replies coerce that day's signal to HOLD
and are logged as incidents, so a crashed agent registers as inactivity.
Both sides must ignore unknown keys.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
from dataclasses import dataclass

from .errors import HandshakeTimeout, SpawnFailure, VersionMismatch
from .strategies.timing import HOLD, DecisionContext, TimingStrategy

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1

INIT = "INIT"
READY = "READY"
TRADING = "TRADING"
CLOSED = "CLOSED"

VALID_SIGNALS = (-1, 0, 1)


@dataclass
class SessionReport:
    exit_code: int | None
    observe_count: int
    action_count: int
    incidents: list[str]
    early_exit: bool = False
    forced_termination: bool = False

    def to_dict(self) -> dict:
        return {
            "exit_code": self.exit_code,
            "observe_count": self.observe_count,
            "action_count": self.action_count,
            "incidents": list(self.incidents),
            "early_exit": self.early_exit,
            "forced_termination": self.forced_termination,
        }


class AdapterSession:
    """One subprocess, one message stream, one outstanding request at a time."""

    def __init__(self, command: list[str], timeout: float = 120.0):
        self.command = list(command)
        self.timeout = timeout
        self.state = INIT
        self.agent_name: str | None = None
        self.observe_count = 0
        self.action_count = 0
        self.incidents: list[str] = []
        self.outbound: list[dict] = []
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()
        self._reader: threading.Thread | None = None

    # -- transport -------------------------------------------------------------

    def _start_reader(self) -> None:
        def pump():
            assert self._proc is not None
            for line in self._proc.stdout:
                self._lines.put(line)
            self._lines.put(None)  # EOF marker

        self._reader = threading.Thread(target=pump, daemon=True)
        self._reader.start()

    def _send(self, message: dict) -> bool:
        self.outbound.append(message)
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
            return True
        except (BrokenPipeError, OSError, ValueError):
            return False

    def _recv(self) -> dict | None:
        """Next parsed message, or None on timeout/EOF/garbage line."""
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            return None
        if line is None:
            return None
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            return {"type": "__unparseable__", "raw": line.strip()}
        return obj if isinstance(obj, dict) else {"type": "__unparseable__", "raw": line.strip()}


def open_session(command: list[str], timeout: float = 120.0) -> AdapterSession:
    """Spawn the agent and complete the version handshake."""
    session = AdapterSession(command, timeout)
    try:
        session._proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
    except (FileNotFoundError, PermissionError, OSError) as exc:
        raise SpawnFailure(f"{command!r}: {exc}") from None
    session._start_reader()
    session._send({"type": "hello", "protocol_version": PROTOCOL_VERSION})
    ack = session._recv()
    if ack is None:
        _terminate(session)
        raise HandshakeTimeout(f"no hello_ack from {command!r}")
    if ack.get("type") != "hello_ack" or ack.get("protocol_version") != PROTOCOL_VERSION:
        _terminate(session)
        raise VersionMismatch(f"bad hello_ack: {ack!r}")
    session.agent_name = ack.get("name")
    session.state = READY
    return session


def request_signal(session: AdapterSession, observe: dict) -> int:
    """One observe out, one action in; faults coerce to HOLD with an incident."""
    if session.state not in (READY, TRADING):
        raise RuntimeError(f"request_signal in state {session.state}")
    session.state = TRADING
    sent = session._send(observe)
    session.observe_count += 1
    if not sent:
        session.incidents.append(f"{observe['date']}: broken pipe on observe")
        _terminate(session)
        return HOLD
    reply = session._recv()
    if reply is None:
        session.incidents.append(f"{observe['date']}: timeout or EOF waiting for action")
        _terminate(session)
        return HOLD
    signal = reply.get("signal")
    if (
        reply.get("type") != "action"
        or isinstance(signal, bool)
        or signal not in VALID_SIGNALS
    ):
        session.incidents.append(f"{observe['date']}: malformed action {reply!r}")
        logger.warning("adapter %s: malformed action %r", session.command, reply)
        return HOLD
    session.action_count += 1
    return int(signal)


def _terminate(session: AdapterSession) -> None:
    session.state = CLOSED
    proc = session._proc
    if proc is None:
        return
    if proc.poll() is None:
        proc.terminate()
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


def close_session(session: AdapterSession) -> SessionReport:
    """Send ``end``, reap the child (force-terminating on a hang), report."""
    proc = session._proc
    forced = False
    early = False
    exit_code: int | None = None
    if proc is not None:
        early = proc.poll() is not None and session.state != CLOSED
        if proc.poll() is None:
            session._send({"type": "end"})
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=session.timeout)
            except subprocess.TimeoutExpired:
                forced = True
                _terminate(session)
        exit_code = proc.poll()
    session.state = CLOSED
    return SessionReport(
        exit_code=exit_code,
        observe_count=session.observe_count,
        action_count=session.action_count,
        incidents=list(session.incidents),
        early_exit=early,
        forced_termination=forced,
    )


def bar_to_wire(bar) -> dict:
    return {
        "date": bar.date.isoformat(),
        "open": bar.open,
        "high": bar.high,
        "low": bar.low,
        "close": bar.close,
        "adj_close": bar.adj_close,
        "volume": bar.volume,
    }


class AdapterStrategy(TimingStrategy):
    """Timing strategy backed by an external agent process.

    The session opens lazily on the window's first decision and is torn down
    by the engine's finalize hook, so each (symbol, window) cell gets its own
    subprocess. After a timeout or broken pipe the remaining days emit HOLD
    without contacting the dead process.
    """

    def __init__(
        self,
        command: list[str],
        name: str = "adapter",
        timeout: float = 120.0,
        bars_window: int = 30,
        send_texts: bool = False,
        text_kinds: set[str] | None = None,
    ):
        self.name = name
        self.command = list(command)
        self.timeout = timeout
        self.bars_window = bars_window
        self.send_texts = send_texts
        self.text_kinds = text_kinds
        self.session: AdapterSession | None = None
        self.report: SessionReport | None = None

    @property
    def incidents(self) -> tuple[str, ...]:
        return tuple(self.session.incidents) if self.session else ()

    def reset(self, training_view, trade_start, train_start) -> None:
        self.session = open_session(self.command, self.timeout)

    def signal(self, view, ctx: DecisionContext) -> int:
        if self.session is None or self.session.state == CLOSED:
            return HOLD
        n = min(self.bars_window, view.available)
        observe = {
            "type": "observe",
            "date": ctx.date.isoformat(),
            "symbol": view.symbol,
            "bars": [bar_to_wire(b) for b in view.window_bars(n)],
            "texts": [
                {
                    "symbol": t.symbol,
                    "date": t.date.isoformat(),
                    "kind": t.kind,
                    "text": t.text,
                }
                for t in (view.texts(self.text_kinds) if self.send_texts else [])
            ],
            "portfolio": {
                "position": ctx.position,
                "cash": ctx.cash,
                "shares": ctx.shares,
            },
        }
        return request_signal(self.session, observe)

    def finalize(self) -> None:
        if self.session is not None:
            self.report = close_session(self.session)
