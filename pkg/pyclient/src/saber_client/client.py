"""Reference client loop for the engine's wire protocol (v1).

One JSON object per line over stdin/stdout: the engine sends ``hello``,
then ``observe`` messages (one at a time), then ``end``. The client must
acknowledge the handshake, reply exactly one ``action`` per observe, flush
after every reply, and ignore unknown keys. Unknown message *types* are
skipped for forward compatibility; unparseable lines are fatal.
"""

from __future__ import annotations

import json
import sys
from typing import Callable, TextIO

PROTOCOL_VERSION = 1

VALID_SIGNALS = (-1, 0, 1)

StrategyCallback = Callable[[dict], int]


class ClientLoop:
    """Strictly synchronous message pump: never holds more than one observe."""

    def __init__(
        self,
        strategy: StrategyCallback,
        name: str = "saber-client",
        stdin: TextIO | None = None,
        stdout: TextIO | None = None,
    ):
        self.strategy = strategy
        self.name = name
        self.stdin = stdin if stdin is not None else sys.stdin
        self.stdout = stdout if stdout is not None else sys.stdout

    def _emit(self, message: dict) -> None:
        self.stdout.write(json.dumps(message) + "\n")
        self.stdout.flush()

    def run(self) -> int:
        for line in self.stdin:
            line = line.strip()
            if not line:
                continue
            try:
                message = json.loads(line)
            except json.JSONDecodeError:
                return 1
            if not isinstance(message, dict):
                return 1
            kind = message.get("type")
            if kind == "hello":
                version = message.get("protocol_version")
                if version != PROTOCOL_VERSION:
                    return 1
                self._emit({
                    "type": "hello_ack",
                    "protocol_version": version,
                    "name": self.name,
                })
            elif kind == "observe":
                signal = self.strategy(message)
                if signal not in VALID_SIGNALS:
                    signal = 0
                self._emit({"type": "action", "signal": int(signal)})
            elif kind == "end":
                return 0
            # other message types: ignore (forward compatibility)
        return 0


def run_client(strategy: StrategyCallback, name: str = "saber-client") -> int:
    """Serve one session on stdin/stdout; returns the process exit code."""
    return ClientLoop(strategy, name=name).run()
