"""Skeleton for a language-model-backed agent.

Shows where the prompt/inference call slots in. Without SABER_CLIENT_LLM_KEY
set the agent performs no network I/O and answers HOLD, which keeps any test
suite that spawns it fully hermetic.

    python -m saber_client.examples.llm_stub
"""

import os
import sys

from saber_client import run_client

API_KEY_ENV = "SABER_CLIENT_LLM_KEY"


def build_prompt(observe: dict) -> str:
    bars = observe.get("bars", [])
    tail = bars[-5:]
    lines = [f"{b['date']}: close {b['adj_close']}" for b in tail]
    texts = [t["text"] for t in observe.get("texts", [])][-3:]
    return (
        f"You are trading {observe['symbol']} on {observe['date']}.\n"
        + "Recent closes:\n" + "\n".join(lines)
        + ("\nRecent headlines:\n" + "\n".join(texts) if texts else "")
        + "\nReply with exactly one of: BUY, SELL, HOLD."
    )


def query_model(prompt: str, api_key: str) -> int:
    # Wire your inference client here: send `prompt`, parse BUY/SELL/HOLD
    # from the completion, and map it to +1 / -1 / 0.
    raise NotImplementedError("no inference backend configured")


def strategy(observe: dict) -> int:
    api_key = os.environ.get(API_KEY_ENV)
    if not api_key:
        return 0
    return query_model(build_prompt(observe), api_key)


if __name__ == "__main__":
    sys.exit(run_client(strategy, name="llm-stub"))
