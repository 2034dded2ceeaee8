from .client import PROTOCOL_VERSION, ClientLoop, run_client

__all__ = ["PROTOCOL_VERSION", "ClientLoop", "run_client"]
