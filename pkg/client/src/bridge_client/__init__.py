"""Reference external policy client for the gridbench bridge protocol."""

from bridge_client.frontier import FrontierExplorer
from bridge_client.client import client_loop, main

__all__ = ["FrontierExplorer", "client_loop", "main"]
