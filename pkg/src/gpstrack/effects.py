"""What actors ask the simulator to do after handling an input."""

from __future__ import annotations

from typing import NamedTuple


class Transmit(NamedTuple):
    data: bytes
    label: str = ""


class StartTimer(NamedTuple):
    at: int
    token: tuple


class Note(NamedTuple):
    kind: str
    detail: str = ""
