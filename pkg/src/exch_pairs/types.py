from __future__ import annotations

from enum import Enum


class Direction(str, Enum):
    XtoY = "XtoY"
    YtoX = "YtoX"

    def flipped(self) -> "Direction":
        return Direction.YtoX if self is Direction.XtoY else Direction.XtoY

    @property
    def as_int(self) -> int:
        """1 for XtoY, 0 for YtoX (the positive class is XtoY)."""
        return 1 if self is Direction.XtoY else 0
