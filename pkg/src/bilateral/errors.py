import numpy as np


class UsageError(ValueError):
    """Bad arguments, shapes or configuration."""


class Fault(RuntimeError):
    """A signal became non-finite, or the plant became unsolvable, while running."""

    def at(self, tick: int) -> "Fault":
        """The same fault stamped with ``tick`` if it has none yet."""
        return self if self.tick is not None else Fault(self.signal, tick, self.reason)

    def __init__(self, signal: str, tick: int | None = None, reason: str = "non-finite value"):
        where = "" if tick is None else f" at tick {tick}"
        super().__init__(f"{reason} in {signal}{where}")
        self.signal = signal
        self.tick = tick
        self.reason = reason


def require_finite(signal: str, *arrays, tick: int | None = None) -> None:
    for a in arrays:
        if not np.isfinite(a).all():
            raise Fault(signal, tick)
