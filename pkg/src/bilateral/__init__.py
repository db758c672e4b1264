"""Four-channel bilateral teleoperation of twin serial arms.

Rigid-body dynamics, a minimal-order velocity and external-torque observer,
the bilateral control law with its comparison modes, least-squares parameter
identification, and a 1 kHz twin-arm simulator.
"""

from .errors import Fault, UsageError

__all__ = ["Fault", "UsageError"]
__version__ = "0.1.0"
