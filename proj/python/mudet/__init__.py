"""Adaptive decision-feedback multiuser MIMO detection."""

from ._mudet import *  # noqa: F401,F403
from ._mudet import __version__  # noqa: F401
