"""Figure regeneration for transition-path run directories."""

from .render import KINDS, render

__version__ = "0.1.0"
