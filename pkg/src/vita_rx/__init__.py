"""vita-rx — medication recommendation with relevant-visit selection."""

__version__ = "1.0.0"
