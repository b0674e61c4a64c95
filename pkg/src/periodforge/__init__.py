"""periodforge: Feynman periods and position-space renormalization for massless phi^4."""

__version__ = "0.1.0"
