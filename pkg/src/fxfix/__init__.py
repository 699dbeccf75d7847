"""WM/R-style benchmark fixing engine, tick-market simulator and fix-window analyses."""

__version__ = "0.1.0"
