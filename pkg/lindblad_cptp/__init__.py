"""CPTP integrating-factor Runge-Kutta schemes for the Lindblad master equation."""

from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parent.parent

__version__ = '0.1.0'
