"""Project license extraction, interpretation and incompatibility detection."""

from licscan.terms import TERMS, Attitude, Category, Term

__all__ = ["TERMS", "Attitude", "Category", "Term"]
__version__ = "0.1.0"
