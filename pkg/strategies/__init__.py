"""
Strategies package: recycle-space selection strategies (what to carry into the next cycle or system).
"""

# Explicitly list available strategy modules
__all__ = [
    "selector_spec",
    "harmonic_ritz",
    "ritz_window",
    "pod",
    "previous_solutions",
]
