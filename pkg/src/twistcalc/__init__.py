"""twistcalc: exact Z_T-twisted vertex operator calculus on truncated modules."""

__version__ = "0.1.0"
