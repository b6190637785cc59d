# cython: language_level=3
"""Compiled accumulation kernel for the identity checkers.

add_scaled merges a scaled coefficient dict into a flat accumulator; this
single loop dominates every coefficient-exact check, so it is worth the
C-level dict traffic.  Semantics match twistcalc.fields._py_add_scaled
exactly (which is the fallback when the extension is unavailable).
"""


def add_scaled(dict flat, dict comps, scale):
    """flat[k] += scale * v for (k, v) in comps, dropping exact zeros."""
    cdef object k, v, cur, s
    if scale is None:
        for k, v in comps.items():
            cur = flat.get(k)
            if cur is None:
                flat[k] = v
            else:
                s = cur + v
                if s.is_zero():
                    del flat[k]
                else:
                    flat[k] = s
    else:
        for k, v in comps.items():
            v = scale * v
            if v.is_zero():
                continue
            cur = flat.get(k)
            if cur is None:
                flat[k] = v
            else:
                s = cur + v
                if s.is_zero():
                    del flat[k]
                else:
                    flat[k] = s
