# cython: language_level=3, binding=True
"""Compiled exact rational numbers.

Drop-in replacement for the fractions.Fraction subset that twistcalc uses:
exact +, -, *, /, ** with arbitrary-precision integer numerator/denominator,
total order, hashing and canonical str().  Numerators and denominators are
Python ints, so there is no overflow; the speedup over Fraction comes from
skipping its generic-numbers dispatch and instance overhead.
"""

from libc.stdint cimport int64_t

cdef extern from "Python.h":
    pass

import math

cdef object _gcd = math.gcd


cdef inline Rat _new(object num, object den):
    cdef Rat r = Rat.__new__(Rat)
    r._num = num
    r._den = den
    return r


cdef inline Rat _make(object num, object den):
    # normalize sign and gcd; den must be nonzero
    if den < 0:
        num = -num
        den = -den
    cdef object g = _gcd(num, den)
    if g != 1:
        num = num // g
        den = den // g
    return _new(num, den)


cdef class Rat:
    cdef readonly object _num
    cdef readonly object _den

    def __init__(self, num=0, den=1):
        if den == 0:
            raise ZeroDivisionError("rational with zero denominator")
        if isinstance(num, Rat):
            if den != 1:
                r = (<Rat>num) / Rat(den)
                num, den = (<Rat>r)._num, (<Rat>r)._den
            else:
                num, den = (<Rat>num)._num, (<Rat>num)._den
        if den < 0:
            num, den = -num, -den
        g = _gcd(num, den)
        if g != 1:
            num //= g
            den //= g
        self._num = num
        self._den = den

    @property
    def numerator(self):
        return self._num

    @property
    def denominator(self):
        return self._den

    def __add__(self, b):
        cdef Rat x = <Rat>self
        cdef Rat y
        if isinstance(b, Rat):
            y = <Rat>b
            return _make(x._num * y._den + y._num * x._den, x._den * y._den)
        if isinstance(b, int):
            return _new(x._num + b * x._den, x._den)
        return NotImplemented

    def __radd__(self, b):
        cdef Rat y = <Rat>self
        if isinstance(b, int):
            return _new(y._num + b * y._den, y._den)
        return NotImplemented

    def __sub__(self, b):
        cdef Rat x = <Rat>self
        cdef Rat y
        if isinstance(b, Rat):
            y = <Rat>b
            return _make(x._num * y._den - y._num * x._den, x._den * y._den)
        if isinstance(b, int):
            return _new(x._num - b * x._den, x._den)
        return NotImplemented

    def __rsub__(self, b):
        cdef Rat y = <Rat>self
        if isinstance(b, int):
            return _new(b * y._den - y._num, y._den)
        return NotImplemented

    def __mul__(self, b):
        cdef Rat x = <Rat>self
        cdef Rat y
        if isinstance(b, Rat):
            y = <Rat>b
            return _make(x._num * y._num, x._den * y._den)
        if isinstance(b, int):
            return _make(x._num * b, x._den)
        return NotImplemented

    def __rmul__(self, b):
        cdef Rat y = <Rat>self
        if isinstance(b, int):
            return _make(y._num * b, y._den)
        return NotImplemented

    def __truediv__(self, b):
        cdef Rat x = <Rat>self
        cdef Rat y
        if isinstance(b, Rat):
            y = <Rat>b
            if y._num == 0:
                raise ZeroDivisionError("rational division by zero")
            return _make(x._num * y._den, x._den * y._num)
        if isinstance(b, int):
            if b == 0:
                raise ZeroDivisionError("rational division by zero")
            return _make(x._num, x._den * b)
        return NotImplemented

    def __rtruediv__(self, b):
        cdef Rat y = <Rat>self
        if isinstance(b, int):
            if y._num == 0:
                raise ZeroDivisionError("rational division by zero")
            return _make(b * y._den, y._num)
        return NotImplemented

    def __neg__(self):
        return _new(-self._num, self._den)

    def __pos__(self):
        return self

    def __abs__(self):
        return _new(abs(self._num), self._den)

    def __pow__(self, n, mod):
        if mod is not None:
            return NotImplemented
        if not isinstance(n, int):
            return NotImplemented
        if n >= 0:
            return _new(self._num ** n, self._den ** n)
        if self._num == 0:
            raise ZeroDivisionError("0 cannot be raised to a negative power")
        if self._num < 0:
            return _new((-self._den) ** (-n), (-self._num) ** (-n))
        return _new(self._den ** (-n), self._num ** (-n))

    def __mod__(self, b):
        cdef Rat x = <Rat>self
        cdef object bn, bd
        if isinstance(b, Rat):
            bn, bd = (<Rat>b)._num, (<Rat>b)._den
        elif isinstance(b, int):
            bn, bd = b, 1
        else:
            return NotImplemented
        if bn == 0:
            raise ZeroDivisionError("rational modulo zero")
        # a - floor(a/b) * b
        q = (x._num * bd) // (bn * x._den)
        return _make(x._num * bd - q * bn * x._den, x._den * bd)

    def __rmod__(self, b):
        cdef Rat y = <Rat>self
        if isinstance(b, int):
            if y._num == 0:
                raise ZeroDivisionError("rational modulo zero")
            q = (b * y._den) // y._num
            return _make(b * y._den - q * y._num, y._den)
        return NotImplemented

    def __floordiv__(self, b):
        cdef Rat x = <Rat>self
        if isinstance(b, Rat):
            return (x._num * (<Rat>b)._den) // ((<Rat>b)._num * x._den)
        if isinstance(b, int):
            return x._num // (b * x._den)
        return NotImplemented

    def __bool__(self):
        return self._num != 0

    def __richcmp__(a, b, int op):
        cdef object ln, ld, rn, rd
        if isinstance(a, Rat):
            ln, ld = (<Rat>a)._num, (<Rat>a)._den
        elif isinstance(a, int):
            ln, ld = a, 1
        else:
            return NotImplemented
        if isinstance(b, Rat):
            rn, rd = (<Rat>b)._num, (<Rat>b)._den
        elif isinstance(b, int):
            rn, rd = b, 1
        else:
            return NotImplemented
        lhs = ln * rd
        rhs = rn * ld
        if op == 0:
            return lhs < rhs
        if op == 1:
            return lhs <= rhs
        if op == 2:
            return lhs == rhs
        if op == 3:
            return lhs != rhs
        if op == 4:
            return lhs > rhs
        return lhs >= rhs

    def __hash__(self):
        if self._den == 1:
            return hash(self._num)
        return hash((self._num, self._den))

    def __str__(self):
        if self._den == 1:
            return str(self._num)
        return f"{self._num}/{self._den}"

    def __repr__(self):
        return f"Rat({self._num}, {self._den})"

    def __int__(self):
        if self._den != 1:
            raise ValueError(f"{self} is not an integer")
        return self._num

    def __float__(self):
        return self._num / self._den

    def __reduce__(self):
        return (Rat, (self._num, self._den))
