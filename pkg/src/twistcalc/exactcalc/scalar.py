"""Exact elements of cyclotomic fields Q(zeta_N).

A Scalar is a coefficient vector over Q of length phi(N), reduced modulo the
N-th cyclotomic polynomial.  Arithmetic between different orders promotes
both operands into Q(zeta_lcm).  Equality is comparison of canonical reduced
forms.  Everything is exact; there is no floating point anywhere.
"""

import math
from functools import lru_cache

from twistcalc.kernel import RAT, rat, as_rat


# ---------------------------------------------------------------------------
# integer polynomial helpers (dense ascending coefficient tuples)

def _poly_divides(num, den):
    """Exact division num/den of integer polynomials."""
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1]
        if c % den[-1] != 0:
            raise ArithmeticError("non-exact polynomial division")
        q = c // den[-1]
        out[i] = q
        if q:
            for j, d in enumerate(den):
                num[i + j] -= q * d
    if any(num[: len(den) - 1]):
        raise ArithmeticError("non-exact polynomial division")
    return tuple(out)


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n):
    """Coefficients of Phi_n, ascending, monic over Z."""
    if n < 1:
        raise ValueError("order must be >= 1")
    if n == 1:
        return (-1, 1)
    num = [0] * (n + 1)
    num[0], num[n] = -1, 1
    poly = tuple(num)
    for d in range(1, n):
        if n % d == 0:
            poly = _poly_divides(poly, cyclotomic_polynomial(d))
    return poly


@lru_cache(maxsize=None)
def euler_phi(n):
    return len(cyclotomic_polynomial(n)) - 1


@lru_cache(maxsize=None)
def _reduction_rows(n):
    """x^j mod Phi_n for j = phi .. max(n-1, 2*phi-2), tuples of length phi."""
    phi = euler_phi(n)
    poly = cyclotomic_polynomial(n)
    top_power = max(n - 1, 2 * phi - 2)
    rows = []
    cur = [-c for c in poly[:phi]]          # x^phi
    rows.append(tuple(cur))
    for _ in range(top_power - phi):        # x^{j+1} = x * x^j, re-reduced
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            r0 = rows[0]
            for i in range(phi):
                cur[i] += top * r0[i]
        rows.append(tuple(cur))
    return tuple(rows)


def _reduce_power_map(n, powers):
    """Reduce {exponent: RAT} (exponents any nonneg ints) to basis coeffs."""
    phi = euler_phi(n)
    out = [rat(0)] * phi
    for e, c in powers.items():
        e %= n
        if e < phi:
            out[e] = out[e] + c
        else:
            row = _reduction_rows(n)[e - phi]
            for i, r in enumerate(row):
                if r:
                    out[i] = out[i] + c * r
    return tuple(out)


def _lcm(a, b):
    return a * b // math.gcd(a, b)


class Scalar:
    """An exact element of Q(zeta_order)."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order, coeffs):
        self.order = order
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------------

    @staticmethod
    def rational(x):
        return Scalar(1, (as_rat(x),))

    @staticmethod
    def zero():
        return Scalar(1, (rat(0),))

    @staticmethod
    def one():
        return Scalar(1, (rat(1),))

    @staticmethod
    def zeta(n, k=1):
        """zeta_n^k as an element of Q(zeta_n) (of Q itself when phi(n)=1)."""
        coeffs = _reduce_power_map(n, {k % n: rat(1)})
        if len(coeffs) == 1:            # n in {1, 2}: the value is rational
            return Scalar(1, coeffs)
        return Scalar(n, coeffs)

    @staticmethod
    def coerce(x):
        if isinstance(x, Scalar):
            return x
        return Scalar(1, (as_rat(x),))

    # -- order promotion ----------------------------------------------------

    def promote(self, n):
        """Embed into Q(zeta_n); requires self.order | n."""
        if n == self.order:
            return self
        if n % self.order != 0:
            raise ValueError(f"cannot embed Q(zeta_{self.order}) in Q(zeta_{n})")
        step = n // self.order
        powers = {j * step: c for j, c in enumerate(self.coeffs) if c}
        if not powers:
            return Scalar(n, (rat(0),) * euler_phi(n))
        return Scalar(n, _reduce_power_map(n, powers))

    @staticmethod
    def _common(a, b):
        if a.order == b.order:
            return a, b
        n = _lcm(a.order, b.order)
        return a.promote(n), b.promote(n)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = Scalar.coerce(other)
        if self.order == other.order:
            return Scalar(self.order,
                          tuple(x + y for x, y in zip(self.coeffs, other.coeffs)))
        # adding a rational touches only the constant basis coefficient
        if other.is_rational():
            return Scalar(self.order,
                          (self.coeffs[0] + other.coeffs[0],) + self.coeffs[1:])
        if self.is_rational():
            return Scalar(other.order,
                          (other.coeffs[0] + self.coeffs[0],) + other.coeffs[1:])
        a, b = Scalar._common(self, other)
        return Scalar(a.order, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        other = Scalar.coerce(other)
        if self.order == other.order:
            return Scalar(self.order,
                          tuple(x - y for x, y in zip(self.coeffs, other.coeffs)))
        if other.is_rational():
            return Scalar(self.order,
                          (self.coeffs[0] - other.coeffs[0],) + self.coeffs[1:])
        if self.is_rational():
            return Scalar(other.order,
                          (self.coeffs[0] - other.coeffs[0],)
                          + tuple(-y for y in other.coeffs[1:]))
        a, b = Scalar._common(self, other)
        return Scalar(a.order, tuple(x - y for x, y in zip(a.coeffs, b.coeffs)))

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __neg__(self):
        return Scalar(self.order, tuple(-x for x in self.coeffs))

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            try:
                v = as_rat(other)
            except TypeError:
                return NotImplemented
            return Scalar(self.order, tuple(x * v for x in self.coeffs))
        if self.order == 1 and other.order == 1:
            return Scalar(1, (self.coeffs[0] * other.coeffs[0],))
        if self.order != other.order:
            # rational factors scale coefficient-wise, no promotion needed
            if other.is_rational():
                v = other.coeffs[0]
                return Scalar(self.order, tuple(x * v for x in self.coeffs))
            if self.is_rational():
                v = self.coeffs[0]
                return Scalar(other.order, tuple(x * v for x in other.coeffs))
        a, b = Scalar._common(self, other)
        phi = len(a.coeffs)
        prod = [rat(0)] * (2 * phi - 1)
        for i, x in enumerate(a.coeffs):
            if not x:
                continue
            for j, y in enumerate(b.coeffs):
                if y:
                    prod[i + j] = prod[i + j] + x * y
        out = list(prod[:phi])
        if phi > 1:
            rows = _reduction_rows(a.order)
            for e in range(phi, 2 * phi - 1):
                c = prod[e]
                if c:
                    row = rows[e - phi]
                    for i, r in enumerate(row):
                        if r:
                            out[i] = out[i] + c * r
        return Scalar(a.order, tuple(out))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Scalar.coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("scalar division by zero")
        if self.order == 1 and other.order == 1:
            return Scalar(1, (self.coeffs[0] / other.coeffs[0],))
        a, b = Scalar._common(self, other)
        return a * b._inverse()

    def __rtruediv__(self, other):
        return Scalar.coerce(other) / self

    def _inverse(self):
        """Extended Euclid against Phi_order in Q[x]."""
        phi = len(self.coeffs)
        if phi == 1:
            return Scalar(self.order, (1 / self.coeffs[0],))
        mod = [rat(c) for c in cyclotomic_polynomial(self.order)]
        r0, s0 = mod, [rat(0)]
        r1, s1 = list(self.coeffs), [rat(1)]
        while True:
            while r1 and not r1[-1]:
                r1.pop()
            if not r1:
                raise ZeroDivisionError("scalar not invertible")
            if len(r1) == 1:
                inv = 1 / r1[0]
                powers = {i: c * inv for i, c in enumerate(s1) if c}
                if not powers:
                    return Scalar(self.order, (rat(0),) * phi)
                return Scalar(self.order, _reduce_power_map(self.order, powers))
            q = [rat(0)] * (len(r0) - len(r1) + 1)
            r2 = list(r0)
            for i in range(len(q) - 1, -1, -1):
                c = r2[i + len(r1) - 1] / r1[-1]
                q[i] = c
                if c:
                    for j, d in enumerate(r1):
                        r2[i + j] = r2[i + j] - c * d
            r2 = r2[: len(r1) - 1]
            s2 = list(s0) + [rat(0)] * max(0, len(q) + len(s1) - 1 - len(s0))
            for i, qc in enumerate(q):
                if qc:
                    for j, sc in enumerate(s1):
                        s2[i + j] = s2[i + j] - qc * sc
            r0, s0, r1, s1 = r1, s1, r2, s2

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return (self ** (-n))._inverse()
        out = Scalar.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- predicates -----------------------------------------------------------

    def is_zero(self):
        return not any(self.coeffs)

    def __bool__(self):
        return any(self.coeffs)

    def is_rational(self):
        return not any(self.coeffs[1:])

    def as_rat(self):
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.coeffs[0]

    def __eq__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        if self.order == other.order:
            return self.coeffs == other.coeffs
        a, b = Scalar._common(self, other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        if self.is_rational():
            return hash(self.coeffs[0])
        return hash((self.order, self.coeffs))

    # -- output ---------------------------------------------------------------

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for j, c in enumerate(self.coeffs):
            if not c:
                continue
            if j == 0:
                parts.append(str(c))
            else:
                mono = f"z{self.order}" if j == 1 else f"z{self.order}^{j}"
                if c == 1:
                    parts.append(mono)
                elif c == -1:
                    parts.append(f"-{mono}")
                else:
                    parts.append(f"{c}*{mono}")
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    def __repr__(self):
        return f"Scalar({self})"


S_ZERO = Scalar.zero()
S_ONE = Scalar.one()
S_MINUS_ONE = Scalar.rational(-1)


@lru_cache(maxsize=65536)
def _binomial_cached(alpha, k):
    num = rat(1)
    for i in range(k):
        num = num * (alpha - i)
    den = 1
    for i in range(2, k + 1):
        den *= i
    return num / den


def rational_binomial(alpha, k):
    """Generalized binomial alpha*(alpha-1)*...*(alpha-k+1)/k! over Q."""
    if k < 0:
        raise ValueError("binomial index must be nonnegative")
    return _binomial_cached(as_rat(alpha), k)


@lru_cache(maxsize=65536)
def _falling_cached(alpha, k):
    out = rat(1)
    for i in range(k):
        out = out * (alpha - i)
    return out


def falling_factorial(alpha, k):
    """alpha*(alpha-1)*...*(alpha-k+1) over Q."""
    return _falling_cached(as_rat(alpha), k)


def koszul_sign(parity_a, parity_b):
    """Koszul sign (-1)^{|a||b|} as a Scalar."""
    return S_MINUS_ONE if (parity_a & 1) and (parity_b & 1) else S_ONE
