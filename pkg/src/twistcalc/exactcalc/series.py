"""Truncated Puiseux series in one to three formal variables.

Every series carries, per variable, a validity window: the closed exponent
interval on which its stored coefficients are guaranteed to equal those of
the untruncated object (None bounds mean unbounded; the window folds in
known true zeros, so an exact finite object has the full window).  All
operations compute the guaranteed-correct window of their result rather than
trusting the caller; a coefficient is never reported outside a window.

Delta functions are never materialized on their own: they enter only through
the window-bounded expansion builders below, pre-multiplied into finite data.
"""

from twistcalc.kernel import rat, as_rat
from twistcalc.exactcalc.scalar import Scalar, rational_binomial, falling_factorial

FULL = (None, None)
EMPTY = ("empty", "empty")


class SoundnessError(ValueError):
    """A requested coefficient or operation lies outside a validity window."""


def rat_floor(x):
    x = as_rat(x)
    return x.numerator // x.denominator


def rat_ceil(x):
    x = as_rat(x)
    return -((-x.numerator) // x.denominator)


def w_is_full(w):
    return w == FULL


def w_is_empty(w):
    return w == EMPTY


def w_contains(w, e):
    if w == EMPTY:
        return False
    lo, hi = w
    return (lo is None or e >= lo) and (hi is None or e <= hi)


def w_intersect(a, b):
    if a == EMPTY or b == EMPTY:
        return EMPTY
    lo = a[0] if b[0] is None else (b[0] if a[0] is None else max(a[0], b[0]))
    hi = a[1] if b[1] is None else (b[1] if a[1] is None else min(a[1], b[1]))
    if lo is not None and hi is not None and lo > hi:
        return EMPTY
    return (lo, hi)


def w_shift(w, d):
    if w == EMPTY:
        return EMPTY
    lo, hi = w
    return (None if lo is None else lo + d, None if hi is None else hi + d)


def _mul_window(wf, sf, wg, sg):
    """Validity window of a product, one variable.

    wf/wg are the factor windows, sf/sg the stored-support intervals (or
    None when a factor stores nothing in this variable).  Anchored windows
    (unbounded on one side) compose; a truncated factor against a factor
    truncated on the opposite side has no sound interval.
    """
    if wf == EMPTY or wg == EMPTY:
        return EMPTY
    if wf == FULL and wg == FULL:
        return FULL
    if wf == FULL:
        if sf is None:
            return FULL                      # exactly-zero factor
        lo = None if wg[0] is None else wg[0] + sf[1]
        hi = None if wg[1] is None else wg[1] + sf[0]
    elif wg == FULL:
        if sg is None:
            return FULL
        lo = None if wf[0] is None else wf[0] + sg[1]
        hi = None if wf[1] is None else wf[1] + sg[0]
    elif wf[0] is None and wg[0] is None:
        mf = sf[0] if sf is not None else wf[1]
        mg = sg[0] if sg is not None else wg[1]
        lo = None
        hi = min(wf[1] + mg, wg[1] + mf)
    elif wf[1] is None and wg[1] is None:
        mf = sf[1] if sf is not None else wf[0]
        mg = sg[1] if sg is not None else wg[0]
        hi = None
        lo = max(wf[0] + mg, wg[0] + mf)
    else:
        return EMPTY
    if lo is not None and hi is not None and lo > hi:
        return EMPTY
    return (lo, hi)


class TruncatedSeries:
    """Finitely supported exponent-tuple -> coefficient map with windows.

    Coefficients are Scalars or module vectors (anything with is_zero, +,
    and Scalar multiplication).  For vector coefficients, deg0 records the
    grading offset: the module degree of the cell at exponents e is
    deg0 + sum(e), which is how truncation exactness is tracked downstream.
    """

    __slots__ = ("vars", "data", "windows", "deg0")

    def __init__(self, vars, data=None, windows=None, deg0=None):
        self.vars = tuple(vars)
        self.windows = {v: FULL for v in self.vars}
        if windows:
            for v, w in windows.items():
                self.windows[v] = w
        self.data = {}
        if data:
            for cell, coeff in data.items():
                if coeff.is_zero():
                    continue
                if self._cell_in_windows(cell):
                    self.data[cell] = coeff
        self.deg0 = deg0

    def _cell_in_windows(self, cell):
        for v, e in zip(self.vars, cell):
            if not w_contains(self.windows[v], e):
                return False
        return True

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def zero(vars, deg0=None):
        return TruncatedSeries(vars, {}, None, deg0)

    @staticmethod
    def constant(vars, coeff, deg0=None):
        cell = (rat(0),) * len(vars)
        return TruncatedSeries(vars, {cell: coeff}, None, deg0)

    @staticmethod
    def monomial(vars, cell, coeff, deg0=None):
        cell = tuple(as_rat(e) for e in cell)
        return TruncatedSeries(vars, {cell: coeff}, None, deg0)

    # -- inspection -----------------------------------------------------------

    def support(self, var):
        i = self.vars.index(var)
        if not self.data:
            return None
        es = [cell[i] for cell in self.data]
        return (min(es), max(es))

    def coefficient(self, cell):
        """Stored coefficient at cell; zero means absent-but-inside-window."""
        cell = tuple(as_rat(e) for e in cell)
        if not self._cell_in_windows(cell):
            raise SoundnessError(f"cell {cell} outside validity window")
        return self.data.get(cell)

    def cells(self):
        return sorted(self.data)

    def is_zero(self):
        return not self.data

    def window_nonempty(self):
        return all(w != EMPTY for w in self.windows.values())

    # -- arithmetic -----------------------------------------------------------

    def _merge_deg0(self, other):
        if self.deg0 is None or other.deg0 is None:
            return None
        return self.deg0 if self.deg0 == other.deg0 else None

    def __add__(self, other):
        if self.vars != other.vars:
            raise ValueError("variable mismatch in series addition")
        windows = {v: w_intersect(self.windows[v], other.windows[v])
                   for v in self.vars}
        data = dict(self.data)
        for cell, coeff in other.data.items():
            cur = data.get(cell)
            data[cell] = coeff if cur is None else cur + coeff
        return TruncatedSeries(self.vars, data, windows, self._merge_deg0(other))

    def __sub__(self, other):
        return self + other.scale(Scalar.rational(-1))

    def __neg__(self):
        return self.scale(Scalar.rational(-1))

    def scale(self, coeff):
        data = {cell: coeff * c for cell, c in self.data.items()}
        return TruncatedSeries(self.vars, data, self.windows, self.deg0)

    def shift(self, var, delta):
        """Multiply by var**delta."""
        delta = as_rat(delta)
        i = self.vars.index(var)
        data = {}
        for cell, coeff in self.data.items():
            new = list(cell)
            new[i] = new[i] + delta
            data[tuple(new)] = coeff
        windows = dict(self.windows)
        windows[var] = w_shift(windows[var], delta)
        deg0 = None if self.deg0 is None else self.deg0 - delta
        return TruncatedSeries(self.vars, data, windows, deg0)

    def __mul__(self, other):
        """Product; at least one factor must have Scalar coefficients."""
        if self.vars != other.vars:
            raise ValueError("variable mismatch in series product")
        windows = {}
        for v in self.vars:
            windows[v] = _mul_window(self.windows[v], self.support(v),
                                     other.windows[v], other.support(v))
        data = {}
        for c1, k1 in self.data.items():
            for c2, k2 in other.data.items():
                cell = tuple(a + b for a, b in zip(c1, c2))
                prod = k1 * k2
                cur = data.get(cell)
                data[cell] = prod if cur is None else cur + prod
        deg0 = None
        if self.deg0 is not None and other.deg0 is None:
            deg0 = self.deg0
        elif other.deg0 is not None and self.deg0 is None:
            deg0 = other.deg0
        return TruncatedSeries(self.vars, data, windows, deg0)

    def restrict(self, windows):
        merged = dict(self.windows)
        for v, w in windows.items():
            merged[v] = w_intersect(merged[v], w)
        return TruncatedSeries(self.vars, self.data, merged, self.deg0)

    def with_deg0(self, deg0):
        return TruncatedSeries(self.vars, self.data, self.windows, deg0)

    def reorder(self, new_vars):
        """Permute the variable tuple."""
        if set(new_vars) != set(self.vars) or len(new_vars) != len(self.vars):
            raise ValueError("reorder must permute the existing variables")
        perm = [self.vars.index(v) for v in new_vars]
        data = {tuple(cell[p] for p in perm): c for cell, c in self.data.items()}
        windows = {v: self.windows[v] for v in new_vars}
        return TruncatedSeries(new_vars, data, windows, self.deg0)

    def lift(self, allvars):
        """Embed into a larger variable tuple (new exponents zero, windows full)."""
        pos = [allvars.index(v) for v in self.vars]
        zero = rat(0)
        data = {}
        for cell, coeff in self.data.items():
            new = [zero] * len(allvars)
            for p, e in zip(pos, cell):
                new[p] = e
            data[tuple(new)] = coeff
        windows = {v: FULL for v in allvars}
        for v in self.vars:
            windows[v] = self.windows[v]
        return TruncatedSeries(allvars, data, windows, self.deg0)

    # -- calculus ---------------------------------------------------------------

    def derivative(self, var):
        """Termwise d/dvar; the window shifts down by one."""
        i = self.vars.index(var)
        data = {}
        for cell, coeff in self.data.items():
            e = cell[i]
            if not e:
                continue
            new = list(cell)
            new[i] = e - 1
            data[tuple(new)] = e * coeff
        windows = dict(self.windows)
        windows[var] = w_shift(windows[var], -1)
        deg0 = None if self.deg0 is None else self.deg0 + 1
        return TruncatedSeries(self.vars, data, windows, deg0)

    def residue(self, var):
        """Coefficient of var**-1 as a series in the remaining variables."""
        if not w_contains(self.windows[var], rat(-1)):
            raise SoundnessError(
                f"residue in {var}: exponent -1 outside window {self.windows[var]}")
        i = self.vars.index(var)
        rest = tuple(v for v in self.vars if v != var)
        minus_one = rat(-1)
        data = {}
        for cell, coeff in self.data.items():
            if cell[i] == minus_one:
                data[cell[:i] + cell[i + 1:]] = coeff
        windows = {v: self.windows[v] for v in rest}
        deg0 = None if self.deg0 is None else self.deg0 - 1
        return TruncatedSeries(rest, data, windows, deg0)


def formal_derivative(s, var):
    return s.derivative(var)


def formal_residue(s, var):
    return s.residue(var)


# ---------------------------------------------------------------------------
# expansion builders

def binomial_expand(alpha, first, second, sign, n_terms):
    """(first +/- second)**alpha as sum_k C(alpha,k) first^(alpha-k) (+/-second)^k.

    The first variable carries the exponent alpha - k; the second carries
    nonnegative integer powers, so the direction of expansion is part of the
    call.  Exactly n_terms terms are produced; the window on the second
    variable is [0-unbounded-below, n_terms - 1] unless the series
    terminates, in which case both windows are full.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    alpha = as_rat(alpha)
    sgn = 1 if sign in (1, "+", "plus") else -1
    terminates = alpha.denominator == 1 and alpha >= 0 and n_terms > alpha
    data = {}
    for k in range(n_terms):
        c = rational_binomial(alpha, k)
        if sgn < 0 and k % 2:
            c = -c
        if c:
            data[(alpha - k, rat(k))] = Scalar.rational(c)
    if terminates:
        windows = {first: FULL, second: FULL}
    else:
        windows = {first: (alpha - (n_terms - 1), None),
                   second: (None, rat(n_terms - 1))}
    return TruncatedSeries((first, second), data, windows)


def binomial_cover(alpha, first, second, sign, wfirst, wsecond):
    """binomial_expand with enough terms that the windows cover the request."""
    alpha = as_rat(alpha)
    k_needed = 1
    if wsecond != EMPTY and wsecond[1] is not None:
        k_needed = max(k_needed, rat_floor(wsecond[1]) + 2)
    if wfirst != EMPTY and wfirst[0] is not None:
        k_needed = max(k_needed, rat_ceil(alpha - wfirst[0]) + 2)
    return binomial_expand(alpha, first, second, sign, k_needed)


def delta_alpha_terms(alpha, out_var, window_out):
    """Exponents n + alpha paired with out_var powers -n-1-alpha, for
    z_out^{-1} delta(x/z_out) (x/z_out)^alpha = sum_n z_out^{-n-1-alpha} x^{n+alpha}:
    yields (out_exponent, x_exponent) for out exponents inside window_out."""
    alpha = as_rat(alpha)
    lo, hi = window_out
    if lo is None or hi is None:
        raise SoundnessError("delta expansion needs a finite window")
    # -n-1-alpha in [lo, hi]  =>  n in [-hi-1-alpha, -lo-1-alpha]
    n_min = rat_ceil(-hi - 1 - alpha)
    n_max = rat_floor(-lo - 1 - alpha)
    for n in range(n_min, n_max + 1):
        yield (rat(-n - 1) - alpha, rat(n) + alpha)


def delta_identity_residual(alpha, window):
    """Residual of the two-sided delta identity

        z0^-1 d((z1-z2)/z0) ((z1-z2)/z0)^a = z1^-1 d((z0+z2)/z1) ((z0+z2)/z1)^-a

    expanded coefficient-wise on the given box {var: (lo, hi)}.  Zero on the
    intersected windows iff the identity holds there.
    """
    vars3 = ("z0", "z1", "z2")
    alpha = as_rat(alpha)
    wz0, wz1, wz2 = (window["z0"], window["z1"], window["z2"])

    lhs = TruncatedSeries(vars3, {}, {v: window[v] for v in vars3})
    for e_out, e_x in delta_alpha_terms(alpha, "z0", wz0):
        binom = binomial_cover(e_x, "z1", "z2", "-", wz1, wz2)
        piece = binom.lift(vars3).shift("z0", e_out)
        lhs = lhs + piece.restrict({v: window[v] for v in vars3})
    lhs = TruncatedSeries(vars3, lhs.data, {v: window[v] for v in vars3})

    rhs = TruncatedSeries(vars3, {}, {v: window[v] for v in vars3})
    for e_out, e_x in delta_alpha_terms(-alpha, "z1", wz1):
        binom = binomial_cover(e_x, "z0", "z2", "+", wz0, wz2)
        piece = binom.lift(vars3).shift("z1", e_out)
        rhs = rhs + piece.restrict({v: window[v] for v in vars3})
    rhs = TruncatedSeries(vars3, rhs.data, {v: window[v] for v in vars3})

    return lhs - rhs


def delta_derivative_series(n, window):
    """delta^(n)(z1/z2) = sum_j j(j-1)...(j-n+1) z1^{j-n} z2^{n-j} on a box."""
    wz1, wz2 = window["z1"], window["z2"]
    if wz1[0] is None or wz1[1] is None or wz2[0] is None or wz2[1] is None:
        raise SoundnessError("delta expansion needs a finite window")
    data = {}
    # j - n in wz1 and n - j in wz2
    j_min = max(rat_ceil(wz1[0] + n), rat_ceil(n - wz2[1]))
    j_max = min(rat_floor(wz1[1] + n), rat_floor(n - wz2[0]))
    for j in range(j_min, j_max + 1):
        c = falling_factorial(rat(j), n)
        if c:
            data[(rat(j - n), rat(n - j))] = Scalar.rational(c)
    return TruncatedSeries(("z1", "z2"), data, {"z1": wz1, "z2": wz2})


def poly_z1_minus_z2(m):
    """(z1 - z2)^m for m >= 0, an exact polynomial series."""
    data = {}
    for k in range(m + 1):
        c = rational_binomial(rat(m), k)
        if k % 2:
            c = -c
        data[(rat(m - k), rat(k))] = Scalar.rational(c)
    return TruncatedSeries(("z1", "z2"), data)


def lemma_vanishing_residual(m, n, window):
    """(z1-z2)^m delta^(n)(z1/z2), which vanishes whenever m > n."""
    # widen both lower bounds by m so the polynomial multiply stays sound
    wide = {"z1": (window["z1"][0] - m, window["z1"][1]),
            "z2": (window["z2"][0] - m, window["z2"][1])}
    delta = delta_derivative_series(n, wide)
    return (poly_z1_minus_z2(m) * delta).restrict(window)


def substitution_residual(poly_cells, window):
    """Lemma-style substitution residual:

        d((z0+z2)/z1) f(z1, z2)  -  d((z0+z2)/z1) f(z0+z2, z2)

    for a polynomial f given by {(e1, e2): Scalar} cells, expanded on a box.
    """
    vars3 = ("z0", "z1", "z2")
    win = {v: window[v] for v in vars3}
    f = TruncatedSeries(("z1", "z2"), dict(poly_cells))

    lhs = TruncatedSeries(vars3, {}, win)
    # delta((z0+z2)/z1) = sum_n z1^{-n} (z0+z2)^n: no z1^-1 prefactor, so the
    # z1 window passed to the term enumerator is shifted by one.
    for e_out, e_x in delta_alpha_terms(rat(0), "z1", w_shift(win["z1"], -1)):
        binom = binomial_cover(e_x, "z0", "z2", "+", win["z0"], win["z2"])
        piece = binom.lift(vars3).shift("z1", e_out + 1)
        lhs = lhs + piece.restrict(win)
    delta_part = TruncatedSeries(vars3, lhs.data, win)

    lhs_total = delta_part * f.lift(vars3)

    rhs = TruncatedSeries(vars3, {}, win)
    for (e1, e2), c in poly_cells.items():
        # f(z0+z2, z2): expand (z0+z2)^e1 (polynomial: e1 nonneg integer)
        binom = binomial_expand(e1, "z0", "z2", "+", int(e1) + 1)
        piece = binom.lift(vars3).shift("z2", e2).scale(c)
        rhs = rhs + piece
    rhs_total = delta_part * rhs

    return (lhs_total - rhs_total).restrict(win)
