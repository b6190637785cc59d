"""Z_T-twisted fields on a truncated graded space.

A TwistedField stores its modes lazily: a row function gives the action of
the mode a_mu (of a(z) = sum_mu a_mu z^{-mu-1}, mu in charge/T + Z) on each
basis vector, and everything else - application series, locality detection,
the twisted n-th product, closure generation - is assembled from those rows
through the windowed series calculus.  Cutoff truncation is uniform: a row
whose target degree exceeds the cutoff is zero, so every computed
coefficient is the cutoff-projection of the true one, exact whenever its
degree fits under the cutoff; validity windows exclude the cells where a
projected intermediate would contaminate a later application.
"""

import os

from twistcalc.kernel import rat, as_rat
from twistcalc.exactcalc.scalar import (
    Scalar, S_ONE, koszul_sign, rational_binomial)
from twistcalc.exactcalc.series import (
    TruncatedSeries, SoundnessError, FULL, EMPTY,
    w_intersect, w_contains, w_shift, rat_floor, rat_ceil, binomial_expand,
    poly_z1_minus_z2)
from twistcalc.statespace import Vector, SparseOperator


class KoszulSign:
    """Sign rule eps_{a,b} = (-1)^{|a||b|} on parity bits."""

    def __call__(self, parity_a, parity_b):
        return koszul_sign(parity_a, parity_b)


class Block:
    """A whole stratum of probe vectors carried through a check at once.

    Columns map probe labels to Vectors; a Block behaves like a coefficient
    (supports +, Scalar multiples, is_zero) so series code is agnostic.
    """

    __slots__ = ("space", "cols")

    def __init__(self, space, cols):
        self.space = space
        self.cols = {k: v for k, v in cols.items() if not v.is_zero()}

    @staticmethod
    def identity(space, labels):
        return Block(space, {l: space.basis_vector(l) for l in labels})

    def is_zero(self):
        return not self.cols

    def __add__(self, other):
        cols = dict(self.cols)
        for k, v in other.cols.items():
            cur = cols.get(k)
            s = v if cur is None else cur + v
            if s.is_zero():
                cols.pop(k, None)
            else:
                cols[k] = s
        return Block(self.space, cols)

    def __sub__(self, other):
        return self + other.scale(Scalar.rational(-1))

    def scale(self, c):
        return Block(self.space, {k: v.scale(c) for k, v in self.cols.items()})

    def __rmul__(self, c):
        return self.scale(Scalar.coerce(c))

    def degree(self):
        degs = {v.degree() for v in self.cols.values()}
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError("inhomogeneous block")
        return degs.pop()

    def items(self):
        return sorted(self.cols.items())


class TwistedField:
    """a(z) = sum a_mu z^{-mu-1} with sigma-charge, parity and weight.

    exp_ceiling, when set, bounds the true exponent support of a(z)v from
    above independently of the cutoff (the identity field has ceiling 0);
    it lets compositions know that nothing was truncated away up there."""

    def __init__(self, space, twist, charge, parity, weight, row_fn,
                 name="", mode_windows=None, exp_ceiling=None,
                 exp_floor=None, grade_span=None):
        self.space = space
        self.T = twist
        self.charge = charge % twist
        self.parity = parity & 1
        self.weight = as_rat(weight)
        self.name = name
        self._row_fn = row_fn
        self._cache = {}
        # per-source-degree sound exponent windows (None = full feasible)
        self._mode_windows = mode_windows
        self.exp_ceiling = exp_ceiling
        self.exp_floor = exp_floor
        # degree shift of the mode a_mu is grade - mu - 1; for ordinary
        # homogeneous fields the grade equals the weight, but shifted
        # fields can spread across several grades
        if grade_span is None:
            self.grade_lo = self.grade_hi = self.weight
        else:
            self.grade_lo, self.grade_hi = (as_rat(grade_span[0]),
                                            as_rat(grade_span[1]))

    # -- mode access ----------------------------------------------------------

    def mu_is_feasible(self, mu):
        return ((mu - rat(self.charge, self.T)).denominator == 1)

    def mode_vec(self, mu, label):
        """a_mu applied to a basis vector (cutoff-projected)."""
        key = (mu, label)
        out = self._cache.get(key)
        if out is None:
            if not self.mu_is_feasible(mu):
                out = self.space.zero_vector()
            else:
                deg = self.space.degree_of(label)
                if deg + self.grade_hi - mu - 1 < 0 or \
                        deg + self.grade_lo - mu - 1 > self.space.cutoff:
                    out = self.space.zero_vector()
                else:
                    out = self._row_fn(mu, label)
            self._cache[key] = out
        return out

    def apply_mode(self, mu, x):
        """a_mu applied to a Vector or Block."""
        if isinstance(x, Block):
            cols = {}
            for k, v in x.cols.items():
                w = self.apply_mode(mu, v)
                if not w.is_zero():
                    cols[k] = w
            return Block(x.space, cols)
        out = self.space.zero_vector()
        for label, c in x.comps.items():
            row = self.mode_vec(mu, label)
            if not row.is_zero():
                out = out + row.scale(c)
        return out

    def exponent_lattice_offset(self):
        """Exponents of a(z) lie in this offset + Z."""
        off = -rat(self.charge, self.T) - 1
        return off - rat_floor(off)

    def sound_window_for(self, degree):
        """Validity window of a(z)v in z for homogeneous v of this degree."""
        if self._mode_windows is None:
            return FULL
        return self._mode_windows(degree)

    # -- series ---------------------------------------------------------------

    def apply_series(self, x, var="z", window=None):
        """The truncated expansion a(z)x with exact coefficients.

        x is a homogeneous Vector or Block.  Every stored coefficient is
        exact; coefficients above the cutoff-exactness boundary are the
        (zero) cutoff projections, which the attached window reflects.
        """
        deg = x.degree()
        if deg is None:
            return TruncatedSeries.zero((var,), None)
        win = self.sound_window_for(deg)
        if window is not None:
            win = w_intersect(win, window)
        if win == EMPTY:
            raise SoundnessError(
                f"field {self.name}: requested window is not sound at degree {deg}")
        # exponent e = -mu-1; target degrees deg + grade + e in [0, cutoff]
        e_lo = -self.grade_hi - deg
        e_hi = self.space.cutoff - self.grade_lo - deg
        if win[0] is not None:
            e_lo = max(e_lo, win[0])
        if win[1] is not None:
            e_hi = min(e_hi, win[1])
        off = self.exponent_lattice_offset()
        data = {}
        e = off + rat_ceil(e_lo - off)
        while e <= e_hi:
            v = self.apply_mode(-e - 1, x)
            if not v.is_zero():
                data[(e,)] = v
            e = e + 1
        deg0 = deg + self.grade_lo if self.grade_lo == self.grade_hi else None
        return TruncatedSeries((var,), data, {var: win}, deg0)

    def mode_operator(self, mu):
        """Materialize the mode as a SparseOperator (spec dump surface)."""
        if self.grade_lo != self.grade_hi:
            raise SoundnessError(
                "mixed-grade fields have no single-shift mode operators")
        rows = {}
        for label in self.space.labels():
            v = self.mode_vec(mu, label)
            if not v.is_zero():
                rows[label] = dict(v.comps)
        return SparseOperator(self.space, self.grade_lo - mu - 1, self.parity,
                              rows)

    def mode_operators(self, max_abs_shift):
        """All modes with |degree shift| <= max_abs_shift, for quotients."""
        out = []
        off = self.exponent_lattice_offset()
        lo = self.grade_lo - 1 - max_abs_shift   # mu with shift = +max
        hi = self.grade_hi - 1 + max_abs_shift
        mu = -off - 1 + rat_ceil(lo + off + 1)
        while mu <= hi:
            out.append(LazyModeOperator(self, mu))
            mu = mu + 1
        return out

    def dump(self):
        """Header then one line per mode: "mu : (in, out, scalar) ..."."""
        head = f"charge {self.charge}/{self.T} | parity {self.parity} | weight {self.weight}"
        lines = [head]
        off = self.exponent_lattice_offset()
        lo = -self.space.cutoff - self.weight
        hi = self.space.cutoff
        e = off + rat_ceil(lo - off)
        while e <= hi:
            op = self.mode_operator(-e - 1)
            if not op.is_zero():
                entries = " ".join(op.dump())
                lines.append(f"{-e - 1} : {entries}")
            e = e + 1
        return lines


class LazyModeOperator:
    """Mode-of-field with .apply, for quotient closures."""

    def __init__(self, field, mu):
        self.field = field
        self.mu = mu
        self.shift = field.grade_lo - mu - 1

    def apply(self, vec):
        return self.field.apply_mode(self.mu, vec)


def identity_field(space, twist):
    """I(z) = Id, mutually local with everything (mode -1 only)."""
    def row(mu, label):
        if mu == -1:
            return space.basis_vector(label)
        return space.zero_vector()
    return TwistedField(space, twist, 0, 0, 0, row, name="I",
                        exp_ceiling=rat(0), exp_floor=rat(0))


def derivative_field(a):
    """d/dz a(z): mode relabeling with factors, same charge and parity."""
    def row(mu, label):
        return a.mode_vec(mu - 1, label).scale(Scalar.rational(-mu))
    ceil = None if a.exp_ceiling is None else a.exp_ceiling - 1
    flo = None if a.exp_floor is None else a.exp_floor - 1
    return TwistedField(a.space, a.T, a.charge, a.parity, a.weight + 1, row,
                        name=f"{a.name}'", mode_windows=a._mode_windows and
                        (lambda deg: w_shift(a._mode_windows(deg), -1)),
                        exp_ceiling=ceil, exp_floor=flo,
                        grade_span=(a.grade_lo + 1, a.grade_hi + 1))


def scaled_field(a, c, name=None):
    c = Scalar.coerce(c)
    def row(mu, label):
        return a.mode_vec(mu, label).scale(c)
    return TwistedField(a.space, a.T, a.charge, a.parity, a.weight, row,
                        name=name or f"({c})*{a.name}",
                        mode_windows=a._mode_windows,
                        exp_ceiling=a.exp_ceiling, exp_floor=a.exp_floor,
                        grade_span=(a.grade_lo, a.grade_hi))


def zero_field(space, twist, charge=0, parity=0, weight=0):
    def row(mu, label):
        return space.zero_vector()
    return TwistedField(space, twist, charge, parity, weight, row, name="0")


# ---------------------------------------------------------------------------
# composition series

def apply_field_to_series(field, series, newvar, pos=0, window=None):
    """Compose: apply a field over a fresh variable to a vector-valued series.

    The input's validity window in each old variable is intersected with the
    exactness boundary sum(exps) <= cutoff - deg0 (cells above it are
    cutoff-projected and would contaminate the application); for the
    one-variable inputs used here that boundary is a per-variable cap.
    """
    if series.deg0 is None:
        raise SoundnessError("cannot compose onto a series without degree data")
    if len(series.vars) != 1:
        raise SoundnessError("composition expects a one-variable series")
    oldvar = series.vars[0]
    cutoff = field.space.cutoff
    cap = cutoff - series.deg0
    old_win = w_intersect(series.windows[oldvar], (None, cap))

    out_vars = list(series.vars)
    out_vars.insert(pos, newvar)
    out_vars = tuple(out_vars)

    data = {}
    new_win = FULL
    for cell, vec in sorted(series.data.items()):
        if not w_contains(old_win, cell[0]):
            continue
        try:
            piece = field.apply_series(vec, var=newvar, window=window)
        except SoundnessError:
            # the outer field has no sound modes this deep; everything from
            # here up is excluded from the old variable's window
            old_win = w_intersect(old_win, (None, cell[0] - 1))
            break
        new_win = w_intersect(new_win, piece.windows[newvar])
        for (e,), v in piece.data.items():
            newcell = list(cell)
            newcell.insert(pos, e)
            data[tuple(newcell)] = v
    if window is not None:
        new_win = w_intersect(new_win, window)
    windows = {newvar: new_win, oldvar: old_win}
    return TruncatedSeries(out_vars, data, windows,
                           series.deg0 + field.weight)


def composite_table(a, b, x, wa=None, wb=None):
    """a(z1) b(z2) x as a two-variable series, vars ("z1", "z2")."""
    inner = b.apply_series(x, var="z2", window=wb)
    return apply_field_to_series(a, inner, "z1", pos=0, window=wa)


def commutator_residual(a, b, x, wa=None, wb=None):
    """a(z1)b(z2)x - eps_ab b(z2)a(z1)x on the intersected sound windows."""
    ab = composite_table(a, b, x, wa, wb)
    inner = a.apply_series(x, var="z1", window=wa)
    ba = apply_field_to_series(b, inner, "z2", pos=1, window=wb)
    eps = koszul_sign(a.parity, b.parity)
    return ab - ba.scale(eps)


def locality_order(a, b, probes, max_n=12, window=None):
    """Least n <= max_n with (z1-z2)^n [a(z1), b(z2)]_{+/-} = 0 on the probes.

    probes: homogeneous Vectors or Blocks.  Returns None if no n works; the
    check is coefficient-wise inside the sound windows.
    """
    if a.space is not b.space:
        raise ValueError("fields live on different spaces")
    eps = koszul_sign(a.parity, b.parity)
    pairs = []
    for x in probes:
        ab, ba = product_tables(a, b, x)
        if window is not None:
            ab = ab.restrict({"z1": window, "z2": window})
            ba = ba.restrict({"z1": window, "z2": window})
        pairs.append((ab, ba))
    for n in range(max_n + 1):
        if all(commutator_vanishes(ab, ba, eps, n) for ab, ba in pairs):
            return n
    return None


# ---------------------------------------------------------------------------
# the twisted n-th product

def product_tables(a, b, x):
    """The two composition tables a(z1)b(z2)x and b(z2)a(z1)x, both with
    variables ("z1", "z2"), shared by locality scans and product series."""
    ab = composite_table(a, b, x)
    inner = a.apply_series(x, var="z1")
    ba = apply_field_to_series(b, inner, "z2", pos=1)
    return ab, ba


def _py_add_scaled(flat, comps, scale):
    """flat[k] += scale * v for (k, v) in comps, dropping exact zeros."""
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


if os.environ.get("TWISTCALC_PURE"):
    add_scaled = _py_add_scaled
else:
    try:
        from twistcalc._fastacc import add_scaled
    except ImportError:
        add_scaled = _py_add_scaled


def flat_add(flat, x, scale=None):
    """Accumulate a Vector or Block into a flat {(probe, label): Scalar}.

    Vector entries land under plain label keys; Block entries under
    (probe, label) sub-dicts would cost tuple churn, so blocks accumulate
    into per-probe sub-dicts: flat[probe][label]."""
    if x is None:
        return
    if isinstance(x, Block):
        for p, vec in x.cols.items():
            sub = flat.get(p)
            if sub is None:
                sub = flat[p] = {}
            add_scaled(sub, vec.comps, scale)
            if not sub:
                del flat[p]
    else:
        add_scaled(flat, x.comps, scale)


def flat_to_coeff(space, flat, blockish):
    """Rebuild a Vector or Block from a flat accumulator."""
    if blockish:
        return Block(space, {p: Vector(space, dict(sub))
                             for p, sub in flat.items()})
    return Vector(space, dict(flat))


def commutator_vanishes(ab, ba, eps, n):
    """Coefficient-wise test of (z1-z2)^n (AB - eps BA) = 0 on the sound
    region: inputs are restricted to the intersected table windows and
    output cells beyond the shrunk product window are not claimed."""
    w1 = w_intersect(ab.windows["z1"], ba.windows["z1"])
    w2 = w_intersect(ab.windows["z2"], ba.windows["z2"])
    if w1 == EMPTY or w2 == EMPTY:
        raise SoundnessError("commutator scan has no sound window")
    hi1 = w1[1]
    hi2 = w2[1]
    acc = {}
    minus_eps = -eps
    for table, sign in ((ab, None), (ba, minus_eps)):
        for (e1, e2), v in table.data.items():
            if not (w_contains(w1, e1) and w_contains(w2, e2)):
                continue
            for kk in range(n + 1):
                t1 = e1 + n - kk
                t2 = e2 + kk
                if hi1 is not None and t1 > hi1:
                    continue
                if hi2 is not None and t2 > hi2:
                    continue
                if w1[0] is not None and t1 < w1[0] + n:
                    continue
                if w2[0] is not None and t2 < w2[0] + n:
                    continue
                c = rational_binomial(rat(n), kk)
                if kk % 2:
                    c = -c
                scale = Scalar.rational(c) if sign is None \
                    else sign * Scalar.rational(c)
                flat_add(acc.setdefault((t1, t2), {}), v, scale)
    return all(not cell for cell in acc.values())


def locality_order_tables(ab, ba, eps, max_n=12):
    for n in range(max_n + 1):
        if commutator_vanishes(ab, ba, eps, n):
            return n
    return None


def nth_product_series(a, b, n, x, expansion_bound, locality_cert=None,
                       tables=None, verify_cert=True):
    """(a(z)_n b(z)) x as a one-variable series in z (the finite residue sum

        sum_i C(k/T, i) (-1)^i Res_z1 z1^{k/T-i} z^{-k/T}
            [ (z1-z)^{n+i} a(z1)b(z)x - eps (-z+z1)^{n+i} b(z)a(z1)x ] ).

    x must be a homogeneous Vector or Block.  The i-sum runs to the
    expansion bound.  When locality_cert = r is given, the supercommutator
    times (z1-z2)^r is verified to vanish on x (unless verify_cert is off
    because the caller already did), after which every term with n + i >= r
    is an exact zero and the sum truncates there.  The residue is taken
    cell by cell: for each stored table cell exactly one binomial term can
    land on z1-exponent -1, so no intermediate series are materialized.  If
    a tail term would tap compositions beyond the cutoff's sound range the
    result degrades to an empty validity window rather than guessing.
    """
    space = a.space
    k_t = rat(a.charge, a.T)
    eps = koszul_sign(a.parity, b.parity)
    ab, ba = tables if tables is not None else product_tables(a, b, x)
    deg = x.degree()
    wt_c = a.weight + b.weight - n - 1
    if a.grade_lo != a.grade_hi or b.grade_lo != b.grade_hi:
        raise SoundnessError("products need grade-homogeneous factors")
    g_c = a.grade_lo + b.grade_lo - n - 1
    cap1 = space.cutoff - deg - a.grade_lo
    cap2 = space.cutoff - deg - b.grade_lo
    blockish = isinstance(x, Block)

    i_top = expansion_bound
    if locality_cert is not None:
        if verify_cert and not commutator_vanishes(ab, ba, eps, locality_cert):
            raise SoundnessError(
                f"locality certificate (z1-z2)^{locality_cert} fails on a "
                "product argument")
        i_top = min(expansion_bound, locality_cert - n - 1)

    # the window marks where coefficients are cutoff-projections of the
    # truth (garbage-free); the projection-vs-true boundary is the separate
    # total-degree condition deg0 + q <= cutoff that consumers check.  When
    # the right factor's true support is bounded inside the stored range,
    # nothing above the boundary was dropped and the window is full.
    if b.exp_ceiling is not None and b.exp_ceiling <= cap2:
        hi = None
    else:
        hi = cap2 - k_t
    if i_top < 0:
        return TruncatedSeries(("z",), {}, {"z": (None, hi)}, deg + g_c)

    # a right factor that never lowers degrees maps projected content to
    # projected content, so the second-table cap cannot be contaminated
    b_never_lowers = (b.exp_floor is not None
                      and b.exp_floor >= -b.grade_lo)
    acc = {}
    minus_eps = -eps
    for i in range(i_top + 1):
        coeff = rational_binomial(k_t, i)
        if i % 2:
            coeff = -coeff
        if not coeff:
            continue
        m = rat(n + i)
        # the second table's unknown region (e1 > cap1) pairs with binomial
        # exponents kappa = i - k/T - 1 - e1 >= 0; if it is reachable the
        # term cannot be completed at this truncation depth
        if not b_never_lowers and i - k_t - 1 > cap1:
            return TruncatedSeries(("z",), {}, {"z": EMPTY}, deg + g_c)
        c_i = Scalar.rational(coeff)
        for (e1, e2), v in ab.data.items():
            kk = e1 + m + k_t - i + 1        # z1: e1 + (m - kk) + k/T - i = -1
            if kk < 0 or kk.denominator != 1:
                continue
            c = rational_binomial(m, int(kk))
            if not c:
                continue
            if int(kk) % 2:
                c = -c
            q = e2 + kk - k_t
            flat_add(acc.setdefault(q, {}), v, c_i * Scalar.rational(c))
        for (e1, e2), v in ba.data.items():
            kk = i - k_t - 1 - e1            # z1: kk + (k/T - i) + e1 = -1
            if kk < 0 or kk.denominator != 1:
                continue
            c = rational_binomial(m, int(kk))
            if not c:
                continue
            if (n + i - int(kk)) % 2:        # sign of (-z2)^{m-kk}
                c = -c
            q = e2 + m - kk - k_t
            flat_add(acc.setdefault(q, {}), v, minus_eps * c_i *
                     Scalar.rational(c))

    data = {}
    for q, flat in acc.items():
        if flat:
            data[(q,)] = flat_to_coeff(space, flat, blockish)
    return TruncatedSeries(("z",), data, {"z": (None, hi)}, deg + g_c)


class ProductStabilityError(RuntimeError):
    """The internal expansion bound failed to stabilize."""


def nth_product(a, b, n, locality=None, probes=None, extra_terms=0,
                name=None):
    """The twisted n-th product a(z)_n b(z) as a new TwistedField.

    The result has charge (charge a + charge b) mod T, parity |a|+|b|, and
    weight wt a + wt b - n - 1.  The internal expansion bound defaults to
    locality + max(0, -n) + 2 and is raised until two consecutive bounds
    agree on every probe stratum; rows are then evaluated lazily per basis
    vector at the stabilized bound.
    """
    if a.space is not b.space or a.T != b.T:
        raise ValueError("n-th product needs fields on one carrier")
    space = a.space
    if probes is None:
        degs = [d for d in space.degrees() if d <= min(space.cutoff, 2)]
        probes = [Block.identity(space, space.labels(d)) for d in degs]
    if locality is None:
        locality = locality_order(a, b, probes)
        if locality is None:
            raise SoundnessError(
                f"fields {a.name}, {b.name} are not mutually local on the probes")
    bound = locality + max(0, -n) + 2 + extra_terms
    # with a verified locality certificate, terms past the certified order
    # are exact zeros, so any bound >= order - n - 1 self-stabilizes; the
    # certificate itself is re-verified on every argument the rows touch
    if bound < locality - n - 1:
        raise ProductStabilityError(
            "expansion bound below the certified locality order")

    wt_c = a.weight + b.weight - n - 1
    g_c = a.grade_lo + b.grade_lo - n - 1
    charge = (a.charge + b.charge) % a.T
    parity = a.parity ^ b.parity
    series_cache = {}

    def series_for(label):
        s = series_cache.get(label)
        if s is None:
            s = nth_product_series(a, b, n, space.basis_vector(label), bound,
                                   locality)
            series_cache[label] = s
        return s

    def row(mu, label):
        s = series_for(label)
        e = -mu - 1
        if not w_contains(s.windows["z"], e):
            # outside the sound window: the cutoff projection is still exact
            # whenever the target degree fits; refuse only genuine garbage
            target = space.degree_of(label) + g_c + e
            if target <= space.cutoff:
                raise SoundnessError(
                    f"mode {mu} of {name or 'product'} unsound on {label}")
            return space.zero_vector()
        v = s.coefficient((e,))
        return space.zero_vector() if v is None else v

    def mode_windows(degree):
        best = None
        for label in space.labels(degree):
            w = series_for(label).windows["z"]
            best = w if best is None else w_intersect(best, w)
        return best if best is not None else FULL

    return TwistedField(space, a.T, charge, parity, wt_c, row,
                        name=name or f"({a.name})_{{{n}}}({b.name})",
                        mode_windows=mode_windows, grade_span=(g_c, g_c))


# ---------------------------------------------------------------------------
# sigma action and closure generation

def sigma_action(a):
    """sigma f(z^{1/T}) = f(eps^{-1} z^{1/T}): multiplies a charge-k field
    by zeta_T^k."""
    eps_k = Scalar.zeta(a.T, a.charge) if a.T > 1 else S_ONE
    return scaled_field(a, eps_k, name=f"sigma({a.name})")


def field_signature(field, probe_labels, window):
    """Mode-coefficient vector of the field on probe labels in a window."""
    sig = {}
    for label in probe_labels:
        s = field.apply_series(field.space.basis_vector(label), window=window)
        for (e,), vec in sorted(s.data.items()):
            for out_label, c in vec.items():
                sig[(label, e, out_label)] = c
    return sig


class _SigEchelon:
    """Exact Gaussian elimination on field signatures over Q(zeta)."""

    def __init__(self):
        self.rows = []            # (pivot_key, normalized sig)

    @staticmethod
    def _reduce(sig, rows):
        for key, row in rows:
            c = sig.get(key)
            if c:
                for k, v in row.items():
                    cur = sig.get(k)
                    s = -(c * v) if cur is None else cur - c * v
                    if s:
                        sig[k] = s
                    else:
                        sig.pop(k, None)
        return sig

    def insert(self, sig):
        sig = self._reduce(dict(sig), self.rows)
        if not sig:
            return False
        pivot = min(sig)
        inv = S_ONE / sig[pivot]
        row = {k: inv * v for k, v in sig.items()}
        for i, (key, r) in enumerate(self.rows):
            c = r.get(pivot)
            if c:
                self.rows[i] = (key, self._reduce(dict(r), [(pivot, row)]))
        self.rows.append((pivot, row))
        self.rows.sort(key=lambda kv: kv[0])
        return True


def generate_closure(seeds, weight_cap, probe_cap=None, max_n_extra=2):
    """Basis of the vertex superalgebra generated by mutually local seeds,
    truncated at weight_cap.

    Starting from the seeds and I(z), n-th products and derivatives are
    taken until no new field of weight <= weight_cap is independent of the
    current span (exact elimination on mode coefficients over a probe
    window wide enough that distinct weights cannot collide).  Returns
    (fields, product_table) where product_table maps (i, j, n) to the
    coefficients of field_i (z)_n field_j over the returned basis.
    """
    if not seeds:
        raise ValueError("closure needs at least one seed field")
    space = seeds[0].space
    twist = seeds[0].T
    weight_cap = as_rat(weight_cap)
    if probe_cap is None:
        probe_cap = min(space.cutoff, weight_cap)
    window = (-2 * weight_cap - 1, 2 * weight_cap + 1)
    probe_labels = []
    for d in space.degrees():
        if d <= probe_cap:
            probe_labels.extend(space.labels(d))

    ech = _SigEchelon()
    basis = []
    table = {}

    def try_add(f):
        sig = field_signature(f, probe_labels, window)
        if ech.insert(sig):
            basis.append(f)
            return True
        return False

    try_add(identity_field(space, twist))
    work = []
    seed_ids = set()
    for s in seeds:
        seed_ids.add(id(s))
        if try_add(s):
            work.append(s)

    locality_cache = {}

    def loc(f, g):
        key = (id(f), id(g))
        if key not in locality_cache:
            blocks = [Block.identity(space, space.labels(d))
                      for d in space.degrees() if d <= min(2, probe_cap)]
            try:
                locality_cache[key] = locality_order(f, g, blocks, max_n=16)
            except SoundnessError:
                locality_cache[key] = None
        return locality_cache[key]

    skipped = 0
    while work:
        f = work.pop(0)
        df = derivative_field(f)
        if df.weight <= weight_cap and try_add(df):
            work.append(df)
        snapshot = list(basis)
        for g in snapshot:
            # one product order spans the closure: the skew-symmetric
            # counterparts lie in the span of these products and derivatives
            for left, right in ((f, g),):
                r = loc(left, right)
                if r is None:
                    if id(left) in seed_ids and id(right) in seed_ids:
                        raise SoundnessError(
                            "closure seeds are not pairwise local")
                    skipped += 1       # derived pair beyond this truncation
                    continue
                n_lo = rat_ceil(left.weight + right.weight - weight_cap - 1)
                for n in range(n_lo, r):      # products with n >= r vanish
                    try:
                        h = nth_product(left, right, n, locality=r)
                        if h.weight <= weight_cap and try_add(h):
                            work.append(h)
                    except SoundnessError:
                        # evaluating this product exceeds what the cutoff
                        # supports; at desk scale such deep products reduce
                        # to the existing span, so record and move on
                        skipped += 1

    # product table over the final basis
    sigs = [field_signature(f, probe_labels, window) for f in basis]
    for i, f in enumerate(basis):
        for j, g in enumerate(basis):
            r = loc(f, g)
            if r is None:
                skipped += 1
                continue
            for n in range(rat_ceil(f.weight + g.weight - weight_cap - 1), r):
                try:
                    h = nth_product(f, g, n, locality=r)
                    coeffs = _solve_in_span(
                        field_signature(h, probe_labels, window), sigs)
                except SoundnessError:
                    skipped += 1
                    continue
                if coeffs is not None and any(not c.is_zero() for c in coeffs):
                    table[(i, j, n)] = coeffs
    return basis, table, skipped


def _sub_scaled(target, row, c):
    """target -= c * row, in place, dropping zeros."""
    for k, v in row.items():
        cur = target.get(k)
        s = -(c * v) if cur is None else cur - c * v
        if s:
            target[k] = s
        else:
            target.pop(k, None)


def _solve_in_span(sig, basis_sigs):
    """Coefficients expressing sig over basis_sigs, or None if outside."""
    ech = []                     # (pivot, unit row, coefficient vector)
    for idx, bs in enumerate(basis_sigs):
        row = dict(bs)
        coeffs = [Scalar.zero()] * len(basis_sigs)
        coeffs[idx] = S_ONE
        for pivot, prow, pcoef in ech:
            c = row.get(pivot)
            if c:
                _sub_scaled(row, prow, c)
                coeffs = [a - c * b for a, b in zip(coeffs, pcoef)]
        if row:
            pivot = min(row)
            inv = S_ONE / row[pivot]
            row = {k: inv * v for k, v in row.items()}
            coeffs = [inv * c for c in coeffs]
            ech.append((pivot, row, coeffs))
    res = dict(sig)
    out = [Scalar.zero()] * len(basis_sigs)
    progress = True
    while res and progress:
        progress = False
        for pivot, prow, pcoef in ech:
            c = res.get(pivot)
            if c:
                _sub_scaled(res, prow, c)
                out = [a + c * b for a, b in zip(out, pcoef)]
                progress = True
    return out if not res else None
