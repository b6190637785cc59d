"""Lowest-weight module engine: PBW bases and normal-ordered mode actions.

Every concrete build (Virasoro, NS, Ramond, twisted affine, twisted
Clifford) is an induced module over a mode algebra given by a bracket
oracle.  A mode applied to a PBW monomial is rewritten by moving it
rightward with supercommutators until it hits the lowest-weight space;
creation modes that would exceed the degree cutoff drop their image, which
is exactly the truncation the validity windows account for downstream.

Modes are indexed by the display index the defining relations use (the m of
L(m), the t-power of t^s (x) a); the translation to field exponents happens
in twistcalc.fields.
"""

from twistcalc.kernel import rat, as_rat
from twistcalc.exactcalc.scalar import Scalar, S_ONE, koszul_sign
from twistcalc.exactcalc.series import rat_floor
from twistcalc.statespace import GradedSuperSpace, Vector


class Family:
    """One generator family of a mode algebra.

    index_offset is the difference between the internal field-mode index mu
    (of a(z) = sum a_mu z^{-mu-1}) and the display index used in relations
    and labels: mu = display + index_offset.  min_creator_shift restricts
    the PBW alphabet (e.g. L(-n) with n >= 2 in a vacuum module); None
    admits every positive-shift mode.
    """

    __slots__ = ("name", "weight", "parity", "charge", "index_offset",
                 "min_creator_shift")

    def __init__(self, name, weight, parity, charge, index_offset,
                 min_creator_shift=None):
        self.name = name
        self.weight = as_rat(weight)
        self.parity = parity & 1
        self.charge = charge
        self.index_offset = as_rat(index_offset)
        self.min_creator_shift = min_creator_shift

    def shift_of(self, display):
        """Module-degree shift of the mode with this display index."""
        return self.weight - display - self.index_offset - 1

    def display_of_shift(self, shift):
        return self.weight - self.index_offset - 1 - shift


class ModeAlgebra:
    """Families plus a bracket oracle in display indices.

    bracket(famA, dA, famB, dB) -> (terms, central): terms is a list of
    (family_name, display, Scalar) for the supercommutator [A, B]_{+/-},
    central the Scalar coefficient of the canonical central element.
    """

    def __init__(self, name, families, bracket, twist_order=1):
        self.name = name
        self.families = {f.name: f for f in families}
        self.family_order = [f.name for f in families]
        self._bracket = bracket
        self.T = twist_order

    def bracket(self, fam_a, d_a, fam_b, d_b):
        return self._bracket(fam_a, d_a, fam_b, d_b)

    def parity_of(self, fam):
        return self.families[fam].parity


def _merge(out, label, coeff):
    cur = out.get(label)
    s = coeff if cur is None else cur + coeff
    if s:
        out[label] = s
    elif cur is not None:
        del out[label]


class LowestWeightModule:
    """PBW-basis induced module, truncated at a degree cutoff.

    lowest: list of (label, parity) spanning the lowest-weight space.
    zero_mode_rows: {(fam, display): {low_in: {low_out: Scalar}}}, the
    action matrices of the shift-zero modes on the lowest space.  level is
    the Scalar by which the central element acts.
    """

    def __init__(self, algebra, cutoff, level, lowest, zero_mode_rows=None,
                 lattice_denom=2, name=""):
        self.algebra = algebra
        self.cutoff = as_rat(cutoff)
        self.level = Scalar.coerce(level)
        self.lowest = list(lowest)
        self.zero_mode_rows = dict(zero_mode_rows or {})
        self.name = name or algebra.name
        self.space = GradedSuperSpace(cutoff, lattice_denom, self.name)
        self._mono = {}          # label -> (modes tuple, low label)
        self._rows = {}          # (fam, display, label) -> Vector
        self._key_cache = {}
        self._enumerate_basis()

    # -- canonical ordering ---------------------------------------------------

    def _key(self, mode):
        k = self._key_cache.get(mode)
        if k is None:
            fam, d = mode
            f = self.algebra.families[fam]
            k = (f.shift_of(d), -self.algebra.family_order.index(fam))
            self._key_cache[mode] = k
        return k

    def _creator_modes(self):
        """All creator modes with shift in (0, cutoff], canonically sorted."""
        out = []
        for fam in self.algebra.family_order:
            f = self.algebra.families[fam]
            # displays lie on charge/T - index_offset + Z; find the smallest
            # positive shift on the corresponding shift coset
            base = rat(f.charge, self.algebra.T) - f.index_offset
            s_any = f.shift_of(base)
            frac = s_any - rat_floor(s_any)
            s_val = frac if frac > 0 else frac + 1
            while s_val <= self.cutoff:
                if f.min_creator_shift is None or s_val >= f.min_creator_shift:
                    out.append((fam, f.display_of_shift(s_val)))
                s_val = s_val + 1
        out.sort(key=self._key, reverse=True)
        return out

    def _render(self, modes, low):
        if not modes:
            return low
        return "".join(f"{fam}({d})" for fam, d in modes) + "*" + low

    def monomial_of(self, label):
        return self._mono[label]

    def _enumerate_basis(self):
        creators = self._creator_modes()
        shifts = [self.algebra.families[f].shift_of(d) for f, d in creators]
        parities = [self.algebra.parity_of(f) for f, _ in creators]
        monos = []

        def rec(i, acc, deg, par):
            monos.append((deg, tuple(acc), par))
            for j in range(i, len(creators)):
                s = shifts[j]
                if deg + s > self.cutoff:
                    continue
                if parities[j] and acc and acc[-1] == creators[j]:
                    continue
                acc.append(creators[j])
                rec(j, acc, deg + s, par ^ parities[j])
                acc.pop()

        rec(0, [], rat(0), 0)
        entries = []
        for low, lpar in self.lowest:
            for deg, modes, mpar in monos:
                entries.append((deg, self._render(modes, low), modes, low,
                                mpar ^ (lpar & 1)))
        entries.sort(key=lambda e: (e[0], e[1]))
        for deg, label, modes, low, par in entries:
            self.space.add_basis_vector(deg, label, par)
            self._mono[label] = (modes, low)

    def _deg_of(self, modes, low):
        d = self.space.degree_of(low)
        for fam, disp in modes:
            d = d + self.algebra.families[fam].shift_of(disp)
        return d

    # -- mode action ------------------------------------------------------------

    def mode_row(self, fam, display, label):
        """The Vector (fam-mode at display index) applied to basis vector label."""
        key = (fam, display, label)
        row = self._rows.get(key)
        if row is None:
            f = self.algebra.families[fam]
            target = self.space.degree_of(label) + f.shift_of(display)
            if target < 0 or target > self.cutoff:
                row = self.space.zero_vector()
            else:
                modes, low = self._mono[label]
                row = Vector(self.space, self._prepend(fam, display, modes, low))
            self._rows[key] = row
        return row

    def apply_mode(self, fam, display, vec):
        out = {}
        for label, c in vec.comps.items():
            for lbl2, c2 in self.mode_row(fam, display, label).comps.items():
                _merge(out, lbl2, c * c2)
        return Vector(self.space, out)

    def _prepend(self, fam, d, modes, low):
        """Normal-order (fam, d) * modes * low; returns {label: Scalar}."""
        alg = self.algebra
        f = alg.families[fam]
        shift = f.shift_of(d)
        mode = (fam, d)
        out = {}

        if not modes:
            if shift > 0:
                mcs = f.min_creator_shift
                if mcs is None or shift >= mcs:
                    deg = self.space.degree_of(low) + shift
                    if 0 <= deg <= self.cutoff:
                        _merge(out, self._render((mode,), low), S_ONE)
                # below the creator threshold the mode kills the lowest space
            elif shift == 0:
                mat = self.zero_mode_rows.get(mode)
                if mat:
                    for lo, c in mat.get(low, {}).items():
                        _merge(out, lo, c)
            return out

        head = modes[0]
        if shift > 0 and self._key(mode) >= self._key(head):
            if mode == head and f.parity:
                # fermionic square: x x rest = (1/2) [x, x]_+ rest
                terms, central = alg.bracket(fam, d, fam, d)
                half = Scalar.rational(rat(1, 2))
                rest = modes[1:]
                rest_label = self._render(rest, low)
                for fam_c, d_c, coeff in terms:
                    crow = self.mode_row(fam_c, d_c, rest_label)
                    for lbl2, c2 in crow.comps.items():
                        _merge(out, lbl2, half * coeff * c2)
                if central:
                    _merge(out, rest_label, half * central * self.level)
                return out
            mcs = f.min_creator_shift
            if mcs is None or shift >= mcs:
                deg = self._deg_of(modes, low) + shift
                if 0 <= deg <= self.cutoff:
                    _merge(out, self._render((mode,) + modes, low), S_ONE)
                return out
            # positive but sub-threshold and already ordered: swap it through

        # swap past the head: x h rest = eps h (x rest) + [x, h] rest
        eps = koszul_sign(f.parity, alg.parity_of(head[0]))
        rest = modes[1:]
        inner = self._prepend(fam, d, rest, low)
        for lbl, c in inner.items():
            coeff = eps * c
            for lbl2, c2 in self.mode_row(head[0], head[1], lbl).comps.items():
                _merge(out, lbl2, coeff * c2)
        terms, central = alg.bracket(fam, d, head[0], head[1])
        rest_label = self._render(rest, low)
        for fam_c, d_c, coeff in terms:
            for lbl2, c2 in self.mode_row(fam_c, d_c, rest_label).comps.items():
                _merge(out, lbl2, coeff * c2)
        if central:
            _merge(out, rest_label, central * self.level)
        return out
