"""Concrete module builds on top of the PBW engine.

All builds are lowest-weight induced constructions: Verma-type modules for
the Virasoro and Ramond algebras, the NS vacuum module, generalized Verma
(Weyl) modules for twisted affine Lie superalgebras, and exterior-algebra
Fock modules for twisted Clifford algebras.  Each returns a ModuleBuild
holding the carrier space and one TwistedField per generator (plus the
identity field).
"""

from twistcalc.kernel import rat, as_rat
from twistcalc.exactcalc.scalar import Scalar, S_ONE
from twistcalc.algebras.engine import Family, ModeAlgebra, LowestWeightModule
from twistcalc.algebras.spec import (
    AlgebraSpec, EigenBasis, validate_spec, AlgebraSpecError)
from twistcalc.fields import TwistedField, identity_field

S_ZERO = Scalar.zero()


class ModuleBuild:
    """A truncated module plus its generator fields and build metadata."""

    def __init__(self, module, twist, gen_fields, metadata=None):
        self.module = module
        self.space = module.space
        self.T = twist
        self.fields = dict(gen_fields)
        self.fields["I"] = identity_field(self.space, twist)
        self.metadata = dict(metadata or {})

    def field(self, name):
        return self.fields[name]

    def generator_names(self):
        return [n for n in self.fields if n != "I"]

    def dims(self):
        return {d: self.space.dim(d) for d in self.space.degrees()}

    def check_fields_graded(self):
        """Every field mode respects the declared shift (grading audit)."""
        anomalies = set(self.metadata.get("parity_anomaly_fields", ()))
        for name, f in self.fields.items():
            off = f.exponent_lattice_offset()
            e = off
            while e <= self.space.cutoff:
                op = f.mode_operator(-e - 1)
                if not op.check_grading(check_parity=name not in anomalies):
                    return False
                e = e + 1
        return True


def _family_field(module, fam_name, twist, name=None):
    fam = module.algebra.families[fam_name]
    off = fam.index_offset

    def row(mu, label):
        return module.mode_row(fam_name, mu - off, label)

    return TwistedField(module.space, twist, fam.charge, fam.parity,
                        fam.weight, row, name=name or fam_name)


def _virasoro_central(m):
    return Scalar.rational(rat(int(m) ** 3 - int(m), 12))


def build_virasoro(c, h, cutoff, vacuum=False, name="virasoro"):
    """Verma-type Virasoro module of central charge c and lowest weight h.

    PBW basis L(-n1)...L(-nk)*v with n1 >= ... >= nk >= 1 (>= 2 under the
    vacuum convention); the module grading is normalized so v sits at 0.
    """
    c = Scalar.coerce(c)
    h = Scalar.coerce(h)

    def bracket(fa, da, fb, db):
        m, n = da, db
        terms = []
        if m != n:
            s = Scalar.rational(m - n)
            terms.append(("L", m + n, s))
        central = _virasoro_central(m) if m + n == 0 else S_ZERO
        return terms, central

    fam = Family("L", 2, 0, 0, 1, min_creator_shift=2 if vacuum else 1)
    alg = ModeAlgebra(name, [fam], bracket, twist_order=1)
    module = LowestWeightModule(
        alg, cutoff, c, [("v", 0)],
        zero_mode_rows={("L", rat(0)): {"v": {"v": h}}},
        lattice_denom=2, name=name)
    L = _family_field(module, "L", 1)
    return ModuleBuild(module, 1, {"L": L},
                       {"c": c, "h": h, "vacuum": vacuum})


def build_ns_vacuum(c, cutoff, name="ns"):
    """Neveu-Schwarz vacuum module: PBW alphabet L(-n), n >= 2 and
    G(-n-1/2), n >= 1, fields of weight 2 and 3/2."""
    c = Scalar.coerce(c)

    def bracket(fa, da, fb, db):
        if fa == "L" and fb == "L":
            m, n = da, db
            terms = []
            if m != n:
                terms.append(("L", m + n, Scalar.rational(m - n)))
            return terms, _virasoro_central(m) if m + n == 0 else S_ZERO
        if fa == "L" and fb == "G":
            m, r = da, db
            coeff = Scalar.rational(rat(1, 2)) * Scalar.rational(m) \
                - Scalar.rational(r)
            return ([("G", m + r, coeff)] if coeff else []), S_ZERO
        if fa == "G" and fb == "L":
            terms, central = bracket("L", db, "G", da)
            return [(f, d, -s) for f, d, s in terms], -central
        # [G(r), G(s)]_+ = 2 L(r+s) + (1/3)(r^2 - 1/4) delta c
        r, s = da, db
        terms = [("L", r + s, Scalar.rational(2))]
        central = S_ZERO
        if r + s == 0:
            central = Scalar.rational(rat(1, 3) * (r * r - rat(1, 4)))
        return terms, central

    fams = [Family("L", 2, 0, 0, 1, min_creator_shift=2),
            Family("G", rat(3, 2), 1, 0, rat(1, 2), min_creator_shift=rat(3, 2))]
    alg = ModeAlgebra(name, fams, bracket, twist_order=1)
    module = LowestWeightModule(
        alg, cutoff, c, [("1", 0)],
        zero_mode_rows={("L", rat(0)): {"1": {}}},
        lattice_denom=2, name=name)
    return ModuleBuild(module, 1,
                       {"L": _family_field(module, "L", 1),
                        "G": _family_field(module, "G", 1)},
                       {"c": c})


def build_ramond(c, h, f0, cutoff, name="ramond"):
    """Z2-twisted Verma module for the Ramond algebra.

    The lowest-weight data must satisfy F(0)^2 = L(0) - c/24 on the lowest
    vector, i.e. f0^2 = h - c/24, which is enforced here.  L(z) has charge 0
    and F(z) charge 1 (exponents in 1/2 + Z).
    """
    c = Scalar.coerce(c)
    h = Scalar.coerce(h)
    f0 = Scalar.coerce(f0)
    if not (f0 * f0 == h - c * Scalar.rational(rat(1, 24))):
        raise AlgebraSpecError(
            "inconsistent Ramond lowest-weight data: need f0^2 = h - c/24")

    def bracket(fa, da, fb, db):
        if fa == "L" and fb == "L":
            m, n = da, db
            terms = []
            if m != n:
                terms.append(("L", m + n, Scalar.rational(m - n)))
            return terms, _virasoro_central(m) if m + n == 0 else S_ZERO
        if fa == "L" and fb == "F":
            m, n = da, db
            coeff = Scalar.rational(rat(m, 2) - n)
            return ([("F", m + n, coeff)] if coeff else []), S_ZERO
        if fa == "F" and fb == "L":
            terms, central = bracket("L", db, "F", da)
            return [(f, d, -s) for f, d, s in terms], -central
        m, n = da, db
        terms = [("L", m + n, Scalar.rational(2))]
        central = S_ZERO
        if m + n == 0:
            central = Scalar.rational(rat(1, 3) * (m * m - rat(1, 4)))
        return terms, central

    fams = [Family("L", 2, 0, 0, 1, min_creator_shift=1),
            Family("F", rat(3, 2), 1, 1, rat(1, 2), min_creator_shift=1)]
    alg = ModeAlgebra(name, fams, bracket, twist_order=2)
    module = LowestWeightModule(
        alg, cutoff, c, [("v", 0)],
        zero_mode_rows={("L", rat(0)): {"v": {"v": h}},
                        ("F", rat(0)): {"v": {"v": f0}}},
        lattice_denom=4, name=name)
    meta = {"c": c, "h": h, "f0": f0}
    if not f0.is_zero():
        # F(0) fixes the one-dimensional lowest space: the usual Ramond
        # sector parity anomaly, exempted from the parity audit
        meta["parity_anomaly_fields"] = ["F"]
    return ModuleBuild(module, 2,
                       {"L": _family_field(module, "L", 2),
                        "F": _family_field(module, "F", 2)},
                       meta)


# ---------------------------------------------------------------------------
# affine Lie superalgebras and Clifford algebras from declarative specs

def _affine_bracket(eig, families):
    parity = {l: eig.parity[l] for l in eig.labels}

    def bracket(fa, da, fb, db):
        combo = eig.bracket(fa, fb)
        terms = [(l, da + db, c) for l, c in sorted(combo.items())]
        central = S_ZERO
        if not parity[fa] and not parity[fb]:
            if da + db == 0:
                b = eig.b_value(fa, fb)
                if not b.is_zero():
                    central = b * Scalar.rational(da)
        elif parity[fa] and parity[fb]:
            if da + db + 1 == 0:
                central = eig.b_value(fa, fb)
        return terms, central

    return bracket


def build_affine_twisted(spec, level, cutoff, lowest=None, lowest_rows=None,
                         validate=True, name=None):
    """Generalized Verma module for the twisted affine superalgebra of
    (g, B, sigma), with the central element acting as the level.

    lowest/lowest_rows give the lowest-weight space and the action of the
    shift-zero modes on it (defaults: one even vector killed by them).
    Fields: one per sigma-eigenbasis element, charge j for the eps^j
    eigenspace, weight 1 (even) or 1/2 (odd).
    """
    if validate:
        report = validate_spec(spec)
        if report:
            raise AlgebraSpecError("invalid algebra spec: " + "; ".join(report))
    eig = EigenBasis(spec)
    fams = []
    for l in eig.labels:
        odd = eig.parity[l]
        fams.append(Family(l, rat(1, 2) if odd else 1, odd, eig.charge[l], 0))
    alg = ModeAlgebra(name or spec.name, fams, _affine_bracket(eig, fams),
                      twist_order=spec.T)
    if lowest is None:
        lowest = [("v", 0)]
    module = LowestWeightModule(alg, cutoff, level, lowest,
                                zero_mode_rows=lowest_rows or {},
                                lattice_denom=2 * spec.T,
                                name=name or spec.name)
    gen = {l: _family_field(module, l, spec.T) for l in eig.labels}
    return ModuleBuild(module, spec.T, gen,
                       {"level": Scalar.coerce(level), "spec": spec.name,
                        "eigenbasis": {l: eig.charge[l] for l in eig.labels}})


def _isotropic_split(eig, sector):
    """Split a T-even zero sector into (plus, minus, e) with B(p_i, m_j) =
    delta_ij, all other pairings zero, and <e, e> = 2 when dim is odd.

    Members are combos over the eigenbasis labels.  Greedy pairing over the
    given basis order; raises if no exact split exists over the scalars.
    """
    def bval(u, v):
        out = S_ZERO
        for l1, c1 in u.items():
            for l2, c2 in v.items():
                out = out + c1 * c2 * eig.b_value(l1, l2)
        return out

    def combo_sub(u, v, c):
        out = dict(u)
        for l, x in v.items():
            cur = out.get(l, S_ZERO) - c * x
            if cur.is_zero():
                out.pop(l, None)
            else:
                out[l] = cur
        return out

    rest = [{l: S_ONE} for l in sector]
    e_vec = None
    if len(sector) % 2 == 1:
        for i, u in enumerate(rest):
            if bval(u, u) == Scalar.rational(2):
                e_vec = u
                rest = [combo_sub(v, u, bval(v, u) / Scalar.rational(2))
                        for j, v in enumerate(rest) if j != i]
                break
        if e_vec is None:
            raise AlgebraSpecError(
                "odd-dimensional zero sector has no basis vector of norm 2")
    plus, minus = [], []
    while rest:
        u = None
        for i, cand in enumerate(rest):
            if bval(cand, cand).is_zero():
                u = rest.pop(i)
                break
        if u is None:
            raise AlgebraSpecError(
                "zero sector admits no exact isotropic splitting")
        w = None
        for i, cand in enumerate(rest):
            if not bval(u, cand).is_zero():
                w = rest.pop(i)
                break
        if w is None:
            raise AlgebraSpecError("degenerate pairing in the zero sector")
        s = bval(u, w)
        w = {l: c / s for l, c in w.items()}
        ww = bval(w, w)
        if not ww.is_zero():
            w = combo_sub(w, u, ww / Scalar.rational(2))
        plus.append(u)
        minus.append(w)
        rest = [combo_sub(combo_sub(v, w, bval(v, u)), u, bval(v, w))
                for v in rest]
    return plus, minus, e_vec


def _lambda_lowest(plus_count):
    """Exterior-algebra lowest space labels over the plus part."""
    labels = []
    for mask in range(1 << plus_count):
        subset = tuple(i for i in range(plus_count) if mask & (1 << i))
        name = "v" if not subset else "v{" + ",".join(map(str, subset)) + "}"
        labels.append((subset, name, len(subset) & 1))
    labels.sort(key=lambda t: (len(t[0]), t[0]))
    return labels


def _wedge(subset, i):
    if i in subset:
        return None, 0
    pos = sum(1 for j in subset if j < i)
    new = tuple(sorted(subset + (i,)))
    return new, (-1) ** pos


def _contract(subset, i):
    if i not in subset:
        return None, 0
    pos = subset.index(i)
    new = subset[:pos] + subset[pos + 1:]
    return new, (-1) ** pos


def build_clifford_twisted(spec, level, cutoff, validate=True, name=None):
    """Fock modules Lambda(A~[sigma]_+) for the twisted Clifford algebra of
    (A, B, sigma).

    Returns a list of ModuleBuilds: two exactly when T is even and the
    middle eigensector has odd dimension (the distinguished norm-2 vector e
    then acts as +1/-1 on even/odd exterior degrees), one otherwise.
    """
    if validate:
        report = validate_spec(spec)
        if report:
            raise AlgebraSpecError("invalid algebra spec: " + "; ".join(report))
    if any(not spec.parity[l] for l in spec.basis):
        raise AlgebraSpecError("Clifford build expects a purely odd space")
    eig = EigenBasis(spec)
    T = spec.T
    level = Scalar.coerce(level)
    fams = [Family(l, rat(1, 2), 1, eig.charge[l], 0) for l in eig.labels]
    alg = ModeAlgebra(name or spec.name, fams, _affine_bracket(eig, fams),
                      twist_order=T)

    sector = [l for l in eig.labels if T % 2 == 0 and eig.charge[l] == T // 2]
    builds = []
    if not sector:
        module = LowestWeightModule(alg, cutoff, level, [("v", 0)],
                                    lattice_denom=2 * T,
                                    name=name or spec.name)
        gen = {l: _family_field(module, l, T) for l in eig.labels}
        builds.append(ModuleBuild(module, T, gen,
                                  {"level": level, "spec": spec.name}))
        return builds

    plus, minus, e_vec = _isotropic_split(eig, sector)
    m = len(plus)
    lows = _lambda_lowest(m)
    low_index = {subset: lab for subset, lab, _ in lows}

    # expansion of each zero-sector eigenlabel over (plus, minus, e)
    split_vectors = plus + minus + ([e_vec] if e_vec is not None else [])
    expand = _express_over(eig, sector, split_vectors)

    def zero_rows(eta):
        rows = {}
        for si, lbl in enumerate(sector):
            mat = {}
            coeffs = expand[si]
            for subset, lab, _ in lows:
                acc = {}
                for k, c in enumerate(coeffs):
                    if c.is_zero():
                        continue
                    if k < m:                       # wedge with plus_k
                        new, sgn = _wedge(subset, k)
                        if new is None:
                            continue
                        val = c * Scalar.rational(sgn)
                    elif k < 2 * m:                 # contract with minus_{k-m}
                        new, sgn = _contract(subset, k - m)
                        if new is None:
                            continue
                        val = c * Scalar.rational(sgn) * level
                    else:                           # e: eta * (-1)^length
                        new = subset
                        val = c * Scalar.rational(eta * (-1) ** len(subset))
                    cur = acc.get(low_index[new], S_ZERO) + val
                    if cur.is_zero():
                        acc.pop(low_index[new], None)
                    else:
                        acc[low_index[new]] = cur
                if acc:
                    mat[lab] = acc
            if mat:
                rows[(lbl, rat(-1, 2))] = mat
        return rows

    etas = (1, -1) if e_vec is not None else (1,)
    if e_vec is not None and not (level == S_ONE):
        raise AlgebraSpecError(
            "two-module Clifford sector requires level 1 (e^2 = level)")
    for eta in etas:
        tag = f"{name or spec.name}" + (f"[e->{eta:+d}]" if e_vec is not None
                                        else "")
        module = LowestWeightModule(
            alg, cutoff, level, [(lab, par) for _, lab, par in lows],
            zero_mode_rows=zero_rows(eta), lattice_denom=2 * T, name=tag)
        gen = {l: _family_field(module, l, T) for l in eig.labels}
        meta = {"level": level, "spec": spec.name,
                "zero_sector": list(sector),
                "parity_anomaly_fields": list(sector)}
        if e_vec is not None:
            meta["e_action"] = eta
            meta["e_vector"] = {l: str(c) for l, c in sorted(e_vec.items())}
        builds.append(ModuleBuild(module, T, gen, meta))
    return builds


def _express_over(eig, sector_labels, split_vectors):
    """Coefficients of each sector eigenlabel over the split vectors."""
    n = len(split_vectors)
    idx = {l: i for i, l in enumerate(sector_labels)}
    # matrix columns: split vectors over the sector labels
    rows = []
    for l in sector_labels:
        rows.append([v.get(l, S_ZERO) for v in split_vectors])
    # solve rows * x = e_i for each sector label by Gaussian elimination
    out = []
    for si, l in enumerate(sector_labels):
        aug = [list(r) + [S_ONE if i == si else S_ZERO]
               for i, r in enumerate(rows)]
        sol = _solve_square(aug, n)
        out.append(sol)
    return out


def _solve_square(aug, n):
    rows = [list(r) for r in aug]
    perm = []
    for c in range(n):
        pr = None
        for i in range(len(perm), len(rows)):
            if not rows[i][c].is_zero():
                pr = i
                break
        if pr is None:
            raise AlgebraSpecError("singular zero-sector change of basis")
        k = len(perm)
        rows[k], rows[pr] = rows[pr], rows[k]
        inv = S_ONE / rows[k][c]
        rows[k] = [inv * v for v in rows[k]]
        for i in range(len(rows)):
            if i != k and not rows[i][c].is_zero():
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[k])]
        perm.append(c)
    return [rows[c][-1] for c in range(n)]


def quotient_build(build, singular_vectors, max_shift=None, name=None):
    """Quotient a build by the action-closure of singular vectors.

    The module is the desk-scale stand-in for the irreducible quotient:
    statespace.quotient_space computes the submodule generated from the
    given vectors under all generator modes with |shift| <= max_shift, and
    the generator fields are pushed to the quotient through the projection.
    """
    from twistcalc.statespace import quotient_space
    from twistcalc.fields import TwistedField
    space = build.space
    if max_shift is None:
        max_shift = space.cutoff
    action = []
    for gname in build.generator_names():
        action.extend(build.field(gname).mode_operators(max_shift))
    quot, proj = quotient_space(space, singular_vectors, action,
                                name=name or f"{space.name}/sub")

    def project_field(f):
        def row(mu, label):
            return proj.apply(f.mode_vec(mu, label))
        return TwistedField(quot, f.T, f.charge, f.parity, f.weight, row,
                            name=f.name)

    gen = {n: project_field(build.field(n)) for n in build.generator_names()}
    out = ModuleBuild.__new__(ModuleBuild)
    out.module = build.module
    out.space = quot
    out.T = build.T
    out.fields = gen
    out.fields["I"] = identity_field(quot, build.T)
    out.metadata = dict(build.metadata)
    out.metadata["quotient_of"] = space.name
    out.metadata["projection"] = proj
    return out


def build_free_fermions(n_pairs, cutoff, level=1, name="fermions"):
    """Untwisted fermion Fock module F^{2n}: hyperbolic pairs (a_i, a_i*)
    with <a_i, a_j*> = delta_ij, one irreducible module."""
    basis, parity, form = [], {}, {}
    for i in range(1, n_pairs + 1):
        basis += [f"a{i}", f"a{i}*"]
        parity[f"a{i}"] = parity[f"a{i}*"] = 1
        form[(f"a{i}", f"a{i}*")] = S_ONE
    spec = AlgebraSpec(name, 1, basis, parity, {}, form)
    return build_clifford_twisted(spec, level, cutoff, name=name)[0]
