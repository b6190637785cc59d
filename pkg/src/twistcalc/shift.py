"""The Delta(z)-shift machinery for inner twists.

Given an even weight-one state h with semisimple zero mode and commuting
nonnegative modes, the operator

    Delta(z) = z^{h(0)} exp( sum_{n>=1} (h(n)/-n) (-z)^{-n} )

turns fields of a sigma-twisted module into fields of a (sigma sigma_h)-
twisted one via Ybar(a, z) = Y(Delta(z) a, z).  Everything here is exact:
exp(2 pi i spectrum) values are cyclotomic scalars, Delta(z) is only ever
applied to concrete states (its exponential is nilpotent on each), and the
new twist charge of a shifted generator is derived from the exact
eigenvalues, then cross-checked against the exponent support.
"""

import math

from twistcalc.kernel import rat, as_rat
from twistcalc.exactcalc.scalar import Scalar, S_ONE, rational_binomial
from twistcalc.exactcalc.series import (
    TruncatedSeries, SoundnessError, w_contains, rat_floor)
from twistcalc.statespace import Vector
from twistcalc.fields import (
    TwistedField, Block, identity_field, nth_product, flat_add)
from twistcalc.verify import CheckReport, _residual_entries
from twistcalc.algebras.spec import AlgebraSpecError, _kernel


def state_to_field(build, state, name=None):
    """The field of a vacuum-based state, via iterated n-th products.

    A PBW monomial x1(m1)...xt(mt)*vac maps to x1(z)_{mu1}( ... xt(z)_{mut}
    I(z)), the product indices being the internal mode indices of the
    factors.  Linear combinations map linearly; they must be homogeneous in
    weight, charge and parity."""
    module = build.module
    space = build.space
    pieces = []
    for label, coeff in state.items():
        modes, low = module.monomial_of(label)
        if module.monomial_of(low)[0] or space.degree_of(low) != 0:
            raise AlgebraSpecError("state-field map needs vacuum-based states")
        f = identity_field(space, build.T)
        for fam, disp in reversed(modes):
            gen = build.field(fam)
            mu = disp + module.algebra.families[fam].index_offset
            if as_rat(mu).denominator != 1:
                raise AlgebraSpecError(
                    "state-field map needs integer mode indices "
                    f"(untwisted states); got {fam}({disp})")
            f = nth_product(gen, f, int(mu))
        pieces.append((coeff, f))
    if not pieces:
        raise ValueError("the zero state has no field")
    charge, parity, weight = (pieces[0][1].charge, pieces[0][1].parity,
                              pieces[0][1].weight)
    for _, f in pieces[1:]:
        if (f.charge, f.parity, f.weight) != (charge, parity, weight):
            raise ValueError("state-field map needs homogeneous states")

    def row(mu, label):
        out = space.zero_vector()
        for coeff, f in pieces:
            v = f.mode_vec(mu, label)
            if not v.is_zero():
                out = out + v.scale(coeff)
        return out

    return TwistedField(space, build.T, charge, parity, weight, row,
                        name=name or "Y(state)")


class CartanDatum:
    """An even weight-one state h with diagonal zero mode: the shift input.

    Eigenvalues are exact rationals with denominator dividing the declared
    inner-twist order T; non-diagonal action on a tracked basis vector is a
    hard error, matching the semisimplicity hypothesis."""

    def __init__(self, build, h_state, h_field, twist_order, name="h"):
        self.build = build
        self.state = h_state
        self.field = h_field
        self.T = twist_order
        self.name = name
        self._eigen = {}
        if not h_state.is_zero() and h_state.degree() != 1:
            raise ValueError("the shift state must have weight one")

    def eigenvalue(self, label):
        """h(0)-eigenvalue of a basis vector."""
        lam = self._eigen.get(label)
        if lam is None:
            row = self.field.mode_vec(rat(0), label)
            if row.is_zero():
                lam = rat(0)
            else:
                c = row.coefficient(label)
                if c is None or len(row.comps) != 1:
                    raise SoundnessError(f"h(0) is not diagonal on {label}")
                lam = c.as_rat()
            if (lam * self.T).denominator != 1:
                raise SoundnessError(
                    f"h(0) eigenvalue {lam} outside (1/{self.T})Z")
            self._eigen[label] = lam
        return lam

    def eigen_decompose(self, vec):
        """Split a Vector into h(0)-eigencomponents {eigenvalue: Vector}."""
        buckets = {}
        for label, c in vec.comps.items():
            buckets.setdefault(self.eigenvalue(label), {})[label] = c
        return {lam: Vector(vec.space, comps)
                for lam, comps in buckets.items()}

    def sigma_h_scalar(self, label):
        """exp(2 pi i h(0)) eigenvalue on a basis vector, exactly."""
        lam = self.eigenvalue(label)
        return Scalar.zeta(self.T, int(lam * self.T)) if self.T > 1 else S_ONE

    def validate(self, mode_cap=2, probe_cap=2):
        """Constraints checkable on this build: [h(m), h(n)] = 0 for
        0 <= m, n <= mode_cap on low strata; L(n)h = delta_{n,0} h when the
        build carries a Virasoro field.  Returns a list of violations."""
        issues = []
        space = self.build.space
        for m in range(mode_cap + 1):
            for n in range(mode_cap + 1):
                for d in space.degrees():
                    if d > probe_cap:
                        continue
                    blk = Block.identity(space, space.labels(d))
                    lhs = self.field.apply_mode(
                        rat(m), self.field.apply_mode(rat(n), blk))
                    rhs = self.field.apply_mode(
                        rat(n), self.field.apply_mode(rat(m), blk))
                    if not (lhs - rhs).is_zero():
                        issues.append(f"[h({m}), h({n})] != 0 at degree {d}")
        if "L" in self.build.fields:
            L = self.build.field("L")
            for n in range(0, 3):
                img = L.apply_mode(rat(n + 1), self.state)   # L(n): mu = n+1
                if n == 0:
                    if not (img - self.state).is_zero():
                        issues.append("L(0) h != h")
                elif not img.is_zero():
                    issues.append(f"L({n}) h != 0")
        return issues


def _solve_linear(mat, rhs):
    n = len(mat)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(mat)]
    for c in range(n):
        pr = None
        for i in range(c, n):
            if not aug[i][c].is_zero():
                pr = i
                break
        if pr is None:
            raise AlgebraSpecError("singular pairing in dual-basis solve")
        aug[c], aug[pr] = aug[pr], aug[c]
        inv = S_ONE / aug[c][c]
        aug[c] = [inv * v for v in aug[c]]
        for i in range(n):
            if i != c and not aug[i][c].is_zero():
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [aug[i][n] for i in range(n)]


def build_h_sigma(build, sigma_plus, twist_order, plus_labels=None,
                  minus_labels=None):
    """The inner-twist state h_sigma of a free-fermion build.

    sigma_plus: {plus_label: {plus_label: Scalar}}, an exact automorphism
    of the plus polarization with sigma^T = 1.  Diagonalizing it with
    eigenvalues zeta_T^{n_j} gives

        h_sigma = (1/T) sum_j n_j (a_j)_{-1} a*_j

    whose zero mode acts as n_j/T on a_j and -n_j/T on the dual a*_j, and
    exp(2 pi i h_sigma(0)) recovers sigma exactly on the generators."""
    space = build.space
    module = build.module
    T = twist_order
    if plus_labels is None:
        plus_labels = sorted(sigma_plus)
    if minus_labels is None:
        minus_labels = [l + "*" for l in plus_labels]
    n = len(plus_labels)
    idx = {l: i for i, l in enumerate(plus_labels)}

    def apply_sigma(combo):
        out = {}
        for l, c in combo.items():
            for l2, c2 in sigma_plus[l].items():
                cur = out.get(l2, Scalar.zero()) + c * c2
                if cur.is_zero():
                    out.pop(l2, None)
                else:
                    out[l2] = cur
        return out

    for l in plus_labels:
        cur = {l: S_ONE}
        for _ in range(T):
            cur = apply_sigma(cur)
        if not (set(cur) == {l} and cur[l] == S_ONE):
            raise AlgebraSpecError(f"sigma_plus^{T} != identity on {l}")

    # exact eigendecomposition over Q(zeta_T)
    eigvecs = []                       # (n_j, combo over plus labels)
    for j in range(T):
        eig = Scalar.zeta(T, j)
        rows = []
        for l in plus_labels:
            row = [Scalar.zero()] * n
            for l2, c in sigma_plus[l].items():
                row[idx[l2]] = row[idx[l2]] + c
            row[idx[l]] = row[idx[l]] - eig
            rows.append(row)
        for vec in _kernel(rows, n):
            combo = {plus_labels[i]: v for i, v in enumerate(vec)
                     if not v.is_zero()}
            eigvecs.append((j, combo))
    if len(eigvecs) != n:
        raise AlgebraSpecError("sigma_plus is not semisimple of this order")

    # dual combos over the minus labels: <a_i, a*_j> = delta_ij, using the
    # build's pairing <plus_k, minus_k> = delta_kk
    mat = [[eigvecs[i][1].get(plus_labels[k], Scalar.zero())
            for k in range(n)] for i in range(n)]
    duals = []
    for jidx in range(n):
        rhs = [S_ONE if i == jidx else Scalar.zero() for i in range(n)]
        x = _solve_linear(mat, rhs)
        duals.append({minus_labels[k]: x[k] for k in range(n)
                      if not x[k].is_zero()})

    h_state = space.zero_vector()
    for (nj, combo), dual in zip(eigvecs, duals):
        if nj == 0:
            continue
        dual_state = space.zero_vector()
        for ml, c in dual.items():
            dual_state = dual_state + module.mode_row(ml, rat(-1), "v").scale(c)
        acted = space.zero_vector()
        for pl, c in combo.items():
            acted = acted + module.apply_mode(pl, rat(-1), dual_state).scale(c)
        h_state = h_state + acted.scale(Scalar.rational(rat(nj, T)))

    if h_state.is_zero():
        h_field = _zero_h_field(build)
    else:
        h_field = state_to_field(build, h_state, name="h_sigma")
    datum = CartanDatum(build, h_state, h_field, T, name="h_sigma")
    datum.eigen_data = [(nj, combo, dual)
                        for (nj, combo), dual in zip(eigvecs, duals)]
    return datum


def _zero_h_field(build):
    def row(mu, label):
        return build.space.zero_vector()
    return TwistedField(build.space, build.T, 0, 0, 1, row, name="0")


def apply_delta(h, state, var="z", inverse=False):
    """Delta(z)^{+-1} applied to a concrete state: a finite exact series.

    The exponential is expanded as exp(A) = sum_t A^t/t! where A lowers the
    degree, so it terminates on every state; z^{h(0)} then shifts each
    eigencomponent by its eigenvalue (negated for the inverse, which is
    exp(-A) z^{-h(0)})."""
    sign = -1 if inverse else 1

    def apply_a(cells):
        nxt = {}
        for e, vec in cells.items():
            dmax = vec.degree()
            if dmax is None:
                continue
            n = 1
            while n <= dmax:
                img = h.field.apply_mode(rat(n), vec)
                if not img.is_zero():
                    # (h(n)/-n)(-z)^{-n} contributes -(-1)^n/n z^{-n} h(n)
                    c = rat(sign, n) if n % 2 else rat(-sign, n)
                    add = img.scale(Scalar.rational(c))
                    cur = nxt.get(e - n)
                    nxt[e - n] = add if cur is None else cur + add
                n += 1
        return {e: v for e, v in nxt.items() if not v.is_zero()}

    term = {rat(0): state}
    out = {rat(0): state}
    t = 0
    while term:
        t += 1
        if t > 64:
            raise SoundnessError("Delta expansion failed to terminate")
        term = apply_a(term)
        term = {e: v.scale(Scalar.rational(rat(1, t)))
                for e, v in term.items()}
        for e, v in term.items():
            cur = out.get(e)
            out[e] = v if cur is None else cur + v

    data = {}
    for e, vec in out.items():
        if vec.is_zero():
            continue
        for lam, comp in h.eigen_decompose(vec).items():
            shift = -lam if inverse else lam
            key = (e + shift,)
            cur = data.get(key)
            data[key] = comp if cur is None else cur + comp
    return TruncatedSeries((var,), data, None, None)


def shifted_field(build, h, state, name=None):
    """Ybar(a, z) = Y(Delta(z) a, z): the field of a under the inner shift.

    Returns a TwistedField of twist order lcm(T, T_h); its sigma sigma_h
    charge comes from the exact eigenvalue bookkeeping and is cross-checked
    against the exponent support of the produced modes."""
    space = build.space
    delta_a = apply_delta(h, state)
    pieces = []
    fracs = set()
    for (beta,), vec in sorted(delta_a.data.items()):
        f = state_to_field(build, vec)
        pieces.append((beta, f))
        fracs.add((rat(f.charge, f.T) + beta) % 1)
    if len(fracs) != 1:
        raise SoundnessError("shifted field has mixed sigma sigma_h charge")
    frac = fracs.pop()
    t_new = _lcm(build.T, frac.denominator if frac else 1)
    charge_new = int(frac * t_new) % t_new
    parity = pieces[0][1].parity
    weight = state.degree()
    grades = [f.weight - beta for beta, f in pieces]

    def row(mu, label):
        out = space.zero_vector()
        for beta, f in pieces:
            v = f.mode_vec(mu + beta, label)
            if not v.is_zero():
                out = out + v
        return out

    fld = TwistedField(space, t_new, charge_new, parity, weight, row,
                       name=name or "Ybar(state)",
                       grade_span=(min(grades), max(grades)))
    for d in space.degrees():
        if d > min(2, space.cutoff):
            continue
        for label in space.labels(d):
            s = fld.apply_series(space.basis_vector(label))
            for (e,), _v in s.data.items():
                if ((e + 1 + rat(charge_new, t_new)) % 1) != 0:
                    raise SoundnessError(
                        "shifted-field exponents disagree with the derived "
                        f"charge {charge_new}/{t_new}")
    return fld


def _lcm(a, b):
    return a * b // math.gcd(a, b)


def _delta_binomial_states(h, state, w0, w2):
    """Delta(z2+z0) state as {(z0-exp, z2-exp): state}, with the binomial
    powers expanded z2-first and truncated to cover the requested box."""
    depth0 = (rat_floor(as_rat(w0[1])) + 2) if w0[1] is not None else 4

    def apply_a(cells):
        nxt = {}
        for (e0, e2), vec in cells.items():
            dmax = vec.degree()
            if dmax is None:
                continue
            n = 1
            while n <= dmax:
                img = h.field.apply_mode(rat(n), vec)
                if not img.is_zero():
                    base = rat(1, n) if n % 2 else rat(-1, n)
                    for kk in range(depth0 + 1):
                        c = base * rational_binomial(rat(-n), kk)
                        if not c:
                            continue
                        key = (e0 + kk, e2 - n - kk)
                        add = img.scale(Scalar.rational(c))
                        cur = nxt.get(key)
                        nxt[key] = add if cur is None else cur + add
                n += 1
        return {k: v for k, v in nxt.items() if not v.is_zero()}

    term = {(rat(0), rat(0)): state}
    out = {(rat(0), rat(0)): state}
    t = 0
    while term:
        t += 1
        if t > 32:
            raise SoundnessError("Delta(z2+z0) expansion failed to terminate")
        term = apply_a(term)
        term = {k: v.scale(Scalar.rational(rat(1, t)))
                for k, v in term.items()}
        for k, v in term.items():
            cur = out.get(k)
            out[k] = v if cur is None else cur + v

    final = {}
    for (e0, e2), vec in out.items():
        for lam, comp in h.eigen_decompose(vec).items():
            for kk in range(depth0 + 1):
                c = rational_binomial(lam, kk)
                if not c:
                    continue
                key = (e0 + kk, e2 + lam - kk)
                add = comp.scale(Scalar.rational(c))
                cur = final.get(key)
                final[key] = add if cur is None else cur + add
    return {k: v for k, v in final.items() if not v.is_zero()}


def check_delta_conjugation(build, h, state, window, probe_cap=None,
                            min_width=4, name=None):
    """Residual of the conjugation identity

        Delta(z2) Y(a, z0) Delta(z2)^{-1} u = Y(Delta(z2+z0) a, z0) u

    on the probe basis, windows {z0, z2}.  Both sides are expanded
    independently; the right-hand binomials are truncated to cover the box."""
    space = build.space
    cutoff = space.cutoff
    if probe_cap is None:
        probe_cap = max(rat(0), cutoff - state.degree() - 2)
    w0, w2 = window["z0"], window["z2"]
    a_field = state_to_field(build, state)

    rhs_states = _delta_binomial_states(h, state, w0, w2)
    rhs_fields = {key: state_to_field(build, st)
                  for key, st in rhs_states.items()}

    residual = {}
    checked = 0
    for dd in space.degrees():
        if dd > probe_cap:
            continue
        lhs_cells = {}
        rhs_cells = {}
        for label in space.labels(dd):
            u = space.basis_vector(label)
            s1 = apply_delta(h, u, var="z2", inverse=True)
            for (e2a,), v1 in s1.data.items():
                piece = a_field.apply_series(v1, var="z0")
                for (e0,), v2 in piece.data.items():
                    s3 = apply_delta(h, v2, var="z2")
                    for (e2b,), v3 in s3.data.items():
                        key = (e0, e2a + e2b)
                        if w_contains(w0, e0) and w_contains(w2, key[1]):
                            flat_add(lhs_cells.setdefault(key, {}),
                                     Block(space, {label: v3}))
            for (e0s, e2s), f in rhs_fields.items():
                if not w_contains(w2, e2s):
                    continue
                piece = f.apply_series(u, var="z0")
                for (e0,), v in piece.data.items():
                    key = (e0 + e0s, e2s)
                    if w_contains(w0, key[0]):
                        flat_add(rhs_cells.setdefault(key, {}),
                                 Block(space, {label: v}))
        for key in set(lhs_cells) | set(rhs_cells):
            cell = {p: dict(sub) for p, sub in lhs_cells.get(key, {}).items()}
            for probe, sub in rhs_cells.get(key, {}).items():
                tgt = cell.setdefault(probe, {})
                for lbl, c in sub.items():
                    cur = tgt.get(lbl)
                    s = -c if cur is None else cur - c
                    if s.is_zero():
                        tgt.pop(lbl, None)
                    else:
                        tgt[lbl] = s
                if not tgt:
                    cell.pop(probe, None)
            checked += 1
            if cell:
                residual[(rat(dd),) + key] = cell

    windows = {"z0": w0, "z2": w2}
    status = "fail" if residual else "pass"
    if (as_rat(w0[1]) - as_rat(w0[0])) < min_width or \
            (as_rat(w2[1]) - as_rat(w2[0])) < min_width:
        status = "inconclusive-window"
    return CheckReport(name or "delta-conjugation", status, windows,
                       _residual_entries(residual),
                       {"cells_checked": checked, "probe_cap": str(probe_cap)})


def zero_mode_bilinear(build, a_name, b_name, c_name):
    """(a_{-1} b)_0 c for generator states: the engine-evaluated left side
    of the pairing identity (a_{-1} b)_0 c = <b,c> a - <a,c> b."""
    module = build.module
    a, b = build.field(a_name), build.field(b_name)
    prod = nth_product(a, b, -1)
    c_state = module.mode_row(c_name, rat(-1), "v")
    return prod.apply_mode(rat(0), c_state)
