"""Coefficient-exact checkers for the defining identities.

Every check expands its identity as a truncated multi-variable series
applied to probe vectors (or whole probe strata at once), subtracts the two
sides inside the intersected validity windows, and reports the residual
cells.  Passing or failing never depends on a tolerance: all arithmetic is
exact, and a pass additionally requires the achieved window to be nonempty
(configurably: wide enough), so vacuous passes are impossible.

Cutoff accounting: every coefficient computed on the truncated module is
the degree-cutoff projection of the true one.  Cells whose total degree
exceeds the cutoff are projected to zero identically on both sides of every
identity (the checks combine terms so this holds term by term); cells where
a projected intermediate could leak into an in-range coefficient are
excluded by the per-variable windows.  Each report records both: the
windows actually achieved and the total-degree bound below which cells are
verified as true (not just projected) coefficients.
"""

import json

from twistcalc.kernel import rat, as_rat
from twistcalc.exactcalc.scalar import (
    Scalar, S_ONE, koszul_sign, rational_binomial, falling_factorial)
from twistcalc.exactcalc.series import (
    TruncatedSeries, SoundnessError, EMPTY, FULL,
    w_intersect, w_contains, rat_floor, rat_ceil, poly_z1_minus_z2)
from twistcalc.fields import (
    Block, composite_table, apply_field_to_series, commutator_residual,
    product_tables, commutator_vanishes, locality_order_tables, flat_add,
    nth_product_series, nth_product, derivative_field, identity_field,
    locality_order)


class CheckReport:
    """Outcome of one identity check: status, residuals, achieved windows."""

    def __init__(self, name, status, window, residuals, extras=None):
        self.name = name
        self.status = status          # "pass" | "fail" | "inconclusive-window"
        self.window = window          # {var: (lo, hi)}
        self.residuals = residuals    # [{exps, probe, label, scalar}]
        self.extras = dict(extras or {})

    @property
    def passed(self):
        return self.status == "pass"

    def to_dict(self):
        return {
            "name": self.name,
            "status": self.status,
            "window": {v: [None if b is None else str(b) for b in w]
                       for v, w in sorted(self.window.items())},
            "residuals": self.residuals,
            "extras": {k: (str(v) if not isinstance(v, (int, str, list, dict))
                           else v)
                       for k, v in sorted(self.extras.items())},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":"))


def _status(residuals, windows, min_width, lattice=1):
    for w in windows.values():
        if w == EMPTY or w[0] is None or w[1] is None:
            continue
        if w[1] - w[0] < min_width:
            return "inconclusive-window"
    if any(w == EMPTY for w in windows.values()):
        return "inconclusive-window"
    return "fail" if residuals else "pass"


def _coeff_entries(x):
    """Flatten a coefficient (Vector, Block, or flat dict) to entries."""
    if isinstance(x, dict):
        out = []
        for k, v in sorted(x.items()):
            if isinstance(v, dict):
                for label, c in sorted(v.items()):
                    out.append((k, label, c))
            else:
                out.append(("", k, v))
        return out
    if isinstance(x, Block):
        out = []
        for probe, vec in x.items():
            for label, c in vec.items():
                out.append((probe, label, c))
        return out
    return [("", label, c) for label, c in x.items()]


def _residual_entries(cells, limit=32):
    out = []
    for exps, coeff in sorted(cells.items()):
        for probe, label, c in _coeff_entries(coeff):
            out.append({"exps": [str(e) for e in exps], "probe": probe,
                        "label": label, "scalar": str(c)})
            if len(out) >= limit:
                return out
    return out


def _acc(store, key, value, scale=None):
    if value is None or value.is_zero():
        return
    if scale is not None:
        if scale.is_zero():
            return
        value = value.scale(scale) if hasattr(value, "scale") else scale * value
    cur = store.get(key)
    s = value if cur is None else cur + value
    if s.is_zero():
        store.pop(key, None)
    else:
        store[key] = s


def lattice_points(window, offset=rat(0), step=1):
    lo, hi = window
    if lo is None or hi is None:
        raise SoundnessError("checks need finite windows")
    out = []
    e = offset + rat_ceil((as_rat(lo) - offset) / step) * step
    while e <= hi:
        out.append(e)
        e = e + step
    return out


def _table_get(table, e1, e2):
    return table.data.get((e1, e2))


def _series_coeff(series, q, cutoff):
    """Cutoff-projected coefficient at q.  Inside the window the stored
    value is the projection of the truth; outside, only cells whose total
    degree exceeds the cutoff are known (projected to zero) - anything else
    is genuinely unknown at this truncation depth."""
    if w_contains(series.windows[series.vars[0]], q):
        return series.data.get((q,))
    if series.deg0 is not None and series.deg0 + q > cutoff:
        return None
    raise SoundnessError(f"coefficient at {q} is outside the sound window")


def _probe_blocks(build, probe_cap):
    space = build.space
    return [Block.identity(space, space.labels(d))
            for d in space.degrees() if d <= probe_cap]


def _locality_on(a, b, probe, max_n=16):
    com = commutator_residual(a, b, probe)
    for n in range(max_n + 1):
        if (poly_z1_minus_z2(n) * com).is_zero():
            return n
    raise SoundnessError(
        f"fields {a.name}, {b.name} show no locality up to order {max_n}")


def check_twisted_jacobi(build, a, b, probe, window, min_width=8,
                         name=None):
    """Residual of the twisted Jacobi identity on one probe stratum.

        z0^-1 d((z1-z2)/z0) a(z1)b(z2)x - eps z0^-1 d((z2-z1)/-z0) b(z2)a(z1)x
        = z2^-1 d((z1-z0)/z2) ((z1-z0)/z2)^{-k/T} Y(a(z)_j b(z) modes, z2) x

    window: {z0/z1/z2: (lo, hi)}.  The achieved windows cap z1 and z2 at
    the intermediate-overflow boundaries; cells of total degree beyond the
    cutoff are consistent projections on both sides (recorded in extras).
    """
    space = build.space
    cutoff = space.cutoff
    d = probe.degree()
    k_t = rat(a.charge, a.T)
    eps = koszul_sign(a.parity, b.parity)

    w0 = window["z0"]
    w1 = w_intersect(window["z1"], (None, cutoff - d - a.grade_hi))
    w2 = w_intersect(window["z2"], (None, cutoff - d - b.grade_hi))
    windows = {"z0": w0, "z1": w1, "z2": w2}
    if any(w == EMPTY for w in windows.values()):
        return CheckReport(name or "twisted-jacobi", "inconclusive-window",
                           windows, [])

    ab, ba = product_tables(a, b, probe)
    r = locality_order_tables(ab, ba, eps, 16)
    if r is None:
        raise SoundnessError(
            f"fields {a.name}, {b.name} show no locality up to order 16")

    # modes of a(z)_j b(z) on the probe, computed once per j
    j_min = -rat_floor(as_rat(w0[1])) - 1
    pj = {}
    for j in range(j_min, r):
        pj[j] = nth_product_series(a, b, j, probe, r + max(0, -j) + 2, r,
                                   tables=(ab, ba), verify_cert=False)

    off1 = -k_t - 1
    off1 = off1 - rat_floor(off1)
    off2 = -rat(b.charge, b.T) - 1
    off2 = off2 - rat_floor(off2)
    floor1 = -a.grade_hi - d        # true z1 support floor of both tables
    floor2 = -b.grade_hi - d
    minus_eps = -eps
    residual = {}
    skipped = []
    total_cap = cutoff - d - a.grade_lo - b.grade_lo - 1
    f1_points = lattice_points(w1, off1)
    f2_points = lattice_points(w2, off2)
    kmax1 = max(0, rat_floor(as_rat(w2[1]) - floor2)) + 1
    kmax2 = max(0, rat_floor(as_rat(w1[1]) - floor1)) + 1
    rhs_weights = {}       # f1 -> [-C(f1+k, k)(-1)^k or None]
    ab_get = ab.data.get
    ba_get = ba.data.get
    for f0 in lattice_points(w0):
        n = int(-f0 - 1)
        rn = rat(n)
        # weights hoisted out of the (f1, f2) loops
        t1w, t2w = [], []
        for kk in range(max(kmax1, kmax2)):
            c = rational_binomial(rn, kk)
            if c:
                t1w.append(Scalar.rational(-c if kk % 2 else c))
                t2w.append(minus_eps * Scalar.rational(
                    -c if (n + kk) % 2 else c))
            else:
                t1w.append(None)
                t2w.append(None)
        kk_rhs_top = r + n + 1 if f0 < 0 else r + 1  # j = kk - f0 - 1 < r
        for f1 in f1_points:
            rw = rhs_weights.get(f1)
            if rw is None:
                rw = []
                for kk in range(r + rat_floor(as_rat(w0[1])) + 2):
                    c = rational_binomial(f1 + kk, kk)
                    rw.append(Scalar.rational(c if kk % 2 else -c)
                              if c else None)
                rhs_weights[f1] = rw
            for f2 in f2_points:
                cell = {}
                # term 1: sum_k C(n,k)(-1)^k AB[f1-n+k, f2-k]
                kk = 0
                while f2 - kk >= floor2:
                    w = t1w[kk] if kk < len(t1w) else None
                    if w is not None:
                        flat_add(cell, ab_get((f1 - n + kk, f2 - kk)), w)
                    kk += 1
                # term 2: -eps (-1)^n sum_k C(n,k)(-1)^k BA[f1-k, f2-n+k]
                kk = 0
                while f1 - kk >= floor1:
                    w = t2w[kk] if kk < len(t2w) else None
                    if w is not None:
                        flat_add(cell, ba_get((f1 - kk, f2 - n + kk)), w)
                    kk += 1
                # rhs: - sum_k C(f1+k, k)(-1)^k (a_j b)(z)-coeff, j = k-f0-1
                cell_ok = True
                kk = 0
                while True:
                    j = kk + n
                    if j >= r:
                        break
                    if j >= j_min:
                        w = rw[kk]
                        if w is not None:
                            q = f1 + f2 + kk + 1
                            try:
                                v = _series_coeff(pj[j], q, cutoff)
                            except SoundnessError:
                                # a product mode deeper than the cutoff can
                                # support: the cell cannot be evaluated at
                                # this truncation depth
                                cell_ok = False
                                break
                            flat_add(cell, v, w)
                    kk += 1
                if not cell_ok:
                    skipped.append((f0, f1, f2))
                elif cell:
                    residual[(f0, f1, f2)] = cell

    extras = {"locality_order": r, "probe_degree": str(d),
              "exact_total_degree": str(total_cap),
              "skipped_cells": len(skipped),
              "charge": f"{a.charge}/{a.T}"}
    if skipped:
        sums = sorted({f0 + f1 + f2 for f0, f1, f2 in skipped})
        extras["skipped_total_exponents"] = [str(s) for s in sums]
    status = _status(residual, windows, min_width)
    return CheckReport(name or "twisted-jacobi", status, windows,
                       _residual_entries(residual), extras)


def check_commutator_formula(build, a, b, expected, probe, window,
                             min_width=8, name=None):
    """Twisted supercommutator formula against supplied products:

        [a(z1), b(z2)]_{+/-} = sum_j (1/j!) (d/dz2)^j
            (z1^-1 d(z2/z1)(z2/z1)^{k/T}) u_j(z2)

    expected: list of (j, field u_j).  Two-variable window {z1, z2}.
    """
    space = build.space
    cutoff = space.cutoff
    d = probe.degree()
    k_t = rat(a.charge, a.T)
    eps = koszul_sign(a.parity, b.parity)
    w1 = w_intersect(window["z1"], (None, cutoff - d - a.grade_hi))
    w2 = w_intersect(window["z2"], (None, cutoff - d - b.grade_hi))
    windows = {"z1": w1, "z2": w2}
    if any(w == EMPTY for w in windows.values()):
        return CheckReport(name or "commutator-formula",
                           "inconclusive-window", windows, [])

    ab, ba = product_tables(a, b, probe)
    rhs_series = {j: f.apply_series(probe) for j, f in expected}
    minus_eps = -eps

    off1 = -k_t - 1
    off1 = off1 - rat_floor(off1)
    off2 = -rat((a.charge + b.charge) % a.T, a.T) - 1
    off2 = off2 - rat_floor(off2)
    residual = {}
    for f1 in lattice_points(w1, off1):
        mm = -f1 - 1              # in k/T + Z
        for f2 in lattice_points(w2, off2):
            cell = {}
            flat_add(cell, ab.data.get((f1, f2)))
            flat_add(cell, ba.data.get((f1, f2)), minus_eps)
            for j, f in expected:
                q = f2 + f1 + 1 + j
                fac = falling_factorial(mm, j)
                if fac:
                    c = Scalar.rational(fac) / Scalar.rational(
                        rat(_factorial(j)))
                    v = _series_coeff(rhs_series[j], q, cutoff)
                    flat_add(cell, v, -c)
            if cell:
                residual[(f1, f2)] = cell

    extras = {"probe_degree": str(d),
              "exact_total_degree": str(cutoff - d - a.grade_lo - b.grade_lo)}
    status = _status(residual, windows, min_width)
    return CheckReport(name or "commutator-formula", status, windows,
                       _residual_entries(residual), extras)


def _factorial(j):
    out = 1
    for i in range(2, j + 1):
        out *= i
    return out


def check_iterate_associativity(build, a, b, probe, window, min_width=8,
                                name=None, check_product_split=True):
    """Twisted associativity on a probe:

        (z0+z2)^K (z2+z0)^{k/T} Y(Y(a,z0)b, z2) x
            = (z0+z2)^K Yo(a, z0+z2) Y(b, z2) x

    with Yo(a,z) = z^{k/T} Y(a,z) and K the regularity exponent of
    z^K Yo(a,z)x.  Two-variable window {z0, z2}.  When a and b commute,
    the specialization Y(a_{-1}b, z2) = Y(a,z2)Y(b,z2) is checked too.
    """
    space = build.space
    cutoff = space.cutoff
    d = probe.degree()
    k_t = rat(a.charge, a.T)
    K = max(0, rat_ceil(a.grade_hi + d - k_t))

    w0 = window["z0"]
    w2 = w_intersect(window["z2"], (None, cutoff - d - b.grade_hi))
    windows = {"z0": w0, "z2": w2}
    if any(w == EMPTY for w in windows.values()):
        return CheckReport(name or "iterate-associativity",
                           "inconclusive-window", windows, [])

    ab, ba = product_tables(a, b, probe)
    eps = koszul_sign(a.parity, b.parity)
    r = locality_order_tables(ab, ba, eps, 16)
    if r is None:
        raise SoundnessError(
            f"fields {a.name}, {b.name} show no locality up to order 16")

    # lhs: expand both binomial prefactors against the iterate modes
    j_min = -rat_floor(as_rat(w0[1])) - K - 1
    pj = {j: nth_product_series(a, b, j, probe, r + max(0, -j) + 2, r,
                                tables=(ab, ba), verify_cert=False)
          for j in range(j_min, r)}
    off2 = -rat(b.charge, b.T) - 1
    off2 = off2 - rat_floor(off2)
    off2c = -rat((a.charge + b.charge) % a.T, a.T) - 1
    off2c = off2c - rat_floor(off2c)

    residual = {}
    skipped = []
    depth2 = r + max(0, rat_floor(as_rat(w0[1]))) + K + 4
    for f0 in lattice_points(w0):
        for f2 in lattice_points(w2, off2):
            cell = {}
            cell_ok = True
            # lhs: (z0+z2)^K (z2+z0)^{k/T} sum_j z0^{-j-1} (a_j b)(z2) x
            for k1 in range(K + 1):
                c1 = rational_binomial(rat(K), k1)
                for k2 in range(depth2):
                    c2 = rational_binomial(k_t, k2)
                    if not c2:
                        continue
                    j = -(int(f0 - (K - k1) - k2)) - 1
                    if j < j_min or j >= r:
                        continue
                    q = f2 - k1 - (k_t - k2)
                    try:
                        v = _series_coeff(pj[j], q, cutoff)
                    except SoundnessError:
                        cell_ok = False
                        break
                    flat_add(cell, v, Scalar.rational(c1 * c2))
                if not cell_ok:
                    break
            if not cell_ok:
                skipped.append((f0, f2))
                continue
            # rhs: (z0+z2)^{K + k/T + e1} AB[e1, e2] z2^{e2}
            for (e1, e2), v in ab.data.items():
                alpha = K + k_t + e1
                kk = f2 - e2
                if kk.denominator != 1 or kk < 0:
                    continue
                if f0 != alpha - kk:
                    continue
                c = rational_binomial(alpha, int(kk))
                flat_add(cell, v, Scalar.rational(-c))
            if cell:
                residual[(f0, f2)] = cell

    extras = {"regularity_exponent": K, "locality_order": r,
              "probe_degree": str(d), "skipped_cells": len(skipped),
              "exact_total_degree": str(cutoff - d - a.grade_lo - b.grade_lo)}

    if check_product_split and r == 0:
        # Y(a_{-1}b, z2) = Y(a, z2) Y(b, z2) for commuting factors
        pm1 = nth_product_series(a, b, -1, probe, 3, 0, tables=(ab, ba),
                                 verify_cert=False)
        split_bad = {}
        minus_one = Scalar.rational(-1)
        for q in lattice_points(w_intersect(w2, pm1.windows["z"]), off2c):
            cell = {}
            flat_add(cell, _series_coeff(pm1, q, cutoff))
            for (e1, e2), v in ab.data.items():
                if e1 + e2 == q:
                    flat_add(cell, v, minus_one)
            if cell:
                split_bad[(q,)] = cell
        extras["commuting_split"] = "pass" if not split_bad else "fail"
        if split_bad:
            residual.update({(rat(0), k[0]): v for k, v in split_bad.items()})

    status = _status(residual, windows, min_width)
    return CheckReport(name or "iterate-associativity", status, windows,
                       _residual_entries(residual), extras)


def check_virasoro_element(build, L, c, probe_cap=None, mode_range=3,
                           sample_fields=None, name=None):
    """Virasoro-element axioms: the mode relations

        [L(m), L(n)] = (m-n) L(m+n) + ((m^3-m)/12) delta_{m+n,0} c

    on the probe basis, and the derivative property L(z)_0 f = f' on sample
    fields (plus f_{-2} I = f').  All exact; no windows are involved beyond
    cutoff feasibility of the compositions.
    """
    space = build.space
    cutoff = space.cutoff
    c = Scalar.coerce(c)
    if probe_cap is None:
        probe_cap = cutoff - 2
    residual = {}
    checked = 0
    for m in range(-mode_range, mode_range + 1):
        for n in range(-mode_range, mode_range + 1):
            for deg in space.degrees():
                if deg > probe_cap:
                    continue
                # intermediates and the final image must fit under the cutoff
                if deg - n > cutoff or deg - m > cutoff:
                    continue
                if deg - m - n > cutoff or deg - m - n < 0:
                    continue
                blk = Block.identity(space, space.labels(deg))
                mu_m, mu_n, mu_mn = rat(m + 1), rat(n + 1), rat(m + n + 1)
                lhs = L.apply_mode(mu_m, L.apply_mode(mu_n, blk)) - \
                    L.apply_mode(mu_n, L.apply_mode(mu_m, blk))
                rhs = L.apply_mode(mu_mn, blk).scale(Scalar.rational(m - n))
                if m + n == 0:
                    rhs = rhs + blk.scale(
                        Scalar.rational(rat(m ** 3 - m, 12)) * c)
                diff = lhs - rhs
                checked += 1
                if not diff.is_zero():
                    residual[(rat(m), rat(n), rat(deg))] = diff
    derivative_ok = True
    for f in (sample_fields or [L]):
        p0 = nth_product(L, f, 0)
        df = derivative_field(f)
        pm2 = nth_product(f, identity_field(space, f.T), -2, locality=0)
        for deg in space.degrees():
            if deg > min(probe_cap, 2):
                continue
            blk = Block.identity(space, space.labels(deg))
            if not (p0.apply_series(blk) - df.apply_series(blk)).is_zero():
                derivative_ok = False
            if not (pm2.apply_series(blk) - df.apply_series(blk)).is_zero():
                derivative_ok = False
    status = "pass" if not residual and derivative_ok else "fail"
    extras = {"mode_pairs_checked": checked,
              "derivative_property": "pass" if derivative_ok else "fail"}
    return CheckReport(name or "virasoro-element", status,
                       {"modes": (rat(-mode_range), rat(mode_range))},
                       _residual_entries(residual), extras)


def power_series_squared(a, probe, window=None):
    """a(z)^2 applied to a probe, on the diagonal, stitched soundly from
    both operator orders (requires a self-commuting field)."""
    space = a.space
    cutoff = space.cutoff
    d = probe.degree()
    eps = koszul_sign(a.parity, a.parity)
    ab, ba = product_tables(a, a, probe)
    if not commutator_vanishes(ab, ba, eps, 0):
        raise SoundnessError(
            f"field {a.name} is not self-commuting; the power is undefined")
    cap = cutoff - d - a.grade_hi
    cap_total = 2 * cap          # both orders cover e <= cap1 + cap2
    data = {}
    for (e1, e2), v in ab.data.items():
        if e2 <= cap:
            _acc(data, (e1 + e2,), v)
    for (e1, e2), v in ba.data.items():
        if e2 > cap and e1 <= cap:
            _acc(data, (e1 + e2,), v, eps)
    win = (None, cap_total)
    if window is not None:
        win = w_intersect(win, window)
    return TruncatedSeries(("z",), data, {"z": win}, d + 2 * a.grade_lo)


def check_nilpotency(build, a, N, probe_cap=None, min_width=0, name=None):
    """Nilpotency a(z)^N = 0 on the probe basis.

    Requires a self-commuting (verified first).  N = 1 checks the field
    itself; N = 2 expands the square at a single variable from the two
    stitched operator orders; N > 2 goes through the iterated state
    (a_{-1})^{N-1} a field, which equals the N-th power for self-commuting
    fields.
    """
    space = build.space
    if probe_cap is None:
        probe_cap = space.cutoff - 2
    residual = {}
    windows = {}
    for blk in _probe_blocks(build, probe_cap):
        d = blk.degree()
        if N == 1:
            series = a.apply_series(blk)
        elif N == 2:
            series = power_series_squared(a, blk)
        else:
            f = a
            for _ in range(N - 1):
                f = nth_product(a, f, -1)
            series = f.apply_series(blk)
        windows[f"z@deg{d}"] = series.windows[series.vars[0]]
        for cell, v in series.data.items():
            _acc(residual, (rat(d),) + cell, v)
    status = "fail" if residual else "pass"
    if any(w == EMPTY for w in windows.values()):
        status = "inconclusive-window"
    return CheckReport(name or f"nilpotency-N{N}", status, windows,
                       _residual_entries(residual),
                       {"power": N, "probe_cap": str(probe_cap)})


def localize_delta_strata(residual2, alpha, j_max, window):
    """Failure localization via the uniqueness lemma for delta expansions.

    A residual of the form sum_j (d/dz2)^j (z2^-1 d(z1/z2)(z1/z2)^alpha)
    f_j(z2) vanishes iff every f_j does; this extracts the f_j strata, top
    first, by Res_z1 z1^{-alpha}(z1-z2)^j (which kills the lower strata),
    dividing by j! and undoing the z2^{-alpha} factor.  Returns {j: f_j
    series} for the nonzero strata: the actionable failure diagnostic.
    """
    alpha = as_rat(alpha)
    out = {}
    rest = residual2
    for j in range(j_max, -1, -1):
        shifted = rest.shift("z1", -alpha)
        ext = (poly_z1_minus_z2(j) * shifted).residue("z1")
        fj = ext.shift("z2", alpha).scale(
            S_ONE / Scalar.rational(rat(_factorial(j))))
        if not fj.is_zero():
            out[j] = fj
            rest = rest - _delta_stratum(alpha, j, fj, rest.vars, window)
    return out


def _delta_stratum(alpha, j, fj, vars2, window):
    """(d/dz2)^j (z2^-1 d(z1/z2)(z1/z2)^alpha) * fj(z2) on a window."""
    alpha = as_rat(alpha)
    data = {}
    w1, w2 = window["z1"], window["z2"]
    frac = alpha - rat_floor(alpha)
    for (q,), v in fj.data.items():
        for mm in lattice_points((as_rat(w1[0]) - 1, as_rat(w1[1]) + 1), frac):
            fac = falling_factorial(-mm - 1, j)
            e2 = -mm - 1 - j + q
            if fac and w_contains(w2, e2):
                _acc(data, (mm, e2), v, Scalar.rational(fac))
    return TruncatedSeries(vars2, data, dict(window))
