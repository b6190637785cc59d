"""Declarative Lie-superalgebra input data and its validation.

An AlgebraSpec holds a finite basis with parities, the super-bracket table,
an invariant symmetric bilinear form B, and an automorphism sigma of
declared order T.  Specs are loaded from JSON (see from_json) with scalar
entries in the exact literal syntax, and are validated structurally before
any module is built on them.
"""

import json

from twistcalc.kernel import rat
from twistcalc.exactcalc.scalar import Scalar, S_ONE, koszul_sign
from twistcalc.exactcalc.literals import parse_scalar


class AlgebraSpecError(ValueError):
    pass


def _combo(terms):
    """Normalize [(label, Scalar)] to a dict, dropping zeros."""
    out = {}
    for label, c in terms:
        c = Scalar.coerce(c)
        cur = out.get(label)
        s = c if cur is None else cur + c
        if s.is_zero():
            out.pop(label, None)
        else:
            out[label] = s
    return out


class AlgebraSpec:
    """Basis labels, parities, brackets, form B, automorphism sigma."""

    def __init__(self, name, twist_order, basis, parity, brackets, form,
                 sigma=None, distinguished=None):
        self.name = name
        self.T = twist_order
        self.basis = list(basis)
        self.parity = dict(parity)
        self.brackets = {k: _combo(v.items() if isinstance(v, dict) else v)
                         for k, v in brackets.items()}
        self.form = {k: Scalar.coerce(v) for k, v in form.items()}
        self.sigma = {k: _combo(v.items() if isinstance(v, dict) else v)
                      for k, v in (sigma or {}).items()}
        self.distinguished = dict(distinguished or {})
        if not self.basis:
            raise AlgebraSpecError("empty algebra")
        for label in self.basis:
            if label not in self.parity:
                raise AlgebraSpecError(f"missing parity for {label!r}")

    # -- structure lookups -----------------------------------------------------

    def bracket(self, x, y):
        """[x, y] (super-bracket) as {label: Scalar}."""
        v = self.brackets.get((x, y))
        if v is not None:
            return v
        v = self.brackets.get((y, x))
        if v is not None:
            sign = Scalar.rational(-1) * koszul_sign(self.parity[x], self.parity[y])
            return {l: sign * c for l, c in v.items()}
        return {}

    def bracket_vec(self, xs, ys):
        """Bilinear extension of the bracket to combos."""
        out = {}
        for x, cx in xs.items():
            for y, cy in ys.items():
                for l, c in self.bracket(x, y).items():
                    term = cx * cy * c
                    cur = out.get(l)
                    s = term if cur is None else cur + term
                    if s.is_zero():
                        out.pop(l, None)
                    else:
                        out[l] = s
        return out

    def b_value(self, x, y):
        v = self.form.get((x, y))
        if v is None:
            v = self.form.get((y, x))
        return v if v is not None else Scalar.zero()

    def b_vec(self, xs, ys):
        out = Scalar.zero()
        for x, cx in xs.items():
            for y, cy in ys.items():
                out = out + cx * cy * self.b_value(x, y)
        return out

    def sigma_image(self, x):
        return self.sigma.get(x, {x: S_ONE})

    def sigma_vec(self, xs):
        out = {}
        for x, cx in xs.items():
            for l, c in self.sigma_image(x).items():
                term = cx * c
                cur = out.get(l)
                s = term if cur is None else cur + term
                if s.is_zero():
                    out.pop(l, None)
                else:
                    out[l] = s
        return out

    # -- JSON ---------------------------------------------------------------------

    @staticmethod
    def from_json(text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise AlgebraSpecError(
                f"spec JSON parse error at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}") from None
        try:
            name = doc["name"]
            basis = [e["label"] for e in doc["basis"]]
            parity = {e["label"]: int(e.get("parity", 0)) for e in doc["basis"]}
            brackets = {}
            for ent in doc.get("brackets", ()):
                terms = [(l, parse_scalar(s)) for l, s in ent.get("terms", ())]
                brackets[(ent["x"], ent["y"])] = _combo(terms)
            form = {}
            for x, y, s in doc.get("form", ()):
                form[(x, y)] = parse_scalar(s)
            sigma = {}
            for x, terms in doc.get("automorphism", {}).items():
                sigma[x] = _combo([(l, parse_scalar(s)) for l, s in terms])
            return AlgebraSpec(name, int(doc.get("twist_order", 1)), basis,
                               parity, brackets, form, sigma,
                               doc.get("distinguished"))
        except KeyError as exc:
            raise AlgebraSpecError(f"spec missing required key {exc}") from None

    def to_json(self):
        doc = {
            "name": self.name,
            "twist_order": self.T,
            "basis": [{"label": l, "parity": self.parity[l]} for l in self.basis],
            "brackets": [
                {"x": x, "y": y,
                 "terms": [[l, str(c)] for l, c in sorted(v.items())]}
                for (x, y), v in sorted(self.brackets.items())
            ],
            "form": [[x, y, str(c)] for (x, y), c in sorted(self.form.items())],
            "automorphism": {x: [[l, str(c)] for l, c in sorted(v.items())]
                             for x, v in sorted(self.sigma.items())},
            "distinguished": self.distinguished,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def validate_spec(spec):
    """All violated invariants, as human-readable strings (empty = valid)."""
    out = []
    par = spec.parity

    def combo_str(v):
        return " + ".join(f"({c})*{l}" for l, c in sorted(v.items())) or "0"

    # B symmetric, B(even, odd) = 0
    for (x, y), c in spec.form.items():
        other = spec.form.get((y, x))
        if other is not None and not (other == c):
            out.append(f"form not symmetric on ({x}, {y})")
        if par[x] != par[y] and not c.is_zero():
            out.append(f"form pairs even with odd on ({x}, {y})")

    # invariance B([a,u],v) = -B(u,[a,v]) for a even
    for a in spec.basis:
        if par[a]:
            continue
        for u in spec.basis:
            for v in spec.basis:
                lhs = spec.b_vec(spec.bracket(a, u), {v: S_ONE})
                rhs = spec.b_vec({u: S_ONE}, spec.bracket(a, v))
                if not (lhs + rhs).is_zero():
                    out.append(f"form not invariant on ([{a},{u}], {v})")

    # odd-odd brackets vanish in g
    for x in spec.basis:
        for y in spec.basis:
            if par[x] and par[y] and spec.bracket(x, y):
                out.append(f"nonzero odd-odd bracket [{x}, {y}]")

    # bracket parity and antisymmetry consistency
    for (x, y), v in spec.brackets.items():
        for l in v:
            if par[l] != (par[x] ^ par[y]):
                out.append(f"bracket [{x},{y}] violates parity at {l}")
        w = spec.brackets.get((y, x))
        if w is not None and (x, y) != (y, x):
            sign = Scalar.rational(-1) * koszul_sign(par[x], par[y])
            expect = {l: sign * c for l, c in w.items()}
            if v != expect:
                out.append(f"bracket table inconsistent on ({x},{y})/({y},{x})")

    # Jacobi: [[x,y],z] = [x,[y,z]] - [y,[x,z]] for x,y even, z any
    for x in spec.basis:
        if par[x]:
            continue
        for y in spec.basis:
            if par[y]:
                continue
            for z in spec.basis:
                lhs = spec.bracket_vec(spec.bracket(x, y), {z: S_ONE})
                r1 = spec.bracket_vec({x: S_ONE}, spec.bracket(y, z))
                r2 = spec.bracket_vec({y: S_ONE}, spec.bracket(x, z))
                diff = dict(lhs)
                for l, c in r1.items():
                    cur = diff.get(l, Scalar.zero()) - c
                    if cur.is_zero():
                        diff.pop(l, None)
                    else:
                        diff[l] = cur
                for l, c in r2.items():
                    cur = diff.get(l, Scalar.zero()) + c
                    if cur.is_zero():
                        diff.pop(l, None)
                    else:
                        diff[l] = cur
                if diff:
                    out.append(f"Jacobi fails on ({x}, {y}, {z}): {combo_str(diff)}")

    # sigma: parity, brackets, form, order
    if spec.sigma or spec.T > 1:
        for x in spec.basis:
            img = spec.sigma_image(x)
            for l in img:
                if par[l] != par[x]:
                    out.append(f"automorphism mixes parity at {x}")
                    break
        for x in spec.basis:
            for y in spec.basis:
                lhs = spec.sigma_vec(spec.bracket(x, y))
                rhs = spec.bracket_vec(spec.sigma_image(x), spec.sigma_image(y))
                if not _combo_eq(lhs, rhs):
                    out.append(f"automorphism not bracket-compatible on ({x},{y})")
                bl = spec.b_vec(spec.sigma_image(x), spec.sigma_image(y))
                if not (bl - spec.b_value(x, y)).is_zero():
                    out.append(f"automorphism does not preserve the form on ({x},{y})")
        for x in spec.basis:
            cur = {x: S_ONE}
            for _ in range(spec.T):
                cur = spec.sigma_vec(cur)
            if not _combo_eq(cur, {x: S_ONE}):
                out.append(f"automorphism order is not {spec.T} on {x}")
    return out


def _combo_eq(a, b):
    if set(a) != set(b):
        return False
    return all((a[k] - b[k]).is_zero() for k in a)


# ---------------------------------------------------------------------------
# exact sigma-eigendecomposition over Q(zeta_T)

class EigenBasis:
    """sigma-eigenbasis of an AlgebraSpec with conjugated structure data."""

    def __init__(self, spec):
        self.spec = spec
        self.labels = []          # new labels in order
        self.parity = {}
        self.charge = {}          # label -> j with sigma v = eps^j v
        self.combos = {}          # label -> {orig_label: Scalar}
        self._build()

    def _build(self):
        spec = self.spec
        T = spec.T
        n = len(spec.basis)
        idx = {l: i for i, l in enumerate(spec.basis)}
        for j in range(T):
            eig = Scalar.zeta(T, j) if T > 1 else S_ONE
            # rows of sigma - eps^j on the basis
            rows = []
            for x in spec.basis:
                row = [Scalar.zero()] * n
                for l, c in spec.sigma_image(x).items():
                    row[idx[l]] = row[idx[l]] + c
                row[idx[x]] = row[idx[x]] - eig
                rows.append(row)
            for vec in _kernel(rows, n):
                combo = {spec.basis[i]: v for i, v in enumerate(vec)
                         if not v.is_zero()}
                label = self._name_combo(combo)
                self.labels.append(label)
                self.combos[label] = combo
                self.charge[label] = j
                ps = {spec.parity[l] for l in combo}
                if len(ps) != 1:
                    raise AlgebraSpecError(
                        "sigma eigenvector mixes parities; invalid automorphism")
                self.parity[label] = ps.pop()
        if len(self.labels) != n:
            raise AlgebraSpecError(
                f"automorphism is not semisimple of order {T} "
                f"({len(self.labels)} eigenvectors for dimension {n})")
        # change of basis: column matrix of combos, inverted once
        self._expand = _invert_columns(
            [[self.combos[l].get(b, Scalar.zero()) for l in self.labels]
             for b in spec.basis])

    def _name_combo(self, combo):
        items = sorted(combo.items())
        if len(items) == 1 and items[0][1] == S_ONE:
            return items[0][0]
        parts = []
        for l, c in items:
            if c == S_ONE:
                parts.append(f"+{l}")
            elif c == Scalar.rational(-1):
                parts.append(f"-{l}")
            else:
                parts.append(f"+({c})*{l}")
        name = "".join(parts)
        return name[1:] if name.startswith("+") else name

    def express(self, orig_combo):
        """Rewrite {orig_label: Scalar} over the eigenbasis labels."""
        out = {}
        for b, c in orig_combo.items():
            i = self.spec.basis.index(b)
            for k, l in enumerate(self.labels):
                v = self._expand[k][i]
                if not v.is_zero():
                    term = c * v
                    cur = out.get(l)
                    s = term if cur is None else cur + term
                    if s.is_zero():
                        out.pop(l, None)
                    else:
                        out[l] = s
        return out

    def bracket(self, x, y):
        """Super-bracket of eigenbasis elements, over the eigenbasis."""
        return self.express(self.spec.bracket_vec(self.combos[x], self.combos[y]))

    def b_value(self, x, y):
        return self.spec.b_vec(self.combos[x], self.combos[y])


def _kernel(rows, n):
    """Kernel basis of a Scalar matrix given as row lists (length n)."""
    # Gaussian elimination to row echelon, tracking pivot columns
    mat = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        pr = None
        for i in range(r, len(mat)):
            if not mat[i][c].is_zero():
                pr = i
                break
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        inv = S_ONE / mat[r][c]
        mat[r] = [inv * v for v in mat[r]]
        for i in range(len(mat)):
            if i != r and not mat[i][c].is_zero():
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    out = []
    for fc in free:
        vec = [Scalar.zero()] * n
        vec[fc] = S_ONE
        for ri, pc in enumerate(pivots):
            vec[pc] = -mat[ri][fc]
        out.append(vec)
    return out


def _invert_columns(mat):
    """Inverse of a square Scalar matrix given row-wise; returns rows of
    the inverse (so result[k][i] is entry (k, i))."""
    n = len(mat)
    aug = [list(row) + [S_ONE if i == j else Scalar.zero()
                        for j in range(n)] for i, row in enumerate(mat)]
    for c in range(n):
        pr = None
        for i in range(c, n):
            if not aug[i][c].is_zero():
                pr = i
                break
        if pr is None:
            raise AlgebraSpecError("eigenbasis change of basis is singular")
        aug[c], aug[pr] = aug[pr], aug[c]
        inv = S_ONE / aug[c][c]
        aug[c] = [inv * v for v in aug[c]]
        for i in range(n):
            if i != c and not aug[i][c].is_zero():
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[c])]
    return [row[n:] for row in aug]
