"""Truncated graded super vector spaces and degree-shifting sparse operators.

Degrees live on the (1/2T)Z lattice, are normalized so the lowest weight
sits at 0, and are cut off at a finite top degree D.  Operators that would
map above the cutoff silently drop those images; the degree range on which
an operator row is exact is therefore bounded by the cutoff, and downstream
identity checks account for that through their validity windows.
"""

from twistcalc.kernel import rat, as_rat
from twistcalc.exactcalc.scalar import Scalar, S_ONE


class GradedSuperSpace:
    """Finite ordered bases of labeled vectors, one per degree in [0, D]."""

    def __init__(self, cutoff, lattice_denom=2, name=""):
        self.cutoff = as_rat(cutoff)
        self.lattice_denom = lattice_denom
        self.name = name
        self.strata = {}          # degree -> [label]
        self.parity = {}          # label -> 0/1
        self._index = {}          # label -> (degree, position)

    def add_basis_vector(self, degree, label, parity):
        degree = as_rat(degree)
        if degree < 0 or degree > self.cutoff:
            raise ValueError(f"degree {degree} outside [0, {self.cutoff}]")
        if (degree * self.lattice_denom).denominator != 1:
            raise ValueError(
                f"degree {degree} not on the 1/{self.lattice_denom} lattice")
        if label in self._index:
            raise ValueError(f"duplicate basis label {label!r}")
        bucket = self.strata.setdefault(degree, [])
        self._index[label] = (degree, len(bucket))
        bucket.append(label)
        self.parity[label] = parity & 1

    # -- inspection ---------------------------------------------------------

    def degrees(self):
        return sorted(self.strata)

    def labels(self, degree=None):
        if degree is not None:
            return list(self.strata.get(as_rat(degree), ()))
        out = []
        for d in self.degrees():
            out.extend(self.strata[d])
        return out

    def dim(self, degree):
        return len(self.strata.get(as_rat(degree), ()))

    def total_dim(self):
        return len(self._index)

    def degree_of(self, label):
        return self._index[label][0]

    def position_of(self, label):
        return self._index[label]

    def parity_of(self, label):
        return self.parity[label]

    def __contains__(self, label):
        return label in self._index

    def basis_vector(self, label):
        if label not in self._index:
            raise KeyError(f"unknown basis label {label!r}")
        return Vector(self, {label: S_ONE})

    def zero_vector(self):
        return Vector(self, {})

    def dump(self):
        """One line per basis vector: "degree | parity | label"."""
        out = []
        for d in self.degrees():
            for label in self.strata[d]:
                out.append(f"{d} | {self.parity[label]} | {label}")
        return out


class Vector:
    """Finitely supported scalar combination of basis labels of one space."""

    __slots__ = ("space", "comps")

    def __init__(self, space, comps):
        self.space = space
        self.comps = {k: v for k, v in comps.items() if v}

    def is_zero(self):
        return not self.comps

    def __add__(self, other):
        if other.space is not self.space:
            raise ValueError("vectors from different spaces")
        out = dict(self.comps)
        for k, v in other.comps.items():
            cur = out.get(k)
            s = v if cur is None else cur + v
            if s:
                out[k] = s
            elif cur is not None:
                del out[k]
        return Vector(self.space, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Vector(self.space, {k: -v for k, v in self.comps.items()})

    def scale(self, c):
        if isinstance(c, Scalar) and c.is_zero():
            return Vector(self.space, {})
        return Vector(self.space, {k: c * v for k, v in self.comps.items()})

    def __rmul__(self, c):
        return self.scale(Scalar.coerce(c))

    def __eq__(self, other):
        return isinstance(other, Vector) and self.space is other.space \
            and self.comps == other.comps

    def degree(self):
        """Common degree of the support; None for 0, error if mixed."""
        degs = {self.space.degree_of(k) for k in self.comps}
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError(f"inhomogeneous vector, degrees {sorted(degs)}")
        return degs.pop()

    def items(self):
        return sorted(self.comps.items(), key=lambda kv: self.space.position_of(kv[0]))

    def coefficient(self, label):
        return self.comps.get(label)

    def leading_label(self):
        """First supported label in stratum order (requires homogeneity)."""
        return min(self.comps, key=lambda k: self.space.position_of(k))

    def __str__(self):
        if not self.comps:
            return "0"
        parts = []
        for label, c in self.items():
            cs = str(c)
            parts.append(label if cs == "1" else f"({cs})*{label}")
        return " + ".join(parts)

    def __repr__(self):
        return f"Vector({self})"


class SparseOperator:
    """Degree-shifting parity-tagged sparse linear map on a GradedSuperSpace.

    Rows are per-input-label output vectors; entries whose target degree
    would exceed the cutoff are absent by construction.
    """

    def __init__(self, space, shift, parity, rows=None):
        self.space = space
        self.shift = as_rat(shift)
        self.parity = parity & 1
        self.rows = {}
        if rows:
            for k, row in rows.items():
                clean = {o: c for o, c in row.items() if c}
                if clean:
                    self.rows[k] = clean

    @staticmethod
    def identity(space):
        return SparseOperator(space, 0, 0,
                              {l: {l: S_ONE} for l in space.labels()})

    def apply(self, vec):
        out = {}
        for label, c in vec.comps.items():
            row = self.rows.get(label)
            if not row:
                continue
            for o, rc in row.items():
                term = c * rc
                cur = out.get(o)
                s = term if cur is None else cur + term
                if s:
                    out[o] = s
                elif cur is not None:
                    del out[o]
        return Vector(vec.space, out)

    def compose(self, other):
        """self after other; shifts add, parities add mod 2."""
        rows = {}
        for label, row in other.rows.items():
            acc = {}
            for mid, c in row.items():
                r2 = self.rows.get(mid)
                if not r2:
                    continue
                for o, c2 in r2.items():
                    term = c * c2
                    cur = acc.get(o)
                    s = term if cur is None else cur + term
                    if s:
                        acc[o] = s
                    elif cur is not None:
                        del acc[o]
            if acc:
                rows[label] = acc
        return SparseOperator(self.space, self.shift + other.shift,
                              self.parity ^ other.parity, rows)

    def __add__(self, other):
        if self.shift != other.shift or self.parity != other.parity:
            raise ValueError("operator addition requires equal shift and parity")
        rows = {k: dict(v) for k, v in self.rows.items()}
        for k, row in other.rows.items():
            acc = rows.setdefault(k, {})
            for o, c in row.items():
                cur = acc.get(o)
                s = c if cur is None else cur + c
                if s:
                    acc[o] = s
                elif cur is not None:
                    del acc[o]
        return SparseOperator(self.space, self.shift, self.parity, rows)

    def scale(self, c):
        c = Scalar.coerce(c)
        return SparseOperator(self.space, self.shift, self.parity,
                              {k: {o: c * v for o, v in row.items()}
                               for k, row in self.rows.items()})

    def is_zero(self):
        return not self.rows

    def check_grading(self, check_parity=True):
        """True iff every entry respects the declared shift (and parity)."""
        for label, row in self.rows.items():
            d_in = self.space.degree_of(label)
            p_in = self.space.parity_of(label)
            for o in row:
                if self.space.degree_of(o) != d_in + self.shift:
                    return False
                if check_parity and \
                        self.space.parity_of(o) != (p_in ^ self.parity):
                    return False
        return True

    def dump(self):
        """Triples "(in_label, out_label, scalar)", canonically ordered."""
        out = []
        for label in self.space.labels():
            row = self.rows.get(label)
            if not row:
                continue
            for o in sorted(row, key=self.space.position_of):
                out.append(f"({label}, {o}, {row[o]})")
        return out


def operator_combine(f, g, op, scalar=None):
    """Spec-surface dispatcher: compose, add, or scale sparse operators."""
    if op == "compose":
        return f.compose(g)
    if op == "add":
        return f + g
    if op == "scale":
        return f.scale(scalar)
    raise ValueError(f"unknown operator combination {op!r}")


class _Echelon:
    """Per-degree reduced row echelon form over the scalar field."""

    def __init__(self, space):
        self.space = space
        self.pivots = {}          # degree -> {pivot_label: Vector}

    def reduce(self, vec):
        deg = vec.degree()
        if deg is None:
            return vec
        rows = self.pivots.get(deg)
        if not rows:
            return vec
        changed = True
        while changed and not vec.is_zero():
            changed = False
            for p, row in rows.items():
                c = vec.comps.get(p)
                if c:
                    vec = vec - row.scale(c)
                    changed = True
        return vec

    def insert(self, vec):
        """Reduce and insert; returns True if vec added a new dimension."""
        vec = self.reduce(vec)
        if vec.is_zero():
            return False
        deg = vec.degree()
        lead = vec.leading_label()
        row = vec.scale(S_ONE / vec.comps[lead])
        rows = self.pivots.setdefault(deg, {})
        for p in list(rows):
            c = rows[p].comps.get(lead)
            if c:
                rows[p] = rows[p] - row.scale(c)
        rows[lead] = row
        return True

    def pivot_labels(self, degree):
        return set(self.pivots.get(degree, ()))


def quotient_space(space, generators, action, name=""):
    """Quotient by the action-closure of the generators.

    generators: homogeneous Vectors; action: objects with .apply(Vector)
    (mode operators).  The spanned subspace is closed by breadth-first
    application of the action set, any image above the cutoff being dropped
    by the operators themselves.  Returns (quotient_space, projection) where
    projection maps vectors of the original space into the quotient.
    """
    ech = _Echelon(space)
    work = [g for g in generators if not g.is_zero()]
    while work:
        vec = work.pop(0)
        if not ech.insert(vec):
            continue
        for op in action:
            img = op.apply(vec)
            if not img.is_zero():
                work.append(img)

    quot = GradedSuperSpace(space.cutoff, space.lattice_denom,
                            name or f"{space.name}/sub")
    for d in space.degrees():
        piv = ech.pivot_labels(d)
        for label in space.strata[d]:
            if label not in piv:
                quot.add_basis_vector(d, label, space.parity_of(label))

    return quot, QuotientProjection(space, quot, ech)


class QuotientProjection:
    """Projection of a space onto a quotient computed by quotient_space."""

    def __init__(self, source, target, echelon):
        self.source = source
        self.target = target
        self._ech = echelon

    def apply(self, vec):
        if vec.space is not self.source:
            raise ValueError("vector not in the projection source space")
        out = {}
        for label, c in vec.comps.items():
            deg = self.source.degree_of(label)
            rows = self._ech.pivots.get(deg, {})
            if label in rows:
                # pivot label: label = row - sum(others); row is in the subspace
                for o, rc in rows[label].comps.items():
                    if o == label:
                        continue
                    term = -(c * rc)
                    cur = out.get(o)
                    s = term if cur is None else cur + term
                    if s:
                        out[o] = s
                    elif cur is not None:
                        del out[o]
            else:
                cur = out.get(label)
                s = c if cur is None else cur + c
                if s:
                    out[label] = s
                elif cur is not None:
                    del out[label]
        # out may still mention pivot labels through row tails; repeat
        vec2 = Vector(self.source, out)
        if any(l in self._ech.pivots.get(self.source.degree_of(l), {})
               for l in vec2.comps):
            return self.apply(vec2)
        return Vector(self.target, vec2.comps)

    def project_rows(self, row_provider):
        """Wrap a (label -> Vector) provider so it acts on the quotient."""
        def provider(label):
            vec = row_provider(label)
            return self.apply(vec)
        return provider
