"""Cellular sheaves of cochain complexes on face posets.

A sheaf assigns to each cell a bounded cochain complex (its sections over
the open star) and to each cover relation a restriction chain map; the two
paths around every diamond of covers must agree exactly.
"""

from __future__ import annotations

from lefschetz.exactlin import (
    QQ,
    CochainComplex,
    CochainMap,
    Matrix,
    scalar_from_string,
    scalar_to_string,
    tensor,
    tensor_map,
    unit_complex,
)


class SheafComplex:
    """Cellular sheaf of bounded cochain complexes on a CellPoset."""

    def __init__(self, poset, stalks, restrictions, check=True):
        self.poset = poset
        self.stalks = {c: stalks.get(c, CochainComplex({}, {}, check=False)) for c in poset.cells}
        # restrictions stored on covers only
        self.rest = {}
        for c in poset.cells:
            for d, _ in poset.covers[c]:
                m = restrictions.get((c, d))
                if m is None:
                    m = CochainMap.zero(self.stalks[c], self.stalks[d])
                self.rest[(c, d)] = m
        self._paths = {}
        if check:
            self.validate()

    def stalk(self, c):
        return self.stalks[c]

    def restriction(self, a, b):
        """Composite restriction map for any pair a <= b."""
        if a == b:
            return CochainMap.identity(self.stalks[a])
        if (a, b) in self.rest:
            return self.rest[(a, b)]
        if (a, b) in self._paths:
            return self._paths[(a, b)]
        if not self.poset.leq(a, b):
            raise ValueError(f"{a!r} is not a face of {b!r}")
        # walk up one cover towards b (any path; diamonds commute)
        for d, _ in self.poset.covers[a]:
            if self.poset.leq(d, b):
                m = self.restriction(d, b).compose(self.rest[(a, d)])
                self._paths[(a, b)] = m
                return m
        raise ValueError(f"no cover path from {a!r} to {b!r}")

    def validate(self):
        for c in self.poset.cells:
            self.stalks[c].validate()
        for (a, b), m in self.rest.items():
            if m.source is not self.stalks[a] and m.source != self.stalks[a]:
                raise ValueError(f"restriction source mismatch at {(a, b)!r}")
            if m.target is not self.stalks[b] and m.target != self.stalks[b]:
                raise ValueError(f"restriction target mismatch at {(a, b)!r}")
            m.validate()
        # diamond commutativity over covers of covers
        for r in self.poset.cells:
            ups = self.poset.covers[r]
            composites = {}
            for t, _ in ups:
                for u, _ in self.poset.covers[t]:
                    m = self.rest[(t, u)].compose(self.rest[(r, t)])
                    if u in composites:
                        if composites[u] != m:
                            raise ValueError(
                                f"restrictions do not commute on diamond {r!r} -> {u!r}"
                            )
                    else:
                        composites[u] = m

    def total_stalk_dim(self):
        return sum(s.total_dim() for s in self.stalks.values())

    def support(self):
        return [c for c in self.poset.cells if self.stalks[c].total_dim() > 0]

    def degree_range(self):
        los = [s.lo for s in self.stalks.values() if s.spaces]
        his = [s.hi for s in self.stalks.values() if s.spaces]
        if not los:
            return (0, 0)
        return (min(los), max(his))

    def __repr__(self):
        return f"SheafComplex(on {len(self.poset.cells)} cells, total dim {self.total_stalk_dim()})"


class SheafMorphism:
    """Morphism of sheaf complexes over one poset; per-cell chain maps."""

    def __init__(self, source, target, comps, check=True):
        if source.poset is not target.poset:
            raise ValueError("sheaf morphism requires a common base poset")
        self.source = source
        self.target = target
        self.comps = {}
        for c in source.poset.cells:
            m = comps.get(c)
            if m is None:
                m = CochainMap.zero(source.stalks[c], target.stalks[c])
            self.comps[c] = m
        if check:
            self.validate()

    def validate(self):
        for c, m in self.comps.items():
            m.validate()
        for (a, b), r in self.source.rest.items():
            lhs = self.comps[b].compose(r)
            rhs = self.target.rest[(a, b)].compose(self.comps[a])
            if lhs != rhs:
                raise ValueError(f"morphism not natural on cover {a!r} < {b!r}")

    def comp(self, c):
        return self.comps[c]

    @staticmethod
    def identity(f):
        return SheafMorphism(
            f, f, {c: CochainMap.identity(f.stalks[c]) for c in f.poset.cells}, check=False
        )

    @staticmethod
    def zero(source, target):
        return SheafMorphism(source, target, {}, check=False)

    def compose(self, other):
        """self . other."""
        return SheafMorphism(
            other.source,
            self.target,
            {c: self.comps[c].compose(other.comps[c]) for c in self.comps},
            check=False,
        )

    def __add__(self, other):
        return SheafMorphism(
            self.source,
            self.target,
            {c: self.comps[c] + other.comps[c] for c in self.comps},
            check=False,
        )

    def __sub__(self, other):
        return SheafMorphism(
            self.source,
            self.target,
            {c: self.comps[c] - other.comps[c] for c in self.comps},
            check=False,
        )

    def scale(self, a):
        return SheafMorphism(
            self.source,
            self.target,
            {c: self.comps[c].scale(a) for c in self.comps},
            check=False,
        )

    def is_zero(self):
        return all(m.is_zero() for m in self.comps.values())

    def is_stalkwise_quasi_iso(self):
        from lefschetz.exactlin import cone

        return all(cone(m).is_acyclic() for m in self.comps.values())


# -- constructors ----------------------------------------------------------


def constant_sheaf(poset, value=None):
    """Constant sheaf with a fixed stalk complex (default Q in degree 0)."""
    v = value if value is not None else unit_complex()
    stalks = {c: v for c in poset.cells}
    rest = {}
    for c in poset.cells:
        for d, _ in poset.covers[c]:
            rest[(c, d)] = CochainMap.identity(v)
    return SheafComplex(poset, stalks, rest, check=False)


def elementary_injective_sheaf(poset, sigma, degree=0):
    """The sheaf [sigma]: stalk Q in one degree on every face of sigma."""
    down = poset.down_set(sigma)
    q = unit_complex(1, degree)
    z = CochainComplex({}, {}, check=False)
    stalks = {c: (q if c in down else z) for c in poset.cells}
    rest = {}
    for c in poset.cells:
        for d, _ in poset.covers[c]:
            if c in down and d in down:
                rest[(c, d)] = CochainMap.identity(q)
    return SheafComplex(poset, stalks, rest, check=False)


def pullback(f, g):
    """Inverse image along a poset map f: stalk at c is g's stalk at f(c)."""
    stalks = {c: g.stalks[f(c)] for c in f.source.cells}
    rest = {}
    for c in f.source.cells:
        for d, _ in f.source.covers[c]:
            rest[(c, d)] = g.restriction(f(c), f(d))
    return SheafComplex(f.source, stalks, rest, check=False)


def pullback_morphism(f, phi):
    """f^{-1} applied to a sheaf morphism."""
    src = pullback(f, phi.source)
    tgt = pullback(f, phi.target)
    return SheafMorphism(
        src, tgt, {c: phi.comps[f(c)] for c in f.source.cells}, check=False
    )


def tensor_sheaves(a, b):
    if a.poset is not b.poset:
        raise ValueError("tensor requires a common base poset")
    stalks = {c: tensor(a.stalks[c], b.stalks[c]) for c in a.poset.cells}
    rest = {}
    for (c, d), ra in a.rest.items():
        rest[(c, d)] = tensor_map(ra, b.rest[(c, d)])
    out = SheafComplex(a.poset, stalks, rest, check=False)
    return out


def tensor_sheaf_morphisms(f, g):
    src = tensor_sheaves(f.source, g.source)
    tgt = tensor_sheaves(f.target, g.target)
    return SheafMorphism(
        src,
        tgt,
        {c: tensor_map(f.comps[c], g.comps[c]) for c in src.poset.cells},
        check=False,
    )


def external_product(a, b, prod=None):
    """(a box b)(s, t) = a(s) (x) b(t) on the product poset."""
    from lefschetz.cellspace import product_poset

    if prod is None:
        prod = product_poset([a.poset, b.poset])
    la = len(a.poset.atomic_factors())

    def split(c):
        return c[:la] if la > 1 else c[0], c[la:] if len(c) - la > 1 else c[la]

    stalks = {}
    for c in prod.cells:
        s, t = split(c)
        stalks[c] = tensor(a.stalks[s], b.stalks[t])
    rest = {}
    for c in prod.cells:
        s, t = split(c)
        for d, _ in prod.covers[c]:
            s2, t2 = split(d)
            ra = a.restriction(s, s2)
            rb = b.restriction(t, t2)
            rest[(c, d)] = tensor_map(ra, rb)
    return SheafComplex(prod, stalks, rest, check=False)


def tensor_by_complex(f, v):
    """Tensor a sheaf with a fixed cochain complex (on the right)."""
    stalks = {c: tensor(f.stalks[c], v) for c in f.poset.cells}
    idv = CochainMap.identity(v)
    rest = {
        (c, d): tensor_map(r, idv) for (c, d), r in f.rest.items()
    }
    return SheafComplex(f.poset, stalks, rest, check=False)


# -- sections ---------------------------------------------------------------


class Sections:
    """Sections of a sheaf over an up-set, with projections to each stalk.

    complex:      the section complex (degreewise limits)
    project(x):   chain map sections -> stalk at x
    """

    def __init__(self, sheaf, upset):
        self.sheaf = sheaf
        poset = sheaf.poset
        self.cells = sorted(upset, key=lambda c: poset.cell_index[c])
        degs = set()
        for x in self.cells:
            degs.update(sheaf.stalks[x].spaces)
        self.offsets = {}
        basis = {}
        proj_rows = {}
        spaces = {}
        diff = {}
        covers_in = [
            (a, b)
            for a in self.cells
            for b, _ in poset.covers[a]
            if b in upset
        ]
        for n in sorted(degs):
            # ambient space: sum of stalk dims at degree n
            off = {}
            total = 0
            for x in self.cells:
                off[x] = total
                total += sheaf.stalks[x].dim(n)
            rows = []
            for (a, b) in covers_in:
                r = sheaf.rest[(a, b)].comp(n)
                for i in range(r.nrows):
                    row = [QQ(0)] * total
                    for j in range(r.ncols):
                        if r.rows[i][j]:
                            row[off[a] + j] = r.rows[i][j]
                    row[off[b] + i] = row[off[b] + i] - QQ(1)
                    rows.append(row)
            if total == 0:
                basis[n] = Matrix.zero(0, 0)
                self.offsets[n] = off
                continue
            m = Matrix(len(rows), total, rows) if rows else Matrix.zero(0, total)
            k = m.kernel_basis()  # total x dim-sections
            basis[n] = k
            spaces[n] = k.ncols
            self.offsets[n] = off
        # induced differentials: apply stalkwise d to each basis column and
        # express in the next degree's basis
        for n in sorted(spaces):
            if spaces.get(n + 1, 0) == 0 or spaces.get(n, 0) == 0:
                continue
            offn = self.offsets[n]
            offn1 = self.offsets[n + 1]
            totn1 = sum(
                self.sheaf.stalks[x].dim(n + 1) for x in self.cells
            )
            img = Matrix.zero(totn1, spaces[n])
            for j in range(spaces[n]):
                for x in self.cells:
                    dm = sheaf.stalks[x].d(n)
                    nx = sheaf.stalks[x].dim(n)
                    if nx == 0 or dm.nrows == 0:
                        continue
                    vec = [basis[n].rows[offn[x] + t][j] for t in range(nx)]
                    out = dm.apply(vec)
                    for t, val in enumerate(out):
                        img.rows[offn1[x] + t][j] = val
            sol = basis[n + 1].solve_matrix(img)
            if sol is None:
                raise ValueError("sections differential fails to close")
            diff[n] = sol
        self.basis = basis
        self.complex = CochainComplex(spaces, diff, check=False)

    def project(self, x):
        """Projection of sections onto the stalk at x."""
        comps = {}
        for n, k in self.basis.items():
            nx = self.sheaf.stalks[x].dim(n)
            if nx == 0 or k.ncols == 0:
                continue
            off = self.offsets[n][x]
            m = Matrix.zero(nx, k.ncols)
            for i in range(nx):
                m.rows[i] = k.rows[off + i][:]
            comps[n] = m
        return CochainMap(self.complex, self.sheaf.stalks[x], comps, check=False)

    def express(self, n, values):
        """Coordinates of a compatible family {x: vector} in the section basis."""
        return _express_family(self, n, values)


def _solve_columns(m, vec):
    aug = Matrix(m.nrows, m.ncols + 1)
    for i in range(m.nrows):
        aug.rows[i] = m.rows[i][:] + [QQ(vec[i])]
    R, piv = aug.rref()
    if m.ncols in piv:
        return None
    x = [QQ(0)] * m.ncols
    for r, p in enumerate(piv):
        x[p] = R.rows[r][m.ncols]
    return x


def pushforward(f, sheaf):
    """Direct image along a poset map: sections over preimages of open stars.

    Left-exact avatar; apply to complexes of injectives for the derived
    version (injective terms stay injective, so no correction is needed).
    """
    target = f.target
    secs = {}
    for c in target.cells:
        secs[c] = Sections(sheaf, f.preimage_up_set(c))
    stalks = {c: secs[c].complex for c in target.cells}
    rest = {}
    for c in target.cells:
        for d, _ in target.covers[c]:
            # restrict a section over f^-1 U_c to f^-1 U_d
            sc, sd = secs[c], secs[d]
            comps = {}
            for n in sc.complex.degrees():
                if sd.complex.dim(n) == 0:
                    continue
                cols = []
                for j in range(sc.complex.dim(n)):
                    fam = {}
                    for x in sd.cells:
                        off = sc.offsets[n][x]
                        nx = sheaf.stalks[x].dim(n)
                        fam[x] = [sc.basis[n].rows[off + i][j] for i in range(nx)]
                    cols.append(_express_family(sd, n, fam))
                m = Matrix.zero(sd.complex.dim(n), sc.complex.dim(n))
                for j, col in enumerate(cols):
                    for i, v in enumerate(col):
                        m.rows[i][j] = v
                comps[n] = m
            rest[(c, d)] = CochainMap(stalks[c], stalks[d], comps, check=False)
    out = SheafComplex(target, stalks, rest, check=False)
    out._sections = secs
    return out


def _express_family(sections, n, fam):
    total = sum(sections.sheaf.stalks[x].dim(n) for x in sections.cells)
    vec = [QQ(0)] * total
    for x, vals in fam.items():
        off = sections.offsets[n][x]
        for i, v in enumerate(vals):
            vec[off + i] = QQ(v)
    c = _solve_columns(sections.basis[n], vec)
    if c is None:
        raise ValueError("family is not a section")
    return c


def global_sections(sheaf):
    """Plain (underived) global sections complex."""
    return Sections(sheaf, set(sheaf.poset.cells)).complex


# -- JSON -------------------------------------------------------------------


def _cell_key(cell):
    if isinstance(cell, tuple):
        return "|".join(_cell_key(x) for x in cell)
    return str(cell)


def sheaf_to_json(sheaf):
    cells = {}
    for c in sheaf.poset.cells:
        s = sheaf.stalks[c]
        cells[_cell_key(c)] = {
            "dims": {str(p): s.dim(p) for p in s.degrees()},
            "diff": {
                str(p): [[scalar_to_string(x) for x in row] for row in s.d(p).rows]
                for p in s.degrees()
                if s.dim(p + 1)
            },
        }
    rests = []
    for (a, b), m in sorted(sheaf.rest.items(), key=lambda kv: (_cell_key(kv[0][0]), _cell_key(kv[0][1]))):
        rests.append(
            {
                "from": _cell_key(a),
                "to": _cell_key(b),
                "maps": {
                    str(p): [[scalar_to_string(x) for x in row] for row in mm.rows]
                    for p, mm in m.comps.items()
                },
            }
        )
    return {"cells": cells, "restrictions": rests}


def sheaf_from_json(poset, data):
    keymap = {_cell_key(c): c for c in poset.cells}
    stalks = {}
    for key, spec in data["cells"].items():
        dims = {int(p): d for p, d in spec["dims"].items()}
        diff = {}
        for p, rows in spec.get("diff", {}).items():
            p = int(p)
            diff[p] = Matrix(
                dims.get(p + 1, 0),
                dims.get(p, 0),
                [[scalar_from_string(x) for x in row] for row in rows],
            )
        stalks[keymap[key]] = CochainComplex(dims, diff)
    rest = {}
    for r in data.get("restrictions", []):
        a, b = keymap[r["from"]], keymap[r["to"]]
        comps = {}
        for p, rows in r["maps"].items():
            p = int(p)
            comps[p] = Matrix(
                stalks[b].dim(p),
                stalks[a].dim(p),
                [[scalar_from_string(x) for x in row] for row in rows],
            )
        rest[(a, b)] = CochainMap(stalks[a], stalks[b], comps, check=False)
    return SheafComplex(poset, stalks, rest)
