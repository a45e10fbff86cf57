"""Finite simplicial complexes, face posets, products, self-maps, fixed loci.

A CellPoset is the combinatorial carrier for everything downstream: cells
graded by dimension, cover relations decorated with incidence signs whose
induced boundary squares to zero, and (for products) the factor structure.
"""

from __future__ import annotations

import itertools
import json


def _ckey(cell):
    """Stable sort key for heterogeneous cell ids."""
    if isinstance(cell, tuple):
        return (len(cell),) + tuple(_ckey(x) for x in cell)
    return (0, type(cell).__name__, str(cell))


class CellPoset:
    """Finite graded poset of cells with signed cover relations.

    covers[c] lists (d, sign) over cells d covering c (dim d = dim c + 1);
    the signs define the incidence boundary operator and must satisfy
    boundary^2 = 0, which is checked at construction.
    """

    def __init__(self, dims, covers, factors=None, check=True):
        self.dims = dict(dims)
        self.cells = tuple(sorted(self.dims, key=lambda c: (self.dims[c], _ckey(c))))
        self.cell_index = {c: i for i, c in enumerate(self.cells)}
        self.covers = {c: tuple(covers.get(c, ())) for c in self.cells}
        self.cocovers = {c: [] for c in self.cells}
        for c, ups in self.covers.items():
            for d, s in ups:
                if d not in self.dims:
                    raise ValueError(f"cover target {d!r} not a cell")
                if self.dims[d] != self.dims[c] + 1:
                    raise ValueError(f"cover {c!r} < {d!r} does not raise dim by 1")
                self.cocovers[d].append((c, s))
        self.cocovers = {c: tuple(v) for c, v in self.cocovers.items()}
        self.factors = factors
        self._leq = None
        self._meets = {}
        self._components = None
        if check:
            self.validate()

    # -- order -----------------------------------------------------------

    def _closure(self):
        if self._leq is None:
            leq = {c: {c} for c in self.cells}
            for c in sorted(self.cells, key=lambda x: -self.dims[x]):
                for d, _ in self.covers[c]:
                    leq[c] |= leq[d]
            self._leq = leq
        return self._leq

    def leq(self, a, b):
        return b in self._closure()[a]

    def up_set(self, c):
        """Cells >= c (the open star)."""
        return self._closure()[c]

    def down_set(self, c):
        """Cells <= c (the closure)."""
        return {x for x in self.cells if self.leq(x, c)}

    def meet(self, a, b):
        """Greatest common face, or None; raises if not unique-maximal."""
        key = (a, b)
        if key in self._meets:
            return self._meets[key]
        common = [x for x in self.cells if self.leq(x, a) and self.leq(x, b)]
        if not common:
            self._meets[key] = None
            return None
        maximal = [
            x
            for x in common
            if not any(y != x and self.leq(x, y) for y in common)
        ]
        if len(maximal) != 1:
            raise ValueError(f"cells {a!r}, {b!r} have no unique greatest face")
        self._meets[key] = maximal[0]
        return maximal[0]

    def components(self):
        """Connected components under face comparability."""
        if self._components is None:
            parent = {c: c for c in self.cells}

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for c in self.cells:
                for d, _ in self.covers[c]:
                    ra, rb = find(c), find(d)
                    if ra != rb:
                        parent[ra] = rb
            groups = {}
            for c in self.cells:
                groups.setdefault(find(c), []).append(c)
            comps = [
                tuple(sorted(g, key=lambda c: (self.dims[c], _ckey(c))))
                for g in groups.values()
            ]
            self._components = tuple(sorted(comps, key=lambda g: _ckey(g[0])))
        return self._components

    def dim(self, c):
        return self.dims[c]

    def top_dim(self):
        return max(self.dims.values()) if self.dims else 0

    def cells_of_dim(self, p):
        return [c for c in self.cells if self.dims[c] == p]

    def cover_sign(self, c, d):
        for e, s in self.covers[c]:
            if e == d:
                return s
        raise ValueError(f"{d!r} does not cover {c!r}")

    def validate(self):
        # boundary^2 = 0: for each cell s and codim-2 cell r below it, the
        # signed count of middle cells vanishes.
        for r in self.cells:
            acc = {}
            for t, s1 in self.covers[r]:
                for u, s2 in self.covers[t]:
                    acc[u] = acc.get(u, 0) + s1 * s2
            for u, total in acc.items():
                if total != 0:
                    raise ValueError(
                        f"incidence signs do not square to zero between {r!r} and {u!r}"
                    )

    def __repr__(self):
        return f"CellPoset({len(self.cells)} cells, top dim {self.top_dim()})"

    def atomic_factors(self):
        return list(self.factors) if self.factors is not None else [self]


def subposet(poset, cells):
    """Full subposet on a set of cells, inheriting covers and signs.

    Cover relations whose intermediate chains leave the subset are NOT
    re-derived: only ambient covers with both ends inside survive, which is
    the right notion for down-closed subsets.
    """
    cellset = set(cells)
    dims = {c: poset.dims[c] for c in cellset}
    covers = {
        c: [(d, s) for (d, s) in poset.covers[c] if d in cellset] for c in cellset
    }
    return CellPoset(dims, covers, check=False)


def product_poset(factor_list):
    """Polyhedral product of cell posets; cells are flat tuples.

    Incidence signs follow the tensor convention: moving the boundary across
    factor i picks up (-1)^(sum of dims of factors before i).
    """
    flat = []
    for f in factor_list:
        flat.extend(f.atomic_factors())
    dims = {}
    covers = {}
    for combo in itertools.product(*[f.cells for f in flat]):
        dims[combo] = sum(f.dims[c] for f, c in zip(flat, combo))
    for combo in dims:
        ups = []
        prefix_dim = 0
        for i, f in enumerate(flat):
            c = combo[i]
            sgn = 1 if prefix_dim % 2 == 0 else -1
            for d, s in f.covers[c]:
                up = combo[:i] + (d,) + combo[i + 1 :]
                ups.append((up, sgn * s))
            prefix_dim += f.dims[c]
        covers[combo] = ups
    return CellPoset(dims, covers, factors=flat, check=False)


class PosetMap:
    """Monotone map of cell posets (checked on cover relations)."""

    def __init__(self, source, target, mapping, check=True):
        self.source = source
        self.target = target
        self.mapping = dict(mapping)
        if check:
            for c in source.cells:
                if c not in self.mapping:
                    raise ValueError(f"no image for cell {c!r}")
                if self.mapping[c] not in target.dims:
                    raise ValueError(f"image {self.mapping[c]!r} not a cell")
            for c in source.cells:
                for d, _ in source.covers[c]:
                    if not target.leq(self.mapping[c], self.mapping[d]):
                        raise ValueError(
                            f"map not monotone on cover {c!r} < {d!r}"
                        )

    def __call__(self, c):
        return self.mapping[c]

    def compose(self, other):
        """self . other."""
        if other.target is not self.source:
            if other.target.cells != self.source.cells:
                raise ValueError("composition endpoint mismatch")
        return PosetMap(
            other.source,
            self.target,
            {c: self.mapping[other.mapping[c]] for c in other.source.cells},
            check=False,
        )

    @staticmethod
    def identity(p):
        return PosetMap(p, p, {c: c for c in p.cells}, check=False)

    def preimage_up_set(self, cell):
        return {c for c in self.source.cells if self.target.leq(cell, self.mapping[c])}

    def __eq__(self, other):
        if not isinstance(other, PosetMap):
            return NotImplemented
        return self.mapping == other.mapping


def projection_map(prod, indices, target=None):
    """Projection of a product poset onto a subset of its factor slots."""
    flat = prod.atomic_factors()
    if target is None:
        target = product_poset([flat[i] for i in indices])
    mapping = {c: tuple(c[i] for i in indices) for c in prod.cells}
    return PosetMap(prod, target, mapping, check=False)


class SimplicialComplex:
    """Finite abstract simplicial complex; simplices are sorted vertex tuples."""

    def __init__(self, vertices, simplices):
        self.vertices = tuple(sorted(set(vertices), key=_ckey))
        self.simplices = set()
        for s in simplices:
            t = tuple(sorted(set(s), key=_ckey))
            if len(set(s)) != len(tuple(s)):
                raise ValueError(f"duplicate vertices in simplex {s!r}")
            self.simplices.add(t)
        # closedness under faces and vertices present
        for s in list(self.simplices):
            for k in range(1, len(s)):
                for face in itertools.combinations(s, k):
                    if face not in self.simplices:
                        raise ValueError(f"complex not closed under faces at {face!r}")
        for v in self.vertices:
            if (v,) not in self.simplices:
                raise ValueError(f"vertex {v!r} missing as a 0-simplex")
        self._poset = None

    @staticmethod
    def from_facets(facets, vertices=None):
        simplices = set()
        vs = set(vertices or [])
        for f in facets:
            if len(set(f)) != len(tuple(f)):
                raise ValueError(f"duplicate vertices in facet {f!r}")
            t = tuple(sorted(set(f), key=_ckey))
            vs.update(t)
            for k in range(1, len(t) + 1):
                simplices.update(itertools.combinations(t, k))
        return SimplicialComplex(vs, simplices)

    @staticmethod
    def point(name="p"):
        return SimplicialComplex.from_facets([(name,)])

    def face_poset(self):
        if self._poset is None:
            dims = {s: len(s) - 1 for s in self.simplices}
            covers = {}
            for s in self.simplices:
                ups = []
                for t in self.simplices:
                    if len(t) == len(s) + 1 and set(s) <= set(t):
                        ups.append((t, incidence_sign(s, t)))
                covers[s] = ups
            self._poset = CellPoset(dims, covers)
        return self._poset

    def euler_characteristic(self):
        chi = 0
        for s in self.simplices:
            chi += 1 if (len(s) - 1) % 2 == 0 else -1
        return chi

    def __repr__(self):
        return f"SimplicialComplex({len(self.vertices)} vertices, {len(self.simplices)} simplices)"


def incidence_sign(tau, sigma):
    """Sign (-1)^i where the vertex of sigma missing from tau has index i."""
    st, ss = set(tau), set(sigma)
    if not (st < ss and len(ss) == len(st) + 1):
        raise ValueError(f"{tau!r} is not a codimension-1 face of {sigma!r}")
    (missing,) = ss - st
    i = sigma.index(missing)
    return 1 if i % 2 == 0 else -1


def permutation_sign(perm):
    """Parity of a permutation given as a list of images of 0..n-1."""
    n = len(perm)
    seen = [False] * n
    sign = 1
    for i in range(n):
        if seen[i]:
            continue
        j = i
        clen = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


class SimplicialSelfMap:
    """Simplicial self-map given by its vertex assignment."""

    def __init__(self, complex, vertex_map):
        self.complex = complex
        self.vertex_map = dict(vertex_map)
        for v in complex.vertices:
            if v not in self.vertex_map:
                raise ValueError(f"no image for vertex {v!r}")
            if self.vertex_map[v] not in set(complex.vertices):
                raise ValueError(f"image {self.vertex_map[v]!r} not a vertex")
        for s in complex.simplices:
            if self.cell_image(s) not in complex.simplices:
                raise ValueError(f"image of simplex {s!r} does not span a simplex")

    @staticmethod
    def identity(complex):
        return SimplicialSelfMap(complex, {v: v for v in complex.vertices})

    def cell_image(self, s):
        return tuple(sorted(set(self.vertex_map[v] for v in s), key=_ckey))

    def poset_map(self):
        p = self.complex.face_poset()
        return PosetMap(p, p, {s: self.cell_image(s) for s in p.cells}, check=False)

    def compose(self, other):
        """self . other as simplicial maps."""
        return SimplicialSelfMap(
            self.complex,
            {v: self.vertex_map[other.vertex_map[v]] for v in self.complex.vertices},
        )

    def is_identity(self):
        return all(self.vertex_map[v] == v for v in self.complex.vertices)

    def cell_self_map(self):
        return CellSelfMap.from_simplicial(self)

    def fixed_locus(self):
        return self.cell_self_map().fixed_locus()

    def __repr__(self):
        return f"SimplicialSelfMap({self.vertex_map})"


class CellSelfMap:
    """Monotone self-map of a cell poset with per-cell orientation signs.

    Wraps the induced poset map of a simplicial self-map, or a product of
    such maps; sign(c) is the orientation degree of the map on a fixed cell.
    """

    def __init__(self, poset, mapping, sign_fn, label="phi"):
        self.poset = poset
        self.mapping = dict(mapping)
        self._sign_fn = sign_fn
        self.label = label

    @staticmethod
    def from_simplicial(phi):
        poset = phi.complex.face_poset()

        def sign(cell):
            # orientation degree of phi on a dimension-preserving cell:
            # parity of the permutation sorting the vertex images
            target = phi.cell_image(cell)
            if len(target) != len(cell):
                raise ValueError(f"map collapses {cell!r}; no orientation sign")
            images = [target.index(phi.vertex_map[v]) for v in cell]
            return permutation_sign(images)

        return CellSelfMap(
            poset, {c: phi.cell_image(c) for c in poset.cells}, sign
        )

    @staticmethod
    def identity(poset):
        return CellSelfMap(poset, {c: c for c in poset.cells}, lambda c: 1, "id")

    @staticmethod
    def product(maps, prod=None):
        flat = []
        for m in maps:
            n = len(m.poset.atomic_factors())
            flat.extend([(m, i, n) for i in range(n)])
        if prod is None:
            prod = product_poset([m.poset for m in maps])

        def image(cell):
            out = []
            pos = 0
            for m in maps:
                n = len(m.poset.atomic_factors())
                part = cell[pos : pos + n] if n > 1 else cell[pos]
                img = m.mapping[part]
                out.extend(img if n > 1 else (img,))
                pos += n
            return tuple(out)

        def sign(cell):
            s = 1
            pos = 0
            for m in maps:
                n = len(m.poset.atomic_factors())
                part = cell[pos : pos + n] if n > 1 else cell[pos]
                s *= m.sign(part)
                pos += n
            return s

        return CellSelfMap(prod, {c: image(c) for c in prod.cells}, sign)

    def __call__(self, c):
        return self.mapping[c]

    def sign(self, c):
        return self._sign_fn(c)

    def poset_map(self):
        return PosetMap(self.poset, self.poset, self.mapping, check=False)

    def is_identity(self):
        return all(v == c for c, v in self.mapping.items())

    def fixed_locus(self):
        return FixedLocus(self.poset, self.mapping, self._sign_fn)


class FixedLocus:
    """Setwise-fixed cells of a self-map, with signs and components.

    Components are chains of face-comparability among fixed cells; this is a
    model choice (no subdivision happens anywhere in this package), so the
    granularity of localization is pinned at the cell level.
    """

    def __init__(self, poset, mapping, sign_fn):
        self.poset = poset
        fixed = [s for s in poset.cells if mapping[s] == s]
        self.cells = tuple(sorted(fixed, key=_ckey))
        self.signs = {s: sign_fn(s) for s in self.cells}
        parent = {c: c for c in self.cells}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for c in self.cells:
            for d in self.cells:
                if c != d and poset.leq(c, d):
                    ra, rb = find(c), find(d)
                    if ra != rb:
                        parent[ra] = rb
        groups = {}
        for c in self.cells:
            groups.setdefault(find(c), []).append(c)
        comps = [tuple(sorted(g, key=_ckey)) for g in groups.values()]
        self.components = tuple(sorted(comps, key=lambda g: _ckey(g[0])))

    def is_empty(self):
        return not self.cells

    def component_of(self, cell):
        for i, comp in enumerate(self.components):
            if cell in comp:
                return i
        raise ValueError(f"{cell!r} is not a fixed cell")

    def __repr__(self):
        return f"FixedLocus({len(self.cells)} cells, {len(self.components)} components)"


def diagonal_map(x_poset):
    """Diagonal X -> X x X on the flat product poset."""
    prod = product_poset([x_poset, x_poset])
    arity = len(x_poset.atomic_factors())

    def embed(c):
        flat = c if arity > 1 else (c,)
        return flat + flat

    mapping = {c: embed(c) for c in x_poset.cells}
    return PosetMap(x_poset, prod, mapping, check=False)


def graph_map(phi):
    """Graph map x -> (x, phi(x)) from a simplicial self-map."""
    p = phi.complex.face_poset()
    prod = product_poset([p, p])
    mapping = {c: (c, phi.cell_image(c)) for c in p.cells}
    return PosetMap(p, prod, mapping, check=False)


def graph_poset_map(f):
    """Graph map x -> (x, f(x)) for a general poset map f : P -> Q."""
    prod = product_poset([f.source, f.target])
    la = len(f.source.atomic_factors())
    lb = len(f.target.atomic_factors())

    def flat(c, arity):
        return c if arity > 1 else (c,)

    mapping = {c: flat(c, la) + flat(f.mapping[c], lb) for c in f.source.cells}
    return PosetMap(f.source, prod, mapping, check=False)


# -- JSON interfaces ------------------------------------------------------


def complex_to_json(cx):
    return {
        "vertices": [str(v) for v in cx.vertices],
        "facets": sorted(
            [list(map(str, s)) for s in maximal_simplices(cx)],
        ),
    }


def maximal_simplices(cx):
    return [
        s
        for s in cx.simplices
        if not any(t != s and set(s) < set(t) for t in cx.simplices)
    ]


def complex_from_json(data):
    facets = [tuple(f) for f in data["facets"]]
    return SimplicialComplex.from_facets(facets, vertices=data.get("vertices"))


def map_to_json(phi):
    return {"vertex_map": {str(v): str(w) for v, w in phi.vertex_map.items()}}


def map_from_json(cx, data):
    return SimplicialSelfMap(cx, dict(data["vertex_map"]))


def load_complex(path):
    with open(path) as fh:
        return complex_from_json(json.load(fh))


def load_map(cx, path):
    with open(path) as fh:
        return map_from_json(cx, json.load(fh))
