"""Seeded random instances: complexes, self-maps, sheaves, structure maps.

Random sheaf complexes are built as iterated shifted cones of morphisms
between sums of elementary injectives; since every constructible complex
is such an iterated cone, this reaches the whole derived category while
keeping every object injective-presented and diamond-exact by
construction.
"""

from __future__ import annotations

import random

from lefschetz.exactlin import QQ, CochainComplex, CochainMap, Matrix, unit_complex
from lefschetz.cellspace import SimplicialComplex, SimplicialSelfMap
from lefschetz.cellsheaf import SheafComplex, SheafMorphism, constant_sheaf, pullback
from lefschetz.injective import InjComplex, InjMorphism, inj_cone
from lefschetz.homalg import HomData, InjHomData


def rng_from_seed(seed):
    return random.Random(seed)


def random_complex_space(rng, max_vertices=6, allow_2cells=True):
    """Random small simplicial complex from facet sampling (<= 20 cells)."""
    while True:
        n = rng.randint(1, max_vertices)
        verts = [str(i) for i in range(n)]
        facets = [(v,) for v in verts]
        n_edges = rng.randint(0, min(6, n * (n - 1) // 2))
        pool = [(a, b) for i, a in enumerate(verts) for b in verts[i + 1 :]]
        rng.shuffle(pool)
        facets.extend(pool[:n_edges])
        if allow_2cells and n >= 3 and rng.random() < 0.4:
            tri_pool = [
                (a, b, c)
                for i, a in enumerate(verts)
                for j, b in enumerate(verts[i + 1 :], i + 1)
                for c in verts[j + 1 :]
            ]
            rng.shuffle(tri_pool)
            facets.extend(tri_pool[: rng.randint(1, 2)])
        cx = SimplicialComplex.from_facets(facets)
        if len(cx.simplices) <= 20:
            return cx


def random_self_map(rng, cx, tries=200):
    """Random simplicial self-map by vertex-map rejection sampling."""
    verts = list(cx.vertices)
    for _ in range(tries):
        vmap = {v: rng.choice(verts) for v in verts}
        try:
            return SimplicialSelfMap(cx, vmap)
        except ValueError:
            continue
    return SimplicialSelfMap.identity(cx)


def random_inj_sheaf(rng, poset, pieces=3, max_degree=1):
    """Random complex of injectives by iterated cones of chain maps."""
    cells = list(poset.cells)
    cur = _random_elementary_sum(rng, poset, cells, max_degree)
    for _ in range(rng.randint(0, pieces - 1)):
        other = _random_elementary_sum(rng, poset, cells, max_degree)
        hom = InjHomData(other, cur)
        z = hom.h0()
        if z.z0.dim() == 0:
            cur = cur.direct_sum(other)
            continue
        coords = {}
        for k in range(z.z0.dim()):
            c = rng.randint(-2, 2)
            if c:
                for var, v in z.z0.vector(k).items():
                    coords[var] = coords.get(var, QQ(0)) + QQ(c) * v
        f = InjMorphism(other, cur, hom.materialize(coords), check=False)
        cur = inj_cone(f)
        if rng.random() < 0.3:
            cur = cur.shift(rng.choice([-1, 1]))
    M, incl, proj = cur.minimize()
    return M.to_sheaf()


def _random_elementary_sum(rng, poset, cells, max_degree):
    terms = {}
    for _ in range(rng.randint(1, 3)):
        c = rng.choice(cells)
        d = rng.randint(-max_degree, max_degree)
        terms.setdefault(d, []).append(c)
    return InjComplex(poset, terms, {}, check=False)


def random_structure_map(rng, F, phi):
    """Random morphism phi^{-1} F -> F (a chain-map-valued natural family)."""
    pb = pullback(phi.poset_map(), F)
    hd = HomData(pb, F)
    cx = hd.complex()
    if cx.dim(0) == 0:
        return SheafMorphism.zero(pb, F)
    z = cx.d(0).kernel_basis()
    coords = [QQ(0)] * cx.dim(0)
    for k in range(z.ncols):
        c = rng.randint(-2, 2)
        if c:
            for i in range(cx.dim(0)):
                coords[i] = coords[i] + QQ(c) * z.rows[i][k]
    fam = hd.materialize(0, coords)
    from lefschetz.homalg import sheaf_morphism_from_family

    return sheaf_morphism_from_family(pb, F, fam)


def random_cochain_complex(rng, max_deg=2, pieces=4):
    """Random bounded complex (sums of shifted two-term pieces, conjugated)."""
    spaces = {}
    entries = {}
    seen = {}
    for _ in range(rng.randint(1, pieces)):
        p = rng.randint(-1, max_deg)
        if rng.random() < 0.5:
            spaces[p] = spaces.get(p, 0) + 1
            seen.setdefault(p, spaces[p])
        else:
            i = spaces.get(p, 0)
            j = spaces.get(p + 1, 0)
            spaces[p] = i + 1
            spaces[p + 1] = j + 1
            entries.setdefault(p, []).append((j, i, QQ(rng.randint(1, 3))))
    diff = {}
    for p, es in entries.items():
        m = Matrix.zero(spaces.get(p + 1, 0), spaces[p])
        for (j, i, a) in es:
            m.rows[j][i] = a
        diff[p] = m
    c = CochainComplex(spaces, diff, check=False)
    g = {}
    for p, n in c.spaces.items():
        while True:
            m = Matrix.from_entries(
                [[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)]
            )
            if m.rank() == n:
                g[p] = m
                break
    diff2 = {}
    for p in c.spaces:
        if c.dim(p + 1):
            diff2[p] = g[p + 1] * c.d(p) * g[p].inverse()
    return CochainComplex(dict(c.spaces), diff2, check=False)


def random_endomorphism(rng, c):
    """Random chain endomorphism of a cochain complex."""
    from lefschetz.exactlin import hom_complex, hom_element_to_comps

    h = hom_complex(c, c)
    if h.dim(0) == 0:
        return CochainMap.zero(c, c)
    basis = h.d(0).kernel_basis()
    coords = [QQ(0)] * h.dim(0)
    for k in range(basis.ncols):
        a = rng.randint(-3, 3)
        if a:
            for i in range(h.dim(0)):
                coords[i] = coords[i] + QQ(a) * basis.rows[i][k]
    comps = hom_element_to_comps(c, c, 0, coords)
    return CochainMap(c, c, comps, check=False)
