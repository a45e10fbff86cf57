"""The computable derived category of cellular sheaves.

Injective resolutions by complexes of elementary injectives, derived
sections and pushforwards, sheaf hom and Verdier duality, derived
morphisms represented against cached resolutions, and the combinatorial
support proxy.
"""

from __future__ import annotations

from lefschetz.exactlin import (
    QQ,
    CochainComplex,
    CochainMap,
    Matrix,
    cohomology,
    cone,
    solve_sparse,
)
from lefschetz.cellsheaf import (
    SheafComplex,
    SheafMorphism,
    pullback,
    pullback_morphism,
)
from lefschetz.injective import (
    InjComplex,
    InjMorphism,
    inj_cone,
    omega_complex,
)
from lefschetz.homalg import HomData, sheaf_morphism_from_family

_ONE = QQ(1)
_ZERO = QQ(0)


# -- resolutions ------------------------------------------------------------


class Resolution:
    """Injective resolution I of a sheaf complex F with augmentation F -> I."""

    def __init__(self, sheaf, inj, aug):
        self.sheaf = sheaf
        self.inj = inj
        self.aug = aug  # SheafMorphism sheaf -> inj.to_sheaf()

    def validate(self):
        self.aug.validate()
        if not self.aug.is_stalkwise_quasi_iso():
            raise ValueError("augmentation is not a stalkwise quasi-isomorphism")


def _is_injective_backed(F):
    return getattr(F, "_inj", None) is not None


def resolve(F, minimize=True):
    """Injective resolution, cached on the sheaf object."""
    cached = getattr(F, "_resolution", None)
    if cached is not None:
        return cached
    if _is_injective_backed(F):
        res = Resolution(F, F._inj, SheafMorphism.identity(F))
    else:
        res = _resolve_uncached(F, minimize)
    F._resolution = res
    return res


def _resolve_uncached(F, minimize=True):
    degs = [p for p in range(*_degree_span(F)) if _has_degree(F, p)]
    if not degs:
        inj = InjComplex(F.poset, {}, {}, check=False)
        return Resolution(F, inj, SheafMorphism.zero(F, inj.to_sheaf()))
    if len(degs) == 1:
        res = _resolve_single(F, degs[0])
    else:
        res = _resolve_cone(F, degs[0])
    if minimize:
        res = _minimize_resolution(res)
    return res


def _degree_span(F):
    lo, hi = F.degree_range()
    return lo, hi + 1


def _has_degree(F, p):
    return any(F.stalks[x].dim(p) for x in F.poset.cells)


def _resolve_single(F, n):
    """Iterated embedding into sums of elementary injectives."""
    poset = F.poset
    q_dims = {x: F.stalks[x].dim(n) for x in poset.cells}
    q_rest = {
        (x, y): F.rest[(x, y)].comp(n) for x in poset.cells for y, _ in poset.covers[x]
    }
    height = poset.top_dim() + 2
    step = 0
    first_e = None
    prev_pi = None
    terms_per_layer = []
    diff_entries = {}
    while any(q_dims.values()):
        if step > height + 1:
            raise ValueError("resolution failed to terminate (internal error)")
        comp = _restriction_composites(poset, q_dims, q_rest)
        terms = []
        for s in poset.cells:
            for k in range(q_dims[s]):
                terms.append(s)
        live = {
            x: [i for i, c in enumerate(terms) if poset.leq(x, c)]
            for x in poset.cells
        }
        e_mats = {}
        for x in poset.cells:
            m = Matrix.zero(len(live[x]), q_dims[x])
            counts = {}
            for a, i in enumerate(live[x]):
                s = terms[i]
                k = counts.get(s, 0)
                counts[s] = k + 1
                r = comp[(x, s)]
                if r.nrows:
                    m.rows[a] = r.rows[k][:]
            e_mats[x] = m
        terms_per_layer.append(terms)
        if step == 0:
            first_e = (e_mats, live)
        else:
            prev_terms = terms_per_layer[step - 1]
            prev_live = {
                x: [i for i, c in enumerate(prev_terms) if poset.leq(x, c)]
                for x in poset.cells
            }
            entries = {}
            for inew, snew in enumerate(terms):
                m = e_mats[snew] * prev_pi[snew]
                rownew = live[snew].index(inew)
                for col, iold in enumerate(prev_live[snew]):
                    v = m.rows[rownew][col]
                    if v:
                        entries[(inew, iold)] = v
            diff_entries[step - 1] = entries
        new_dims = {}
        new_pi = {}
        sections = {}
        for x in poset.cells:
            e = e_mats[x]
            jdim = e.nrows
            if jdim == 0:
                new_dims[x] = 0
                new_pi[x] = Matrix.zero(0, 0)
                sections[x] = Matrix.zero(0, 0)
                continue
            aug = e.hstack(Matrix.identity(jdim))
            _, piv = aug.rref()
            comp_cols = [j - e.ncols for j in piv if j >= e.ncols]
            C = Matrix.zero(jdim, len(comp_cols))
            for a, j in enumerate(comp_cols):
                C.rows[j][a] = _ONE
            full = e.hstack(C) if e.ncols else C
            sol = full.solve_matrix(Matrix.identity(jdim))
            if sol is None:
                raise ValueError("embedding not injective (internal error)")
            pi = Matrix.zero(len(comp_cols), jdim)
            for a in range(len(comp_cols)):
                pi.rows[a] = sol.rows[e.ncols + a][:]
            new_dims[x] = len(comp_cols)
            new_pi[x] = pi
            sections[x] = C
        new_rest = {}
        for x in poset.cells:
            for y, _ in poset.covers[x]:
                jl_x = live[x]
                jl_y = live[y]
                proj = Matrix.zero(len(jl_y), len(jl_x))
                pos = {i: a for a, i in enumerate(jl_x)}
                for b, i in enumerate(jl_y):
                    proj.rows[b][pos[i]] = _ONE
                new_rest[(x, y)] = new_pi[y] * (proj * sections[x])
        q_dims = new_dims
        q_rest = new_rest
        prev_pi = new_pi
        step += 1
    terms = {n + i: t for i, t in enumerate(terms_per_layer)}
    diff = {n + i: e for i, e in diff_entries.items()}
    inj = InjComplex(poset, terms, diff, check=False)
    inj_sheaf = inj.to_sheaf()
    comps = {}
    if first_e is None:
        return Resolution(F, inj, SheafMorphism.zero(F, inj_sheaf))
    e_mats, live0 = first_e
    for x in poset.cells:
        m = e_mats[x]
        comps[x] = CochainMap(
            F.stalks[x], inj_sheaf.stalks[x], {n: m} if m.nrows else {}, check=False
        )
    aug = SheafMorphism(F, inj_sheaf, comps, check=False)
    return Resolution(F, inj, aug)


def _restriction_composites(poset, q_dims, q_rest):
    """All composite restriction matrices (x, s) for x <= s, memoized."""
    comp = {}
    for x in poset.cells:
        comp[(x, x)] = Matrix.identity(q_dims[x])
    order = sorted(poset.cells, key=lambda c: poset.dims[c])
    for x in order:
        stack = [x]
        seen = {x}
        while stack:
            y = stack.pop()
            for z, _ in poset.covers[y]:
                if (x, z) not in comp:
                    comp[(x, z)] = q_rest[(y, z)] * comp[(x, y)]
                if z not in seen:
                    seen.add(z)
                    stack.append(z)
    return comp


def _resolve_cone(F, a):
    poset = F.poset
    # A: degree-a stalks placed in degree a+1; B: brutal truncation >= a+1
    a_stalks = {}
    a_rest = {}
    for x in poset.cells:
        d = F.stalks[x].dim(a)
        a_stalks[x] = CochainComplex({a + 1: d}, {}, check=False)
    for (x, y), r in F.rest.items():
        a_rest[(x, y)] = CochainMap(
            a_stalks[x], a_stalks[y], {a + 1: r.comp(a)}, check=False
        )
    A = SheafComplex(poset, a_stalks, a_rest, check=False)
    b_stalks = {}
    b_rest = {}
    for x in poset.cells:
        s = F.stalks[x]
        spaces = {p: s.dim(p) for p in s.degrees() if p >= a + 1}
        dmats = {p: s.d(p) for p in spaces if s.dim(p + 1)}
        b_stalks[x] = CochainComplex(spaces, dmats, check=False)
    for (x, y), r in F.rest.items():
        comps = {p: r.comp(p) for p in b_stalks[x].degrees()}
        b_rest[(x, y)] = CochainMap(b_stalks[x], b_stalks[y], comps, check=False)
    B = SheafComplex(poset, b_stalks, b_rest, check=False)
    g = SheafMorphism(
        A,
        B,
        {
            x: CochainMap(
                a_stalks[x], b_stalks[x], {a + 1: F.stalks[x].d(a)}, check=False
            )
            for x in poset.cells
        },
        check=False,
    )
    res_a = _resolve_uncached(A, minimize=True)
    res_b = _resolve_uncached(B, minimize=True)
    beta = res_b.aug.compose(g)
    psi, hfam = homotopy_lift_with_homotopy(res_a.aug, beta)
    g_inj = sheaf_to_inj_morphism(psi, res_a.inj, res_b.inj)
    inj = inj_cone(g_inj)
    inj_sheaf = inj.to_sheaf()
    # augmentation F -> cone(g_inj): degree a gets (aug_A, -h), higher (0, aug_B)
    comps = {}
    for x in poset.cells:
        s = F.stalks[x]
        tgt = inj_sheaf.stalks[x]
        mats = {}
        for p in s.degrees():
            na = res_a.inj.to_sheaf().stalks[x].dim(p + 1)
            nb = res_b.inj.to_sheaf().stalks[x].dim(p)
            m = Matrix.zero(na + nb, s.dim(p))
            if p == a:
                am = res_a.aug.comps[x].comp(a + 1)
                for i in range(na):
                    m.rows[i] = am.rows[i][:]
                hm = hfam.get(x, {}).get(a + 1)
                if hm is not None:
                    for i in range(nb):
                        for j in range(s.dim(p)):
                            m.rows[na + i][j] = -hm.rows[i][j]
            else:
                bm = res_b.aug.comps[x].comp(p)
                for i in range(nb):
                    m.rows[na + i] = bm.rows[i][:]
            if not m.is_zero():
                mats[p] = m
        comps[x] = CochainMap(s, tgt, mats, check=False)
    aug = SheafMorphism(F, inj_sheaf, comps, check=False)
    return Resolution(F, inj, aug)


def homotopy_lift_with_homotopy(alpha, beta):
    """Like homalg.homotopy_lift but also returns the homotopy family h
    with psi . alpha - beta = d h + h d."""
    X, Y, Z = alpha.source, alpha.target, beta.target
    hy = HomData(Y, Z)
    hx = HomData(X, Z)
    dim_psi = hy.dim(0)
    dim_h = hx.dim(-1)
    rows = []
    rhs = []
    cy = hy.complex()
    dmat = cy.d(0)
    for i in range(dmat.nrows):
        coeffs = {}
        for j in range(dim_psi):
            v = dmat.rows[i][j]
            if v:
                coeffs[j] = v
        rows.append(coeffs)
        rhs.append(_ZERO)
    comp_cols = []
    for k in range(dim_psi):
        coords = [_ZERO] * dim_psi
        coords[k] = _ONE
        fam = hy.materialize(0, coords)
        comp_fam = _compose_family_with(fam, alpha, hx)
        comp_cols.append(hx.kernel(0).coords(hx.family_to_vec(0, comp_fam)))
    cx = hx.complex()
    hmat = cx.d(-1)
    beta_coords = hx.coords_of_morphism(beta)
    for i in range(hx.dim(0)):
        coeffs = {}
        for j in range(dim_psi):
            v = comp_cols[j][i]
            if v:
                coeffs[j] = v
        for j in range(dim_h):
            v = hmat.rows[i][j] if hmat.nrows else _ZERO
            if v:
                coeffs[dim_psi + j] = -v
        rows.append(coeffs)
        rhs.append(beta_coords[i])
    sol = solve_sparse(rows, rhs, dim_psi + dim_h)
    if sol is None:
        raise ValueError("no homotopy lift exists")
    psi = sheaf_morphism_from_family(Y, Z, hy.materialize(0, sol[:dim_psi]))
    hfam = hx.materialize(-1, sol[dim_psi:])
    return psi, hfam


def _compose_family_with(fam, alpha, hx):
    """Compose a degree-0 family on alpha.target with alpha, as an
    hx = HomData(alpha.source, Z) family."""
    comp_fam = {}
    for x in hx.cells:
        mats = fam.get(x, {})
        ax = alpha.comps[x]
        res = {}
        for p in alpha.source.stalks[x].degrees():
            mp = mats.get(p)
            if mp is not None and ax.comp(p).ncols:
                m = mp * ax.comp(p)
                if not m.is_zero():
                    res[p] = m
        if res:
            comp_fam[x] = res
    return comp_fam


def sheaf_to_inj_morphism(psi, A, B):
    """Extract summand components of a sheaf morphism between injective views.

    The (i, j) component [c_j] -> [c_i] is visible exactly at stalks of
    faces of c_i, so each target summand's row is read at its own cell.
    """
    comps = {}
    for n, terms in B.terms.items():
        for i, c in enumerate(terms):
            live_b = B.stalk_index(c, n)
            live_a = A.stalk_index(c, n)
            if not live_a:
                continue
            row = live_b.index(i)
            m = psi.comps[c].comp(n)
            if m.nrows == 0:
                continue
            for col, j in enumerate(live_a):
                v = m.rows[row][col]
                if v:
                    comps.setdefault(n, {})[(i, j)] = v
    return InjMorphism(A, B, comps, check=False)


def _minimize_resolution(res):
    M, incl, proj = res.inj.minimize()
    projm = proj.to_sheaf_morphism()
    aug = projm.compose(res.aug)
    return Resolution(res.sheaf, M, aug)


# -- derived functors -------------------------------------------------------


def rgamma(F):
    """Derived global sections via the signed cellular total complex."""
    if _is_injective_backed(F):
        return F._inj.gamma()
    return rgamma_cochain(F)


def rgamma_cochain(F):
    poset = F.poset
    blocks = {}  # m -> list of (cell, q, offset, dim)
    offs = {}
    for x in poset.cells:
        s = F.stalks[x]
        for q in s.degrees():
            m = poset.dims[x] + q
            blocks.setdefault(m, []).append((x, q))
    spaces = {}
    for m, bl in blocks.items():
        bl.sort(key=lambda t: (poset.cell_index[t[0]], t[1]))
        off = 0
        for (x, q) in bl:
            offs[(x, q)] = off
            off += F.stalks[x].dim(q)
        spaces[m] = off
    diff = {}
    for m in sorted(spaces):
        if spaces.get(m + 1, 0) == 0:
            continue
        mat = Matrix.zero(spaces[m + 1], spaces[m])
        for (x, q) in blocks[m]:
            s = F.stalks[x]
            base = offs[(x, q)]
            # stalk differential with sign (-1)^{dim x}
            if s.dim(q + 1):
                sgn = _ONE if poset.dims[x] % 2 == 0 else -_ONE
                d = s.d(q)
                tbase = offs[(x, q + 1)]
                for i in range(d.nrows):
                    for j in range(d.ncols):
                        if d.rows[i][j]:
                            mat.rows[tbase + i][base + j] = sgn * d.rows[i][j]
            # signed restrictions to cofaces
            for y, sign in poset.covers[x]:
                r = F.rest[(x, y)].comp(q)
                if r.nrows == 0:
                    continue
                tbase = offs[(y, q)]
                for i in range(r.nrows):
                    for j in range(r.ncols):
                        if r.rows[i][j]:
                            mat.rows[tbase + i][base + j] = (
                                mat.rows[tbase + i][base + j] + QQ(sign) * r.rows[i][j]
                            )
        diff[m] = mat
    return CochainComplex(spaces, diff, check=False)


def rgamma_injective(F):
    """Derived global sections through an injective resolution."""
    return resolve(F).inj.gamma()


def rpush(f, F):
    """Derived pushforward: resolve, then relabel generators along f."""
    inj = resolve(F).inj.push(f)
    return inj.to_sheaf()


def shriek_push(f, F):
    """Equal to rpush: every map of finite complexes is proper here."""
    return rpush(f, F)


# -- sheaf hom and duality --------------------------------------------------


def hom_sheaf(A, B, support=None):
    """Sheaf of hom complexes: stalk at s is Hom over the open star of s.

    B should be a complex of injectives (or replace it by a resolution
    first) for this to compute RHom.  With `support`, stalks are only
    materialized on the given cells (zero elsewhere); callers must ensure
    the cells actually needed are included.
    """
    poset = A.poset
    cells = poset.cells if support is None else [
        c for c in poset.cells if c in support
    ]
    if support is not None:
        zero = CochainComplex({}, {}, check=False)
        data = {x: HomData(A, B, poset.up_set(x)) for x in cells}
        stalks = {x: (data[x].complex() if x in data else zero) for x in poset.cells}
        rest = {}
        supp = set(cells)
        for x in poset.cells:
            for y, _ in poset.covers[x]:
                if x in supp and y in supp:
                    rest[(x, y)] = _hom_sheaf_restriction(data, stalks, x, y)
        out = SheafComplex(poset, stalks, rest, check=False)
        out._hom_data = data
        return out
    data = {}
    for x in poset.cells:
        data[x] = HomData(A, B, poset.up_set(x))
    stalks = {x: data[x].complex() for x in poset.cells}
    rest = {}
    for x in poset.cells:
        for y, _ in poset.covers[x]:
            rest[(x, y)] = _hom_sheaf_restriction(data, stalks, x, y)
    out = SheafComplex(poset, stalks, rest, check=False)
    out._hom_data = data
    return out


def _hom_sheaf_restriction(data, stalks, x, y):
    hy = data[y]
    ycells = set(hy.cells)
    comps = {}
    for n in stalks[x].degrees():
        if stalks[y].dim(n) == 0:
            continue
        m = Matrix.zero(stalks[y].dim(n), stalks[x].dim(n))
        for k in range(stalks[x].dim(n)):
            coords = [_ZERO] * stalks[x].dim(n)
            coords[k] = _ONE
            fam = data[x].materialize(n, coords)
            sub = {z: mats for z, mats in fam.items() if z in ycells}
            col = hy.kernel(n).coords(hy.family_to_vec(n, sub))
            for i, v in enumerate(col):
                m.rows[i][k] = v
        comps[n] = m
    return CochainMap(stalks[x], stalks[y], comps, check=False)


def rhom(F, G):
    """RHom(F, G) via an injective resolution of G."""
    res = resolve(G)
    return hom_sheaf(F, res.inj.to_sheaf())


def verdier_dual(F):
    """D(F) = RHom(F, omega)."""
    if _is_injective_backed(F):
        return F._inj.dualize(omega_complex(F.poset)).to_sheaf()
    return hom_sheaf(F, omega_complex(F.poset).to_sheaf())


def upper_shriek(f, G):
    """f^! = D . f^{-1} . D (valid for constructible coefficients)."""
    dg = verdier_dual(G)
    pb = pullback(f, dg)
    return hom_sheaf(pb, omega_complex(f.source).to_sheaf())


def hom_d_space(A, B):
    """Hom in the derived category: H^0 of the global hom complex into I(B).

    Returns (HomData, Resolution, summary); representatives are obtained
    through hom_d_representative.
    """
    res = resolve(B)
    hd = HomData(A, res.inj.to_sheaf())
    return hd, res, hd.summary()


def hom_d_dim(A, B):
    hd, _, s = hom_d_space(A, B)
    return s.dims.get(0, 0)


def hom_d_representative(hd, res, k):
    coords = hd.summary().cocycles[0]
    col = [coords.rows[i][k] for i in range(hd.dim(0))]
    fam = hd.materialize(0, col)
    return sheaf_morphism_from_family(hd.A, hd.B, fam)


def support_estimate(F):
    """Cells where F fails to look locally constant (support proxy)."""
    poset = F.poset
    out = set()
    acyclic = {}
    for x in poset.cells:
        acyclic[x] = F.stalks[x].is_acyclic()
    for x in poset.cells:
        for y, _ in poset.covers[x]:
            if not cone(F.rest[(x, y)]).is_acyclic():
                out.add(x)
        if not acyclic[x]:
            for y, _ in poset.covers[x]:
                if acyclic[y]:
                    out.add(x)
            for y, _ in poset.cocovers[x]:
                if acyclic[y]:
                    out.add(x)
    return out


# -- derived morphisms ------------------------------------------------------


class DerivedMorphism:
    """Morphism in the derived category: a genuine sheaf morphism into the
    chosen injective resolution of the target."""

    def __init__(self, source, target, rep, resolution=None):
        self.source = source
        self.target = target
        self.resolution = resolution if resolution is not None else resolve(target)
        self.rep = rep  # SheafMorphism source -> resolution sheaf

    @staticmethod
    def from_strict(f):
        res = resolve(f.target)
        rep = res.aug.compose(f)
        return DerivedMorphism(f.source, f.target, rep, res)

    @staticmethod
    def identity(F):
        res = resolve(F)
        return DerivedMorphism(F, F, res.aug, res)

    @staticmethod
    def zero(A, B):
        res = resolve(B)
        return DerivedMorphism(A, B, SheafMorphism.zero(A, res.inj.to_sheaf()), res)

    def hom_data(self):
        hd = getattr(self, "_hom_data", None)
        if hd is None:
            hd = HomData(self.source, self.resolution.inj.to_sheaf())
            self._hom_data = hd
        return hd

    def __add__(self, other):
        return DerivedMorphism(
            self.source, self.target, self.rep + other.rep, self.resolution
        )

    def __sub__(self, other):
        return DerivedMorphism(
            self.source, self.target, self.rep - other.rep, self.resolution
        )

    def scale(self, a):
        return DerivedMorphism(self.source, self.target, self.rep.scale(a), self.resolution)

    def equals(self, other):
        if self.resolution is not other.resolution:
            raise ValueError("comparison requires a common resolution")
        hd = self.hom_data()
        diff = self.rep - other.rep
        return hd.is_null_homotopic(hd.coords_of_morphism(diff))

    def is_zero_in_d(self):
        hd = self.hom_data()
        return hd.is_null_homotopic(hd.coords_of_morphism(self.rep))

    def is_quasi_iso(self):
        from lefschetz.exactlin import cone as ccone

        return all(
            ccone(self.rep.comps[x]).is_acyclic() for x in self.source.poset.cells
        )


def compose_derived(u, v):
    """v . u for derived morphisms u : A -> B, v : B -> C."""
    if v.source is not u.target and v.source != u.target:
        raise ValueError("endpoints do not match in composition")
    psi = homotopy_lift_cached(v)
    rep = psi.compose(u.rep)
    return DerivedMorphism(u.source, v.target, rep, v.resolution)


def homotopy_lift_cached(v):
    """Lift v.rep : B -> I(C) through aug_B : B -> I(B)."""
    cached = getattr(v, "_lifted", None)
    if cached is not None:
        return cached
    res_b = resolve(v.source)
    from lefschetz.homalg import homotopy_lift

    psi = homotopy_lift(res_b.aug, v.rep)
    v._lifted = psi
    return psi
