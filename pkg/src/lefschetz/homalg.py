"""Hom complexes of natural families between cellular sheaves.

The degree-n part of Hom(A, B) over a set of cells consists of families of
degreewise linear maps A(x)^p -> B(x)^{p+n} commuting with all restriction
maps (naturality); the differential is d(f) = d_B . f - (-1)^n f . d_A.
Chain maps are its 0-cocycles, homotopy classes its H^0.

Two implementations share one interface: a generic one that solves for the
naturality constraints, and a combinatorial one for complexes of elementary
injectives where Hom([a], [b]) = Q[b <= a] needs no solving.
"""

from __future__ import annotations

from lefschetz.exactlin import (
    QQ,
    CochainComplex,
    CochainMap,
    Matrix,
    cohomology,
)

_ONE = QQ(1)
_ZERO = QQ(0)


class SparseKernel:
    """Kernel of a sparse linear system with free-variable coordinates.

    Basis vector k equals the unit vector at the k-th free variable plus
    pivot-variable corrections, so coordinates of any kernel vector are read
    off its free entries.
    """

    def __init__(self, rows, nvar):
        pivots = {}
        for coeffs in rows:
            coeffs = {k: QQ(v) for k, v in coeffs.items() if v}
            while True:
                hit = None
                for k in coeffs:
                    if k in pivots:
                        hit = k
                        break
                if hit is None:
                    break
                f = coeffs.pop(hit)
                for k, v in pivots[hit].items():
                    nv = coeffs.get(k, _ZERO) - f * v
                    if nv:
                        coeffs[k] = nv
                    elif k in coeffs:
                        del coeffs[k]
            if not coeffs:
                continue
            pv = min(coeffs)
            inv = _ONE / coeffs.pop(pv)
            norm = {k: inv * v for k, v in coeffs.items()}
            for var, pc in pivots.items():
                if pv in pc:
                    f = pc.pop(pv)
                    for k, v in norm.items():
                        nv = pc.get(k, _ZERO) - f * v
                        if nv:
                            pc[k] = nv
                        elif k in pc:
                            del pc[k]
            pivots[pv] = norm
        self.nvar = nvar
        self.pivots = pivots
        self.free = [k for k in range(nvar) if k not in pivots]
        self.free_pos = {k: i for i, k in enumerate(self.free)}

    def dim(self):
        return len(self.free)

    def vector(self, k):
        """k-th basis vector as a sparse dict."""
        f = self.free[k]
        vec = {f: _ONE}
        for pv, pc in self.pivots.items():
            if f in pc:
                vec[pv] = -pc[f]
        return vec

    def coords(self, vec):
        """Coordinates of a kernel vector (reads free entries)."""
        return [vec.get(f, _ZERO) for f in self.free]

    def contains(self, vec):
        """Exact membership test."""
        for pv, pc in self.pivots.items():
            val = vec.get(pv, _ZERO)
            for f, c in pc.items():
                fv = vec.get(f, _ZERO)
                if fv:
                    val = val + c * fv
            if val != 0:
                return False
        return True


class SparseElim:
    """Incremental sparse Gaussian elimination over Q."""

    def __init__(self):
        self.pivots = {}  # var -> normalized row dict (without the pivot var)

    def reduce(self, vec):
        vec = {k: QQ(v) for k, v in vec.items() if v}
        while True:
            hit = None
            for k in vec:
                if k in self.pivots:
                    hit = k
                    break
            if hit is None:
                return vec
            f = vec.pop(hit)
            for k, v in self.pivots[hit].items():
                nv = vec.get(k, _ZERO) - f * v
                if nv:
                    vec[k] = nv
                elif k in vec:
                    del vec[k]

    def add(self, vec):
        """Reduce and, if nonzero, install as a new pivot; returns pivot var."""
        vec = self.reduce(vec)
        if not vec:
            return None
        pv = min(vec)
        inv = _ONE / vec.pop(pv)
        norm = {k: inv * v for k, v in vec.items()}
        for var, pc in self.pivots.items():
            if pv in pc:
                f = pc.pop(pv)
                for k, v in norm.items():
                    nv = pc.get(k, _ZERO) - f * v
                    if nv:
                        pc[k] = nv
                    elif k in pc:
                        del pc[k]
        self.pivots[pv] = norm
        return pv


class SparseH0:
    """H^0 of a complex given by sparse differentials around degree zero.

    d0_rows: equations (one per degree-1 basis element) as {var: coeff};
    bminus_cols: images of the degree -1 basis, as {var: coeff} vectors.
    """

    def __init__(self, nvar, d0_rows, bminus_cols):
        self.z0 = SparseKernel(d0_rows, nvar)
        self.elim = SparseElim()
        self.b_pivots = []
        for col in bminus_cols:
            coords = self.z0.coords(col)
            vec = {i: v for i, v in enumerate(coords) if v}
            pv = self.elim.add(vec)
            if pv is not None:
                self.b_pivots.append(pv)
        pivset = set(self.elim.pivots)
        self.h_basis = [i for i in range(self.z0.dim()) if i not in pivset]
        self.h_pos = {k: i for i, k in enumerate(self.h_basis)}

    def dim(self):
        return len(self.h_basis)

    def class_of(self, vec):
        """H^0 coordinates of a cocycle given as a sparse var-dict."""
        coords = self.z0.coords(vec)
        red = self.elim.reduce({i: v for i, v in enumerate(coords) if v})
        out = [_ZERO] * len(self.h_basis)
        for k, v in red.items():
            if k not in self.h_pos:
                raise ValueError("vector is not a cocycle")
            out[self.h_pos[k]] = v
        return out

    def representative(self, k):
        """Sparse var-dict representing the k-th basis class."""
        return self.z0.vector(self.h_basis[k])


class HomData:
    """Hom complex of natural families between two generic sheaf complexes."""

    def __init__(self, A, B, cells=None):
        self.A = A
        self.B = B
        poset = A.poset
        self.cells = sorted(
            cells if cells is not None else poset.cells,
            key=lambda c: poset.cell_index[c],
        )
        cellset = set(self.cells)
        self.covers = [
            (x, y)
            for x in self.cells
            for y, _ in poset.covers[x]
            if y in cellset
        ]
        degs = set()
        for x in self.cells:
            for p in A.stalks[x].degrees():
                for q in B.stalks[x].degrees():
                    degs.add(q - p)
        self.var_index = {}
        self.var_count = {}
        self.kernels = {}
        for n in sorted(degs):
            idx = {}
            cnt = 0
            for x in self.cells:
                sa, sb = A.stalks[x], B.stalks[x]
                for p in sa.degrees():
                    db = sb.dim(p + n)
                    da = sa.dim(p)
                    if db and da:
                        idx[(x, p)] = cnt
                        cnt += da * db
            self.var_index[n] = idx
            self.var_count[n] = cnt
            rows = []
            for (x, y) in self.covers:
                ra = A.rest[(x, y)]
                rb = B.rest[(x, y)]
                sa, sb = A.stalks[x], B.stalks[x]
                ta, tb = A.stalks[y], B.stalks[y]
                for p in set(sa.degrees()) | set(ta.degrees()):
                    # rb . f_x - f_y . ra = 0 : map A(x)^p -> B(y)^{p+n}
                    rows_out = tb.dim(p + n)
                    cols_in = sa.dim(p)
                    if rows_out == 0 or cols_in == 0:
                        continue
                    mra = ra.comp(p)
                    mrb = rb.comp(p + n)
                    for i in range(rows_out):
                        for j in range(cols_in):
                            coeffs = {}
                            if (x, p) in idx:
                                base = idx[(x, p)]
                                nb = sb.dim(p + n)
                                for k in range(nb):
                                    v = mrb.rows[i][k]
                                    if v:
                                        coeffs[base + k * cols_in + j] = (
                                            coeffs.get(base + k * cols_in + j, _ZERO) + v
                                        )
                            if (y, p) in idx:
                                base = idx[(y, p)]
                                ta_dim = ta.dim(p)
                                for k in range(ta_dim):
                                    v = mra.rows[k][j]
                                    if v:
                                        var = base + i * ta_dim + k
                                        coeffs[var] = coeffs.get(var, _ZERO) - v
                            if coeffs:
                                rows.append(coeffs)
            self.kernels[n] = SparseKernel(rows, cnt)
        self._complex = None
        self._summary = None

    # variable layout inside a block (x, p): index = base + i_B * dimA + j_A

    def dim(self, n):
        k = self.kernels.get(n)
        return k.dim() if k else 0

    def kernel(self, n):
        k = self.kernels.get(n)
        if k is None:
            k = SparseKernel([], 0)
            self.kernels[n] = k
            self.var_index.setdefault(n, {})
        return k

    def degrees(self):
        return sorted(self.kernels)

    def materialize(self, n, coords):
        """Turn coordinates into per-cell degreewise maps {x: {p: Matrix}}."""
        vec = {}
        kern = self.kernels.get(n)
        if kern is None or not coords:
            return {}
        for k, c in enumerate(coords):
            if not c:
                continue
            for var, v in kern.vector(k).items():
                vec[var] = vec.get(var, _ZERO) + QQ(c) * v
        out = {}
        idx = self.var_index[n]
        for (x, p), base in idx.items():
            da = self.A.stalks[x].dim(p)
            db = self.B.stalks[x].dim(p + n)
            m = Matrix.zero(db, da)
            nonzero = False
            for i in range(db):
                for j in range(da):
                    v = vec.get(base + i * da + j, _ZERO)
                    if v:
                        m.rows[i][j] = v
                        nonzero = True
            if nonzero:
                out.setdefault(x, {})[p] = m
        return out

    def family_to_vec(self, n, fam):
        vec = {}
        idx = self.var_index.get(n)
        if idx is None:
            for x, mats in fam.items():
                for p, m in mats.items():
                    if not m.is_zero():
                        raise ValueError("family has components outside the hom space")
            return vec
        for x, mats in fam.items():
            for p, m in mats.items():
                if (x, p) not in idx:
                    if not m.is_zero():
                        raise ValueError("family has components outside the hom space")
                    continue
                base = idx[(x, p)]
                da = m.ncols
                for i in range(m.nrows):
                    for j in range(da):
                        if m.rows[i][j]:
                            vec[base + i * da + j] = m.rows[i][j]
        return vec

    def coords_of_family(self, n, fam, check=True):
        vec = self.family_to_vec(n, fam)
        kern = self.kernels.get(n)
        if kern is None:
            return []
        if check and not kern.contains(vec):
            raise ValueError("family is not natural")
        return kern.coords(vec)

    def coords_of_morphism(self, f, check=False):
        fam = {x: dict(f.comps[x].comps) for x in self.cells}
        return self.coords_of_family(0, fam, check=check)

    def apply_differential(self, n, fam):
        """d(f) = d_B . f - (-1)^n f . d_A on a materialized family."""
        sgn = _ONE if n % 2 == 0 else -_ONE
        out = {}
        for x in self.cells:
            sa, sb = self.A.stalks[x], self.B.stalks[x]
            mats = fam.get(x, {})
            res = {}
            for p in sa.degrees():
                m1 = None
                mp = mats.get(p)
                if mp is not None and sb.dim(p + n + 1):
                    m1 = sb.d(p + n) * mp
                mp1 = mats.get(p + 1)
                if mp1 is not None and sa.dim(p):
                    m2 = mp1 * sa.d(p)
                    m1 = (m1 - m2.scale(sgn)) if m1 is not None else -m2.scale(sgn)
                if m1 is not None and not m1.is_zero():
                    res[p] = m1
            if res:
                out[x] = res
        return out

    def complex(self):
        """The hom complex in free coordinates."""
        if self._complex is None:
            spaces = {n: self.dim(n) for n in self.degrees() if self.dim(n)}
            diff = {}
            for n in sorted(spaces):
                if self.dim(n + 1) == 0:
                    continue
                m = Matrix.zero(self.dim(n + 1), self.dim(n))
                for k in range(self.dim(n)):
                    coords = [_ZERO] * self.dim(n)
                    coords[k] = _ONE
                    fam = self.materialize(n, coords)
                    dfam = self.apply_differential(n, fam)
                    col = self.kernel(n + 1).coords(self.family_to_vec(n + 1, dfam))
                    for i, v in enumerate(col):
                        m.rows[i][k] = v
                diff[n] = m
            self._complex = CochainComplex(spaces, diff, check=False)
        return self._complex

    def summary(self):
        if self._summary is None:
            self._summary = cohomology(self.complex())
        return self._summary

    def h0_dim(self):
        return self.summary().dims.get(0, 0)

    def h0_class(self, coords0):
        """H^0 coordinates of a degree-0 cocycle given in free coordinates."""
        s = self.summary()
        if 0 not in s.projection:
            return []
        return s.projection[0].apply(coords0)

    def h0_representative(self, k):
        s = self.summary()
        col = [s.cocycles[0].rows[i][k] for i in range(self.dim(0))]
        return col

    def is_null_homotopic(self, coords0):
        """Is a degree-0 cocycle a coboundary?"""
        cls = self.h0_class(coords0)
        return all(v == 0 for v in cls)


class InjHomData:
    """Hom complex between complexes of elementary injectives.

    Basis of degree n: pairs of summands ((p, j) in A, (p + n, i) in B) with
    cell_B <= cell_A; everything is combinatorial.
    """

    def __init__(self, A, B):
        self.A = A
        self.B = B
        leq = A.poset.leq
        self.basis = {}
        self.index = {}
        degs = set()
        for p, ta in sorted(A.terms.items()):
            for q, tb in sorted(B.terms.items()):
                n = q - p
                for j, ca in enumerate(ta):
                    for i, cb in enumerate(tb):
                        if leq(cb, ca):
                            self.basis.setdefault(n, []).append((p, i, j))
                            self.index[(n, p, i, j)] = len(self.basis[n]) - 1
                            degs.add(n)
        self._complex = None
        self._summary = None
        self._h0 = None

    def _sparse_diff_column(self, n, p, i, j):
        """Differential of a degree-n basis element as {target_index: coeff}."""
        out = {}
        sgn = _ONE if n % 2 == 0 else -_ONE
        for (i2, ii), v in self.B.diff.get(p + n, {}).items():
            if ii == i:
                key = (n + 1, p, i2, j)
                if key in self.index:
                    t = self.index[key]
                    out[t] = out.get(t, _ZERO) + v
        for (jj, j2), v in self.A.diff.get(p - 1, {}).items():
            if jj == j:
                key = (n + 1, p - 1, i, j2)
                if key in self.index:
                    t = self.index[key]
                    out[t] = out.get(t, _ZERO) - sgn * v
        return out

    def h0(self):
        """Sparse H^0 machinery (preferred for large hom complexes)."""
        if self._h0 is None:
            nvar = self.dim(0)
            rows_by_target = {}
            for col, (p, i, j) in enumerate(self.basis.get(0, [])):
                for t, v in self._sparse_diff_column(0, p, i, j).items():
                    rows_by_target.setdefault(t, {})[col] = v
            d0_rows = list(rows_by_target.values())
            bcols = []
            for col, (p, i, j) in enumerate(self.basis.get(-1, [])):
                img = self._sparse_diff_column(-1, p, i, j)
                if img:
                    bcols.append(img)
            self._h0 = SparseH0(nvar, d0_rows, bcols)
        return self._h0

    def dim(self, n):
        return len(self.basis.get(n, []))

    def degrees(self):
        return sorted(self.basis)

    def complex(self):
        if self._complex is None:
            spaces = {n: len(b) for n, b in self.basis.items()}
            diff = {}
            for n in sorted(spaces):
                if self.dim(n + 1) == 0:
                    continue
                m = Matrix.zero(self.dim(n + 1), self.dim(n))
                sgn = _ONE if n % 2 == 0 else -_ONE
                for col, (p, i, j) in enumerate(self.basis[n]):
                    # d_B . f : B-entry (i2, i) in degree p+n
                    for (i2, ii), v in self.B.diff.get(p + n, {}).items():
                        if ii == i:
                            key = (n + 1, p, i2, j)
                            if key in self.index:
                                m.rows[self.index[key]][col] += v
                    # f . d_A : A-entry (j, j2) from degree p-1
                    for (jj, j2), v in self.A.diff.get(p - 1, {}).items():
                        if jj == j:
                            key = (n + 1, p - 1, i, j2)
                            if key in self.index:
                                m.rows[self.index[key]][col] -= sgn * v
                diff[n] = m
            self._complex = CochainComplex(spaces, diff, check=False)
        return self._complex

    def summary(self):
        if self._summary is None:
            self._summary = cohomology(self.complex())
        return self._summary

    def h0_dim(self):
        return self.h0().dim()

    def coords_of(self, f):
        """Sparse degree-0 coordinates of an InjMorphism."""
        vec = {}
        for p, entries in f.comps.items():
            for (i, j), v in entries.items():
                if v:
                    vec[self.index[(0, p, i, j)]] = v
        return vec

    def materialize(self, coords, n=0):
        comps = {}
        if isinstance(coords, dict):
            items = coords.items()
        else:
            items = enumerate(coords)
        for col, v in items:
            if v:
                p, i, j = self.basis[n][col]
                comps.setdefault(p, {})[(i, j)] = QQ(v)
        return comps

    def h0_class(self, f):
        return self.h0().class_of(self.coords_of(f))

    def h0_representative(self, k):
        """InjMorphism representing the k-th H^0 class."""
        from lefschetz.injective import InjMorphism

        vec = self.h0().representative(k)
        return InjMorphism(self.A, self.B, self.materialize(vec), check=False)

    def is_null_homotopic(self, f):
        return all(v == 0 for v in self.h0_class(f))


class InjHomQuotient:
    """Quotient of an injective hom complex by families vanishing on a
    down-closed set Z: the model of germs of morphisms along Z.

    Basis: summand pairs whose target generator has a face in Z; the
    differential is the projected one.
    """

    def __init__(self, hom, zset):
        self.hom = hom
        A, B = hom.A, hom.B
        poset = A.poset
        self.keep = {}  # (n, p, i, j) kept?
        self.basis = {}
        self.index = {}
        touch = {}
        for n, items in hom.basis.items():
            for (p, i, j) in items:
                ci = B.terms[p + n][i]
                key = ci
                if key not in touch:
                    # down(ci) meets the closure of Z iff ci shares a face
                    # with some z in Z
                    touch[key] = (
                        any(poset.meet(z, ci) is not None for z in zset)
                        if zset
                        else False
                    )
                if touch[key]:
                    self.basis.setdefault(n, []).append((p, i, j))
                    self.index[(n, p, i, j)] = len(self.basis[n]) - 1
        self._h0 = None

    def dim(self, n):
        return len(self.basis.get(n, []))

    def _diff_col(self, n, p, i, j):
        out = {}
        for t, v in self.hom._sparse_diff_column(n, p, i, j).items():
            (pp, ii, jj) = self.hom.basis[n + 1][t]
            key = (n + 1, pp, ii, jj)
            if key in self.index:
                out[self.index[key]] = out.get(self.index[key], _ZERO) + v
        return out

    def h0(self):
        if self._h0 is None:
            nvar = self.dim(0)
            rows_by_target = {}
            for col, (p, i, j) in enumerate(self.basis.get(0, [])):
                for t, v in self._diff_col(0, p, i, j).items():
                    rows_by_target.setdefault(t, {})[col] = v
            bcols = []
            for col, (p, i, j) in enumerate(self.basis.get(-1, [])):
                img = self._diff_col(-1, p, i, j)
                if img:
                    bcols.append(img)
            self._h0 = SparseH0(nvar, list(rows_by_target.values()), bcols)
        return self._h0

    def project_coords(self, f):
        """Quotient coordinates of an InjMorphism (degree 0)."""
        vec = {}
        for p, entries in f.comps.items():
            for (i, j), v in entries.items():
                key = (0, p, i, j)
                if key in self.index and v:
                    vec[self.index[key]] = v
        return vec

    def h0_class(self, f):
        return self.h0().class_of(self.project_coords(f))


def sheaf_morphism_from_family(A, B, fam):
    """Build a SheafMorphism from a degree-0 natural family."""
    from lefschetz.cellsheaf import SheafMorphism

    comps = {}
    for x in A.poset.cells:
        mats = fam.get(x, {})
        comps[x] = CochainMap(A.stalks[x], B.stalks[x], dict(mats), check=False)
    return SheafMorphism(A, B, comps, check=False)


def inj_lift_precompose(alpha, beta):
    """Find psi with psi . alpha homotopic to beta, everything injective.

    alpha : A -> B, beta : A -> C are InjMorphisms; returns an InjMorphism
    psi : B -> C.  Raises ValueError when no lift exists.
    """
    from lefschetz.exactlin import solve_sparse
    from lefschetz.injective import InjMorphism

    A, B, C = alpha.source, alpha.target, beta.target
    hbc = InjHomData(B, C)
    hac = InjHomData(A, C)
    npsi = hbc.dim(0)
    nh = hac.dim(-1)
    rows = {}
    rhs = {}

    def add(eqkey, var, coeff):
        if coeff:
            rows.setdefault(eqkey, {})[var] = (
                rows.get(eqkey, {}).get(var, _ZERO) + coeff
            )

    # chain map equations: D(psi) = 0 in hom(B, C)^1
    for col, (p, i, j) in enumerate(hbc.basis.get(0, [])):
        for t, v in hbc._sparse_diff_column(0, p, i, j).items():
            add(("cm", t), col, v)
    # composite equations: psi . alpha - D(h) = beta in hom(A, C)^0
    alpha_by = {}
    for p, entries in alpha.comps.items():
        for (iB, jA), v in entries.items():
            alpha_by.setdefault((p, iB), []).append((jA, v))
    for col, (p, iC, jB) in enumerate(hbc.basis.get(0, [])):
        for (jA, v) in alpha_by.get((p, jB), []):
            key = (0, p, iC, jA)
            if key in hac.index:
                add(("cp", hac.index[key]), col, v)
    for col, (p, i, j) in enumerate(hac.basis.get(-1, [])):
        for t, v in hac._sparse_diff_column(-1, p, i, j).items():
            add(("cp", t), npsi + col, -v)
    for p, entries in beta.comps.items():
        for (i, j), v in entries.items():
            key = (0, p, i, j)
            rhs[("cp", hac.index[key])] = rhs.get(("cp", hac.index[key]), _ZERO) + v
    eqkeys = sorted(set(rows) | set(rhs), key=repr)
    sys_rows = [rows.get(k, {}) for k in eqkeys]
    sys_rhs = [rhs.get(k, _ZERO) for k in eqkeys]
    sol = solve_sparse(sys_rows, sys_rhs, npsi + nh)
    if sol is None:
        raise ValueError("no injective homotopy lift exists")
    return InjMorphism(B, C, hbc.materialize(sol[:npsi]), check=False)


def homotopy_lift(alpha, beta, hom_YZ=None, hom_XZ=None):
    """Find psi: Y -> Z with psi . alpha homotopic to beta : X -> Z.

    alpha: X -> Y and beta: X -> Z are strict sheaf morphisms.  Returns a
    SheafMorphism psi (a chain map) such that psi . alpha - beta is null
    homotopic; raises ValueError when no lift exists.
    """
    from lefschetz.exactlin import solve_sparse

    X, Y, Z = alpha.source, alpha.target, beta.target
    hy = hom_YZ if hom_YZ is not None else HomData(Y, Z)
    hx = hom_XZ if hom_XZ is not None else HomData(X, Z)
    dim_psi = hy.dim(0)
    dim_h = hx.dim(-1)
    # equations: D(psi) = 0 in hom(Y,Z)^1 ; comp(psi) - D(h) = beta in hom(X,Z)^0
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
    # composition matrix: psi basis -> hom(X,Z)^0 coordinates
    comp_cols = []
    for k in range(dim_psi):
        coords = [_ZERO] * dim_psi
        coords[k] = _ONE
        fam = hy.materialize(0, coords)
        comp_fam = {}
        for x in hx.cells:
            mats = fam.get(x, {})
            res = {}
            ax = alpha.comps[x]
            for p in X.stalks[x].degrees():
                mp = mats.get(p)
                if mp is not None and ax.comp(p).ncols:
                    m = mp * ax.comp(p)
                    if not m.is_zero():
                        res[p] = m
            if res:
                comp_fam[x] = res
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
    fam = hy.materialize(0, sol[:dim_psi])
    return sheaf_morphism_from_family(Y, Z, fam)
