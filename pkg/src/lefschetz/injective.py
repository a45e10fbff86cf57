"""Complexes of elementary injective sheaves, presented combinatorially.

An InjComplex is a bounded complex whose degree-n term is a finite direct
sum of elementary injectives [c] (stalk Q on the faces of c).  Since
Hom([c], [c']) is Q when c' <= c and 0 otherwise, differentials and chain
maps are sparse scalar matrices indexed by summand pairs subject to the
face condition.  All the heavy functors (duality, pushforward, tensor,
global sections, Gaussian minimization) act on this presentation without
any linear algebra over stalks.
"""

from __future__ import annotations

from lefschetz.exactlin import QQ, CochainComplex, CochainMap, Matrix, unit_complex
from lefschetz.cellsheaf import SheafComplex, SheafMorphism


_ONE = QQ(1)


class InjComplex:
    """Bounded complex of direct sums of elementary injectives.

    terms[n] is the list of cells generating degree n; diff[n] maps summand
    pairs (i, j) (target index i in degree n+1, source index j in degree n)
    to a scalar, with the face condition cell_i <= cell_j.
    """

    def __init__(self, poset, terms, diff, check=True):
        self.poset = poset
        self.terms = {n: list(t) for n, t in terms.items() if t}
        self.diff = {}
        for n, entries in diff.items():
            clean = {k: QQ(v) for k, v in entries.items() if v}
            if clean:
                self.diff[n] = clean
        self._sheaf = None
        if check:
            self.validate()

    def validate(self):
        for n, entries in self.diff.items():
            src = self.terms.get(n, [])
            tgt = self.terms.get(n + 1, [])
            for (i, j) in entries:
                if not (0 <= i < len(tgt) and 0 <= j < len(src)):
                    raise ValueError(f"differential index out of range in degree {n}")
                if not self.poset.leq(tgt[i], src[j]):
                    raise ValueError(
                        f"differential entry {tgt[i]!r} <- {src[j]!r} violates the face condition"
                    )
        # d^2 = 0 numerically
        for n in self.diff:
            d1 = self.diff.get(n, {})
            d2 = self.diff.get(n + 1, {})
            if not d2:
                continue
            acc = {}
            by_src = {}
            for (i, j), v in d1.items():
                by_src.setdefault(j, []).append((i, v))
            by_mid = {}
            for (k, i), w in d2.items():
                by_mid.setdefault(i, []).append((k, w))
            for j, outs in by_src.items():
                for (i, v) in outs:
                    for (k, w) in by_mid.get(i, []):
                        acc[(k, j)] = acc.get((k, j), QQ(0)) + v * w
            for key, total in acc.items():
                if total != 0:
                    raise ValueError(f"d^2 != 0 in degree {n} at {key}")

    def degrees(self):
        return sorted(self.terms)

    def n_summands(self, n):
        return len(self.terms.get(n, []))

    def total_summands(self):
        return sum(len(t) for t in self.terms.values())

    def __repr__(self):
        return f"InjComplex({ {n: len(t) for n, t in sorted(self.terms.items())} })"

    # -- views ------------------------------------------------------------

    def stalk_indices(self, cell, n):
        """Summand indices in degree n whose generator contains cell."""
        leq = self.poset.leq
        return [i for i, c in enumerate(self.terms.get(n, [])) if leq(cell, c)]

    def to_sheaf(self):
        if self._sheaf is not None:
            return self._sheaf
        poset = self.poset
        leq = poset.leq
        idx = {}  # (cell, n) -> list of summand indices
        stalks = {}
        for cell in poset.cells:
            spaces = {}
            for n, t in self.terms.items():
                live = [i for i, c in enumerate(t) if leq(cell, c)]
                idx[(cell, n)] = live
                if live:
                    spaces[n] = len(live)
            diff = {}
            for n in spaces:
                live = idx[(cell, n)]
                live1 = idx.get((cell, n + 1), [])
                if not live1:
                    continue
                pos1 = {i: a for a, i in enumerate(live1)}
                m = Matrix.zero(len(live1), len(live))
                entries = self.diff.get(n, {})
                for b, j in enumerate(live):
                    for (i, jj), v in entries.items():
                        if jj == j and i in pos1:
                            m.rows[pos1[i]][b] = v
                diff[n] = m
            stalks[cell] = CochainComplex(spaces, diff, check=False)
        rest = {}
        for cell in poset.cells:
            for d, _ in poset.covers[cell]:
                comps = {}
                for n in stalks[cell].degrees():
                    live_c = idx[(cell, n)]
                    live_d = idx.get((d, n), [])
                    if not live_d:
                        continue
                    pos = {i: a for a, i in enumerate(live_c)}
                    m = Matrix.zero(len(live_d), len(live_c))
                    for a, i in enumerate(live_d):
                        m.rows[a][pos[i]] = _ONE
                    comps[n] = m
                rest[(cell, d)] = CochainMap(stalks[cell], stalks[d], comps, check=False)
        self._sheaf = SheafComplex(poset, stalks, rest, check=False)
        self._sheaf._inj = self
        self._stalk_idx = idx
        return self._sheaf

    def stalk_index(self, cell, n):
        self.to_sheaf()
        return self._stalk_idx.get((cell, n), [])

    # -- functors ----------------------------------------------------------

    def shift(self, k):
        """Same convention as exactlin.shift: C[k]^p = C^{p+k}, d -> (-1)^k d."""
        sgn = _ONE if k % 2 == 0 else -_ONE
        terms = {n - k: t for n, t in self.terms.items()}
        diff = {
            n - k: {key: sgn * v for key, v in entries.items()}
            for n, entries in self.diff.items()
        }
        return InjComplex(self.poset, terms, diff, check=False)

    def gamma(self):
        """Global sections: each summand contributes one dimension."""
        spaces = {n: len(t) for n, t in self.terms.items()}
        diff = {}
        for n, entries in self.diff.items():
            m = Matrix.zero(len(self.terms.get(n + 1, [])), len(self.terms[n]))
            for (i, j), v in entries.items():
                m.rows[i][j] = v
            diff[n] = m
        return CochainComplex(spaces, diff, check=False)

    def gamma_projection(self, cell, n):
        """Matrix of the evaluation Gamma -> stalk(cell) in degree n."""
        live = self.stalk_index(cell, n)
        m = Matrix.zero(len(live), self.n_summands(n))
        for a, i in enumerate(live):
            m.rows[a][i] = _ONE
        return m

    def push(self, f):
        """Pushforward along a monotone map: relabel generators by f.

        Exact on complexes of injectives since f_*[c] = [f(c)].
        """
        terms = {n: [f(c) for c in t] for n, t in self.terms.items()}
        return InjComplex(f.target, terms, dict(self.diff), check=False)

    def tensor(self, other):
        """Stalkwise tensor; [a] (x) [b] = [meet(a,b)] or 0."""
        if other.poset is not self.poset:
            raise ValueError("tensor requires a common poset")
        meet = self.poset.meet
        terms = {}
        index = {}
        for p, ta in sorted(self.terms.items()):
            for q, tb in sorted(other.terms.items()):
                n = p + q
                for i, a in enumerate(ta):
                    for j, b in enumerate(tb):
                        m = meet(a, b)
                        if m is None:
                            continue
                        terms.setdefault(n, []).append(m)
                        index[(p, i, q, j)] = (n, len(terms[n]) - 1)
        diff = {}
        for (p, i, q, j), (n, k) in index.items():
            sgn_p = _ONE if p % 2 == 0 else -_ONE
            for (i2, ii), v in self.diff.get(p, {}).items():
                if ii == i and (p + 1, i2, q, j) in index:
                    n2, k2 = index[(p + 1, i2, q, j)]
                    diff.setdefault(n, {})[(k2, k)] = (
                        diff.get(n, {}).get((k2, k), QQ(0)) + v
                    )
            for (j2, jj), v in other.diff.get(q, {}).items():
                if jj == j and (p, i, q + 1, j2) in index:
                    n2, k2 = index[(p, i, q + 1, j2)]
                    diff.setdefault(n, {})[(k2, k)] = (
                        diff.get(n, {}).get((k2, k), QQ(0)) + sgn_p * v
                    )
        out = InjComplex(self.poset, terms, diff, check=False)
        out._tensor_index = index
        return out

    def box(self, other, prod=None):
        """External product on the flat product poset."""
        from lefschetz.cellspace import product_poset

        if prod is None:
            prod = product_poset([self.poset, other.poset])
        la = len(self.poset.atomic_factors())
        lb = len(other.poset.atomic_factors())

        def join(a, b):
            fa = a if la > 1 else (a,)
            fb = b if lb > 1 else (b,)
            return fa + fb

        terms = {}
        index = {}
        for p, ta in sorted(self.terms.items()):
            for q, tb in sorted(other.terms.items()):
                n = p + q
                for i, a in enumerate(ta):
                    for j, b in enumerate(tb):
                        terms.setdefault(n, []).append(join(a, b))
                        index[(p, i, q, j)] = (n, len(terms[n]) - 1)
        diff = {}
        for (p, i, q, j), (n, k) in index.items():
            sgn_p = _ONE if p % 2 == 0 else -_ONE
            for (i2, ii), v in self.diff.get(p, {}).items():
                if ii == i:
                    n2, k2 = index[(p + 1, i2, q, j)]
                    diff.setdefault(n, {})[(k2, k)] = v
            for (j2, jj), v in other.diff.get(q, {}).items():
                if jj == j:
                    n2, k2 = index[(p, i, q + 1, j2)]
                    diff.setdefault(n, {})[(k2, k)] = sgn_p * v
        out = InjComplex(prod, terms, diff, check=False)
        out._box_index = index
        return out

    def dualize(self, omega_cx):
        """Sheaf hom into a fixed complex of injectives (usually omega).

        HomSh([c], [w]) = [w] when w <= c, so the result is again an
        InjComplex; summand provenance is recorded in ._dual_index as
        (p, i, q, j) -> (n, k) for K-summand (p, i), omega-summand (q, j).
        """
        if omega_cx.poset is not self.poset:
            raise ValueError("dualize requires a common poset")
        leq = self.poset.leq
        terms = {}
        index = {}
        for p, ta in sorted(self.terms.items()):
            for q, tb in sorted(omega_cx.terms.items()):
                n = q - p
                for i, c in enumerate(ta):
                    for j, w in enumerate(tb):
                        if leq(w, c):
                            terms.setdefault(n, []).append(w)
                            index[(p, i, q, j)] = (n, len(terms[n]) - 1)
        diff = {}
        # d(phi) = d_omega . phi - (-1)^n phi . d_K
        for (p, i, q, j), (n, k) in index.items():
            sgn = _ONE if n % 2 == 0 else -_ONE
            for (j2, jj), v in omega_cx.diff.get(q, {}).items():
                if jj == j and (p, i, q + 1, j2) in index:
                    _, k2 = index[(p, i, q + 1, j2)]
                    diff.setdefault(n, {})[(k2, k)] = (
                        diff.get(n, {}).get((k2, k), QQ(0)) + v
                    )
            # phi . (d_K entry from (p-1, i2) to (p, i))
            for (ii, i2), v in self.diff.get(p - 1, {}).items():
                if ii == i and (p - 1, i2, q, j) in index:
                    _, k2 = index[(p - 1, i2, q, j)]
                    diff.setdefault(n, {})[(k2, k)] = (
                        diff.get(n, {}).get((k2, k), QQ(0)) - sgn * v
                    )
        out = InjComplex(self.poset, terms, diff, check=False)
        out._dual_index = index
        out._dual_source = self
        out._dual_target = omega_cx
        return out

    def direct_sum(self, other):
        terms = {}
        index = {}
        for n in sorted(set(self.terms) | set(other.terms)):
            ta = self.terms.get(n, [])
            tb = other.terms.get(n, [])
            terms[n] = ta + tb
            index[n] = len(ta)
        diff = {}
        for n, entries in self.diff.items():
            diff.setdefault(n, {}).update(entries)
        for n, entries in other.diff.items():
            offs = index.get(n, 0)
            offt = index.get(n + 1, 0)
            for (i, j), v in entries.items():
                diff.setdefault(n, {})[(i + offt, j + offs)] = v
        return InjComplex(self.poset, terms, diff, check=False)

    def minimize(self):
        """Cancel isomorphic summand pairs (same generating cell).

        Returns (M, incl, proj) with incl: M -> self and proj: self -> M
        mutually inverse homotopy equivalences.
        """
        alive = {n: set(range(len(t))) for n, t in self.terms.items()}
        diff = {n: dict(e) for n, e in self.diff.items()}
        # transport data relative to original summands
        imap = {
            n: {i: {i: _ONE} for i in alive[n]} for n in alive
        }  # current -> original combos
        pmap = {
            n: {i: {i: _ONE} for i in alive[n]} for n in alive
        }  # original -> current combos
        changed = True
        while changed:
            changed = False
            for n in sorted(diff):
                entries = diff.get(n, {})
                pick = None
                for (i, j), v in sorted(entries.items()):
                    if v and self.terms[n + 1][i] == self.terms[n][j]:
                        pick = (i, j, v)
                        break
                if pick is None:
                    continue
                i, j, phi = pick
                inv = _ONE / phi
                dn = diff.get(n, {})
                col_j = {a: v for (a, b), v in dn.items() if b == j and a != i and v}
                row_i = {b: v for (a, b), v in dn.items() if a == i and b != j and v}
                # middle block correction
                for a, va in col_j.items():
                    for b, vb in row_i.items():
                        key = (a, b)
                        nv = dn.get(key, QQ(0)) - va * inv * vb
                        if nv:
                            dn[key] = nv
                        elif key in dn:
                            del dn[key]
                # drop cancelled row/col, plus incoming maps hitting the
                # cancelled degree-n summand and outgoing maps leaving the
                # cancelled degree-(n+1) summand (lemma: project/include)
                for key in [k for k in dn if k[0] == i or k[1] == j]:
                    del dn[key]
                if not dn:
                    diff.pop(n, None)
                dprev = diff.get(n - 1)
                if dprev is not None:
                    for key in [k for k in dprev if k[0] == j]:
                        del dprev[key]
                    if not dprev:
                        diff.pop(n - 1, None)
                dnext = diff.get(n + 1)
                if dnext is not None:
                    for key in [k for k in dnext if k[1] == i]:
                        del dnext[key]
                    if not dnext:
                        diff.pop(n + 1, None)
                # update transports
                # i-map: for current b in degree n with d[i-row? no:
                # i_elim(b) = b - inv * d_prev[i, b] * x  (x = summand j)
                ix = imap[n].pop(j)
                for b, vb in row_i.items():
                    if b in imap[n]:
                        tgt = imap[n][b]
                        for o, c in ix.items():
                            tgt[o] = tgt.get(o, QQ(0)) - inv * vb * c
                            if not tgt[o]:
                                del tgt[o]
                imap[n + 1].pop(i, None)
                # p-map: p_elim(x)=0, p_elim(y) = -inv * sum_a d_prev[a, x] a
                for o, combo in pmap[n].items():
                    if j in combo:
                        del combo[j]
                for o, combo in pmap[n + 1].items():
                    if i in combo:
                        cy = combo.pop(i)
                        for a, va in col_j.items():
                            combo[a] = combo.get(a, QQ(0)) - inv * cy * va
                            if not combo[a]:
                                del combo[a]
                alive[n].discard(j)
                alive[n + 1].discard(i)
                changed = True
        # compact
        newidx = {}
        terms = {}
        for n in sorted(alive):
            keep = sorted(alive[n])
            if keep:
                terms[n] = [self.terms[n][i] for i in keep]
                newidx[n] = {old: a for a, old in enumerate(keep)}
        ndiff = {}
        for n, entries in diff.items():
            for (i, j), v in entries.items():
                ndiff.setdefault(n, {})[(newidx[n + 1][i], newidx[n][j])] = v
        M = InjComplex(self.poset, terms, ndiff, check=False)
        icomps = {}
        for n, rows in imap.items():
            for cur, combo in rows.items():
                if n not in newidx or cur not in newidx[n]:
                    continue
                for orig, v in combo.items():
                    icomps.setdefault(n, {})[(orig, newidx[n][cur])] = v
        pcomps = {}
        for n, rows in pmap.items():
            for orig, combo in rows.items():
                for cur, v in combo.items():
                    pcomps.setdefault(n, {})[(newidx[n][cur], orig)] = v
        incl = InjMorphism(M, self, icomps, check=False)
        proj = InjMorphism(self, M, pcomps, check=False)
        return M, incl, proj


class InjMorphism:
    """Chain map between InjComplexes in summand coordinates."""

    def __init__(self, source, target, comps, check=True):
        self.source = source
        self.target = target
        self.comps = {}
        for n, entries in comps.items():
            clean = {k: QQ(v) for k, v in entries.items() if v}
            if clean:
                self.comps[n] = clean
        if check:
            self.validate()

    def validate(self):
        leq = self.source.poset.leq
        for n, entries in self.comps.items():
            src = self.source.terms.get(n, [])
            tgt = self.target.terms.get(n, [])
            for (i, j) in entries:
                if not (0 <= i < len(tgt) and 0 <= j < len(src)):
                    raise ValueError(f"morphism index out of range in degree {n}")
                if not leq(tgt[i], src[j]):
                    raise ValueError("morphism entry violates the face condition")
        # chain map: d_T f = f d_S
        for n in set(self.comps) | set(self.source.diff):
            acc = {}
            for (i, j), v in self.comps.get(n, {}).items():
                for (k, ii), w in self.target.diff.get(n, {}).items():
                    if ii == i:
                        acc[(k, j)] = acc.get((k, j), QQ(0)) + w * v
            for (j2, j), v in self.source.diff.get(n, {}).items():
                for (k, jj), w in self.comps.get(n + 1, {}).items():
                    if jj == j2:
                        acc[(k, j)] = acc.get((k, j), QQ(0)) - w * v
            for key, total in acc.items():
                if total != 0:
                    raise ValueError(f"not a chain map in degree {n} at {key}")

    @staticmethod
    def identity(c):
        return InjMorphism(
            c,
            c,
            {
                n: {(i, i): _ONE for i in range(len(t))}
                for n, t in c.terms.items()
            },
            check=False,
        )

    def compose(self, other):
        """self . other."""
        if self.source.terms != other.target.terms:
            raise ValueError("endpoint mismatch in InjMorphism composition")
        comps = {}
        for n, entries in other.comps.items():
            mine = self.comps.get(n, {})
            by_src = {}
            for (i, j), v in mine.items():
                by_src.setdefault(j, []).append((i, v))
            for (i, j), v in entries.items():
                for (k, w) in by_src.get(i, []):
                    key = (k, j)
                    comps.setdefault(n, {})[key] = (
                        comps.get(n, {}).get(key, QQ(0)) + w * v
                    )
        return InjMorphism(other.source, self.target, comps, check=False)

    def scale(self, a):
        return InjMorphism(
            self.source,
            self.target,
            {n: {k: a * v for k, v in e.items()} for n, e in self.comps.items()},
            check=False,
        )

    def gamma(self):
        """Induced map on global section complexes."""
        gs = self.source.gamma()
        gt = self.target.gamma()
        comps = {}
        for n, entries in self.comps.items():
            m = Matrix.zero(gt.dim(n), gs.dim(n))
            for (i, j), v in entries.items():
                m.rows[i][j] = v
            comps[n] = m
        return CochainMap(gs, gt, comps, check=False)

    def to_sheaf_morphism(self):
        src = self.source.to_sheaf()
        tgt = self.target.to_sheaf()
        comps = {}
        for cell in self.source.poset.cells:
            mm = {}
            for n, entries in self.comps.items():
                live_s = self.source.stalk_index(cell, n)
                live_t = self.target.stalk_index(cell, n)
                if not live_s or not live_t:
                    continue
                post = {i: a for a, i in enumerate(live_t)}
                m = Matrix.zero(len(live_t), len(live_s))
                for b, j in enumerate(live_s):
                    for (i, jj), v in entries.items():
                        if jj == j and i in post:
                            m.rows[post[i]][b] = v
                mm[n] = m
            comps[cell] = CochainMap(src.stalks[cell], tgt.stalks[cell], mm, check=False)
        return SheafMorphism(src, tgt, comps, check=False)

    def push(self, f):
        return InjMorphism(
            self.source.push(f), self.target.push(f), dict(self.comps), check=False
        )

    def shift(self, k):
        return InjMorphism(
            self.source.shift(k),
            self.target.shift(k),
            {n - k: dict(e) for n, e in self.comps.items()},
            check=False,
        )

    def __add__(self, other):
        comps = {n: dict(e) for n, e in self.comps.items()}
        for n, e in other.comps.items():
            tgt = comps.setdefault(n, {})
            for k, v in e.items():
                tgt[k] = tgt.get(k, QQ(0)) + v
        return InjMorphism(self.source, self.target, comps, check=False)

    def __sub__(self, other):
        return self + other.scale(QQ(-1))

    def is_zero(self):
        return all(not e for e in self.comps.values())


def inj_cone(f):
    """Mapping cone of an InjMorphism, matching exactlin.cone conventions."""
    A, B = f.source, f.target
    terms = {}
    for n in set(k - 1 for k in A.terms) | set(B.terms):
        terms[n] = list(A.terms.get(n + 1, [])) + list(B.terms.get(n, []))
    diff = {}
    for n, t in terms.items():
        na = len(A.terms.get(n + 1, []))
        na1 = len(A.terms.get(n + 2, []))
        entries = {}
        for (i, j), v in A.diff.get(n + 1, {}).items():
            entries[(i, j)] = -v
        for (i, j), v in f.comps.get(n + 1, {}).items():
            entries[(na1 + i, j)] = v
        for (i, j), v in B.diff.get(n, {}).items():
            entries[(na1 + i, na + j)] = v
        if entries:
            diff[n] = entries
    return InjComplex(A.poset, terms, diff, check=False)


def omega_complex(poset):
    """Dualizing complex: degree -p term is the sum of [c] over p-cells,
    with incidence-sign differentials."""
    terms = {}
    pos = {}
    for c in poset.cells:
        p = poset.dims[c]
        terms.setdefault(-p, []).append(c)
    for n, t in terms.items():
        for i, c in enumerate(t):
            pos[c] = (n, i)
    diff = {}
    for c in poset.cells:
        n, j = pos[c]
        for d, s in poset.covers[c]:
            # component [d] -> [c] of the differential in degree -dim(d)
            nd, i = pos[d]
            diff.setdefault(nd, {})[(j, i)] = QQ(s)
    return InjComplex(poset, terms, diff, check=False)


def elementary(poset, cell, degree=0):
    return InjComplex(poset, {degree: [cell]}, {}, check=False)


def inj_is_quasi_iso(f):
    """Stalkwise quasi-isomorphism test for an InjMorphism."""
    return f.to_sheaf_morphism().is_stalkwise_quasi_iso()


def stalk_tensor_iso(t, a, b, cell_a, cell_b, cell):
    """Permutation matrix tensor(a-stalk, b-stalk) -> stalk of t at cell.

    t must be a.tensor(b) (cell_a = cell_b = cell) or a.box(b) with
    cell = join(cell_a, cell_b); returns {degree: Matrix}.
    """
    from lefschetz.exactlin import TensorIndex

    sa = a.to_sheaf().stalks[cell_a]
    sb = b.to_sheaf().stalks[cell_b]
    idx = TensorIndex(sa, sb)
    live_a = {p: a.stalk_index(cell_a, p) for p in a.terms}
    live_b = {q: b.stalk_index(cell_b, q) for q in b.terms}
    index = t._tensor_index if hasattr(t, "_tensor_index") else t._box_index
    out = {}
    tsh = t.to_sheaf()
    for n in tsh.stalks[cell].degrees():
        live_t = t.stalk_index(cell, n)
        pos_t = {i: r for r, i in enumerate(live_t)}
        m = Matrix.zero(len(live_t), idx.dims.get(n, 0))
        for (p, q) in idx.blocks.get(n, []):
            for ai, i in enumerate(live_a.get(p, [])):
                for bj, j in enumerate(live_b.get(q, [])):
                    key = (p, i, q, j)
                    if key not in index:
                        continue
                    deg, k = index[key]
                    if k in pos_t:
                        m.rows[pos_t[k]][idx.index(p, q, ai, bj)] = _ONE
        out[n] = m
    return out


def inj_tensor_morphism(f, g, src=None, tgt=None):
    """f (x) g on tensor complexes of injectives (degree-0 chain maps)."""
    src = src if src is not None else f.source.tensor(g.source)
    tgt = tgt if tgt is not None else f.target.tensor(g.target)
    comps = {}
    for (p, i, q, j), (n, k) in src._tensor_index.items():
        for (i2, ii), v in f.comps.get(p, {}).items():
            if ii != i:
                continue
            for (j2, jj), w in g.comps.get(q, {}).items():
                if jj != j:
                    continue
                key2 = (p, i2, q, j2)
                if key2 in tgt._tensor_index:
                    _, k2 = tgt._tensor_index[key2]
                    comps.setdefault(n, {})[(k2, k)] = (
                        comps.get(n, {}).get((k2, k), QQ(0)) + v * w
                    )
    return InjMorphism(src, tgt, comps, check=False)


def inj_box_morphism(f, g, src=None, tgt=None):
    """f box g on external products (degree-0 chain maps)."""
    src = src if src is not None else f.source.box(g.source)
    tgt = tgt if tgt is not None else f.target.box(g.target)
    comps = {}
    for (p, i, q, j), (n, k) in src._box_index.items():
        for (i2, ii), v in f.comps.get(p, {}).items():
            if ii != i:
                continue
            for (j2, jj), w in g.comps.get(q, {}).items():
                if jj != j:
                    continue
                _, k2 = tgt._box_index[(p, i2, q, j2)]
                comps.setdefault(n, {})[(k2, k)] = (
                    comps.get(n, {}).get((k2, k), QQ(0)) + v * w
                )
    return InjMorphism(src, tgt, comps, check=False)


def inj_eval(a, dual=None, omega=None):
    """Evaluation D(a) (x) a -> omega as an InjMorphism.

    dual defaults to a.dualize(omega); requires dual._dual_index provenance.
    """
    if omega is None:
        omega = omega_complex(a.poset)
    d = dual if dual is not None else a.dualize(omega)
    t = d.tensor(a)
    comps = {}
    for (p, i, q, j), (nd, kd) in d._dual_index.items():
        # dual summand kd pairs only with a-summand (p, i)
        key = (nd, kd, p, i)
        if key not in t._tensor_index:
            continue
        n, kt = t._tensor_index[key]
        comps.setdefault(n, {})[(j, kt)] = _ONE
    return InjMorphism(t, omega, comps, check=False)


def fiber_tensor(a, b, middle):
    """q_A^{-1}(a) (x) q_B^{-1}(b) on the triple product.

    a lives on a product poset whose last `middle` atomic factors match the
    first `middle` atomic factors of b's poset.  Summands: [(u, m, v)] with
    m the meet of the two middle parts; the result is a complex of
    injectives on left x middle x right.
    """
    from lefschetz.cellspace import product_poset

    fa = a.poset.atomic_factors()
    fb = b.poset.atomic_factors()
    left = fa[: len(fa) - middle]
    mid = fa[len(fa) - middle :]
    right = fb[middle:]
    mid_poset = product_poset(mid) if len(mid) != 1 else mid[0]
    triple = product_poset(left + mid + right)
    nl, nm, nr = len(left), len(mid), len(right)

    def mid_cell(c):
        return c if nm > 1 else c[0]

    meet = mid_poset.meet
    terms = {}
    index = {}
    for p, ta in sorted(a.terms.items()):
        for q, tb in sorted(b.terms.items()):
            n = p + q
            for i, ca in enumerate(ta):
                for j, cb in enumerate(tb):
                    m = meet(mid_cell(ca[nl:]), mid_cell(cb[:nm]))
                    if m is None:
                        continue
                    mm = m if nm > 1 else (m,)
                    cell = ca[:nl] + mm + cb[nm:]
                    terms.setdefault(n, []).append(cell)
                    index[(p, i, q, j)] = (n, len(terms[n]) - 1)
    diff = {}
    for (p, i, q, j), (n, k) in index.items():
        sgn_p = _ONE if p % 2 == 0 else -_ONE
        for (i2, ii), v in a.diff.get(p, {}).items():
            if ii == i and (p + 1, i2, q, j) in index:
                _, k2 = index[(p + 1, i2, q, j)]
                diff.setdefault(n, {})[(k2, k)] = (
                    diff.get(n, {}).get((k2, k), QQ(0)) + v
                )
        for (j2, jj), v in b.diff.get(q, {}).items():
            if jj == j and (p, i, q + 1, j2) in index:
                _, k2 = index[(p, i, q + 1, j2)]
                diff.setdefault(n, {})[(k2, k)] = (
                    diff.get(n, {}).get((k2, k), QQ(0)) + sgn_p * v
                )
    out = InjComplex(triple, terms, diff, check=False)
    out._fiber_index = index
    out._fiber_arity = (nl, nm, nr)
    return out


def fiber_tensor_morphism(f, g, middle, source=None, target=None):
    """Functoriality of fiber_tensor in both arguments."""
    src = source if source is not None else fiber_tensor(f.source, g.source, middle)
    tgt = target if target is not None else fiber_tensor(f.target, g.target, middle)
    comps = {}
    for (p, i, q, j), (n, k) in src._fiber_index.items():
        for (i2, ii), v in f.comps.get(p, {}).items():
            if ii != i:
                continue
            for (j2, jj), w in g.comps.get(q, {}).items():
                if jj != j:
                    continue
                key2 = (p, i2, q, j2)
                if key2 in tgt._fiber_index:
                    _, k2 = tgt._fiber_index[key2]
                    comps.setdefault(n, {})[(k2, k)] = (
                        comps.get(n, {}).get((k2, k), QQ(0)) + v * w
                    )
    return InjMorphism(src, tgt, comps, check=False)
