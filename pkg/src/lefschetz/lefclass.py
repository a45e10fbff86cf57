"""Lefschetz classes localized on fixed components, and global traces.

The class of a graph trace kernel is the composite k_Delta -> omega_graph;
the space Hom_D(k_Delta, omega_graph) is identified with one copy of Q per
connected component of the fixed locus, the identification being
normalized so that the trace kernel of the constant sheaf on the closure
of the least cell of a component has class 1 there.  The Hopf-style local
trace is an independent combinatorial oracle for the same numbers.
"""

from __future__ import annotations

from lefschetz.exactlin import QQ, CochainComplex, CochainMap, Matrix, cohomology, euler_trace
from lefschetz.cellspace import CellSelfMap, _ckey
from lefschetz.cellsheaf import SheafComplex, SheafMorphism, elementary_injective_sheaf, pullback
from lefschetz.homalg import InjHomData
from lefschetz.kernels import GraphTraceKernel, KernelSpace, trace_kernel_from_pair
from lefschetz.derived import rgamma_cochain, sheaf_to_inj_morphism

_ZERO = QQ(0)
_ONE = QQ(1)


class LefschetzClass:
    """One exact scalar per connected component of the fixed locus."""

    def __init__(self, phi, locus, values):
        self.phi = phi
        self.locus = locus
        self.values = tuple(QQ(v) for v in values)
        if len(self.values) != len(locus.components):
            raise ValueError("class has the wrong number of components")

    def global_trace(self):
        total = _ZERO
        for v in self.values:
            total = total + v
        return total

    def is_zero(self):
        return all(v == 0 for v in self.values)

    def __repr__(self):
        return f"LefschetzClass({[str(v) for v in self.values]})"

    def __eq__(self, other):
        if not isinstance(other, LefschetzClass):
            return NotImplemented
        return (
            len(self.values) == len(other.values)
            and all(a == b for a, b in zip(self.values, other.values))
        )


class LocalizationBasis:
    """Identification of germs of Hom(k_Delta, omega_graph) along the fixed
    diagonal with Q^{components}.

    A class is a global section of the hom sheaf RHom(k_Delta, omega_graph);
    its localization is the image of its germs in the hypercohomology of
    that hom sheaf restricted to the closure Z of the fixed diagonal cells.
    The space must have one dimension per fixed component and is normalized
    against indicator trace kernels supported on the closure of each
    component's least cell.
    """

    _registry = {}

    def __init__(self, ks, phi):
        from lefschetz.cellspace import subposet
        from lefschetz.cellsheaf import SheafComplex
        from lefschetz.derived import hom_sheaf, rgamma_cochain
        from lefschetz.exactlin import cohomology

        self.ks = ks
        self.phi = phi
        self.locus = phi.fixed_locus()
        self.omega_graph = ks.omega_graph(phi)
        self.hom = InjHomData(ks.k_delta, self.omega_graph)
        ncomp = len(self.locus.components)
        square = ks.square
        zcells = set()
        for s in self.locus.cells:
            diag = _flat_cell(ks.space, s) + _flat_cell(ks.space, s)
            zcells.update(square.down_set(diag))
        self.zcells = zcells
        if not zcells:
            self.dim = 0
            if ncomp:
                raise ValueError(
                    "model discrepancy: empty fixed diagonal with "
                    f"{ncomp} fixed components"
                )
            self.change = Matrix.zero(0, 0)
            return
        hsheaf = hom_sheaf(
            ks.k_delta.to_sheaf(), self.omega_graph.to_sheaf(), support=zcells
        )
        self._hom_data = hsheaf._hom_data
        zposet = subposet(square, zcells)
        stalks = {c: hsheaf.stalks[c] for c in zposet.cells}
        rest = {
            (a, b): hsheaf.rest[(a, b)]
            for a in zposet.cells
            for b, _ in zposet.covers[a]
        }
        self.zposet = zposet
        zsheaf = SheafComplex(zposet, stalks, rest, check=False)
        self.zsheaf = zsheaf
        self.total = rgamma_cochain(zsheaf)
        self.summary = cohomology(self.total)
        self.dim = self.summary.dims.get(0, 0)
        self._offsets = _germ_offsets(zsheaf)
        if self.dim != ncomp:
            raise ValueError(
                "model discrepancy: localized Hom(k_Delta, omega_graph) has "
                f"dimension {self.dim} but the fixed locus has {ncomp} components"
            )
        cols = []
        for comp in self.locus.components:
            cell = comp[0]  # least cell, by construction of components
            nk = _indicator_kernel(ks, phi, cell)
            cols.append(self._germ_coords(nk.class_morphism()))
        m = Matrix.zero(self.dim, ncomp)
        for j, col in enumerate(cols):
            for i, v in enumerate(col):
                m.rows[i][j] = v
        try:
            self.change = m.inverse()
        except ValueError as exc:
            raise ValueError(
                "model discrepancy: indicator trace kernels do not span the "
                "localization space"
            ) from exc

    def _germ_coords(self, class_morphism):
        """H^0 coordinates of the germ cocycle of a class along Z.

        The class restricts to a compatible family of degree-0 stalk germs;
        placing the vertex germs in the cellular total complex gives a
        0-cocycle whose class is the localization.
        """
        vec = [_ZERO] * self.total.dim(0)
        sm = class_morphism.to_sheaf_morphism()
        for z in self.zposet.cells:
            if self.zposet.dims[z] != 0:
                continue
            hd = self._hom_data[z]
            fam = {}
            for y in hd.cells:
                comp = sm.comps[y]
                mats = {p: m for p, m in comp.comps.items()}
                if mats:
                    fam[y] = mats
            coords = hd.kernel(0).coords(hd.family_to_vec(0, fam))
            base = self._offsets[(z, 0)]
            for i, v in enumerate(coords):
                vec[base + i] = v
        if not self.summary.dims.get(0, 0):
            return []
        return self.summary.express(0, vec)

    @staticmethod
    def get(ks, phi):
        key = (id(ks), id(phi))
        lb = LocalizationBasis._registry.get(key)
        if lb is None:
            lb = LocalizationBasis(ks, phi)
            LocalizationBasis._registry[key] = lb
        return lb

    def localize(self, class_morphism):
        """Component coordinates of a morphism k_Delta -> omega_graph."""
        if self.dim == 0:
            return LefschetzClass(self.phi, self.locus, [])
        coords = self._germ_coords(class_morphism)
        vals = self.change.apply(coords)
        return LefschetzClass(self.phi, self.locus, vals)


def _germ_offsets(zsheaf):
    poset = zsheaf.poset
    blocks = {}
    for x in poset.cells:
        s = zsheaf.stalks[x]
        for q in s.degrees():
            m = poset.dims[x] + q
            blocks.setdefault(m, []).append((x, q))
    offs = {}
    for m, bl in blocks.items():
        bl.sort(key=lambda t: (poset.cell_index[t[0]], t[1]))
        off = 0
        for (x, q) in bl:
            offs[(x, q)] = off
            off += zsheaf.stalks[x].dim(q)
    return offs


def _flat_cell(poset, c):
    return c if len(poset.atomic_factors()) > 1 else (c,)


def _indicator_kernel(ks, phi, cell):
    """Trace kernel of the constant sheaf on the closure of a fixed cell."""
    F = elementary_injective_sheaf(ks.space, cell)
    Phi = _transport_identity(ks, phi, F)
    return trace_kernel_from_pair(F, Phi, phi)


def _transport_identity(ks, phi, F):
    """The tautological map phi^{-1} F -> F for a phi-stable down-set sheaf."""
    phi_map = phi.poset_map()
    pb = pullback(phi_map, F)
    comps = {}
    for x in ks.space.cells:
        src = pb.stalks[x]
        tgt = F.stalks[x]
        mats = {}
        for n in src.degrees():
            d = min(src.dim(n), tgt.dim(n))
            m = Matrix.zero(tgt.dim(n), src.dim(n))
            for i in range(d):
                m.rows[i][i] = _ONE
            mats[n] = m
        comps[x] = CochainMap(src, tgt, mats, check=False)
    return SheafMorphism(pb, F, comps)


def localization(ks, phi):
    return LocalizationBasis.get(ks, phi)


def microlocal_lefschetz_class(gtk):
    """Class of a graph trace kernel in the localization basis."""
    lb = LocalizationBasis.get(gtk.ks, gtk.phi)
    return lb.localize(gtk.class_morphism())


def lefschetz_class_of_pair(F, Phi, phi):
    gtk = trace_kernel_from_pair(F, Phi, phi)
    return microlocal_lefschetz_class(gtk)


def global_trace(cls):
    return cls.global_trace()


def pullback_on_cochains(F, phi):
    """The cochain-level map RGamma(F) -> RGamma(phi^{-1} F).

    Sends the slot of a cell s to the slot of phi(s) when phi preserves its
    dimension, with the orientation sign; this is the classical simplicial
    pullback with local coefficients.
    """
    poset = F.poset
    total = rgamma_cochain(F)
    pb = pullback(phi.poset_map(), F)
    total_pb = rgamma_cochain(pb)
    offs_src = _rgamma_offsets(F)
    offs_tgt = _rgamma_offsets(pb)
    comps = {}
    for m in total.degrees():
        mat = Matrix.zero(total_pb.dim(m), total.dim(m))
        nonzero = False
        for x in poset.cells:
            fx = phi(x)
            if poset.dims[fx] != poset.dims[x]:
                continue
            sgn = QQ(phi.sign(x))
            s = F.stalks[fx]
            for q in s.degrees():
                if poset.dims[x] + q != m:
                    continue
                src_base = offs_src.get((fx, q))
                tgt_base = offs_tgt.get((x, q))
                if src_base is None or tgt_base is None:
                    continue
                for t in range(s.dim(q)):
                    mat.rows[tgt_base + t][src_base + t] = sgn
                    nonzero = True
        if nonzero:
            comps[m] = mat
    return CochainMap(total, total_pb, comps, check=True), total, total_pb, pb


def _rgamma_offsets(F):
    poset = F.poset
    blocks = {}
    for x in poset.cells:
        s = F.stalks[x]
        for q in s.degrees():
            m = poset.dims[x] + q
            blocks.setdefault(m, []).append((x, q))
    offs = {}
    for m, bl in blocks.items():
        bl.sort(key=lambda t: (poset.cell_index[t[0]], t[1]))
        off = 0
        for (x, q) in bl:
            offs[(x, q)] = off
            off += F.stalks[x].dim(q)
    return offs


def rgamma_of_morphism(psi):
    """Induced map on cellular total complexes of a sheaf morphism."""
    src = rgamma_cochain(psi.source)
    tgt = rgamma_cochain(psi.target)
    offs_s = _rgamma_offsets(psi.source)
    offs_t = _rgamma_offsets(psi.target)
    poset = psi.source.poset
    comps = {}
    for m in src.degrees():
        if tgt.dim(m) == 0:
            continue
        mat = Matrix.zero(tgt.dim(m), src.dim(m))
        nonzero = False
        for x in poset.cells:
            sa = psi.source.stalks[x]
            for q in sa.degrees():
                if poset.dims[x] + q != m:
                    continue
                mcomp = psi.comps[x].comp(q)
                if mcomp.nrows == 0:
                    continue
                sb = offs_s[(x, q)]
                tb = offs_t.get((x, q))
                if tb is None:
                    continue
                for i in range(mcomp.nrows):
                    for j in range(mcomp.ncols):
                        if mcomp.rows[i][j]:
                            mat.rows[tb + i][sb + j] = mcomp.rows[i][j]
                            nonzero = True
        if nonzero:
            comps[m] = mat
    return CochainMap(src, tgt, comps, check=False)


def cohomological_trace(F, Phi, phi):
    """Sum of (-1)^p tr(H^p(X;F) -> H^p(X;phi^{-1}F) -> H^p(X;F))."""
    pb_map, total, total_pb, pb = pullback_on_cochains(F, phi)
    # rebase Phi components onto the locally built pullback
    psi = SheafMorphism(
        pb, F, {c: Phi.comps[c] for c in F.poset.cells}, check=False
    )
    phi_gamma = rgamma_of_morphism(psi)
    endo = phi_gamma.compose(pb_map)
    return euler_trace(endo)


def hopf_local_trace(F, Phi, phi):
    """Cell-level localization of the trace: the Hopf oracle.

    Component value: sum over fixed cells s of
    (-1)^{dim s} sign(phi|s) tr_alt(Phi_s).
    """
    locus = phi.fixed_locus()
    poset = F.poset
    values = []
    for comp in locus.components:
        total = _ZERO
        for s in comp:
            t = _ZERO
            m = Phi.comps[s]
            for q in F.stalks[s].degrees():
                mm = m.comp(q)
                if mm.nrows == mm.ncols and mm.nrows:
                    tq = mm.trace()
                    t = t + (tq if q % 2 == 0 else -tq)
            sgn = QQ(locus.signs[s]) * (QQ(1) if poset.dims[s] % 2 == 0 else QQ(-1))
            total = total + sgn * t
        values.append(total)
    return LefschetzClass(phi, locus, values)
