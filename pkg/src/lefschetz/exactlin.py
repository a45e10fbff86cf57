"""Exact rational linear algebra and bounded cochain complexes.

All other modules build on the primitives here: dense matrices over Q,
bounded cochain complexes, cohomology with explicit cocycle bases and
projections, alternating traces, and lifts through quasi-isomorphisms.

Sign conventions (fixed here once, imported everywhere else):

* tensor:  d(x (x) y) = dx (x) y + (-1)^|x| x (x) dy
* hom:     d(f) = d_target . f - (-1)^|f| f . d_source
* dual:    dual(C) = hom_complex(C, Q in degree 0)
* shift:   C[n]^p = C^{n+p},  d_{C[n]} = (-1)^n d_C
* cone:    cone(f: A -> B)^p = A^{p+1} (+) B^p,
           d(a, b) = (-d_A a, f(a) + d_B b)
"""

from __future__ import annotations

from fractions import Fraction

try:  # gmpy2.mpq is interchangeable with Fraction and much faster
    from gmpy2 import mpq as _mpq

    def QQ(num=0, den=1):
        """Exact rational scalar."""
        return _mpq(num, den)

except ImportError:  # pragma: no cover

    def QQ(num=0, den=1):
        """Exact rational scalar."""
        return Fraction(num, den)


_ZERO = QQ(0)
_ONE = QQ(1)


def scalar_from_string(s):
    """Parse "num/den" (or "num") into an exact scalar."""
    s = str(s).strip()
    if "/" in s:
        num, den = s.split("/")
        return QQ(int(num), int(den))
    return QQ(int(s))


def scalar_to_string(x):
    """Serialize an exact scalar as "num/den" or "num"."""
    f = Fraction(x)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


class Matrix:
    """Dense matrix with exact rational entries.

    Treated as immutable after construction; equality is exact entrywise.
    Shape convention throughout the package: a map V -> W with dim V = n and
    dim W = m is an m x n matrix acting on column vectors.
    """

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows, ncols, rows=None):
        self.nrows = nrows
        self.ncols = ncols
        if rows is None:
            self.rows = [[_ZERO] * ncols for _ in range(nrows)]
        else:
            if len(rows) != nrows:
                raise ValueError(f"expected {nrows} rows, got {len(rows)}")
            self.rows = [[QQ(x) for x in row] for row in rows]
            for row in self.rows:
                if len(row) != ncols:
                    raise ValueError("ragged matrix rows")

    @staticmethod
    def identity(n):
        m = Matrix(n, n)
        for i in range(n):
            m.rows[i][i] = _ONE
        return m

    @staticmethod
    def zero(nrows, ncols):
        return Matrix(nrows, ncols)

    @staticmethod
    def from_entries(entries):
        entries = [list(r) for r in entries]
        nrows = len(entries)
        ncols = len(entries[0]) if entries else 0
        return Matrix(nrows, ncols, entries)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (
            self.nrows == other.nrows
            and self.ncols == other.ncols
            and self.rows == other.rows
        )

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return f"Matrix({self.nrows}x{self.ncols}, {self.rows!r})"

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def copy(self):
        m = Matrix(self.nrows, self.ncols)
        m.rows = [row[:] for row in self.rows]
        return m

    def is_zero(self):
        return all(x == 0 for row in self.rows for x in row)

    def __add__(self, other):
        if self.nrows != other.nrows or self.ncols != other.ncols:
            raise ValueError("shape mismatch in +")
        m = Matrix(self.nrows, self.ncols)
        m.rows = [
            [a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)
        ]
        return m

    def __sub__(self, other):
        if self.nrows != other.nrows or self.ncols != other.ncols:
            raise ValueError("shape mismatch in -")
        m = Matrix(self.nrows, self.ncols)
        m.rows = [
            [a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)
        ]
        return m

    def __neg__(self):
        m = Matrix(self.nrows, self.ncols)
        m.rows = [[-a for a in row] for row in self.rows]
        return m

    def scale(self, c):
        c = QQ(c)
        m = Matrix(self.nrows, self.ncols)
        m.rows = [[c * a for a in row] for row in self.rows]
        return m

    def __mul__(self, other):
        if isinstance(other, Matrix):
            if self.ncols != other.nrows:
                raise ValueError(
                    f"shape mismatch in *: {self.nrows}x{self.ncols} by "
                    f"{other.nrows}x{other.ncols}"
                )
            out = Matrix(self.nrows, other.ncols)
            ocols = other.ncols
            orows = other.rows
            for i, row in enumerate(self.rows):
                acc = [_ZERO] * ocols
                for k, a in enumerate(row):
                    if a:
                        rk = orows[k]
                        for j in range(ocols):
                            b = rk[j]
                            if b:
                                acc[j] = acc[j] + a * b
                out.rows[i] = acc
            return out
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def transpose(self):
        m = Matrix(self.ncols, self.nrows)
        if self.nrows == 0:
            m.rows = [[] for _ in range(self.ncols)]
        else:
            m.rows = [list(col) for col in zip(*self.rows)]
        return m

    def apply(self, vec):
        """Matrix-vector product; vec is a list of scalars."""
        if len(vec) != self.ncols:
            raise ValueError("vector length mismatch")
        out = []
        for row in self.rows:
            s = _ZERO
            for a, x in zip(row, vec):
                if a and x:
                    s = s + a * x
            out.append(s)
        return out

    def hstack(self, other):
        if self.nrows != other.nrows:
            raise ValueError("hstack row mismatch")
        m = Matrix(self.nrows, self.ncols + other.ncols)
        m.rows = [ra + rb for ra, rb in zip(self.rows, other.rows)]
        return m

    def vstack(self, other):
        if self.ncols != other.ncols:
            raise ValueError("vstack col mismatch")
        m = Matrix(self.nrows + other.nrows, self.ncols)
        m.rows = [row[:] for row in self.rows] + [row[:] for row in other.rows]
        return m

    def submatrix(self, row_idx, col_idx):
        m = Matrix(len(row_idx), len(col_idx))
        m.rows = [[self.rows[i][j] for j in col_idx] for i in row_idx]
        return m

    def trace(self):
        if self.nrows != self.ncols:
            raise ValueError("trace of non-square matrix")
        t = _ZERO
        for i in range(self.nrows):
            t = t + self.rows[i][i]
        return t

    def rref(self):
        """Reduced row echelon form.

        Returns (R, pivots) where pivots is the list of pivot column indices.
        """
        R = [row[:] for row in self.rows]
        nrows, ncols = self.nrows, self.ncols
        pivots = []
        r = 0
        for c in range(ncols):
            if r >= nrows:
                break
            pr = None
            for i in range(r, nrows):
                if R[i][c]:
                    pr = i
                    break
            if pr is None:
                continue
            R[r], R[pr] = R[pr], R[r]
            pv = R[r][c]
            if pv != 1:
                inv = _ONE / pv
                R[r] = [inv * x for x in R[r]]
            rowr = R[r]
            for i in range(nrows):
                if i != r and R[i][c]:
                    f = R[i][c]
                    Ri = R[i]
                    for j in range(c, ncols):
                        if rowr[j]:
                            Ri[j] = Ri[j] - f * rowr[j]
            pivots.append(c)
            r += 1
        out = Matrix(nrows, ncols)
        out.rows = R
        return out, pivots

    def rank(self):
        _, pivots = self.rref()
        return len(pivots)

    def kernel_basis(self):
        """Columns spanning the kernel, as a ncols x k matrix."""
        R, pivots = self.rref()
        pivset = set(pivots)
        free = [j for j in range(self.ncols) if j not in pivset]
        cols = []
        for f in free:
            v = [_ZERO] * self.ncols
            v[f] = _ONE
            for r, p in enumerate(pivots):
                v[p] = -R.rows[r][f]
            cols.append(v)
        out = Matrix(self.ncols, len(cols))
        for j, v in enumerate(cols):
            for i in range(self.ncols):
                out.rows[i][j] = v[i]
        return out

    def column_space_pivots(self):
        _, pivots = self.rref()
        return pivots

    def solve(self, rhs):
        """Solve self * x = rhs for one rhs vector; None if inconsistent."""
        aug = Matrix(self.nrows, self.ncols + 1)
        for i in range(self.nrows):
            aug.rows[i] = self.rows[i] + [QQ(rhs[i])]
        R, pivots = aug.rref()
        if self.ncols in pivots:
            return None
        x = [_ZERO] * self.ncols
        for r, p in enumerate(pivots):
            x[p] = R.rows[r][self.ncols]
        return x

    def solve_matrix(self, rhs):
        """Solve self * X = rhs (matrix rhs); None if inconsistent."""
        k = rhs.ncols
        aug = Matrix(self.nrows, self.ncols + k)
        for i in range(self.nrows):
            aug.rows[i] = self.rows[i] + rhs.rows[i][:]
        R, pivots = aug.rref()
        for p in pivots:
            if p >= self.ncols:
                return None
        X = Matrix(self.ncols, k)
        for r, p in enumerate(pivots):
            X.rows[p] = R.rows[r][self.ncols :]
        return X

    def inverse(self):
        if self.nrows != self.ncols:
            raise ValueError("inverse of non-square matrix")
        X = self.solve_matrix(Matrix.identity(self.nrows))
        if X is None or (self * X) != Matrix.identity(self.nrows):
            raise ValueError("matrix is singular")
        return X


def block_diag(blocks):
    nr = sum(b.nrows for b in blocks)
    nc = sum(b.ncols for b in blocks)
    out = Matrix(nr, nc)
    r0 = c0 = 0
    for b in blocks:
        for i in range(b.nrows):
            out.rows[r0 + i][c0 : c0 + b.ncols] = b.rows[i][:]
        r0 += b.nrows
        c0 += b.ncols
    return out


def kronecker(a, b):
    """Kronecker product; basis of V (x) W ordered (i, j) -> i * dim W + j."""
    out = Matrix(a.nrows * b.nrows, a.ncols * b.ncols)
    for i in range(a.nrows):
        for k in range(a.ncols):
            x = a.rows[i][k]
            if not x:
                continue
            for j in range(b.nrows):
                bj = b.rows[j]
                orow = out.rows[i * b.nrows + j]
                for l in range(b.ncols):
                    if bj[l]:
                        orow[k * b.ncols + l] = x * bj[l]
    return out


class CochainComplex:
    """Bounded cochain complex of finite-dimensional Q-vector spaces.

    spaces maps degree -> dimension (only nonzero dims stored); diff maps
    degree p -> the matrix of d^p : C^p -> C^{p+1} (shape dim_{p+1} x dim_p).
    """

    __slots__ = ("spaces", "diff", "lo", "hi")

    def __init__(self, spaces, diff, check=True):
        self.spaces = {p: d for p, d in spaces.items() if d > 0}
        degs = sorted(self.spaces)
        self.lo = degs[0] if degs else 0
        self.hi = degs[-1] if degs else 0
        self.diff = {}
        for p, m in diff.items():
            if m is not None and (m.nrows or m.ncols):
                if m.nrows != self.dim(p + 1) or m.ncols != self.dim(p):
                    raise ValueError(f"differential at degree {p} has wrong shape")
                if not m.is_zero():
                    self.diff[p] = m
        if check:
            self.validate()

    def validate(self):
        for p in list(self.diff):
            d1 = self.diff.get(p)
            d2 = self.diff.get(p + 1)
            if d1 is not None and d2 is not None:
                if not (d2 * d1).is_zero():
                    raise ValueError(f"d^2 != 0 at degree {p}")

    def dim(self, p):
        return self.spaces.get(p, 0)

    def degrees(self):
        return sorted(self.spaces)

    def total_dim(self):
        return sum(self.spaces.values())

    def d(self, p):
        m = self.diff.get(p)
        if m is None:
            return Matrix.zero(self.dim(p + 1), self.dim(p))
        return m

    def __eq__(self, other):
        if not isinstance(other, CochainComplex):
            return NotImplemented
        if self.spaces != other.spaces:
            return False
        degs = set(self.spaces)
        return all(self.d(p) == other.d(p) for p in degs)

    def __repr__(self):
        return f"CochainComplex({self.spaces})"

    def is_acyclic(self):
        summary = cohomology(self)
        return all(d == 0 for d in summary.dims.values())


ZERO_COMPLEX = CochainComplex({}, {})


def unit_complex(dim=1, degree=0):
    """Q^dim concentrated in one degree."""
    return CochainComplex({degree: dim}, {})


class CochainMap:
    """Chain map between cochain complexes; components stored per degree."""

    __slots__ = ("source", "target", "comps")

    def __init__(self, source, target, comps, check=True):
        self.source = source
        self.target = target
        self.comps = {}
        for p, m in comps.items():
            if m is None:
                continue
            if m.nrows != target.dim(p) or m.ncols != source.dim(p):
                raise ValueError(f"component at degree {p} has wrong shape")
            if not m.is_zero():
                self.comps[p] = m
        if check:
            self.validate()

    def validate(self):
        lo = min(self.source.lo, self.target.lo)
        hi = max(self.source.hi, self.target.hi)
        for p in range(lo, hi + 1):
            lhs = self.target.d(p) * self.comp(p)
            rhs = self.comp(p + 1) * self.source.d(p)
            if lhs != rhs:
                raise ValueError(f"map does not commute with d at degree {p}")

    def comp(self, p):
        m = self.comps.get(p)
        if m is None:
            return Matrix.zero(self.target.dim(p), self.source.dim(p))
        return m

    @staticmethod
    def zero(source, target):
        return CochainMap(source, target, {}, check=False)

    @staticmethod
    def identity(c):
        return CochainMap(
            c, c, {p: Matrix.identity(c.dim(p)) for p in c.degrees()}, check=False
        )

    def __eq__(self, other):
        if not isinstance(other, CochainMap):
            return NotImplemented
        if self.source.spaces != other.source.spaces:
            return False
        if self.target.spaces != other.target.spaces:
            return False
        degs = set(self.source.spaces) | set(self.target.spaces)
        return all(self.comp(p) == other.comp(p) for p in degs)

    def __add__(self, other):
        degs = set(self.comps) | set(other.comps)
        return CochainMap(
            self.source,
            self.target,
            {p: self.comp(p) + other.comp(p) for p in degs},
            check=False,
        )

    def __sub__(self, other):
        degs = set(self.comps) | set(other.comps)
        return CochainMap(
            self.source,
            self.target,
            {p: self.comp(p) - other.comp(p) for p in degs},
            check=False,
        )

    def __neg__(self):
        return CochainMap(
            self.source, self.target, {p: -m for p, m in self.comps.items()}, check=False
        )

    def scale(self, c):
        return CochainMap(
            self.source,
            self.target,
            {p: m.scale(c) for p, m in self.comps.items()},
            check=False,
        )

    def compose(self, other):
        """self . other (apply other first)."""
        degs = set(other.comps) | set(self.comps)
        comps = {}
        for p in degs:
            comps[p] = self.comp(p) * other.comp(p)
        return CochainMap(other.source, self.target, comps, check=False)

    def is_zero(self):
        return all(m.is_zero() for m in self.comps.values())

    def is_quasi_iso(self):
        return cone(self).is_acyclic()


class CohomologySummary:
    """Per-degree cohomology data.

    dims[p]           dimension of H^p
    cocycles[p]       dim C^p x h_p matrix whose columns are cocycles
                      projecting to the standard basis of H^p
    projection[p]     h_p x dim C^p matrix, zero on coboundaries, with
                      projection . cocycles = identity
    """

    __slots__ = ("complex", "dims", "cocycles", "projection")

    def __init__(self, complex, dims, cocycles, projection):
        self.complex = complex
        self.dims = dims
        self.cocycles = cocycles
        self.projection = projection

    def total_dim(self):
        return sum(self.dims.values())

    def euler(self):
        chi = 0
        for p, d in self.dims.items():
            chi += d if p % 2 == 0 else -d
        return chi

    def express(self, p, vec):
        """Coordinates in H^p of a cocycle vector in C^p."""
        return self.projection[p].apply(vec)


def cohomology(c):
    """Cohomology of a bounded cochain complex with explicit bases."""
    dims = {}
    cocycles = {}
    projection = {}
    for p in c.degrees():
        n = c.dim(p)
        dp = c.d(p)
        dprev = c.d(p - 1)
        Z = dp.kernel_basis()  # n x z
        # columns of B = image of d^{p-1}
        B = dprev  # n x m; its column space is the boundary space
        # Work in kernel coordinates: express boundaries inside Z.
        # Solve Z * Y = B (solvable since im d^{p-1} <= ker d^p).
        if Z.ncols == 0:
            dims[p] = 0
            cocycles[p] = Matrix.zero(n, 0)
            projection[p] = Matrix.zero(0, n)
            continue
        Y = Z.solve_matrix(B) if B.ncols else Matrix.zero(Z.ncols, 0)
        if Y is None:
            raise ValueError("boundaries do not lie in cocycles (d^2 != 0?)")
        # Choose kernel coordinates complementary to the boundary image:
        # row-reduce [Y | I]; identity columns picked as pivots complete
        # col(Y) to a basis, and those coordinates represent H^p.
        z = Z.ncols
        YI = Y.hstack(Matrix.identity(z))
        R, piv = YI.rref()
        free_rows = [j for j in piv if j >= Y.ncols]  # identity columns used
        h = len(free_rows)
        dims[p] = h
        # basis vectors of H^p: kernel-coordinate unit vectors for chosen cols
        chosen = [j - Y.ncols for j in free_rows]
        C = Matrix.zero(n, h)
        for k, j in enumerate(chosen):
            for i in range(n):
                C.rows[i][k] = Z.rows[i][j]
        cocycles[p] = C
        # projection: map a cocycle v to H-coordinates. Solve in terms of
        # [B | C] * w = v; the C-part of w gives coordinates. Build the
        # projector once by solving against the full space basis: express
        # every kernel generator.
        BC = B.hstack(C) if B.ncols else C
        # projector on Z: coords = last h rows of solution of BC * w = Z
        W = BC.solve_matrix(Z)
        if W is None:
            raise ValueError("internal: cocycle not in boundary+basis span")
        PZ = Matrix.zero(h, z)
        for k in range(h):
            PZ.rows[k] = W.rows[B.ncols + k][:]
        # extend from kernel coordinates to all of C^p, zero off the kernel:
        # find left inverse L of Z (z x n) with L*Z = id on kernel coords,
        # then projection = PZ * L restricted... choose L via rref of Z.
        _, zpiv = Z.transpose().rref()
        # Solve for L: we need L with L * Z = I_z. Use pivot rows of Z.
        Zt = Z.transpose()  # z x n
        Lt = Zt.solve_matrix(Matrix.identity(z))  # n x z with Zt * Lt = I
        if Lt is None:
            raise ValueError("internal: kernel basis not independent")
        L = Lt.transpose()  # z x n, L * Z = I
        # Kill the off-kernel directions so boundaries map to zero exactly:
        # any vector v in C^p decomposes v = Z a + r; projection must be
        # invariant only on ker; for cocycles r = 0, so PZ * L suffices on
        # cocycles, and on boundaries B = Z * Y gives PZ * Y = 0 by choice.
        projection[p] = PZ * L
    return CohomologySummary(c, dims, cocycles, projection)


def euler_trace(f):
    """Alternating trace of the map induced on cohomology by f.

    Requires source = target (an endomorphism commuting with d).
    """
    if f.source is not f.target and f.source != f.target:
        raise ValueError("euler_trace requires an endomorphism")
    summary = cohomology(f.source)
    total = _ZERO
    for p, h in summary.dims.items():
        if h == 0:
            continue
        m = summary.projection[p] * (f.comp(p) * summary.cocycles[p])
        t = m.trace()
        total = total + (t if p % 2 == 0 else -t)
    return total


def hopf_trace(f):
    """Alternating trace at the cochain level; equals euler_trace exactly."""
    total = _ZERO
    for p in f.source.degrees():
        m = f.comp(p)
        if m.nrows == m.ncols and m.nrows:
            t = m.trace()
            total = total + (t if p % 2 == 0 else -t)
    return total


def shift(c, n):
    """C[n]^p = C^{p+n} with differential (-1)^n d."""
    sgn = _ONE if n % 2 == 0 else -_ONE
    spaces = {p - n: d for p, d in c.spaces.items()}
    diff = {p - n: m.scale(sgn) for p, m in c.diff.items()}
    return CochainComplex(spaces, diff, check=False)


def shift_map(f, n):
    sgn = 1
    return CochainMap(
        shift(f.source, n),
        shift(f.target, n),
        {p - n: m.scale(sgn) for p, m in f.comps.items()},
        check=False,
    )


def cone(f):
    """Mapping cone of f : A -> B; cone^p = A^{p+1} (+) B^p."""
    A, B = f.source, f.target
    spaces = {}
    los = []
    if A.spaces:
        los.append(A.lo - 1)
    degs = set(p - 1 for p in A.spaces) | set(B.spaces)
    for p in degs:
        spaces[p] = A.dim(p + 1) + B.dim(p)
    diff = {}
    for p in degs:
        na, nb = A.dim(p + 1), B.dim(p)
        na1, nb1 = A.dim(p + 2), B.dim(p + 1)
        m = Matrix.zero(na1 + nb1, na + nb)
        dA = A.d(p + 1)
        dB = B.d(p)
        fp = f.comp(p + 1)
        for i in range(na1):
            for j in range(na):
                m.rows[i][j] = -dA.rows[i][j]
        for i in range(nb1):
            for j in range(na):
                m.rows[na1 + i][j] = fp.rows[i][j]
            for j in range(nb):
                m.rows[na1 + i][na + j] = dB.rows[i][j]
        diff[p] = m
    return CochainComplex(spaces, diff, check=False)


class TensorIndex:
    """Basis bookkeeping for (C (x) D)^n = sum over p+q=n of C^p (x) D^q.

    Blocks ordered by p ascending; inside a block the basis is
    (i, j) -> i * dim D^q + j.
    """

    def __init__(self, c, d):
        self.c = c
        self.d = d
        self.blocks = {}  # n -> list of (p, q, offset, dimc, dimd)
        for p in c.degrees():
            for q in d.degrees():
                n = p + q
                self.blocks.setdefault(n, []).append((p, q))
        self.offsets = {}
        self.dims = {}
        for n, pairs in self.blocks.items():
            pairs.sort()
            off = 0
            for p, q in pairs:
                self.offsets[(p, q)] = off
                off += c.dim(p) * d.dim(q)
            self.dims[n] = off

    def index(self, p, q, i, j):
        return self.offsets[(p, q)] + i * self.d.dim(q) + j


def tensor(c, d):
    """Tensor product complex with the pinned Koszul sign."""
    idx = TensorIndex(c, d)
    spaces = {n: dim for n, dim in idx.dims.items() if dim}
    diff = {}
    for n in sorted(spaces):
        m = Matrix.zero(idx.dims.get(n + 1, 0), idx.dims[n])
        if m.nrows == 0 or m.ncols == 0:
            continue
        for p, q in idx.blocks[n]:
            dc = c.d(p)
            dd = d.d(q)
            sgn = _ONE if p % 2 == 0 else -_ONE
            # dx (x) y : block (p, q) -> (p+1, q)
            if (p + 1, q) in idx.offsets:
                for i2 in range(c.dim(p + 1)):
                    for i in range(c.dim(p)):
                        a = dc.rows[i2][i]
                        if a:
                            for j in range(d.dim(q)):
                                m.rows[idx.index(p + 1, q, i2, j)][
                                    idx.index(p, q, i, j)
                                ] = a
            # (-1)^p x (x) dy : block (p, q) -> (p, q+1)
            if (p, q + 1) in idx.offsets:
                for j2 in range(d.dim(q + 1)):
                    for j in range(d.dim(q)):
                        b = dd.rows[j2][j]
                        if b:
                            for i in range(c.dim(p)):
                                m.rows[idx.index(p, q + 1, i, j2)][
                                    idx.index(p, q, i, j)
                                ] = sgn * b
        diff[n] = m
    return CochainComplex(spaces, diff, check=False)


def tensor_map(f, g):
    """f (x) g on tensor complexes, with Koszul sign conventions.

    For degreewise maps (chain maps) no signs appear.
    """
    src = tensor(f.source, g.source)
    tgt = tensor(f.target, g.target)
    isrc = TensorIndex(f.source, g.source)
    itgt = TensorIndex(f.target, g.target)
    comps = {}
    for n in isrc.dims:
        if isrc.dims[n] == 0 or itgt.dims.get(n, 0) == 0:
            continue
        m = Matrix.zero(itgt.dims[n], isrc.dims[n])
        for p, q in isrc.blocks[n]:
            fp = f.comp(p)
            gq = g.comp(q)
            if (p, q) not in itgt.offsets:
                continue
            for i2 in range(f.target.dim(p)):
                for i in range(f.source.dim(p)):
                    a = fp.rows[i2][i]
                    if not a:
                        continue
                    for j2 in range(g.target.dim(q)):
                        for j in range(g.source.dim(q)):
                            b = gq.rows[j2][j]
                            if b:
                                m.rows[itgt.index(p, q, i2, j2)][
                                    isrc.index(p, q, i, j)
                                ] = a * b
        comps[n] = m
    return CochainMap(src, tgt, comps, check=False)


class HomIndex:
    """Basis bookkeeping for Hom(C, D)^n = prod over p of Hom(C^p, D^{p+n}).

    Blocks ordered by p ascending; inside a block the basis element (i, j)
    is the map sending basis vector i of C^p to basis vector j of D^{p+n},
    indexed as i * dim D^{p+n} + j.
    """

    def __init__(self, c, d):
        self.c = c
        self.d = d
        self.blocks = {}
        for p in c.degrees():
            for q in d.degrees():
                n = q - p
                self.blocks.setdefault(n, []).append(p)
        self.offsets = {}
        self.dims = {}
        for n, ps in self.blocks.items():
            ps.sort()
            off = 0
            for p in ps:
                self.offsets[(n, p)] = off
                off += c.dim(p) * d.dim(p + n)
            self.dims[n] = off

    def index(self, n, p, i, j):
        return self.offsets[(n, p)] + i * self.d.dim(p + n) + j


def hom_complex(c, d):
    """Hom complex with differential d(f) = d_D . f - (-1)^|f| f . d_C."""
    idx = HomIndex(c, d)
    spaces = {n: dim for n, dim in idx.dims.items() if dim}
    diff = {}
    for n in sorted(set(spaces) | set(k - 1 for k in spaces)):
        rows = idx.dims.get(n + 1, 0)
        cols = idx.dims.get(n, 0)
        if rows == 0 or cols == 0:
            continue
        m = Matrix.zero(rows, cols)
        sgn = _ONE if n % 2 == 0 else -_ONE
        for p in idx.blocks.get(n, []):
            # component f_p : C^p -> D^{p+n}
            # (d_D . f)_p : C^p -> D^{p+n+1}, lands in block (n+1, p)
            dD = d.d(p + n)
            if (n + 1, p) in idx.offsets:
                for i in range(c.dim(p)):
                    for j in range(d.dim(p + n)):
                        src = idx.index(n, p, i, j)
                        for j2 in range(d.dim(p + n + 1)):
                            a = dD.rows[j2][j]
                            if a:
                                m.rows[idx.index(n + 1, p, i, j2)][src] = (
                                    m.rows[idx.index(n + 1, p, i, j2)][src] + a
                                )
            # (f . d_C)_{p-1} : C^{p-1} -> D^{p+n}, lands in block (n+1, p-1)
            dC = c.d(p - 1)
            if (n + 1, p - 1) in idx.offsets:
                for i in range(c.dim(p - 1)):
                    for j in range(d.dim(p + n)):
                        for i2 in range(c.dim(p)):
                            a = dC.rows[i2][i]
                            if a:
                                tgt = idx.index(n + 1, p - 1, i, j)
                                src = idx.index(n, p, i2, j)
                                m.rows[tgt][src] = m.rows[tgt][src] - sgn * a
        diff[n] = m
    return CochainComplex(spaces, diff, check=False)


def hom_element_to_comps(c, d, n, vec):
    """Convert Hom(C, D)^n coordinates into per-degree matrices {p: C^p -> D^{p+n}}."""
    idx = HomIndex(c, d)
    comps = {}
    for p in idx.blocks.get(n, []):
        m = Matrix.zero(d.dim(p + n), c.dim(p))
        for i in range(c.dim(p)):
            for j in range(d.dim(p + n)):
                m.rows[j][i] = QQ(vec[idx.index(n, p, i, j)])
        comps[p] = m
    return comps


def comps_to_hom_element(c, d, n, comps):
    """Inverse of hom_element_to_comps."""
    idx = HomIndex(c, d)
    vec = [_ZERO] * idx.dims.get(n, 0)
    for p in idx.blocks.get(n, []):
        m = comps.get(p)
        if m is None:
            continue
        for i in range(c.dim(p)):
            for j in range(d.dim(p + n)):
                vec[idx.index(n, p, i, j)] = m.rows[j][i]
    return vec


def dual(c):
    """dual(C) = hom_complex(C, Q in degree 0)."""
    return hom_complex(c, unit_complex())


def dual_map(f):
    """Contravariant dual of a chain map on dual complexes.

    dual(f) : dual(target) -> dual(source); component in degree -p is the
    transpose of f's component in degree p.
    """
    ds = dual(f.target)
    dt = dual(f.source)
    comps = {}
    for p, m in f.comps.items():
        comps[-p] = m.transpose()
    return CochainMap(ds, dt, comps, check=False)


def direct_sum(cs):
    spaces = {}
    for c in cs:
        for p, d in c.spaces.items():
            spaces[p] = spaces.get(p, 0) + d
    diff = {}
    degs = sorted(spaces)
    for p in degs:
        blocks = [c.d(p) for c in cs]
        diff[p] = block_diag(blocks)
    return CochainComplex(spaces, diff, check=False)


def lift_through_quasi_iso(f, q):
    """Lift f : A -> C through a quasi-isomorphism q : B -> C.

    Returns g : A -> B with q . g homotopic to f (exactly: q.g - f = dh + hd
    for a degree -1 map h). Raises ValueError naming the failing degree when
    no lift exists.
    """
    A, B, C = f.source, q.source, q.target
    if f.target != C and f.target.spaces != C.spaces:
        raise ValueError("lift: f and q must share their target")
    # Unknowns: g_p : A^p -> B^p for all p; h_p : A^p -> C^{p-1}.
    degs = sorted(set(A.degrees()) | set(B.degrees()) | set(C.degrees()))
    if not degs:
        return CochainMap.zero(A, B)
    lo, hi = degs[0] - 1, degs[-1] + 1
    g_index = {}
    h_index = {}
    nvar = 0
    for p in range(lo, hi + 1):
        na, nb = A.dim(p), B.dim(p)
        if na and nb:
            g_index[p] = nvar
            nvar += na * nb
        nc = C.dim(p - 1)
        if na and nc:
            h_index[p] = nvar
            nvar += na * nc
    rows = []
    rhs = []

    def g_var(p, i, j):
        # g_p basis entry: B-row i, A-col j
        return g_index[p] + i * A.dim(p) + j

    def h_var(p, i, j):
        return h_index[p] + i * A.dim(p) + j

    # chain map equations: d_B g_p - g_{p+1} d_A = 0
    for p in range(lo, hi + 1):
        nb1, na = B.dim(p + 1), A.dim(p)
        if nb1 == 0 or na == 0:
            continue
        dB = B.d(p)
        dA = A.d(p)
        for i in range(nb1):
            for j in range(na):
                coeffs = {}
                if p in g_index:
                    for k in range(B.dim(p)):
                        a = dB.rows[i][k]
                        if a:
                            coeffs[g_var(p, k, j)] = coeffs.get(g_var(p, k, j), _ZERO) + a
                if (p + 1) in g_index:
                    for k in range(A.dim(p + 1)):
                        a = dA.rows[k][j]
                        if a:
                            v = g_var(p + 1, i, k)
                            coeffs[v] = coeffs.get(v, _ZERO) - a
                if coeffs:
                    rows.append(coeffs)
                    rhs.append(_ZERO)
    # homotopy equations: (q g - f)_p = d_C h_p + h_{p+1} d_A
    for p in range(lo, hi + 1):
        nc, na = C.dim(p), A.dim(p)
        if nc == 0 or na == 0:
            continue
        qp = q.comp(p)
        fp = f.comp(p)
        dC = C.d(p - 1)
        dA = A.d(p)
        for i in range(nc):
            for j in range(na):
                coeffs = {}
                if p in g_index:
                    for k in range(B.dim(p)):
                        a = qp.rows[i][k]
                        if a:
                            v = g_var(p, k, j)
                            coeffs[v] = coeffs.get(v, _ZERO) + a
                if p in h_index:
                    for k in range(C.dim(p - 1)):
                        a = dC.rows[i][k]
                        if a:
                            v = h_var(p, k, j)
                            coeffs[v] = coeffs.get(v, _ZERO) - a
                if (p + 1) in h_index:
                    for k in range(A.dim(p + 1)):
                        a = dA.rows[k][j]
                        if a:
                            v = h_var(p + 1, i, k)
                            coeffs[v] = coeffs.get(v, _ZERO) - a
                rows.append(coeffs)
                rhs.append(fp.rows[i][j])
    sol = solve_sparse(rows, rhs, nvar)
    if sol is None:
        # locate a failing degree for the error message
        for p in degs:
            if A.dim(p) and not B.dim(p) and not f.comp(p).is_zero():
                raise ValueError(f"no lift exists (failing degree {p})")
        raise ValueError(f"no lift exists (failing degree {degs[0]})")
    comps = {}
    for p, base in g_index.items():
        m = Matrix.zero(B.dim(p), A.dim(p))
        for i in range(B.dim(p)):
            for j in range(A.dim(p)):
                m.rows[i][j] = sol[base + i * A.dim(p) + j]
        comps[p] = m
    return CochainMap(A, B, comps, check=False)


def solve_sparse(rows, rhs, nvar):
    """Solve a sparse linear system given as dict rows; None if inconsistent.

    rows: list of {var_index: coeff}; rhs: list of scalars.
    Returns one solution vector (free variables set to zero).
    """
    # Sparse Gaussian elimination keyed on variable indices.
    eqs = []
    for coeffs, b in zip(rows, rhs):
        coeffs = {k: v for k, v in coeffs.items() if v}
        eqs.append((coeffs, b))
    pivots = {}  # var -> (coeffs, b) normalized with coeff(var) = 1
    for coeffs, b in eqs:
        coeffs = dict(coeffs)
        while True:
            coeffs = {k: v for k, v in coeffs.items() if v}
            hit = None
            for k in coeffs:
                if k in pivots:
                    hit = k
                    break
            if hit is None:
                break
            pc, pb = pivots[hit]
            f = coeffs.pop(hit)
            for k, v in pc.items():
                coeffs[k] = coeffs.get(k, _ZERO) - f * v
            b = b - f * pb
        coeffs = {k: v for k, v in coeffs.items() if v}
        if not coeffs:
            if b != 0:
                return None
            continue
        # choose pivot variable: smallest index for determinism
        pv = min(coeffs)
        inv = _ONE / coeffs[pv]
        norm = {k: inv * v for k, v in coeffs.items() if k != pv}
        nb = inv * b
        # eliminate pv from existing pivot rows
        for var, (pc, pb) in list(pivots.items()):
            if pv in pc:
                f = pc.pop(pv)
                for k, v in norm.items():
                    pc[k] = pc.get(k, _ZERO) - f * v
                    if not pc[k]:
                        del pc[k]
                pivots[var] = (pc, pb - f * nb)
        pivots[pv] = (norm, nb)
    sol = [_ZERO] * nvar
    # back-substitute: free vars zero, pivot rows give values directly
    for var, (pc, pb) in pivots.items():
        val = pb
        for k, v in pc.items():
            if sol[k]:
                val = val - v * sol[k]
        sol[var] = val
    # second pass in case pivot rows referenced other pivot vars (they do not
    # after full elimination, but keep this safe):
    changed = True
    while changed:
        changed = False
        for var, (pc, pb) in pivots.items():
            val = pb
            for k, v in pc.items():
                if sol[k]:
                    val = val - v * sol[k]
            if sol[var] != val:
                sol[var] = val
                changed = True
    return sol
