"""Exact computation of Lefschetz classes for cellular sheaf kernels.

Everything here is exact rational arithmetic: there is no floating point
and no tolerance parameter anywhere in the package.
"""

from lefschetz.exactlin import QQ, Matrix, CochainComplex, CochainMap, cohomology, euler_trace
from lefschetz.cellspace import SimplicialComplex, CellPoset, PosetMap, SimplicialSelfMap

__all__ = [
    "QQ",
    "Matrix",
    "CochainComplex",
    "CochainMap",
    "cohomology",
    "euler_trace",
    "SimplicialComplex",
    "CellPoset",
    "PosetMap",
    "SimplicialSelfMap",
]
