"""Definability toolkit for abelian groups with a rational torus character.

The pieces fit together like this: `lattice` does exact integer linear
algebra (HNF/SNF, intersection, index), `torus` encodes closed subgroups
of the torus by their annihilator lattices, `formula` parses the small
pp / pp* language, `solver` evaluates formulas over a structure and
decides coset coverage, and `types_bf` builds formula bases, compares
pp* type fingerprints, extends partial correspondences, and
cross-validates everything against a brute-force automorphism oracle.
"""

from .errors import (
    BasisIncompleteError,
    DimensionError,
    ParseError,
    PpstarError,
    SchemaError,
    SizeLimitError,
    TypeMismatchError,
)
from .formula import (
    NegPpFormula,
    PpFormula,
    PpStarFormula,
    Signature,
    normalize,
    parse,
    render,
)
from .lattice import (
    INFINITE,
    IntMatrix,
    Lattice,
    hnf_rows,
    index_of,
    intersect,
    lattice_sum,
    project,
    snf,
)
from .solver import (
    DefinableCoset,
    Structure,
    cover_decide,
    eval_pp,
    kernel_and_fiber,
    satisfies,
    satisfies_approx,
    satisfies_ppstar,
    structure_from_dict,
    structure_to_dict,
    torus_image,
)
from .torus import ClosedTorusSubgroup, TorusCoset, TorusPoint, closure_of
from .types_bf import (
    Caps,
    Fingerprint,
    FormulaBasis,
    automorphisms,
    basis_generate,
    check_theorem,
    eq_ppstar_type,
    extend,
    fingerprint,
    fixpoint_caps,
    negpp_contains,
    orbit_oracle,
    ppstar_contains,
)

__version__ = "0.1.0"

__all__ = [
    "BasisIncompleteError",
    "Caps",
    "ClosedTorusSubgroup",
    "DefinableCoset",
    "DimensionError",
    "Fingerprint",
    "FormulaBasis",
    "INFINITE",
    "IntMatrix",
    "Lattice",
    "NegPpFormula",
    "ParseError",
    "PpFormula",
    "PpStarFormula",
    "PpstarError",
    "SchemaError",
    "Signature",
    "SizeLimitError",
    "Structure",
    "TorusCoset",
    "TorusPoint",
    "TypeMismatchError",
    "automorphisms",
    "basis_generate",
    "check_theorem",
    "closure_of",
    "cover_decide",
    "eq_ppstar_type",
    "eval_pp",
    "extend",
    "fingerprint",
    "fixpoint_caps",
    "hnf_rows",
    "index_of",
    "intersect",
    "kernel_and_fiber",
    "lattice_sum",
    "negpp_contains",
    "normalize",
    "orbit_oracle",
    "parse",
    "ppstar_contains",
    "project",
    "render",
    "satisfies",
    "satisfies_approx",
    "satisfies_ppstar",
    "snf",
    "structure_from_dict",
    "structure_to_dict",
    "torus_image",
]
