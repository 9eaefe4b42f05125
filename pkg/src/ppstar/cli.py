"""Command line front end: JSON in, JSON out, stable exit codes.

Exit code 0 is success, 1 is a domain verdict against the request (check
found mismatches, extension impossible), 2 is an input problem (bad file,
bad flag, parse error).  Input problems are reported as
{"error": {"path"|"position": ..., "message": ...}} so scripts can point
at the offending spot; domain verdicts come back as ordinary documents.

Output is deterministic for a fixed invocation and seed: JSON is dumped
with sorted keys, text mode is a fixed flattening of the same document.
"""

import argparse
import json
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

from .errors import (
    BasisIncompleteError,
    ParseError,
    PpstarError,
    SchemaError,
    SizeLimitError,
    TypeMismatchError,
)
from .formula import NegPpFormula, parse, render
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
)
from .torus import TorusCoset, TorusPoint
from .types_bf import (
    Caps,
    basis_generate,
    check_theorem,
    eq_ppstar_type,
    extend,
    fingerprint,
    fixpoint_caps,
    orbit_oracle,
)

DEFAULT_CAPS = "2,6,4"


class _InputError(Exception):
    """Carries the error document for exit code 2."""

    def __init__(self, where_key: str, where: object, message: str):
        self.doc = {"error": {where_key: where, "message": message}}
        super().__init__(message)


def _flag_error(flag: str, message: str) -> "_InputError":
    return _InputError("path", flag, message)


def load_structure(path: str) -> Structure:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise _InputError("path", path, f"cannot read file: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise _InputError("position", exc.pos, f"invalid JSON: {exc.msg}")
    try:
        return structure_from_dict(data)
    except SchemaError as exc:
        raise _InputError("path", exc.path, exc.message)


def _parse_tuple(flag: str, text: str, s: Structure, arity_known: Optional[int] = None):
    try:
        vec = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise _flag_error(flag, "expected comma-separated integers")
    n = s.ambient_rank
    if len(vec) % n:
        raise _flag_error(flag, f"length {len(vec)} is not a multiple of the ambient rank {n}")
    if arity_known is not None and len(vec) != arity_known * n:
        raise _flag_error(flag, f"expected {arity_known * n} coordinates, got {len(vec)}")
    return s.reduce(vec)


def _parse_fractions(flag: str, text: str) -> List[Fraction]:
    out = []
    for part in text.split(","):
        try:
            out.append(Fraction(part.strip()))
        except (ValueError, ZeroDivisionError):
            raise _flag_error(flag, f"invalid rational {part.strip()!r}")
    return out


def _parse_caps(text: str) -> Caps:
    try:
        return Caps.from_text(text)
    except ValueError as exc:
        raise _flag_error("--caps", str(exc))


def _parse_formula(flag: str, text: str, s: Structure):
    try:
        return parse(text, s.signature())
    except ParseError as exc:
        raise _InputError("position", exc.position, exc.message)


def _frac_str(x: Fraction) -> str:
    return str(x)


def _point_doc(p: TorusPoint) -> List[str]:
    return [_frac_str(c) for c in p.coords]


def _coset_doc(c: DefinableCoset) -> dict:
    if c.is_empty:
        return {"empty": True}
    return {
        "empty": False,
        "arity": c.arity,
        "rep": list(c.rep),
        "group": [list(r) for r in c.group.rows()],
    }


def _torus_coset_doc(c: Optional[TorusCoset]) -> Optional[dict]:
    if c is None or c.is_empty:
        return None
    return {
        "rep": _point_doc(c.rep),
        "annihilator": [list(r) for r in c.group.annihilator.rows()],
    }


def _structure_args(s: Structure) -> dict:
    return {nm: v for nm, v in s.parameters.items()}


# ---------------------------------------------------------------------------
# command bodies; each returns (exit_code, document)


def _cmd_validate(ns) -> tuple:
    s = load_structure(ns.structure)
    return 0, {"valid": True, "invariant_factors": list(s.invariant_factors())}


def _cmd_eval(ns) -> tuple:
    s = load_structure(ns.structure)
    phi = _parse_formula("--formula", ns.formula, s)
    try:
        coset = eval_pp(s, phi, _structure_args(s))
    except TypeError as exc:
        raise _flag_error("--formula", str(exc))
    return 0, _coset_doc(coset)


def _cmd_satisfies(ns) -> tuple:
    s = load_structure(ns.structure)
    psi = _parse_formula("--formula", ns.formula, s)
    vec = _parse_tuple("--tuple", ns.tuple, s)
    args = _structure_args(s)
    if ns.eps is not None:
        eps = _parse_fractions("--eps", ns.eps)
        if len(eps) != 1 or eps[0] < 0:
            raise _flag_error("--eps", "expected one non-negative rational")
        try:
            ok = satisfies_approx(s, psi, vec, eps[0], args)
        except ValueError as exc:
            raise _flag_error("--eps", str(exc))
        except PpstarError as exc:
            raise _flag_error("--tuple", str(exc))
        return 0, {"satisfied": ok, "eps": _frac_str(eps[0])}
    try:
        ok = satisfies(s, psi, vec, args)
    except PpstarError as exc:
        raise _flag_error("--tuple", str(exc))
    return 0, {"satisfied": ok}


def _cmd_cover(ns) -> tuple:
    s = load_structure(ns.structure)
    args = _structure_args(s)
    target = _parse_formula("--target", ns.target, s)
    if isinstance(target, NegPpFormula):
        raise _flag_error("--target", "coverage takes pp formulas")
    try:
        x = eval_pp(s, target, args)
    except TypeError as exc:
        raise _flag_error("--target", str(exc))
    if x.is_empty:
        raise _flag_error("--target", "target solution set is empty")
    cover = []
    for text in ns.by or []:
        phi = _parse_formula("--by", text, s)
        if isinstance(phi, NegPpFormula):
            raise _flag_error("--by", "coverage takes pp formulas")
        try:
            cover.append(eval_pp(s, phi, args))
        except TypeError as exc:
            raise _flag_error("--by", str(exc))
    return 0, {"covered": cover_decide(x, cover)}


def _cmd_kernel(ns) -> tuple:
    s = load_structure(ns.structure)
    return 0, _coset_doc(kernel_and_fiber(s))


def _cmd_fiber(ns) -> tuple:
    s = load_structure(ns.structure)
    coords = _parse_fractions("--point", ns.point)
    if len(coords) != s.torus_dim:
        raise _flag_error("--point",
                          f"expected {s.torus_dim} coordinates, got {len(coords)}")
    return 0, _coset_doc(kernel_and_fiber(s, TorusPoint.make(coords)))


def _basis_for(s: Structure, m: int, ns) -> "FormulaBasis":
    caps = _parse_caps(ns.caps)
    try:
        return basis_generate(s, m, caps)
    except SizeLimitError as exc:
        raise _flag_error("--structure", str(exc))


def _cmd_type(ns) -> tuple:
    s = load_structure(ns.structure)
    vec = _parse_tuple("--tuple", ns.tuple, s)
    m = len(vec) // s.ambient_rank
    basis = _basis_for(s, m, ns)
    fp = fingerprint(s, vec, basis)
    entries = []
    for phi, entry in zip(basis.formulas, fp.entries):
        entries.append({"formula": render(phi), "image": _torus_coset_doc(entry)})
    return 0, {
        "arity": m,
        "caps": basis.caps.as_dict(),
        "f_values": _point_doc(fp.f_values),
        "entries": entries,
    }


def _pair(ns, s: Structure) -> tuple:
    a = _parse_tuple("--tuple-a", ns.tuple_a, s)
    b = _parse_tuple("--tuple-b", ns.tuple_b, s)
    if len(a) != len(b):
        raise _flag_error("--tuple-b", "tuple arities differ")
    return a, b


def _cmd_eqtype(ns) -> tuple:
    s = load_structure(ns.structure)
    a, b = _pair(ns, s)
    m = len(a) // s.ambient_rank
    basis = _basis_for(s, m, ns)
    if s.f_value(a) != s.f_value(b):
        return 0, {"equal": False, "witness": "f-values differ"}
    fa = fingerprint(s, a, basis)
    fb = fingerprint(s, b, basis)
    for phi, ea, eb in zip(basis.formulas, fa.entries, fb.entries):
        if ea != eb:
            return 0, {"equal": False, "witness": f"entry differs: {render(phi)}"}
    return 0, {"equal": True}


def _cmd_extend(ns) -> tuple:
    s = load_structure(ns.structure)
    if not s.is_finite:
        raise _flag_error("--structure", "extension search needs a finite structure")
    a, b = _pair(ns, s)
    c = _parse_tuple("--element", ns.element, s, arity_known=1)
    m = len(a) // s.ambient_rank
    basis = _basis_for(s, m, ns)
    try:
        d = extend(s, a, b, c, basis)
    except TypeMismatchError as exc:
        return 1, {"verdict": "TYPE_MISMATCH", "message": str(exc)}
    except BasisIncompleteError as exc:
        return 1, {"verdict": "BASIS_INCOMPLETE", "message": str(exc)}
    return 0, {"element": list(d)}


def _cmd_orbit(ns) -> tuple:
    s = load_structure(ns.structure)
    if not s.is_finite:
        raise _flag_error("--structure", "orbit search needs a finite structure")
    a, b = _pair(ns, s)
    try:
        eq = orbit_oracle(s, a, b)
    except SizeLimitError as exc:
        raise _flag_error("--structure", str(exc))
    return 0, {"equivalent": eq}


def _cmd_check(ns) -> tuple:
    s = load_structure(ns.structure)
    if not s.is_finite:
        raise _flag_error("--structure", "the theorem harness needs a finite structure")
    if ns.caps is None:
        try:
            caps = fixpoint_caps(s, ns.arity, seed=ns.seed)
        except SizeLimitError as exc:
            raise _flag_error("--structure", str(exc))
    else:
        caps = _parse_caps(ns.caps)
    try:
        report = check_theorem(s, ns.arity, caps, trials=ns.trials, seed=ns.seed)
    except SizeLimitError as exc:
        raise _flag_error("--structure", str(exc))
    return (0 if report["verdict"] == "PASS" else 1), report


# ---------------------------------------------------------------------------
# plumbing


def _text_lines(doc, prefix="") -> List[str]:
    if isinstance(doc, dict):
        lines = []
        for key in sorted(doc):
            val = doc[key]
            if isinstance(val, (dict, list)) and val and not _is_flat_list(val):
                lines.append(f"{prefix}{key}:")
                lines.extend(_text_lines(val, prefix + "  "))
            else:
                lines.append(f"{prefix}{key}: {_scalar_text(val)}")
        return lines
    if isinstance(doc, list):
        lines = []
        for item in doc:
            if isinstance(item, (dict, list)) and item and not _is_flat_list(item):
                lines.append(f"{prefix}-")
                lines.extend(_text_lines(item, prefix + "  "))
            else:
                lines.append(f"{prefix}- {_scalar_text(item)}")
        return lines
    return [f"{prefix}{_scalar_text(doc)}"]


def _is_flat_list(val) -> bool:
    return isinstance(val, list) and all(
        not isinstance(x, (dict, list)) for x in val)


def _scalar_text(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if val is None:
        return "none"
    if isinstance(val, list):
        return "[" + ", ".join(_scalar_text(x) for x in val) + "]"
    return str(val)


def _emit(doc, output: str) -> None:
    if output == "text":
        sys.stdout.write("\n".join(_text_lines(doc)) + "\n")
    else:
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="ppstar",
        description="definability toolkit for abelian structures with a torus character")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, caps=False, tuples=0, seed=False):
        p.add_argument("--structure", required=True, help="structure JSON file")
        p.add_argument("--output", choices=("json", "text"), default="json")
        if caps:
            p.add_argument("--caps", default=DEFAULT_CAPS,
                           help='basis caps "k_max,max_atoms,max_coeff"')
        if tuples >= 2:
            p.add_argument("--tuple-a", required=True, help="comma-separated coordinates")
            p.add_argument("--tuple-b", required=True, help="comma-separated coordinates")
        if seed:
            p.add_argument("--seed", type=int, default=0, help="64-bit trial seed")

    p = sub.add_parser("validate", help="check a structure file")
    common(p)

    p = sub.add_parser("eval", help="solution coset of a pp formula")
    common(p)
    p.add_argument("--formula", required=True)

    p = sub.add_parser("satisfies", help="does a tuple satisfy a formula")
    common(p)
    p.add_argument("--formula", required=True)
    p.add_argument("--tuple", required=True)
    p.add_argument("--eps", help="quantifier-free approximate mode, e.g. 1/8")

    p = sub.add_parser("cover", help="decide coset coverage")
    common(p)
    p.add_argument("--target", required=True)
    p.add_argument("--by", action="append", default=[],
                   help="covering formula; repeatable")

    p = sub.add_parser("kernel", help="kernel of the character")
    common(p)

    p = sub.add_parser("fiber", help="preimage of a torus point")
    common(p)
    p.add_argument("--point", required=True, help="comma-separated rationals")

    p = sub.add_parser("type", help="pp* fingerprint of a tuple")
    common(p, caps=True)
    p.add_argument("--tuple", required=True)

    p = sub.add_parser("eqtype", help="compare pp* fingerprints")
    common(p, caps=True, tuples=2)

    p = sub.add_parser("extend", help="back-and-forth extension step")
    common(p, caps=True, tuples=2)
    p.add_argument("--element", required=True, help="element c to extend by")

    p = sub.add_parser("orbit", help="automorphism orbit equivalence")
    common(p, tuples=2)

    p = sub.add_parser("check", help="cross-validate types against the orbit oracle")
    common(p, seed=True)
    p.add_argument("--caps", default=None,
                   help="basis caps; defaults to the stabilized fixpoint caps")
    p.add_argument("--arity", type=int, default=1, choices=(1, 2))
    p.add_argument("--trials", type=int, default=200)

    return top


_COMMANDS = {
    "validate": _cmd_validate,
    "eval": _cmd_eval,
    "satisfies": _cmd_satisfies,
    "cover": _cmd_cover,
    "kernel": _cmd_kernel,
    "fiber": _cmd_fiber,
    "type": _cmd_type,
    "eqtype": _cmd_eqtype,
    "extend": _cmd_extend,
    "orbit": _cmd_orbit,
    "check": _cmd_check,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        code, doc = _COMMANDS[ns.command](ns)
    except _InputError as exc:
        _emit(exc.doc, ns.output)
        return 2
    except PpstarError as exc:
        # library-level rejection not translated above: still an input problem
        _emit({"error": {"path": ns.structure, "message": str(exc)}}, ns.output)
        return 2
    _emit(doc, ns.output)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
