"""Command-line front end.

Reads polytope and complex documents in JSON, runs the requested
computation, and prints canonical JSON (sorted keys, compact separators)
on standard output. Exit codes: 0 success, 1 verification failure,
2 input error (reported as a single-line JSON object).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any, Mapping, Sequence

from . import cech
from .exact_linalg import CoefficientRing, FreeChainComplex, HomologyResult, Matrix, ZZ
from .polytope import (
    DuplicateVertex,
    LatticePolytope,
    NotFullDimensional,
    ehrhart_polynomial,
    face_lattice,
    facets_from_vertices,
    lattice_points,
    np_index,
    standard_simplex,
)
from .sheaf_complexes import (
    InvalidMonomial,
    NonSquareZero,
    TwistComplex,
    make_twist_complex,
    validate,
)


class InputError(Exception):
    def __init__(self, code: str, message: str, location: str):
        self.code = code
        self.message = message
        self.location = location
        super().__init__(message)


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _require_keys(obj: Mapping, keys: set[str], location: str) -> None:
    if not isinstance(obj, dict):
        raise InputError("bad_document", "document is not a JSON object", location)
    extra = set(obj) - keys
    if extra:
        raise InputError("unknown_key", f"unexpected keys {sorted(extra)}", location)
    missing = keys - set(obj)
    if missing:
        raise InputError("missing_key", f"missing keys {sorted(missing)}", location)


def parse_polytope_document(obj: Any, location: str) -> LatticePolytope:
    _require_keys(obj, {"dim", "vertices"}, location)
    dim = obj["dim"]
    verts = obj["vertices"]
    if not isinstance(dim, int) or dim < 0:
        raise InputError("bad_dim", "dim must be a non-negative integer", location)
    if not isinstance(verts, list) or not all(
            isinstance(v, list) and all(isinstance(x, int) for x in v) for v in verts):
        raise InputError("bad_vertices", "vertices must be a list of integer vectors", location)
    if any(len(v) != dim for v in verts):
        raise InputError("bad_vertices", "vertex length does not match dim", location)
    try:
        if dim == 0:
            return standard_simplex(0)
        return facets_from_vertices(dim, verts)
    except (NotFullDimensional, DuplicateVertex, ValueError) as exc:
        raise InputError("bad_polytope", str(exc), location)


def polytope_document(P: LatticePolytope) -> dict:
    return {"dim": P.dim, "vertices": [list(v) for v in P.vertices]}


def _parse_coeff(c: Any, location: str) -> int:
    if isinstance(c, int):
        return c
    if isinstance(c, str):
        try:
            return int(c)
        except ValueError:
            pass
    raise InputError("bad_coefficient", f"coefficient {c!r} is not an integer", location)


def parse_complex_document(obj: Any, location: str) -> TwistComplex:
    _require_keys(obj, {"min_level", "levels", "differentials"}, location)
    min_level = obj["min_level"]
    levels = obj["levels"]
    if not isinstance(min_level, int):
        raise InputError("bad_level", "min_level must be an integer", location)
    if not isinstance(levels, list) or not all(
            isinstance(lv, list) and all(isinstance(k, int) for k in lv) for lv in levels):
        raise InputError("bad_levels", "levels must be a list of lists of twists", location)
    hi = min_level + len(levels) - 1
    diffs: dict[int, dict[tuple[int, int], list]] = {}
    if not isinstance(obj["differentials"], list):
        raise InputError("bad_differentials", "differentials must be a list", location)
    for block in obj["differentials"]:
        _require_keys(block, {"from", "entries"}, location)
        t = block["from"]
        if not isinstance(t, int) or not (min_level < t <= hi):
            raise InputError("bad_level", f"differential level {t!r} out of range", location)
        entries: dict[tuple[int, int], list] = {}
        for e in block["entries"]:
            _require_keys(e, {"row", "col", "terms"}, location)
            row, col = e["row"], e["col"]
            if not (isinstance(row, int) and isinstance(col, int)):
                raise InputError("bad_entry", "row/col must be integers", location)
            if not (0 <= row < len(levels[t - 1 - min_level])
                    and 0 <= col < len(levels[t - min_level])):
                raise InputError("bad_entry", f"entry ({row}, {col}) out of range at level {t}",
                                 location)
            terms = []
            for term in e["terms"]:
                _require_keys(term, {"c", "u"}, location)
                u = term["u"]
                if not isinstance(u, list) or not all(isinstance(x, int) for x in u):
                    raise InputError("bad_monomial", "u must be an integer vector", location)
                terms.append((_parse_coeff(term["c"], location), tuple(u)))
            entries[(row, col)] = terms
        if t in diffs:
            raise InputError("bad_differentials", f"level {t} listed twice", location)
        diffs[t] = entries
    try:
        return make_twist_complex(min_level, levels, diffs)
    except ValueError as exc:
        raise InputError("bad_complex", str(exc), location)


def complex_document(Y: TwistComplex) -> dict:
    differentials = []
    for t in range(Y.lo + 1, Y.hi + 1):
        entries = []
        for (i, j), terms in sorted(Y.diff_map(t).items()):
            entries.append({
                "row": i,
                "col": j,
                "terms": [{"c": str(c), "u": list(u)} for c, u in terms],
            })
        if entries:
            differentials.append({"from": t, "entries": entries})
    return {
        "min_level": Y.lo if Y.hi >= Y.lo else 0,
        "levels": [list(lv) for lv in Y.levels],
        "differentials": differentials,
    }


def _load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError("missing_file", f"cannot open {path}", path)
    except json.JSONDecodeError as exc:
        raise InputError("bad_json", str(exc), path)


def _load_polytope(path: str) -> LatticePolytope:
    return parse_polytope_document(_load_json(path), path)


def _load_complex(path: str, P: LatticePolytope) -> TwistComplex:
    Y = parse_complex_document(_load_json(path), path)
    try:
        validate(Y, P)
    except (InvalidMonomial, NonSquareZero) as exc:
        raise InputError("bad_complex", str(exc), path)
    return Y


def _parse_ring(text: str) -> CoefficientRing:
    try:
        return CoefficientRing.parse(text)
    except ValueError as exc:
        raise InputError("bad_ring", str(exc), "--ring")


def homology_json(h: HomologyResult) -> list[dict]:
    return [
        {"degree": d, "free_rank": free, "torsion": list(torsion)}
        for d, free, torsion in h.groups
    ]


def fraction_str(x: Fraction) -> str:
    return str(x)


def cmd_faces(P: LatticePolytope) -> dict:
    lattice = face_lattice(P)
    faces = [
        {
            "id": f.index,
            "dim": f.dim,
            "vertices": sorted(f.vertex_set),
            "tight_facets": sorted(f.tight_facets),
        }
        for f in lattice.faces
    ]
    f_vector = [len(lattice.by_dim[d]) for d in range(P.dim + 1)]
    return {"faces": faces, "f_vector": f_vector}


def cmd_ehrhart(P: LatticePolytope) -> dict:
    e = ehrhart_polynomial(P)
    return {
        "coeffs": [fraction_str(c) for c in e.coefficients],
        "np": e.np,
        "integral_roots": list(e.integral_roots),
    }


def cmd_points(P: LatticePolytope, k: int, interior: bool) -> dict:
    try:
        pts = lattice_points(P, k, interior)
    except ValueError as exc:
        raise InputError("bad_dilate", str(exc), "--dilate")
    return {"count": len(pts), "points": [list(p) for p in pts]}


def cmd_splitting(P: LatticePolytope) -> dict:
    M = cech.splitting_matrix(P)
    det = M.det()
    return {
        "matrix": [list(row) for row in M.data],
        "det": det,
        "unimodular": abs(det) == 1,
    }


def verify_suite(P: LatticePolytope, kmax: int) -> list[dict]:
    """Run the verification battery; one pass/fail record per item."""
    ctx = cech.context(P)
    n = P.dim
    items: list[dict] = []

    def run(name: str, fn) -> None:
        try:
            ok, detail = fn()
        except Exception as exc:  # any raised guard is a failure of the item
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        record = {"name": name, "pass": bool(ok)}
        if not ok:
            record["detail"] = detail
        items.append(record)

    def reciprocity():
        e = ctx.ehrhart
        for k in range(1, n + 2):
            lhs = (-1) ** n * e(-k)
            rhs = len(lattice_points(P, k, interior=True))
            if lhs != rhs:
                return False, f"k={k}: {lhs} != {rhs}"
        return True, ""

    def boundary_squares():
        # incidence construction re-checks all codimension-2 flags
        from .orientation import incidence_numbers
        incidence_numbers(ctx.lattice)
        incidence_numbers(ctx.lattice, reverse=True)
        return True, ""

    def closed_form():
        for k in range(-kmax, kmax + 1):
            res = ctx.line_bundle_cohomology(k, ZZ)
            expected_rank = len(lattice_points(P, k, interior=k < 0))
            expected = HomologyResult.from_dict(
                {n if k >= 0 else 0: (expected_rank, ())})
            if res.homology != expected:
                return False, f"twist {k}: {res.homology.as_dict()}"
        return True, ""

    def window():
        ctx.acyclicity_window()
        return True, ""

    def con_vs_bundle():
        samples = [
            FreeChainComplex.from_dicts({0: 1}, {}),
            FreeChainComplex.from_dicts({0: 1, 1: 1}, {1: Matrix.from_rows([[2]])}),
            FreeChainComplex.from_dicts({0: 1, 1: 1}, {1: Matrix.from_rows([[1]])}),
        ]
        for idx, C in enumerate(samples):
            if not ctx.con_vs_bundle_check(C, ZZ):
                return False, f"sample {idx} disagrees"
        return True, ""

    def splitting():
        ctx.splitting_matrix()
        return True, ""

    run("ehrhart_reciprocity", reciprocity)
    run("incidence_boundary_squares_to_zero", boundary_squares)
    run("line_bundle_closed_form", closed_form)
    run("acyclicity_window", window)
    run("constant_vs_twisted_unit", con_vs_bundle)
    run("splitting_matrix_unimodular", splitting)
    if P == standard_simplex(P.dim) and P.dim >= 1:
        def cone_checks():
            for k in range(P.dim):
                if not cech.simplex_cone_check(P.dim, k, ZZ):
                    return False, f"k={k}"
            return True, ""
        run("simplex_cone_identity", cone_checks)
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polycech",
        description="Exact Čech homology of line-bundle twists on lattice polytopes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("faces", help="face lattice of a polytope")
    p.add_argument("polytope")

    p = sub.add_parser("ehrhart", help="point-counting polynomial and its integral roots")
    p.add_argument("polytope")

    p = sub.add_parser("np", help="count of integral roots of the point-counting polynomial")
    p.add_argument("polytope")

    p = sub.add_parser("points", help="lattice points of a dilate")
    p.add_argument("polytope")
    p.add_argument("--dilate", type=int, required=True)
    p.add_argument("--interior", action="store_true")

    p = sub.add_parser("cohomology", help="homology of the Čech complex of O(k)")
    p.add_argument("polytope")
    p.add_argument("--twist", type=int, required=True)
    p.add_argument("--ring", default="Z")

    p = sub.add_parser("cech", help="homology of the Čech complex of a twist complex")
    p.add_argument("polytope")
    p.add_argument("complex")
    p.add_argument("--ring", default="Z")

    p = sub.add_parser("chi", help="Euler characteristic of the Čech complex")
    p.add_argument("polytope")
    p.add_argument("complex")

    p = sub.add_parser("splitting", help="unimodular matrix of Euler characteristics")
    p.add_argument("polytope")

    p = sub.add_parser("verify", help="run the verification battery")
    p.add_argument("polytope")
    p.add_argument("--kmax", type=int, default=4)
    return parser


def run(argv: Sequence[str]) -> tuple[Any, int]:
    parser = build_parser()
    args = parser.parse_args(argv)
    P = _load_polytope(args.polytope)
    if args.command == "faces":
        return cmd_faces(P), 0
    if args.command == "ehrhart":
        return cmd_ehrhart(P), 0
    if args.command == "np":
        return {"np": np_index(P)}, 0
    if args.command == "points":
        return cmd_points(P, args.dilate, args.interior), 0
    if args.command == "cohomology":
        ring = _parse_ring(args.ring)
        res = cech.line_bundle_cohomology(P, args.twist, ring)
        return homology_json(res.homology), 0
    if args.command == "cech":
        ring = _parse_ring(args.ring)
        Y = _load_complex(args.complex, P)
        res = cech.cech_homology(P, Y, ring)
        return {
            "homology": homology_json(res.homology),
            "active_multidegrees": res.active_multidegrees,
            "transfer_paths": res.transfer_paths,
        }, 0
    if args.command == "chi":
        Y = _load_complex(args.complex, P)
        return {"chi": cech.euler_characteristic(P, Y)}, 0
    if args.command == "splitting":
        return cmd_splitting(P), 0
    if args.command == "verify":
        report = verify_suite(P, args.kmax)
        ok = all(item["pass"] for item in report)
        return {"ok": ok, "results": report}, 0 if ok else 1
    raise InputError("bad_command", f"unknown command {args.command!r}", "<args>")


def main(argv: Sequence[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        payload, code = run(argv)
    except InputError as exc:
        print(canonical_dumps(
            {"code": exc.code, "message": exc.message, "location": exc.location}))
        return 2
    print(canonical_dumps(payload))
    return code


if __name__ == "__main__":
    sys.exit(main())
