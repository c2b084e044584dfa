"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately re-derive facts along different routes than
the library: cones from generator hulls instead of tight facets, homology
of two-level complexes from the connecting map instead of the transfer
pipeline, hulls by point classification instead of hyperplane search.
"""

from itertools import combinations
from math import gcd

from polycech.exact_linalg import (
    Matrix,
    FreeChainComplex,
    HomologyResult,
    contraction,
    field_rank,
    invariant_factors,
    rational_nullspace,
)
from polycech.polytope import facets_from_vertices, lattice_points, standard_simplex
from polycech.sheaf_complexes import direct_sum, line_bundle, make_twist_complex
from polycech import cech as cech_mod


def sample_polytopes():
    return {
        "interval": standard_simplex(1),
        "simplex2": standard_simplex(2),
        "simplex3": standard_simplex(3),
        "square": facets_from_vertices(2, [(0, 0), (1, 0), (0, 1), (1, 1)]),
        "cube": facets_from_vertices(
            3, [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]),
        "rect": facets_from_vertices(2, [(0, 0), (1, 0), (0, 2), (1, 2)]),
    }


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _primitive(vec):
    denom = 1
    for x in vec:
        denom = denom * x.denominator // gcd(denom, x.denominator)
    ints = [int(x * denom) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    return tuple(x // g for x in ints)


def cone_contains(generators, x):
    """Membership in cone(generators) by brute-force facet enumeration.

    Valid for full-dimensional cones: every facet contains n-1 linearly
    independent generators, so all supporting hyperplanes spanned by
    generator subsets cut the cone out exactly.
    """
    n = len(x)
    gens = [tuple(g) for g in generators if any(g)]
    if not gens:
        return all(v == 0 for v in x)
    normals = set()
    for sub in combinations(range(len(gens)), n - 1):
        rows = [gens[i] for i in sub]
        m = Matrix.from_rows(rows) if rows else Matrix.zeros(0, n)
        null = rational_nullspace(m)
        if len(null) != 1:
            continue
        a = _primitive(null[0])
        vals = [_dot(a, g) for g in gens]
        if all(v >= 0 for v in vals):
            normals.add(a)
        elif all(v <= 0 for v in vals):
            normals.add(tuple(-t for t in a))
    if not normals:
        return True  # full-dimensional cone without facets is all of R^n
    return all(_dot(a, x) >= 0 for a in normals)


def hull_facets_by_point_test(dim, vertices):
    """Classify integer points of a box as in/out of the hull by solving
    convex combinations, then cross-check a facet list: every listed facet
    must be valid and tight on >= dim points; used to sanity-check hulls."""
    # a point p is in conv(V) iff the LP  sum c_i v_i = p, sum c_i = 1, c >= 0
    # is feasible; for the tiny test cases we enumerate vertex subsets of
    # size dim+1 and solve the barycentric system exactly.
    def in_hull(p):
        for sub in combinations(range(len(vertices)), dim + 1):
            pts = [vertices[i] for i in sub]
            rows = [[pts[j][c] for j in range(dim + 1)] for c in range(dim)]
            rows.append([1] * (dim + 1))
            rhs = list(p) + [1]
            coeffs = _solve_exact(rows, rhs)
            if coeffs is not None and all(c >= 0 for c in coeffs):
                return True
        return False
    return in_hull


def _solve_exact(rows, rhs):
    from fractions import Fraction
    m = [[Fraction(x) for x in row] + [Fraction(rhs[i])] for i, row in enumerate(rows)]
    nrows, ncols = len(m), len(rows[0])
    rank = 0
    pivots = []
    for j in range(ncols):
        piv = next((i for i in range(rank, nrows) if m[i][j] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = Fraction(1) / m[rank][j]
        m[rank] = [inv * a for a in m[rank]]
        for i in range(nrows):
            if i != rank and m[i][j] != 0:
                c = m[i][j]
                m[i] = [a - c * b for a, b in zip(m[i], m[rank])]
        pivots.append(j)
        rank += 1
    for i in range(rank, nrows):
        if m[i][-1] != 0:
            return None
    if rank < ncols:
        return None  # underdetermined; caller tries another subset
    sol = [Fraction(0)] * ncols
    for r, j in enumerate(pivots):
        sol[j] = m[r][-1]
    return sol


def random_free_complex(rng, max_blocks=3, degree_span=3, entry_bound=3):
    """Direct sum of shifted two-term blocks; d∘d = 0 holds exactly."""
    nblocks = rng.randint(1, max_blocks)
    parts = []
    for _ in range(nblocks):
        deg = rng.randint(0, degree_span - 1)
        r1, r0 = rng.randint(0, 2), rng.randint(0, 2)
        mat = Matrix.from_rows(
            [[rng.randint(-entry_bound, entry_bound) for _ in range(r1)] for _ in range(r0)]
        ) if (r0 and r1) else Matrix.zeros(r0, r1)
        parts.append((deg, r1, r0, mat))
    degs = set()
    for deg, _, _, _ in parts:
        degs.update((deg, deg + 1))
    lo, hi = min(degs), max(degs)
    ranks = {d: 0 for d in range(lo, hi + 1)}
    offsets = []
    for deg, r1, r0, _ in parts:
        offsets.append((ranks[deg + 1], ranks[deg]))
        ranks[deg + 1] += r1
        ranks[deg] += r0
    diffs = {}
    for d in range(lo + 1, hi + 1):
        grid = [[0] * ranks[d] for _ in range(ranks[d - 1])]
        for (deg, r1, r0, mat), (coff, roff) in zip(parts, offsets):
            if deg + 1 == d:
                for i in range(r0):
                    for j in range(r1):
                        grid[roff + i][coff + j] = mat[i, j]
        diffs[d] = Matrix.from_rows(grid) if ranks[d - 1] else Matrix.zeros(0, ranks[d])
    return FreeChainComplex.from_dicts(ranks, diffs)


def random_twist_complex(P, rng, max_blocks=3):
    """Direct sum of line bundles and valid two-level monomial blocks."""
    blocks = []
    for _ in range(rng.randint(1, max_blocks)):
        level = rng.randint(-1, 1)
        if rng.random() < 0.4:
            blocks.append(line_bundle(rng.randint(-2, 2), level))
            continue
        a = rng.randint(-2, 1)
        b = rng.randint(a, 2)
        terms = []
        for u in lattice_points(P, b - a):
            if rng.random() < 0.5:
                terms.append((rng.choice([-2, -1, 1, 2]), u))
        diffs = {level + 1: {(0, 0): terms}} if terms else None
        blocks.append(make_twist_complex(level, [[b], [a]], diffs))
    out = blocks[0]
    for blk in blocks[1:]:
        out = direct_sum(out, blk)
    return out


def random_two_level_complex(P, rng, max_width=2):
    """Two adjacent levels with random monomial entries (d∘d vacuous)."""
    t0 = rng.randint(-1, 1)
    src = [rng.randint(-2, 1) for _ in range(rng.randint(1, max_width))]
    tgt = [rng.randint(-2, 2) for _ in range(rng.randint(1, max_width))]
    entries = {}
    for i, b in enumerate(tgt):
        for j, a in enumerate(src):
            if b < a:
                continue
            terms = [(rng.choice([-2, -1, 1, 2]), u)
                     for u in lattice_points(P, b - a) if rng.random() < 0.5]
            if terms:
                entries[(i, j)] = terms
    return make_twist_complex(t0, [tgt, src], {t0 + 1: entries})


def les_two_level_homology(P, Y, ring):
    """Homology of a two-level twist complex via the connecting map.

    The target level is a subcomplex of the total Čech complex and the
    source level the quotient, so homology splits per degree as
    coker ⊕ ker of the induced map on line-bundle homology, with torsion
    carried by the cokernel. Entirely independent of perturb_transfer.
    """
    ctx = cech_mod.context(P)
    n = P.dim
    t0, t1 = Y.lo, Y.hi
    assert t1 == t0 + 1, "oracle only covers two-level complexes"
    src_tw, tgt_tw = Y.level(t1), Y.level(t0)
    entries = Y.diff_map(t1)

    def sdeg(k):
        return n if k >= 0 else 0

    src_classes = [(j, m) for j, a in enumerate(src_tw)
                   for m in ctx.support_table(a).multidegrees]
    tgt_classes = [(i, m) for i, b in enumerate(tgt_tw)
                   for m in ctx.support_table(b).multidegrees]

    cols = {}

    def coldata(k, m):
        key = (k, m)
        if key not in cols:
            cc = ctx.column_complex(k, m)
            cols[key] = (cc, contraction(cc.complex, ring))
        return cols[key]

    mats = {}
    for s in range(n + 1):
        rows = [x for x in tgt_classes if sdeg(tgt_tw[x[0]]) == s]
        columns = [x for x in src_classes if sdeg(src_tw[x[0]]) == s]
        if not rows or not columns:
            mats[s] = (len(rows), len(columns), None)
            continue
        row_pos = {x: r for r, x in enumerate(rows)}
        grid = [[0] * len(columns) for _ in rows]
        sign = -1 if s % 2 else 1
        for cidx, (j, m) in enumerate(columns):
            cc_s, ct_s = coldata(src_tw[j], m)
            z = ct_s.include_at(s)
            for (i, jj), terms in entries.items():
                if jj != j or sdeg(tgt_tw[i]) != s:
                    continue
                for c, u in terms:
                    m2 = tuple(x + y for x, y in zip(m, u))
                    if (i, m2) not in row_pos:
                        continue
                    cc_t, ct_t = coldata(tgt_tw[i], m2)
                    tpos = {f: r for r, f in enumerate(cc_t.faces[s])}
                    vec = [0] * len(cc_t.faces[s])
                    for r_i, f in enumerate(cc_s.faces[s]):
                        vec[tpos[f]] = sign * c * z[r_i, 0]
                    proj = ct_t.project_at(s) @ Matrix.from_rows([[v] for v in vec])
                    grid[row_pos[(i, m2)]][cidx] += proj[0, 0]
        mats[s] = (len(rows), len(columns), Matrix.from_rows(grid))

    def rank_and_torsion(s):
        nrows, ncols, grid = mats.get(s, (0, 0, None))
        if grid is None:
            return nrows, ncols, 0, ()
        if ring.is_field:
            return nrows, ncols, field_rank(grid.normalized(ring), ring), ()
        facs = invariant_factors(grid)
        return nrows, ncols, len(facs), tuple(f for f in facs if f > 1)

    data = {}
    for d in range(t0, t1 + n + 1):
        free = 0
        torsion = ()
        s_coker = d - t0
        if 0 <= s_coker <= n:
            nrows, _, rank, tors = rank_and_torsion(s_coker)
            free += nrows - rank
            torsion = tors
        s_ker = d - t1
        if 0 <= s_ker <= n:
            _, ncols, rank, _ = rank_and_torsion(s_ker)
            free += ncols - rank
        if free or torsion:
            data[d] = (free, torsion)
    return HomologyResult.from_dict(data)
