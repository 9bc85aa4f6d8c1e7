"""Nerves of desk groupoids and Cech double complexes of algebroid forms.

Nerve level n is the set of composable n-strings of arrows, one chart copy
per tuple of group elements; the chart coordinate is the target of the
first arrow.  With that convention the face maps follow the bar pattern:
d_0 drops the first arrow and twists by it, the middle faces compose
adjacent arrows, and the last face drops the last arrow untouched.  In
particular column 0 of the double complex is the groupoid cochain complex
with coefficients in functions.
"""

from itertools import combinations, product

from .exactalg import (ComplexError, PolyFunction, RatMatrix, DoubleComplex,
                       GradedComplex, complex_cohomology, total_cohomology)
from .algebroid import (AlgebroidForm, AlgebroidMorphismData, Grading,
                        GradingError, de_rham_d, pullback_form)
from .groupoid import GroupoidError, verify_groupoid_algebroid


class NerveData:
    """Simplicial levels and face maps of a desk groupoid up to a cap."""

    def __init__(self, groupoid, cap):
        self.groupoid = groupoid
        self.cap = cap
        self.levels = {n: list(product(groupoid.elements, repeat=n))
                       for n in range(cap + 1)}

    def face(self, n, i, tup):
        """Face d_i at level n: (target tuple, substitution components)."""
        G = self.groupoid
        coords = G.chart.coordinates()
        if not 0 <= i <= n:
            raise GroupoidError(f"face index {i} out of range at level {n}")
        if i == 0:
            return tup[1:], G.act_inv(tup[0])
        if i < n:
            merged = tup[:i - 1] + (G.mul(tup[i - 1], tup[i]),) + tup[i + 1:]
            return merged, coords
        return tup[:-1], coords

    def verify_simplicial_identities(self):
        """d_i ∘ d_j = d_{j-1} ∘ d_i for i < j, exactly on tuples and substitutions."""
        G = self.groupoid
        dim = G.chart.dim
        for n in range(2, self.cap + 1):
            for tup in self.levels[n]:
                for j in range(1, n + 1):
                    for i in range(j):
                        t1, s1 = self.face(n, j, tup)
                        t2, s2 = self.face(n - 1, i, t1)
                        left = (t2, [c.substitute(s1, dim) for c in s2])
                        t3, s3 = self.face(n, i, tup)
                        t4, s4 = self.face(n - 1, j - 1, t3)
                        right = (t4, [c.substitute(s3, dim) for c in s4])
                        if left != right:
                            raise GroupoidError(
                                f"simplicial identity fails at level {n}, "
                                f"tuple {tup}, (i,j)=({i},{j})")
        return True


def build_nerve(G, cap):
    from .groupoid import verify_groupoid
    verdict = verify_groupoid(G)
    if not verdict:
        raise GroupoidError(f"groupoid invalid: {verdict.witness}")
    nerve = NerveData(G, cap)
    nerve.verify_simplicial_identities()
    return nerve


class CechDoubleComplex:
    """Double complex of the nerve with algebroid-form coefficients.

    Pieces (n, k) carry one copy of the grading-capped k-forms per n-tuple
    of arrows; the wrapped DoubleComplex holds the exact differentials.
    """

    def __init__(self, GA, double, bases, grading, cap):
        self.GA = GA
        self.double = double
        self.bases = bases
        self.grading = grading
        self.cap = cap


def _form_basis(A, grading, cap):
    """Capped list of (exponents, index tuple) per form degree."""
    out = {}
    grades = range(cap + 1) if grading.name != "none" else [0]
    for k in range(A.rank + 1):
        labels = []
        for g in grades:
            for exps in grading.monomials(A.chart, g, k):
                for idx in combinations(range(A.rank), k):
                    labels.append((exps, idx))
        out[k] = labels
    return out


def _expand_form(A, form, labels, index, grading, cap):
    """Coefficient column of a form in the capped basis; error on escape."""
    col = {}
    for idx, poly in form.components.items():
        for mono, coeff in poly.terms.items():
            pos = index.get((mono, idx))
            if pos is None:
                grade = grading.grade_of(mono, form.degree)
                raise GradingError(
                    f"form leaves the declared grading (grade {grade}, cap {cap})",
                    witness=(mono, idx))
            col[pos] = col.get(pos, 0) + coeff
    return col


def _transport_morphism_for(GA, g):
    G = GA.groupoid
    ginv = G.inverses[g]
    return AlgebroidMorphismData.from_matrix(GA.A, GA.A, G.act(ginv), GA.psi[ginv])


def group_action_on_forms(GA, g, omega):
    """Left action of an arrow on forms: pullback along the inverse transport."""
    return pullback_form(_transport_morphism_for(GA, g), omega)


def build_cech_complex(GA, row_cap, col_cap, grading="none", cap=0):
    """The Cech double complex of a groupoid algebroid, exactly.

    Horizontal differential: levelwise de Rham d_A.  Vertical differential:
    the bar pattern with the psi-twisted action on the d_0 face.  Grading
    must be admissible (always so over a point); non-preservation is
    rejected with a witness monomial.
    """
    verdict = verify_groupoid_algebroid(GA)
    if not verdict:
        raise GroupoidError(f"groupoid algebroid invalid: {verdict.witness}")
    if isinstance(grading, str):
        grading = Grading(grading)
    if grading.name == "none" and GA.A.chart.dim != 0:
        raise GradingError("grading 'none' is only admissible over a point")
    A = GA.A
    G = GA.groupoid
    nerve = build_nerve(G, row_cap + 1)
    form_basis = _form_basis(A, grading, cap)
    form_index = {k: {lab: pos for pos, lab in enumerate(labels)}
                  for k, labels in form_basis.items()}

    bases, index = {}, {}
    for n in range(row_cap + 1):
        for k in range(col_cap + 1):
            labels = []
            if k <= A.rank:
                for tup in nerve.levels[n]:
                    for lab in form_basis[k]:
                        labels.append((tup, lab))
            bases[(n, k)] = labels
            index[(n, k)] = {lab: pos for pos, lab in enumerate(labels)}
    dims = {(n, k): len(bases[(n, k)]) for n in range(row_cap + 1)
            for k in range(col_cap + 1)}

    hor, vert = {}, {}
    # horizontal: d_A per tuple, block diagonal
    for k in range(min(col_cap, A.rank)):
        src_forms = form_basis[k]
        img_cols = []
        for exps, idx in src_forms:
            omega = AlgebroidForm(A, k, {idx: PolyFunction(A.chart.dim, {exps: 1})})
            img = de_rham_d(omega)
            img_cols.append(_expand_form(A, img, form_basis[k + 1],
                                         form_index[k + 1], grading, cap))
        for n in range(row_cap + 1):
            mat = RatMatrix(dims[(n, k + 1)], dims[(n, k)])
            for tup in nerve.levels[n]:
                for scol, col in enumerate(img_cols):
                    src_pos = index[(n, k)][(tup, src_forms[scol])]
                    for fpos, coeff in col.items():
                        dst_pos = index[(n, k + 1)][(tup, form_basis[k + 1][fpos])]
                        mat.entries[dst_pos][src_pos] += coeff
            hor[(n, k)] = mat
    # vertical: alternating sum over faces of the level-(n+1) tuples
    for k in range(col_cap + 1):
        if k > A.rank:
            continue
        for n in range(row_cap):
            mat = RatMatrix(dims[(n + 1, k)], dims[(n, k)])
            for tgt in nerve.levels[n + 1]:
                for i in range(n + 2):
                    src_tup, subst = nerve.face(n + 1, i, tgt)
                    sign = (-1) ** i
                    for exps, idx in form_basis[k]:
                        omega = AlgebroidForm(A, k,
                                              {idx: PolyFunction(A.chart.dim, {exps: 1})})
                        if i == 0:
                            moved = group_action_on_forms(GA, tgt[0], omega)
                        else:
                            moved = omega   # middle and last faces substitute trivially
                        col = _expand_form(A, moved, form_basis[k],
                                           form_index[k], grading, cap)
                        src_pos = index[(n, k)][(src_tup, (exps, idx))]
                        for fpos, coeff in col.items():
                            dst_pos = index[(n + 1, k)][(tgt, form_basis[k][fpos])]
                            mat.entries[dst_pos][src_pos] += sign * coeff
            vert[(n, k)] = mat
    double = DoubleComplex(dims, hor, vert, row_cap, col_cap)
    double.validate()
    return CechDoubleComplex(GA, double, bases, grading, cap)


def column_zero_matches_bar_complex(cdc):
    """Structural check: column 0 is the groupoid cochain complex of functions.

    Rebuilds the bar differential on functions independently (translation
    action only, no frame transport) and compares matrices entrywise.
    """
    GA = cdc.GA
    G = GA.groupoid
    A = GA.A
    grading, cap = cdc.grading, cdc.cap
    fun_basis = [lab for lab in _form_basis(A, grading, cap)[0]]
    fun_index = {lab: pos for pos, lab in enumerate(fun_basis)}
    nerve = NerveData(G, cdc.double.row_cap + 1)
    for n in range(cdc.double.row_cap):
        rows = len(nerve.levels[n + 1]) * len(fun_basis)
        cols = len(nerve.levels[n]) * len(fun_basis)
        mat = RatMatrix(rows, cols)
        src_off = {tup: p * len(fun_basis) for p, tup in enumerate(nerve.levels[n])}
        dst_off = {tup: p * len(fun_basis) for p, tup in enumerate(nerve.levels[n + 1])}
        for tgt in nerve.levels[n + 1]:
            for i in range(n + 2):
                src_tup, subst = nerve.face(n + 1, i, tgt)
                sign = (-1) ** i
                for (exps, _idx) in fun_basis:
                    f = PolyFunction(A.chart.dim, {exps: 1})
                    moved = f.substitute(subst, A.chart.dim)
                    for mono, coeff in moved.terms.items():
                        pos = fun_index.get((mono, ()))
                        if pos is None:
                            raise GradingError("bar complex leaves the grading cap")
                        mat.entries[dst_off[tgt] + pos][
                            src_off[src_tup] + fun_index[(exps, _idx)]] += sign * coeff
        # compare against the stored vertical differential, reordered to the
        # same basis layout
        stored = cdc.double.vmap(n, 0)
        perm_src = [cdc.bases[(n, 0)].index((tup, lab))
                    for tup in nerve.levels[n] for lab in fun_basis]
        perm_dst = [cdc.bases[(n + 1, 0)].index((tup, lab))
                    for tup in nerve.levels[n + 1] for lab in fun_basis]
        for rr in range(rows):
            for cc in range(cols):
                if mat.entries[rr][cc] != stored.entries[perm_dst[rr]][perm_src[cc]]:
                    return False
    return True


def invariant_complex(GA, grading="none", cap=0):
    """The subcomplex of psi-invariant forms, with exact closure under d_A.

    Returns (GradedComplex over a single grade per declared grade, bases)
    where bases[(grade, k)] lists the invariant coefficient vectors in the
    ambient capped basis.
    """
    verdict = verify_groupoid_algebroid(GA)
    if not verdict:
        raise GroupoidError(f"groupoid algebroid invalid: {verdict.witness}")
    if isinstance(grading, str):
        grading = Grading(grading)
    if grading.name == "none" and GA.A.chart.dim != 0:
        raise GradingError("grading 'none' is only admissible over a point")
    A = GA.A
    G = GA.groupoid
    from .algebroid import de_rham_complex
    ambient, ambient_bases = de_rham_complex(A, grading, cap)
    grades = sorted(ambient.dims)
    inv_dims, inv_diffs, inv_bases = {}, {}, {}
    for grade in grades:
        inv_dims[grade] = {}
        for k in range(A.rank + 1):
            labels = ambient_bases[(grade, k)]
            idx = {lab: pos for pos, lab in enumerate(labels)}
            dim = len(labels)
            if dim == 0:
                inv_dims[grade][k] = 0
                inv_bases[(grade, k)] = []
                continue
            stacked = []
            for g in G.elements:
                if g == G.identity_label:
                    continue
                act = RatMatrix(dim, dim)
                for col, (exps, fidx) in enumerate(labels):
                    omega = AlgebroidForm(A, k,
                                          {fidx: PolyFunction(A.chart.dim, {exps: 1})})
                    moved = group_action_on_forms(GA, g, omega)
                    for jdx, poly in moved.components.items():
                        for mono, coeff in poly.terms.items():
                            pos = idx.get((mono, jdx))
                            if pos is None:
                                raise GradingError(
                                    "group action leaves the declared grading",
                                    witness=(mono, jdx))
                            act.entries[pos][col] += coeff
                diff = act - RatMatrix.identity(dim)
                stacked.extend(diff.entries)
            if not stacked:
                stacked = [[0] * dim]
            kernel = RatMatrix(len(stacked), dim, stacked).kernel_basis()
            inv_dims[grade][k] = len(kernel)
            inv_bases[(grade, k)] = kernel
    for grade in grades:
        for k in range(A.rank):
            V = inv_bases[(grade, k)]
            W = inv_bases[(grade, k + 1)]
            D = ambient.differential(grade, k)
            if not V:
                continue
            image = RatMatrix(D.rows, len(V))
            for j, v in enumerate(V):
                for i, x in enumerate(D.apply(v)):
                    image.entries[i][j] = x
            Wmat = RatMatrix(D.rows, len(W))
            for j, w in enumerate(W):
                for i in range(D.rows):
                    Wmat.entries[i][j] = w[i]
            X = _solve_columns(Wmat, image)
            if X is None:
                raise GroupoidError(
                    "invariant forms are not closed under the differential")
            inv_diffs[(grade, k)] = X
    return GradedComplex(inv_dims, inv_diffs), inv_bases


def _solve_columns(A, B):
    """Exact X with A·X = B, or None if some column is outside the span."""
    if B.rows != A.rows:
        raise ComplexError("shape mismatch in solve")
    if B.cols == 0:
        return RatMatrix(A.cols, 0)
    if A.cols == 0:
        return None if not B.is_zero() else RatMatrix(0, B.cols)
    aug = [list(A.entries[i]) + list(B.entries[i]) for i in range(A.rows)]
    n, m = A.rows, A.cols
    row = 0
    pivots = []
    for col in range(m):
        piv = next((r for r in range(row, n) if aug[r][col] != 0), None)
        if piv is None:
            continue
        aug[row], aug[piv] = aug[piv], aug[row]
        inv_p = 1 / aug[row][col]
        aug[row] = [x * inv_p for x in aug[row]]
        for r in range(n):
            if r != row and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[row])]
        pivots.append(col)
        row += 1
        if row == n:
            break
    # consistency: rows below the pivots must vanish on the B side
    for r in range(row, n):
        if any(aug[r][m + j] != 0 for j in range(B.cols)):
            return None
    X = RatMatrix(m, B.cols)
    for r, col in enumerate(pivots):
        for j in range(B.cols):
            X.entries[col][j] = aug[r][m + j]
    return X


class ComparisonReport:
    def __init__(self, total, invariant, equal):
        self.total = total            # [(betti, reliable)] per total degree
        self.invariant = invariant    # [betti] per degree
        self.equal = equal


def compare_total_vs_invariants(GA, cap_n, grading="none", cap=0,
                                max_degree=None):
    """Total Cech cohomology vs the invariant subcomplex, degree by degree.

    Compares all reliable total degrees (d < cap_n) up to ``max_degree``.
    """
    if max_degree is None:
        max_degree = cap_n - 1
    cdc = build_cech_complex(GA, cap_n, cap_n, grading, cap)
    total = total_cohomology(cdc.double, max_degree)
    inv_cplx, _ = invariant_complex(GA, grading, cap)
    betti = complex_cohomology(inv_cplx)
    merged = []
    for d in range(max_degree + 1):
        merged.append(sum(bs[d] if d < len(bs) else 0 for bs in betti.values()))
    equal = all(t == m for (t, reliable), m in zip(total, merged) if reliable)
    return ComparisonReport(total, merged, equal)
