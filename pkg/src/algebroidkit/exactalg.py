"""Exact rational kernels: sparse multivariate polynomials over Q, matrices
with fraction-free elimination, and (double) cochain complexes with
degreewise-finite pieces.

Everything here is immutable in spirit: operations return fresh objects and
never mutate their inputs, so independent pieces can be processed in any
order.
"""

from fractions import Fraction
from math import gcd


class ExactAlgError(Exception):
    pass


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise ExactAlgError(f"cannot coerce {x!r} to an exact rational")


def format_fraction(q):
    """Render a rational as 'p' or 'p/q' in lowest terms."""
    q = _as_fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# sparse polynomials
# ---------------------------------------------------------------------------

class PolyFunction:
    """Sparse polynomial with Fraction coefficients on a fixed chart.

    Terms are stored as {exponent tuple: coefficient}; zero coefficients are
    never kept.  The exponent tuples always have length ``chart_dim``.
    """

    __slots__ = ("chart_dim", "terms")

    def __init__(self, chart_dim, terms=None):
        self.chart_dim = chart_dim
        clean = {}
        if terms:
            for exps, coeff in terms.items():
                coeff = _as_fraction(coeff)
                if coeff == 0:
                    continue
                exps = tuple(int(e) for e in exps)
                if len(exps) != chart_dim:
                    raise ExactAlgError(
                        f"exponent tuple {exps} has length {len(exps)}, chart_dim is {chart_dim}")
                if any(e < 0 for e in exps):
                    raise ExactAlgError(f"negative exponent in {exps}")
                clean[exps] = coeff
        self.terms = clean

    @classmethod
    def zero(cls, chart_dim):
        return cls(chart_dim)

    @classmethod
    def constant(cls, chart_dim, value):
        value = _as_fraction(value)
        if value == 0:
            return cls(chart_dim)
        return cls(chart_dim, {(0,) * chart_dim: value})

    @classmethod
    def one(cls, chart_dim):
        return cls.constant(chart_dim, 1)

    @classmethod
    def coordinate(cls, chart_dim, axis):
        if not 0 <= axis < chart_dim:
            raise ExactAlgError(f"axis {axis} out of range for chart_dim {chart_dim}")
        exps = tuple(1 if i == axis else 0 for i in range(chart_dim))
        return cls(chart_dim, {exps: Fraction(1)})

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(all(e == 0 for e in exps) for exps in self.terms)

    def constant_value(self):
        return self.terms.get((0,) * self.chart_dim, Fraction(0))

    def total_degree(self):
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def _check_chart(self, other):
        if self.chart_dim != other.chart_dim:
            raise ExactAlgError(
                f"chart mismatch: {self.chart_dim} vs {other.chart_dim}")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PolyFunction.constant(self.chart_dim, other)
        self._check_chart(other)
        terms = dict(self.terms)
        for exps, coeff in other.terms.items():
            new = terms.get(exps, Fraction(0)) + coeff
            if new == 0:
                terms.pop(exps, None)
            else:
                terms[exps] = new
        return PolyFunction(self.chart_dim, terms)

    __radd__ = __add__

    def __neg__(self):
        return PolyFunction(self.chart_dim,
                            {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PolyFunction.constant(self.chart_dim, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = _as_fraction(other)
            if q == 0:
                return PolyFunction(self.chart_dim)
            return PolyFunction(self.chart_dim,
                                {e: c * q for e, c in self.terms.items()})
        self._check_chart(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                new = terms.get(e, Fraction(0)) + c1 * c2
                if new == 0:
                    terms.pop(e, None)
                else:
                    terms[e] = new
        return PolyFunction(self.chart_dim, terms)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ExactAlgError("only non-negative integer powers")
        result = PolyFunction.one(self.chart_dim)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PolyFunction.constant(self.chart_dim, other)
        if not isinstance(other, PolyFunction):
            return NotImplemented
        return self.chart_dim == other.chart_dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.chart_dim, frozenset(self.terms.items())))

    def derive(self, axis):
        """Exact formal partial derivative along the given coordinate axis."""
        if not 0 <= axis < self.chart_dim:
            raise ExactAlgError(f"axis {axis} out of range for chart_dim {self.chart_dim}")
        terms = {}
        for exps, coeff in self.terms.items():
            e = exps[axis]
            if e == 0:
                continue
            new_exps = exps[:axis] + (e - 1,) + exps[axis + 1:]
            terms[new_exps] = terms.get(new_exps, Fraction(0)) + coeff * e
        return PolyFunction(self.chart_dim, terms)

    def substitute(self, images, target_dim=None):
        """Compose with a polynomial map: x_i -> images[i].

        All images must live on a common chart; the result lives there.  When
        the polynomial has no variables the target dimension cannot be
        inferred from ``images``, so pass ``target_dim`` explicitly.
        """
        if len(images) != self.chart_dim:
            raise ExactAlgError(
                f"need {self.chart_dim} images, got {len(images)}")
        if self.chart_dim == 0:
            target_dim = 0 if target_dim is None else target_dim
        else:
            inferred = images[0].chart_dim
            for im in images:
                if im.chart_dim != inferred:
                    raise ExactAlgError("substitution images on mismatched charts")
            if target_dim is not None and target_dim != inferred:
                raise ExactAlgError("target_dim contradicts the images' chart")
            target_dim = inferred
        result = PolyFunction.zero(target_dim)
        for exps, coeff in self.terms.items():
            term = PolyFunction.constant(target_dim, coeff)
            for axis, e in enumerate(exps):
                if e:
                    term = term * (images[axis] ** e)
            result = result + term
        return result

    def evaluate(self, point):
        """Evaluate at a rational point (tuple of Fractions)."""
        if len(point) != self.chart_dim:
            raise ExactAlgError("evaluation point has wrong length")
        total = Fraction(0)
        for exps, coeff in self.terms.items():
            v = coeff
            for x, e in zip(point, exps):
                if e:
                    v *= _as_fraction(x) ** e
            total += v
        return total

    def __str__(self):
        if not self.terms:
            return "0"
        pieces = []
        for exps in sorted(self.terms, key=lambda e: (sum(e), e), reverse=True):
            coeff = self.terms[exps]
            monos = [f"x{i}" if e == 1 else f"x{i}^{e}"
                     for i, e in enumerate(exps) if e]
            if not monos:
                pieces.append(format_fraction(coeff))
            elif coeff == 1:
                pieces.append("*".join(monos))
            elif coeff == -1:
                pieces.append("-" + "*".join(monos))
            else:
                pieces.append(format_fraction(coeff) + "*" + "*".join(monos))
        out = pieces[0]
        for p in pieces[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"PolyFunction({self})"


def poly_derive(p, axis):
    return p.derive(axis)


def poly_substitute(p, images):
    return p.substitute(images)


# ---------------------------------------------------------------------------
# exact linear algebra over Q
# ---------------------------------------------------------------------------

class RatMatrix:
    """Dense matrix of Fractions with exact rank/kernel computations."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows, cols, entries=None):
        self.rows = rows
        self.cols = cols
        if entries is None:
            self.entries = [[Fraction(0)] * cols for _ in range(rows)]
        else:
            if len(entries) != rows or any(len(r) != cols for r in entries):
                raise ExactAlgError("entry grid does not match declared shape")
            self.entries = [[_as_fraction(x) for x in row] for row in entries]

    @classmethod
    def identity(cls, n):
        m = cls(n, n)
        for i in range(n):
            m.entries[i][i] = Fraction(1)
        return m

    @classmethod
    def from_rows(cls, rows):
        nrows = len(rows)
        ncols = len(rows[0]) if rows else 0
        return cls(nrows, ncols, rows)

    @classmethod
    def from_columns(cls, cols):
        if not cols:
            return cls(0, 0)
        return cls.from_rows([[col[i] for col in cols] for i in range(len(cols[0]))])

    def __eq__(self, other):
        return (isinstance(other, RatMatrix) and self.rows == other.rows
                and self.cols == other.cols and self.entries == other.entries)

    def __mul__(self, other):
        if isinstance(other, RatMatrix):
            if self.cols != other.rows:
                raise ExactAlgError("shape mismatch in matrix product")
            out = RatMatrix(self.rows, other.cols)
            for i in range(self.rows):
                for k in range(self.cols):
                    a = self.entries[i][k]
                    if a == 0:
                        continue
                    for j in range(other.cols):
                        out.entries[i][j] += a * other.entries[k][j]
            return out
        q = _as_fraction(other)
        return RatMatrix(self.rows, self.cols,
                         [[x * q for x in row] for row in self.entries])

    __rmul__ = __mul__

    def __add__(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise ExactAlgError("shape mismatch in matrix sum")
        return RatMatrix(self.rows, self.cols,
                         [[a + b for a, b in zip(r1, r2)]
                          for r1, r2 in zip(self.entries, other.entries)])

    def __neg__(self):
        return self * Fraction(-1)

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self):
        return all(x == 0 for row in self.entries for x in row)

    def apply(self, vec):
        if len(vec) != self.cols:
            raise ExactAlgError("vector length mismatch")
        return [sum((self.entries[i][j] * vec[j] for j in range(self.cols)),
                    Fraction(0)) for i in range(self.rows)]

    def _integer_rows(self):
        """Clear denominators row by row (kernel and rank are unchanged)."""
        out = []
        for row in self.entries:
            denom_lcm = 1
            for x in row:
                denom_lcm = denom_lcm * x.denominator // gcd(denom_lcm, x.denominator)
            out.append([int(x * denom_lcm) for x in row])
        return out

    def _echelon(self):
        """Fraction-free (Bareiss) elimination.

        Returns (echelon rows as Fractions, pivot column list).
        """
        m = self._integer_rows()
        nrows, ncols = self.rows, self.cols
        pivots = []
        prev = 1
        r = 0
        for c in range(ncols):
            if r >= nrows:
                break
            pivot_row = None
            for i in range(r, nrows):
                if m[i][c] != 0:
                    pivot_row = i
                    break
            if pivot_row is None:
                continue
            if pivot_row != r:
                m[r], m[pivot_row] = m[pivot_row], m[r]
            for i in range(r + 1, nrows):
                for j in range(c + 1, ncols):
                    m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) // prev
                m[i][c] = 0
            prev = m[r][c]
            pivots.append(c)
            r += 1
        ech = [[Fraction(x) for x in row] for row in m]
        return ech, pivots

    def rank(self):
        _, pivots = self._echelon()
        return len(pivots)

    def kernel_basis(self):
        """Exact basis of the null space; length = cols - rank."""
        ech, pivots = self._echelon()
        pivot_set = set(pivots)
        free_cols = [c for c in range(self.cols) if c not in pivot_set]
        basis = []
        for fc in free_cols:
            vec = [Fraction(0)] * self.cols
            vec[fc] = Fraction(1)
            # back substitution over the echelon rows
            for r in range(len(pivots) - 1, -1, -1):
                pc = pivots[r]
                s = sum((ech[r][j] * vec[j] for j in range(pc + 1, self.cols)),
                        Fraction(0))
                vec[pc] = -s / ech[r][pc]
            basis.append(vec)
        return basis

    def transpose(self):
        return RatMatrix(self.cols, self.rows,
                         [[self.entries[i][j] for i in range(self.rows)]
                          for j in range(self.cols)])

    def __repr__(self):
        return f"RatMatrix({self.rows}x{self.cols})"


def kernel_basis(matrix):
    return matrix.kernel_basis()


# ---------------------------------------------------------------------------
# matrices of polynomials
# ---------------------------------------------------------------------------

def polymat(entries):
    """Validate a rectangular grid of PolyFunctions and return it as lists."""
    if entries and any(len(r) != len(entries[0]) for r in entries):
        raise ExactAlgError("ragged polynomial matrix")
    return [list(r) for r in entries]


def polymat_zero(rows, cols, chart_dim):
    z = PolyFunction.zero(chart_dim)
    return [[z for _ in range(cols)] for _ in range(rows)]


def polymat_identity(n, chart_dim):
    one = PolyFunction.one(chart_dim)
    zero = PolyFunction.zero(chart_dim)
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def polymat_mul(a, b):
    if not a or not b:
        return []
    if len(a[0]) != len(b):
        raise ExactAlgError("shape mismatch in polynomial matrix product")
    out = []
    for i in range(len(a)):
        row = []
        for j in range(len(b[0])):
            acc = PolyFunction.zero(a[i][0].chart_dim)
            for k in range(len(b)):
                acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


def polymat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def polymat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def polymat_eq(a, b):
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        if len(ra) != len(rb):
            return False
        if any(x != y for x, y in zip(ra, rb)):
            return False
    return True


def polymat_is_zero(a):
    return all(x.is_zero() for row in a for x in row)


def polymat_substitute(a, images):
    return [[x.substitute(images) for x in row] for row in a]


def polymat_det(a):
    """Determinant by cofactor expansion (desk-scale sizes only)."""
    n = len(a)
    if n == 0:
        raise ExactAlgError("determinant of empty matrix")
    if any(len(r) != n for r in a):
        raise ExactAlgError("determinant needs a square matrix")
    if n == 1:
        return a[0][0]
    dim = a[0][0].chart_dim
    det = PolyFunction.zero(dim)
    sign = 1
    for j in range(n):
        if not a[0][j].is_zero():
            minor = [[a[i][k] for k in range(n) if k != j] for i in range(1, n)]
            det = det + sign * a[0][j] * polymat_det(minor)
        sign = -sign
    return det


def polymat_inverse(a):
    """Exact inverse of a square polynomial matrix.

    Only unimodular matrices (constant nonzero determinant) are invertible
    over the polynomial ring; returns None otherwise.
    """
    n = len(a)
    if n == 0:
        return []
    det = polymat_det(a)
    if det.is_zero() or not det.is_constant():
        return None
    inv_det = Fraction(1) / det.constant_value()
    dim = a[0][0].chart_dim
    out = polymat_zero(n, n, dim)
    for i in range(n):
        for j in range(n):
            minor = [[a[r][c] for c in range(n) if c != i]
                     for r in range(n) if r != j]
            cof = polymat_det(minor) if n > 1 else PolyFunction.one(dim)
            out[i][j] = ((-1) ** (i + j)) * inv_det * cof
    return out


def polymat_constant(mat, chart_dim):
    """Lift a grid of rationals to a constant polynomial matrix."""
    return [[PolyFunction.constant(chart_dim, x) for x in row] for row in mat]


def polymat_adjugate(a):
    """Adjugate matrix: adj(A)·A = det(A)·I, always polynomial."""
    n = len(a)
    dim = a[0][0].chart_dim if n else 0
    if n == 1:
        return [[PolyFunction.one(dim)]]
    out = polymat_zero(n, n, dim)
    for i in range(n):
        for j in range(n):
            minor = [[a[r][c] for c in range(n) if c != i]
                     for r in range(n) if r != j]
            out[i][j] = ((-1) ** (i + j)) * polymat_det(minor)
    return out


def _uni_coeffs(p):
    """Coefficient list of a univariate polynomial, constant term first."""
    if p.chart_dim != 1:
        raise ExactAlgError("univariate helper on a multivariate polynomial")
    deg = p.total_degree()
    out = [Fraction(0)] * (deg + 1 if deg >= 0 else 1)
    for exps, coeff in p.terms.items():
        out[exps[0]] = coeff
    return out


def _uni_poly(coeffs):
    terms = {}
    for e, c in enumerate(coeffs):
        if c != 0:
            terms[(e,)] = c
    return PolyFunction(1, terms)


def _uni_divmod(a, b):
    """Quotient and remainder of univariate coefficient lists."""
    a = list(a)
    db = len(b) - 1
    while db > 0 and b[db] == 0:
        db -= 1
    if b[db] == 0:
        raise ExactAlgError("univariate division by zero")
    q = [Fraction(0)] * max(len(a) - db, 1)
    for i in range(len(a) - 1, db - 1, -1):
        if a[i] == 0:
            continue
        f = a[i] / b[db]
        q[i - db] = f
        for j in range(db + 1):
            a[i - db + j] -= f * b[j]
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return q, a


def poly_ext_gcd_univariate(polys):
    """gcd and Bezout cofactors of univariate polynomials over Q.

    Returns (gcd, cofactors) with sum(cofactors[i] * polys[i]) = gcd.
    """
    if not polys:
        raise ExactAlgError("gcd of an empty family")
    g = _uni_coeffs(polys[0])
    cof = [[Fraction(1)]] + [[Fraction(0)]] * (len(polys) - 1)
    for t in range(1, len(polys)):
        b = _uni_coeffs(polys[t])
        # extended Euclid on (g, b)
        r0, r1 = list(g), list(b)
        s0, s1 = [Fraction(1)], [Fraction(0)]
        t0, t1 = [Fraction(0)], [Fraction(1)]
        def _is_zero(c):
            return all(x == 0 for x in c)
        def _mul(a_, b_):
            out = [Fraction(0)] * (len(a_) + len(b_) - 1)
            for i, x in enumerate(a_):
                if x == 0:
                    continue
                for j, y2 in enumerate(b_):
                    out[i + j] += x * y2
            return out
        def _sub(a_, b_):
            out = [Fraction(0)] * max(len(a_), len(b_))
            for i, x in enumerate(a_):
                out[i] += x
            for i, x in enumerate(b_):
                out[i] -= x
            while len(out) > 1 and out[-1] == 0:
                out.pop()
            return out
        while not _is_zero(r1):
            q, rem = _uni_divmod(r0, r1)
            r0, r1 = r1, rem
            s0, s1 = s1, _sub(s0, _mul(q, s1))
            t0, t1 = t1, _sub(t0, _mul(q, t1))
        # g_new = s0 * g + t0 * b
        new_cof = []
        for i in range(len(polys)):
            old = cof[i] if i < len(cof) else [Fraction(0)]
            piece = _mul(s0, old)
            if i == t:
                piece = _sub(piece, [-x for x in t0])
            new_cof.append(piece)
        cof = new_cof
        g = r0
    return _uni_poly(g), [_uni_poly(c) for c in cof]


# ---------------------------------------------------------------------------
# graded cochain complexes
# ---------------------------------------------------------------------------

class ComplexError(ExactAlgError):
    def __init__(self, message, grade=None, degree=None):
        super().__init__(message)
        self.grade = grade
        self.degree = degree


class GradedComplex:
    """Cochain complex split into finite-dimensional graded pieces.

    ``dims[grade][degree]`` is the dimension of that piece;
    ``differentials[(grade, degree)]`` maps degree d to d+1 inside the grade
    (matrix shape: dims[grade][degree+1] x dims[grade][degree]).
    Absent entries mean a zero-dimensional piece / zero map.
    """

    def __init__(self, dims, differentials):
        self.dims = {g: dict(ds) for g, ds in dims.items()}
        self.differentials = dict(differentials)

    def dim(self, grade, degree):
        return self.dims.get(grade, {}).get(degree, 0)

    def differential(self, grade, degree):
        d = self.differentials.get((grade, degree))
        if d is None:
            return RatMatrix(self.dim(grade, degree + 1), self.dim(grade, degree))
        return d

    def validate(self):
        for (grade, degree), mat in self.differentials.items():
            if mat.cols != self.dim(grade, degree) or mat.rows != self.dim(grade, degree + 1):
                raise ComplexError(
                    f"differential shape mismatch at grade {grade}, degree {degree}",
                    grade, degree)
        for grade, ds in self.dims.items():
            if not ds:
                continue
            for degree in sorted(ds):
                d1 = self.differential(grade, degree)
                d2 = self.differential(grade, degree + 1)
                if not (d2 * d1).is_zero():
                    raise ComplexError(
                        f"d∘d nonzero at grade {grade}, degree {degree}",
                        grade, degree)

    def betti(self, grade, degree):
        d_out = self.differential(grade, degree)
        d_in = self.differential(grade, degree - 1)
        n = self.dim(grade, degree)
        return n - d_out.rank() - d_in.rank()


def complex_cohomology(cplx):
    """Betti numbers per grade, indexed from degree 0 to the grade's top degree."""
    cplx.validate()
    out = {}
    for grade, ds in cplx.dims.items():
        if not ds:
            out[grade] = []
            continue
        top = max(ds)
        out[grade] = [cplx.betti(grade, d) for d in range(0, top + 1)]
    return out


class DoubleComplex:
    """First-quadrant double complex truncated at row cap N and column cap K.

    Pieces are indexed by (n, k): n is the Cech row, k the form-degree
    column.  ``hor[(n, k)]`` maps (n, k) -> (n, k+1) and ``vert[(n, k)]``
    maps (n, k) -> (n+1, k).  Horizontal and vertical differentials must
    commute; the total differential twists the vertical one by (-1)^k.
    """

    def __init__(self, dims, hor, vert, row_cap, col_cap):
        self.dims = dict(dims)
        self.hor = dict(hor)
        self.vert = dict(vert)
        self.row_cap = row_cap
        self.col_cap = col_cap

    def dim(self, n, k):
        return self.dims.get((n, k), 0)

    def hmap(self, n, k):
        m = self.hor.get((n, k))
        if m is None:
            return RatMatrix(self.dim(n, k + 1), self.dim(n, k))
        return m

    def vmap(self, n, k):
        m = self.vert.get((n, k))
        if m is None:
            return RatMatrix(self.dim(n + 1, k), self.dim(n, k))
        return m

    def validate(self):
        for (n, k), d in self.dims.items():
            if n > self.row_cap or k > self.col_cap:
                raise ComplexError(f"piece ({n},{k}) outside caps")
        for n in range(self.row_cap + 1):
            for k in range(self.col_cap + 1):
                h, v = self.hmap(n, k), self.vmap(n, k)
                if h.cols != self.dim(n, k) or h.rows != self.dim(n, k + 1):
                    raise ComplexError(f"horizontal shape mismatch at ({n},{k})")
                if v.cols != self.dim(n, k) or v.rows != self.dim(n + 1, k):
                    raise ComplexError(f"vertical shape mismatch at ({n},{k})")
                if k + 1 <= self.col_cap and not (self.hmap(n, k + 1) * h).is_zero():
                    raise ComplexError(f"horizontal² nonzero at ({n},{k})")
                if n + 1 <= self.row_cap and not (self.vmap(n + 1, k) * v).is_zero():
                    raise ComplexError(f"vertical² nonzero at ({n},{k})")
                if n + 1 <= self.row_cap and k + 1 <= self.col_cap:
                    if not (self.hmap(n + 1, k) * v - self.vmap(n, k + 1) * h).is_zero():
                        raise ComplexError(
                            f"horizontal and vertical differentials do not commute at ({n},{k})")

    def _total_pieces(self, m):
        return [(n, m - n) for n in range(max(0, m - self.col_cap),
                                          min(self.row_cap, m) + 1)]

    def total_differential(self, m):
        """Block matrix of the total differential from degree m to m+1."""
        src = self._total_pieces(m)
        dst = self._total_pieces(m + 1)
        src_off, off = {}, 0
        for p in src:
            src_off[p] = off
            off += self.dim(*p)
        src_dim = off
        dst_off, off = {}, 0
        for p in dst:
            dst_off[p] = off
            off += self.dim(*p)
        dst_dim = off
        big = RatMatrix(dst_dim, src_dim)
        for (n, k) in src:
            h = self.hmap(n, k)
            if (n, k + 1) in dst_off:
                r0, c0 = dst_off[(n, k + 1)], src_off[(n, k)]
                for i in range(h.rows):
                    for j in range(h.cols):
                        big.entries[r0 + i][c0 + j] = h.entries[i][j]
            v = self.vmap(n, k)
            sign = Fraction(-1) if k % 2 else Fraction(1)
            if (n + 1, k) in dst_off:
                r0, c0 = dst_off[(n + 1, k)], src_off[(n, k)]
                for i in range(v.rows):
                    for j in range(v.cols):
                        big.entries[r0 + i][c0 + j] = sign * v.entries[i][j]
        return big


def total_cohomology(dcplx, max_total_degree):
    """Betti numbers of the total complex with reliability flags.

    Degrees touching the truncation boundary (d >= min(row_cap, col_cap))
    are flagged unreliable.
    """
    if max_total_degree > dcplx.row_cap + dcplx.col_cap:
        raise ComplexError("max_total_degree exceeds caps")
    dcplx.validate()
    reliable_below = min(dcplx.row_cap, dcplx.col_cap)
    out = []
    for m in range(max_total_degree + 1):
        dim_m = sum(dcplx.dim(*p) for p in dcplx._total_pieces(m))
        d_out = dcplx.total_differential(m)
        rank_out = d_out.rank()
        rank_in = dcplx.total_differential(m - 1).rank() if m > 0 else 0
        out.append((dim_m - rank_out - rank_in, m < reliable_below))
    return out
