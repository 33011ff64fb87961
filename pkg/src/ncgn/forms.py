"""Exact formal linear and quadratic expressions in 2D-vector symbols.

Symbols stand for points of the plane (positions, short/long line variables,
branch momenta).  A :class:`PhaseForm` is a sum of wedge terms ``c A∧B``
(antisymmetric, stored once with ``A < B``) and dot terms ``c A·B``
(symmetric, stored with ``A <= B``).  Coefficients are ``Fraction`` or
:class:`OmegaPoly` (polynomials in a formal parameter Ω).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

from .ribbon_graph import natural_key

# --------------------------------------------------------------------------
# symbols

KIND_RANK = {"x": 0, "s": 1, "u": 2, "v": 3, "w": 4, "p": 5, "pt": 6, "a": 7}

Symbol = tuple  # (rank, natural key, kind, name)


def sym(kind: str, name) -> Symbol:
    name = str(name)
    return (KIND_RANK[kind], natural_key(name), kind, name)


def sym_kind(s: Symbol) -> str:
    return s[2]


def sym_name(s: Symbol) -> str:
    return s[3]


def sym_str(s: Symbol) -> str:
    return f"{s[2]}[{s[3]}]"


def parse_sym(text: str) -> Symbol:
    kind, rest = text.split("[", 1)
    return sym(kind, rest[:-1])


# --------------------------------------------------------------------------
# polynomials in Ω


class OmegaPoly:
    """Polynomial in the formal parameter Ω with rational coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable = (0,)):
        c = [Fraction(x) for x in coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        self.c = tuple(c) if c else (Fraction(0),)

    @classmethod
    def omega(cls) -> "OmegaPoly":
        return cls((0, 1))

    @staticmethod
    def lift(x) -> "OmegaPoly":
        return x if isinstance(x, OmegaPoly) else OmegaPoly((x,))

    @property
    def degree(self) -> int:
        return len(self.c) - 1 if any(self.c) else -1

    def __add__(self, other):
        o = OmegaPoly.lift(other).c
        n = max(len(self.c), len(o))
        return OmegaPoly([(self.c[k] if k < len(self.c) else 0) + (o[k] if k < len(o) else 0) for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return OmegaPoly([-x for x in self.c])

    def __sub__(self, other):
        return self + (-OmegaPoly.lift(other))

    def __rsub__(self, other):
        return OmegaPoly.lift(other) - self

    def __mul__(self, other):
        o = OmegaPoly.lift(other).c
        out = [Fraction(0)] * (len(self.c) + len(o) - 1)
        for a, x in enumerate(self.c):
            if x:
                for b, y in enumerate(o):
                    out[a + b] += x * y
        return OmegaPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, OmegaPoly):
            if other.degree > 0:
                raise ZeroDivisionError("division by a non-constant polynomial")
            other = other.c[0]
        return OmegaPoly([x / Fraction(other) for x in self.c])

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, OmegaPoly)):
            return self.c == OmegaPoly.lift(other).c
        return NotImplemented

    def __hash__(self):
        return hash(self.c) if len(self.c) > 1 else hash(self.c[0])

    def __bool__(self):
        return any(self.c)

    def __call__(self, omega):
        return sum(x * omega**k for k, x in enumerate(self.c))

    def __repr__(self):
        return f"OmegaPoly({[str(x) for x in self.c]})"

    def __str__(self):
        terms = []
        for k, x in enumerate(self.c):
            if x:
                terms.append(str(x) if k == 0 else f"{x}*Omega" + (f"^{k}" if k > 1 else ""))
        return " + ".join(terms) if terms else "0"


Coeff = Union[Fraction, OmegaPoly]


def coeff_str(c: Coeff) -> str:
    return str(c)


def omega_degree(c: Coeff) -> int:
    return c.degree if isinstance(c, OmegaPoly) else (0 if c else -1)


def _simplify(c: Coeff) -> Coeff:
    if isinstance(c, OmegaPoly) and c.degree <= 0:
        return c.c[0]
    return c


# --------------------------------------------------------------------------
# linear forms


class LinearForm:
    """Immutable ``Σ c_A A`` over symbols."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Symbol, Coeff] | None = None):
        self.terms = {k: _simplify(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def of(cls, *pairs) -> "LinearForm":
        d: dict = {}
        for c, s in pairs:
            d[s] = d.get(s, 0) + Fraction(c) if not isinstance(c, OmegaPoly) else d.get(s, 0) + c
        return cls(d)

    def __add__(self, other: "LinearForm") -> "LinearForm":
        d = dict(self.terms)
        for k, v in other.terms.items():
            d[k] = d.get(k, 0) + v
        return LinearForm(d)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return self + other * -1

    def __neg__(self):
        return self * -1

    def __mul__(self, c) -> "LinearForm":
        if not isinstance(c, OmegaPoly):
            c = Fraction(c)
        return LinearForm({k: v * c for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, LinearForm) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def coeff(self, s: Symbol) -> Coeff:
        return self.terms.get(s, Fraction(0))

    def symbols(self) -> list[Symbol]:
        return sorted(self.terms)

    def substitute(self, subst: Mapping[Symbol, "LinearForm"]) -> "LinearForm":
        d: dict = {}
        for s, c in self.terms.items():
            if s in subst:
                for t, e in subst[s].terms.items():
                    d[t] = d.get(t, 0) + c * e
            else:
                d[s] = d.get(s, 0) + c
        return LinearForm(d)

    def items(self) -> list[tuple[Symbol, Coeff]]:
        return sorted(self.terms.items())

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for s, c in self.items():
            cs = "" if c == 1 else "-" if c == -1 else f"({c})" if isinstance(c, OmegaPoly) else f"{c}*"
            parts.append(f"{cs}{sym_str(s)}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


def var(kind: str, name) -> LinearForm:
    return LinearForm({sym(kind, name): Fraction(1)})


# --------------------------------------------------------------------------
# quadratic (phase) forms


class PhaseForm:
    """Exact ``Σ c_AB A∧B + Σ d_AB A·B`` in canonical storage."""

    __slots__ = ("wedge", "dot")

    def __init__(self, wedge: Mapping | None = None, dot: Mapping | None = None):
        self.wedge: dict = {}
        self.dot: dict = {}
        for (a, b), c in (wedge or {}).items():
            self._add_wedge(a, b, c)
        for (a, b), c in (dot or {}).items():
            self._add_dot(a, b, c)
        self._clean()

    # internal mutators used only while building
    def _add_wedge(self, a, b, c):
        if a == b or c == 0:
            return
        if b < a:
            a, b, c = b, a, -c
        self.wedge[(a, b)] = self.wedge.get((a, b), 0) + c

    def _add_dot(self, a, b, c):
        if c == 0:
            return
        if b < a:
            a, b = b, a
        self.dot[(a, b)] = self.dot.get((a, b), 0) + c

    def _clean(self):
        self.wedge = {k: _simplify(v) for k, v in self.wedge.items() if v != 0}
        self.dot = {k: _simplify(v) for k, v in self.dot.items() if v != 0}

    @classmethod
    def wedge_of(cls, left: LinearForm, right: LinearForm, c: Coeff = Fraction(1)) -> "PhaseForm":
        """``c · left ∧ right`` expanded bilinearly."""
        out = cls()
        for a, x in left.terms.items():
            for b, y in right.terms.items():
                out._add_wedge(a, b, c * x * y)
        out._clean()
        return out

    @classmethod
    def dot_of(cls, left: LinearForm, right: LinearForm, c: Coeff = Fraction(1)) -> "PhaseForm":
        out = cls()
        for a, x in left.terms.items():
            for b, y in right.terms.items():
                out._add_dot(a, b, c * x * y)
        out._clean()
        return out

    def __add__(self, other: "PhaseForm") -> "PhaseForm":
        out = PhaseForm()
        out.wedge = dict(self.wedge)
        out.dot = dict(self.dot)
        for (a, b), c in other.wedge.items():
            out._add_wedge(a, b, c)
        for (a, b), c in other.dot.items():
            out._add_dot(a, b, c)
        out._clean()
        return out

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c) -> "PhaseForm":
        if not isinstance(c, OmegaPoly):
            c = Fraction(c)
        out = PhaseForm()
        out.wedge = {k: v * c for k, v in self.wedge.items()}
        out.dot = {k: v * c for k, v in self.dot.items()}
        out._clean()
        return out

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, PhaseForm) and self.wedge == other.wedge and self.dot == other.dot

    def __bool__(self):
        return bool(self.wedge or self.dot)

    def wedge_coeff(self, a: Symbol, b: Symbol) -> Coeff:
        if a == b:
            return Fraction(0)
        if a < b:
            return self.wedge.get((a, b), Fraction(0))
        return -self.wedge.get((b, a), Fraction(0))

    def dot_coeff(self, a: Symbol, b: Symbol) -> Coeff:
        return self.dot.get((min(a, b), max(a, b)), Fraction(0))

    def symbols(self) -> set:
        return {s for k in list(self.wedge) + list(self.dot) for s in k}

    def substitute(self, subst: Mapping[Symbol, LinearForm]) -> "PhaseForm":
        out = PhaseForm()
        cache: dict = {}

        def expand(s):
            if s not in cache:
                cache[s] = subst[s].terms if s in subst else {s: Fraction(1)}
            return cache[s]

        for (a, b), c in self.wedge.items():
            ea, eb = expand(a), expand(b)
            for x, cx in ea.items():
                for y, cy in eb.items():
                    out._add_wedge(x, y, c * cx * cy)
        for (a, b), c in self.dot.items():
            ea, eb = expand(a), expand(b)
            for x, cx in ea.items():
                for y, cy in eb.items():
                    out._add_dot(x, y, c * cx * cy)
        out._clean()
        return out

    def map_coeffs(self, f) -> "PhaseForm":
        out = PhaseForm()
        out.wedge = {k: f(v) for k, v in self.wedge.items()}
        out.dot = {k: f(v) for k, v in self.dot.items()}
        out._clean()
        return out

    def records(self) -> list[tuple[str, str, str, str]]:
        """Sorted ``(A, B, kind, coefficient)`` listing."""
        rows = [(a, b, "wedge", c) for (a, b), c in self.wedge.items()]
        rows += [(a, b, "dot", c) for (a, b), c in self.dot.items()]
        rows.sort(key=lambda r: (r[0], r[1], r[2]))
        return [(sym_str(a), sym_str(b), kind, str(c)) for a, b, kind, c in rows]

    def __str__(self):
        parts = []
        for a, b, kind, c in self.records():
            op = "^" if kind == "wedge" else "."
            parts.append(f"({c}) {a}{op}{b}")
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


# --------------------------------------------------------------------------
# exact linear algebra


def rref_substitution(rows: Iterable[LinearForm], eligible=lambda s: True) -> dict[Symbol, LinearForm]:
    """Solve the homogeneous system ``rows = 0`` for pivot symbols.

    Reduced row-echelon form with columns in descending symbol order, so each
    pivot is the largest eligible symbol of its row.  The returned map
    ``pivot -> expression in the free symbols`` depends only on the span of
    the rows, not on their order.
    """
    rows = [r for r in rows if r]
    syms = sorted({s for r in rows for s in r.terms}, key=lambda s: (not eligible(s), _neg_key(s)))
    mat = [[r.coeff(s) for s in syms] for r in rows]
    n_elig = sum(1 for s in syms if eligible(s))
    piv_cols = []
    rank = 0
    for col in range(n_elig):
        sel = next((k for k in range(rank, len(mat)) if mat[k][col] != 0), None)
        if sel is None:
            continue
        mat[rank], mat[sel] = mat[sel], mat[rank]
        pv = mat[rank][col]
        mat[rank] = [x / pv for x in mat[rank]]
        for k in range(len(mat)):
            if k != rank and mat[k][col] != 0:
                f = mat[k][col]
                mat[k] = [a - f * b for a, b in zip(mat[k], mat[rank])]
        piv_cols.append(col)
        rank += 1
    for k in range(rank, len(mat)):
        if any(x != 0 for x in mat[k]):
            raise ValueError("constraint without an eligible symbol")
    out = {}
    for r, col in enumerate(piv_cols):
        out[syms[col]] = LinearForm({syms[c]: -mat[r][c] for c in range(len(syms)) if c != col})
    return out


class _Desc:
    __slots__ = ("s",)

    def __init__(self, s):
        self.s = s

    def __lt__(self, other):
        return other.s < self.s

    def __eq__(self, other):
        return self.s == other.s


def _neg_key(s: Symbol) -> _Desc:
    return _Desc(s)


def exact_rank(matrix: list[list[int]]) -> int:
    """Rank over ℚ by fraction-free (Bareiss) elimination on integers."""
    m = [list(map(int, row)) for row in matrix]
    if not m or not m[0]:
        return 0
    rows, cols = len(m), len(m[0])
    rank, prev = 0, 1
    for col in range(cols):
        sel = next((r for r in range(rank, rows) if m[r][col] != 0), None)
        if sel is None:
            continue
        m[rank], m[sel] = m[sel], m[rank]
        for r in range(rank + 1, rows):
            for c in range(col + 1, cols):
                m[r][c] = (m[r][c] * m[rank][col] - m[r][col] * m[rank][c]) // prev
            m[r][col] = 0
        prev = m[rank][col]
        rank += 1
        if rank == rows:
            break
    return rank


def iter_symbols(forms: Iterable[LinearForm]) -> Iterator[Symbol]:
    seen = set()
    for f in forms:
        for s in f.terms:
            if s not in seen:
                seen.add(s)
                yield s
