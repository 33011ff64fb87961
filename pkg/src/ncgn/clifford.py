"""Two-dimensional Euclidean Clifford algebra, Fierz rewriting and parity rules.

Elements are exact combinations of the basis ``Γ⁰=𝟙, Γ¹=γ⁰, Γ²=γ¹,
Γ³=γ⁰γ¹`` with Gaussian-rational coefficients, where
``{γ^μ, γ^ν} = −2δ^{μν}``.  Products are computed from the relations alone;
a concrete 2×2 representation is used to decompose matrices and to build the
index contraction patterns of the quartic interactions.

The representation is ``γ⁰ = iσ₁``, ``γ¹ = iσ₃``.  Both matrices are
skew-Hermitian and symmetric.  The symmetry matters: the transposed products
``ᵗΓ`` that appear in the Fierz rewriting (and therefore the interaction
matrices) depend on it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from sympy.polys.domains import QQ_I

from .ribbon_graph import PreconditionError, RibbonGraph, natural_key

BASIS_NAMES = ("1", "g0", "g1", "g0g1")
ETA = (-1, 1, 1, 1)

ZERO = QQ_I(0, 0)
ONE = QQ_I(1, 0)
I_UNIT = QQ_I(0, 1)


def gauss(x) -> "QQ_I.dtype":
    """Exact Gaussian rational from an int, Fraction, complex-free pair or element."""
    if isinstance(x, QQ_I.dtype):
        return x
    if isinstance(x, tuple):
        re, im = x
        return QQ_I.convert(QQ_I.from_sympy(_sym_rational(re))) + QQ_I.from_sympy(_sym_rational(im)) * I_UNIT
    return QQ_I.from_sympy(_sym_rational(x))


def _sym_rational(x):
    import sympy

    if isinstance(x, Fraction):
        return sympy.Rational(x.numerator, x.denominator)
    return sympy.Rational(x)


# --------------------------------------------------------------------------
# algebra


def _basis_product(a: int, b: int) -> tuple[int, int]:
    """Γ^a Γ^b = sign · Γ^c.  Index bits: bit 0 = γ⁰, bit 1 = γ¹ (Γ³ = γ⁰γ¹)."""
    a0, a1 = a & 1, (a >> 1) & 1
    b0, b1 = b & 1, (b >> 1) & 1
    sign = 1
    if a1 and b0:  # move γ⁰ of b left past γ¹ of a
        sign = -sign
    if a0 and b0:  # γ⁰γ⁰ = −1
        sign = -sign
    if a1 and b1:  # γ¹γ¹ = −1
        sign = -sign
    return sign, (a0 ^ b0) | ((a1 ^ b1) << 1)


# basis index in the Γ^A numbering: 0 → 𝟙, 1 → γ⁰, 2 → γ¹, 3 → γ⁰γ¹ (bits match)


@dataclass(frozen=True)
class CliffordElement:
    """``c₀𝟙 + c₁γ⁰ + c₂γ¹ + c₃γ⁰γ¹`` with exact complex coefficients."""

    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != 4:
            raise ValueError("a Clifford element has four coefficients")
        object.__setattr__(self, "coeffs", tuple(gauss(c) for c in self.coeffs))

    @classmethod
    def basis(cls, k: int) -> "CliffordElement":
        return cls(tuple(1 if j == k else 0 for j in range(4)))

    @classmethod
    def scalar(cls, c) -> "CliffordElement":
        return cls((c, 0, 0, 0))

    def __add__(self, other: "CliffordElement") -> "CliffordElement":
        return CliffordElement(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "CliffordElement") -> "CliffordElement":
        return CliffordElement(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "CliffordElement":
        return CliffordElement(tuple(-a for a in self.coeffs))

    def scale(self, c) -> "CliffordElement":
        c = gauss(c)
        return CliffordElement(tuple(c * a for a in self.coeffs))

    def __mul__(self, other: "CliffordElement") -> "CliffordElement":
        return multiply(self, other)

    def trace(self):
        """Trace in the two-dimensional representation: only 𝟙 contributes."""
        return 2 * self.coeffs[0]

    def is_zero(self) -> bool:
        return all(c == ZERO for c in self.coeffs)

    def as_strings(self) -> list[str]:
        return [str(QQ_I.to_sympy(c)) for c in self.coeffs]


def multiply(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    out = [ZERO] * 4
    for i, x in enumerate(a.coeffs):
        if x == ZERO:
            continue
        for j, y in enumerate(b.coeffs):
            if y == ZERO:
                continue
            s, k = _basis_product(i, j)
            out[k] += x * y if s > 0 else -(x * y)
    return CliffordElement(tuple(out))


IDENTITY = CliffordElement.basis(0)
GAMMA0 = CliffordElement.basis(1)
GAMMA1 = CliffordElement.basis(2)
GAMMA01 = CliffordElement.basis(3)


# --------------------------------------------------------------------------
# concrete representation


Matrix = tuple  # 2×2 tuple of tuples of Gaussian rationals


def _mat(rows) -> Matrix:
    return tuple(tuple(gauss(x) for x in r) for r in rows)


SIGMA1 = _mat([[0, 1], [1, 0]])
SIGMA3 = _mat([[1, 0], [0, -1]])


def matmul(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(sum((a[i][k] * b[k][j] for k in range(2)), ZERO) for j in range(2)) for i in range(2))


def mat_scale(c, a: Matrix) -> Matrix:
    c = gauss(c)
    return tuple(tuple(c * x for x in r) for r in a)


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def transpose(a: Matrix) -> Matrix:
    return tuple(tuple(a[j][i] for j in range(2)) for i in range(2))


def mat_trace(a: Matrix):
    return a[0][0] + a[1][1]


_G0 = mat_scale(I_UNIT, SIGMA1)
_G1 = mat_scale(I_UNIT, SIGMA3)
BASIS_MATRICES: tuple[Matrix, ...] = (_mat([[1, 0], [0, 1]]), _G0, _G1, matmul(_G0, _G1))


def to_matrix(e: CliffordElement) -> Matrix:
    out = _mat([[0, 0], [0, 0]])
    for c, m in zip(e.coeffs, BASIS_MATRICES):
        out = mat_add(out, mat_scale(c, m))
    return out


def decompose(m: Sequence[Sequence]) -> CliffordElement:
    """Coefficients of ``M = −½ Σ_{A,B} η_AB Tr(MΓ^A) Γ^B`` (η diagonal)."""
    m = _mat(m)
    half = gauss(Fraction(-1, 2))
    return CliffordElement(tuple(half * ETA[b] * mat_trace(matmul(m, BASIS_MATRICES[b])) for b in range(4)))


# --------------------------------------------------------------------------
# Fierz rewriting

# Index contraction tensors of the six interactions.  Orientable kinds are
# written ψ̄_i ψ_j ψ̄_k ψ_l, the non-orientable ones ψ_i ψ̄_j ψ̄_k ψ_l (after a
# cyclic move of the last field to the front), each with Σ K_ijkl.


def _delta(a: int, b: int) -> int:
    return 1 if a == b else 0


CONTRACTIONS = {
    # ψ̄aψaψ̄bψb
    "o1": lambda i, j, k, l: _delta(i, j) * _delta(k, l),
    # ψaψ̄aψbψ̄b = ψ̄bψaψ̄aψb
    "o2": lambda i, j, k, l: _delta(j, k) * _delta(i, l),
    # ψ̄aψbψ̄aψb
    "o3": lambda i, j, k, l: _delta(i, k) * _delta(j, l),
    # ψ̄aψ̄bψaψb = ψbψ̄aψ̄bψa
    "no1": lambda i, j, k, l: _delta(i, k) * _delta(j, l),
    # ψ̄aψ̄bψbψa = ψaψ̄aψ̄bψb
    "no2": lambda i, j, k, l: _delta(i, j) * _delta(k, l),
    # ψ̄aψ̄aψbψb = ψbψ̄aψ̄aψb
    "no3": lambda i, j, k, l: _delta(j, k) * _delta(i, l),
}


def coupling_matrix(K) -> tuple[tuple, ...]:
    """The 4×4 ``g`` with ``Σ K_ijkl F_i G_j H_k J_l = −½ Σ g_AB (F Γ^A G)(H Γ^B J)``.

    Trace orthogonality ``Tr(Γ^A Γ^C) = −2η_AC`` gives
    ``g_CD = −½ η_CC η_DD Σ K_ijkl Γ^C_ji Γ^D_lk``.
    """
    g = []
    for c in range(4):
        row = []
        for d in range(4):
            s = ZERO
            gc, gd = BASIS_MATRICES[c], BASIS_MATRICES[d]
            for i, j, k, l in itertools.product(range(2), repeat=4):
                kv = K(i, j, k, l)
                if kv:
                    s += gauss(kv) * gc[j][i] * gd[l][k]
            row.append(gauss(Fraction(-1, 2)) * ETA[c] * ETA[d] * s)
        g.append(tuple(row))
    return tuple(g)


def fierz_matrix(kind: str) -> tuple[tuple, ...]:
    """Interaction matrix ``g`` of one of the six quartic interactions."""
    if kind not in CONTRACTIONS:
        raise ValueError(f"unknown interaction kind {kind!r}")
    return coupling_matrix(CONTRACTIONS[kind])


def conjugation_table(c: int) -> tuple[tuple, ...]:
    """``g`` for ``ψ_a Γ^C_ab ψ̄_b ψ_c Γ^C_cd ψ̄_d`` rewritten as ψ̄Γψ ψ̄Γψ.

    Cyclically, ψ̄_d ψ_a ψ̄_b ψ_c with ``K_ijkl = Γ^C_jk Γ^C_li``.
    """
    gm = BASIS_MATRICES[c]
    return coupling_matrix(lambda i, j, k, l: gm[j][k] * gm[l][i])


def matrix_as_ints(g) -> list[list]:
    """Entries as ints where possible (for display)."""
    out = []
    for row in g:
        r = []
        for x in row:
            v = QQ_I.to_sympy(x)
            r.append(int(v) if v.is_integer else str(v))
        out.append(r)
    return out


# --------------------------------------------------------------------------
# gamma words


def multiply_word(word: Sequence[int]) -> CliffordElement:
    """Iterated product of a word over {0, 1} (0 = γ⁰, 1 = γ¹)."""
    out = IDENTITY
    for w in word:
        out = out * (GAMMA0 if w == 0 else GAMMA1)
    return out


def alternating_form(word: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """``word = sign · alt`` with ``alt`` alternating, by cancelling equal neighbours."""
    stack: list[int] = []
    sign = 1
    for w in word:
        if stack and stack[-1] == w:
            stack.pop()
            sign = -sign  # (γ^μ)² = −1
        else:
            stack.append(w)
    return sign, tuple(stack)


def _alternating_value(alt: tuple[int, ...]) -> tuple[int, int]:
    """Closed form of an alternating product: (sign, basis index)."""
    if not alt:
        return 1, 0
    n0 = alt.count(0)
    n1 = alt.count(1)
    if n0 == n1:
        p, odd = divmod(n0, 2)
        sign = -1 if p % 2 else 1
        if not odd:
            return sign, 0
        # (γ⁰γ¹)^{2p+1} or (γ¹γ⁰)^{2p+1} = −(γ⁰γ¹)^{2p+1}
        return (sign if alt[0] == 0 else -sign), 3
    if n0 == n1 + 1:  # γ⁰γ¹…γ⁰
        p, odd = divmod(n1, 2)
        return (-1 if p % 2 else 1), (2 if odd else 1)
    # γ¹γ⁰…γ¹, n1 = n0 + 1
    p, odd = divmod(n0, 2)
    return (-1 if p % 2 else 1), (1 if odd else 2)


def reduce_gamma_word(word: Sequence[int]) -> tuple[int, int]:
    """(sign, basis index) with ``Π word = sign · Γ^index``."""
    s, alt = alternating_form(word)
    t, k = _alternating_value(alt)
    return s * t, k


def swap_word(word: Sequence[int]) -> tuple[int, ...]:
    return tuple(1 - w for w in word)


def exchange_symmetry_check(word: Sequence[int]) -> bool:
    """γ⁰↔γ¹ exchange: the sign relating a word to its alternating form is unchanged.

    Also checks that the alternating forms are exchanged into each other and
    that the reduced products are related by the exchange automorphism.
    """
    s, alt = alternating_form(word)
    s2, alt2 = alternating_form(swap_word(word))
    if s != s2 or alt2 != swap_word(alt):
        return False
    a = reduce_gamma_word(word)
    b = reduce_gamma_word(swap_word(word))
    # the automorphism fixes 𝟙, swaps γ⁰ and γ¹ and maps γ⁰γ¹ to γ¹γ⁰ = −γ⁰γ¹
    image = {0: (1, 0), 1: (1, 2), 2: (1, 1), 3: (-1, 3)}[a[1]]
    return b == (a[0] * image[0], image[1])


def all_words(max_length: int) -> Iterable[tuple[int, ...]]:
    for n in range(1, max_length + 1):
        yield from itertools.product((0, 1), repeat=n)


# --------------------------------------------------------------------------
# chains and cycles

# spinor-index pairing of the positions of each kind (scalar products)
PAIRINGS = {
    "o1": ((1, 2), (3, 4)),
    "o2": ((1, 2), (3, 4)),
    "o3": ((1, 3), (2, 4)),
    "no1": ((1, 3), (2, 4)),
    "no2": ((1, 4), (2, 3)),
    "no3": ((1, 2), (3, 4)),
}


@dataclass(frozen=True)
class ChainCycleDecomposition:
    cycles: tuple[tuple[str, ...], ...]  # line ids around each closed sequence
    chains: tuple[tuple[str, ...], ...]  # (external, line, ..., line, external)

    def chain_lines(self, k: int) -> tuple[str, ...]:
        return self.chains[k][1:-1]

    def as_dict(self) -> dict:
        return {"cycles": [list(c) for c in self.cycles], "chains": [list(c) for c in self.chains]}


def chains_cycles(graph: RibbonGraph) -> ChainCycleDecomposition:
    """Follow vertex scalar products and propagators through all field slots."""
    partner_in_vertex = {}
    for v in graph.vertices:
        for a, b in PAIRINGS[v.kind]:
            partner_in_vertex[(v.id, a)] = (v.id, b)
            partner_in_vertex[(v.id, b)] = (v.id, a)
    line_at = {}
    for l in graph.lines:
        line_at[l.end_a] = (l.id, l.end_b)
        line_at[l.end_b] = (l.id, l.end_a)
    ext_at = {x.position: x.id for x in graph.externals}

    seen: set = set()
    chains = []
    for x in sorted(graph.externals, key=lambda e: natural_key(e.id)):
        if x.position in seen:
            continue
        seq: list[str] = [x.id]
        p = x.position
        while True:
            seen.add(p)
            q = partner_in_vertex[p]
            seen.add(q)
            if q in ext_at:
                seq.append(ext_at[q])
                break
            lid, p = line_at[q]
            seq.append(lid)
        chains.append(tuple(seq))
    cycles = []
    for l in sorted(graph.lines, key=lambda l: natural_key(l.id)):
        if l.end_a in seen:
            continue
        seq = []
        p = l.end_a
        while p not in seen:
            seen.add(p)
            lid, q = line_at[p]
            seq.append(lid)
            seen.add(q)
            p = partner_in_vertex[q]
        cycles.append(tuple(seq))
    return ChainCycleDecomposition(tuple(cycles), tuple(chains))


# --------------------------------------------------------------------------
# counterterm parity classes

MASS = "mass"
DELTA_M = "delta_m_gamma01"
SLASH_D = "slash_d"
OMEGA_XT = "omega_xt"
SLASH_PT = "slash_pt"
SLASH_X = "slash_x"


@dataclass(frozen=True)
class CountertermClass:
    divergent: frozenset[str]
    convergent: frozenset[str]
    case: str  # "1(a)", "1(b)", "2(a)", "2(b)" with the γ⁰γ¹ pick, "standard" otherwise
    lowest_line: str

    @property
    def forms(self) -> frozenset[str]:
        return self.divergent | self.convergent

    def as_dict(self) -> dict:
        return {
            "divergent": sorted(self.divergent),
            "convergent": sorted(self.convergent),
            "case": self.case,
            "lowest_line": self.lowest_line,
        }


def _lowest_line(graph: RibbonGraph) -> str:
    return min(graph.lines, key=lambda l: (l.scale if l.scale is not None else 0, natural_key(l.id))).id


def parity_counterterm_class(
    graph2pt: RibbonGraph,
    lowest_line_uses_gamma01: bool = False,
    lowest_line: str | None = None,
    massless: bool = False,
) -> CountertermClass:
    """Counterterm forms allowed by gamma tracelessness and u-parity.

    Every line picks one term of its propagator: ``u⁰γ⁰``, ``u¹γ¹`` or the
    mass (no gamma, forbidden when ``massless``).  With the γ⁰γ¹ pick the
    lowest line also carries ``γ⁰γ¹``.  Admissible picks have even γ⁰ and γ¹
    counts in each cycle, and even total ``u^μ`` counts once the Taylor
    insertion ``T^μ`` is added (mass counterterm: T = 0; derivative and
    ``x̃`` counterterms: one T^μ = 1).  The chain's gamma parities then fix
    the form.  Without the pick, terms with a single mass or a single Taylor
    insertion are logarithmically divergent and the others convergent; with
    the pick, vector forms are suppressed by the scale gap and only the
    ``γ⁰γ¹`` mass form is kept as divergent.
    """
    if graph2pt.N != 2:
        raise PreconditionError(f"two-point graph required (N={graph2pt.N})")
    dec = chains_cycles(graph2pt)
    l0 = lowest_line or _lowest_line(graph2pt)
    if l0 not in graph2pt.line:
        raise PreconditionError(f"unknown line {l0!r}")
    chain = dec.chain_lines(0)
    lines = [l.id for l in sorted(graph2pt.lines, key=lambda l: natural_key(l.id))]
    idx = {l: k for k, l in enumerate(lines)}
    cycle_sets = [[idx[l] for l in c] for c in dec.cycles]
    chain_idx = [idx[l] for l in chain]
    pick = lowest_line_uses_gamma01
    extra = {idx[l0]} if pick else set()

    divergent: set[str] = set()
    convergent: set[str] = set()
    choices = ("u0", "u1") if massless else ("u0", "u1", "m")
    for combo in itertools.product(choices, repeat=len(lines)):
        n_mass = combo.count("m")

        def gam(ix: Iterable[int]) -> tuple[int, int]:
            g0 = g1 = 0
            for k in ix:
                g0 += combo[k] == "u0"
                g1 += combo[k] == "u1"
                if k in extra:
                    g0 += 1
                    g1 += 1
            return g0, g1

        if any(g[0] % 2 or g[1] % 2 for g in (gam(c) for c in cycle_sets)):
            continue
        u0, u1 = combo.count("u0"), combo.count("u1")
        c0, c1 = gam(chain_idx)
        for T in ((0, 0), (1, 0), (0, 1)):
            if (u0 + T[0]) % 2 or (u1 + T[1]) % 2:
                continue
            order = n_mass + sum(T)
            if T == (0, 0):
                if c0 % 2 == 0 and c1 % 2 == 0:
                    found = [MASS]
                elif c0 % 2 and c1 % 2:
                    found = [DELTA_M]
                else:
                    continue  # a lone γ^μ without a vector to pair with
            else:
                mu = 0 if T[0] else 1
                cm, cn = (c0, c1) if mu == 0 else (c1, c0)
                if cm % 2 and not cn % 2:
                    found = [SLASH_D, OMEGA_XT]
                elif cn % 2 and not cm % 2:
                    found = [SLASH_PT, SLASH_X]
                else:
                    continue
            for f in found:
                if pick:
                    (divergent if f == DELTA_M else convergent).add(f)
                else:
                    (divergent if order <= 1 else convergent).add(f)
    convergent -= divergent
    if pick:
        case = ("1" if len(chain) % 2 == 0 else "2") + ("(a)" if l0 in chain else "(b)")
    else:
        case = "standard"
    return CountertermClass(frozenset(divergent), frozenset(convergent), case, l0)


# --------------------------------------------------------------------------
# projections


@dataclass(frozen=True)
class Projections:
    mass: object  # ½Tr(A)
    delta_m: object  # coefficient of γ⁰γ¹ in −½γ⁰γ¹Tr(γ⁰γ¹A)
    vector: object | None  # coefficient c with −(v̸/2v²)Tr(v̸A) = c·v̸/… , None when no vector given

    def as_dict(self) -> dict:
        f = lambda x: None if x is None else str(QQ_I.to_sympy(x))  # noqa: E731
        return {"mass": f(self.mass), "delta_m": f(self.delta_m), "vector": f(self.vector)}


def slash(v: Sequence) -> CliffordElement:
    """``v̸ = v_0 γ⁰ + v_1 γ¹``."""
    return CliffordElement((0, v[0], v[1], 0))


def counterterm_projections(a: CliffordElement, vector: Sequence | None = None) -> Projections:
    """Split a 2-point kernel into its 𝟙, γ⁰γ¹ and (optionally) v̸ parts.

    ``τ'_m = ½Tr(A)``, ``τ'_δm = −½ γ⁰γ¹ Tr(γ⁰γ¹A)`` and
    ``τ'_v = −(v̸/2v²) Tr(v̸A)``; the returned numbers are the coefficients of
    ``𝟙``, ``γ⁰γ¹`` and ``v̸`` respectively.
    """
    mass = a.trace() * gauss(Fraction(1, 2))
    delta_m = (GAMMA01 * a).trace() * gauss(Fraction(-1, 2))
    vec = None
    if vector is not None:
        v = tuple(gauss(x) for x in vector)
        v2 = v[0] * v[0] + v[1] * v[1]
        if v2 == ZERO:
            raise PreconditionError("projection on v̸ needs v ≠ 0")
        vec = -(slash(v) * a).trace() / (2 * v2)
    return Projections(mass, delta_m, vec)


def fierz_table() -> dict[str, list[list]]:
    return {k: matrix_as_ints(fierz_matrix(k)) for k in CONTRACTIONS}


def conjugation_tables() -> Mapping[str, list[list]]:
    return {BASIS_NAMES[c]: matrix_as_ints(conjugation_table(c)) for c in range(4)}
