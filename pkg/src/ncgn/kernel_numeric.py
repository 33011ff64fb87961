"""Numerical propagator kernels, slice bounds, masslets and vacuum invariance.

The heat-kernel form of the propagator is

    C(t; x, y) = −Ω/(θπ) · e^{−tm²}/sinh(2Ω̃t)
                 · exp(−(Ω̃/2) coth(2Ω̃t) |x−y|² + iΩ x∧y)
                 · [iΩ̃ coth(2Ω̃t)(x̸−y̸) + Ω(x̸̃−ỹ̸) − m]
                 · (cosh(2Ω̃t) 𝟙 − i sinh(2Ω̃t) γ⁰γ¹)

with Ω̃ = 2Ω/θ, x∧y = (2/θ)(x₀y₁ − x₁y₀) and x̃ = (2/θ)(x₁, −x₀).  The last
factor divided by sinh is ``coth 𝟙 − i γ⁰γ¹``, which is how it is evaluated:
no hyperbolic function ever overflows.

Everything here is floating point; the vacuum check at the end is symbolic.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .forms import LinearForm, sym
from .orientation import line_variables, orient
from .ribbon_graph import PSI, PreconditionError, RibbonGraph, total_order

log = logging.getLogger(__name__)

# numeric representation: γ⁰ = iσ₁, γ¹ = iσ₃
G0 = np.array([[0, 1j], [1j, 0]])
G1 = np.array([[1j, 0], [0, -1j]])
G01 = G0 @ G1
ID2 = np.eye(2, dtype=complex)

TAIL_EPS = 1e-12
MASSLESS_T = 50.0


class QuadratureError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved relative error {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True)
class PhysicalParams:
    theta: float = 1.0
    Omega: float = 0.5
    m: float = 1.0
    M: float = 2.0

    def __post_init__(self):
        if not self.theta > 0:
            raise PreconditionError("theta must be > 0")
        if not 0 < self.Omega < 1:
            raise PreconditionError("Omega must lie in (0, 1)")
        if self.m < 0:
            raise PreconditionError("mass must be ≥ 0")
        if not self.M > 1:
            raise PreconditionError("M must exceed 1")

    @property
    def Omega_tilde(self) -> float:
        return 2 * self.Omega / self.theta


def wedge(x, y, theta: float):
    """x∧y = 2 x Θ⁻¹ y for Θ = [[0, −θ], [θ, 0]]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (2 / theta) * (x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0])


def tilde(x, theta: float):
    """x̃ = 2Θ⁻¹x."""
    x = np.asarray(x, dtype=float)
    return (2 / theta) * np.stack([x[..., 1], -x[..., 0]], axis=-1)


def slash(v):
    """v̸ = v₀γ⁰ + v₁γ¹ for an array of 2-vectors (shape (..., 2) → (..., 2, 2))."""
    v = np.asarray(v)
    return v[..., 0, None, None] * G0 + v[..., 1, None, None] * G1


def matrix_factor(t: float, p: PhysicalParams) -> np.ndarray:
    """exp(−2iΩt γΘ⁻¹γ) in its hyperbolic closed form."""
    a = 2 * p.Omega_tilde * t
    return math.cosh(a) * ID2 - 1j * math.sinh(a) * G01


def matrix_factor_series(t: float, p: PhysicalParams, terms: int = 80) -> np.ndarray:
    """Same factor from the exponential series of −2iΩt γΘ⁻¹γ = −2iΩ̃t γ⁰γ¹."""
    A = -2j * p.Omega_tilde * t * G01
    out = np.zeros((2, 2), dtype=complex)
    term = ID2.copy()
    for k in range(terms):
        out = out + term
        term = term @ A / (k + 1)
    return out


def _coth(z):
    return 1.0 / np.tanh(z)


def kernel_batch(t: float, d: np.ndarray, p: PhysicalParams, x_wedge_y=None, gaussian: bool = True) -> np.ndarray:
    """C(t; x, y) for many separations ``d = x − y`` (shape (S, 2) → (S, 2, 2)).

    ``x_wedge_y`` supplies the phase x∧y (defaults to 0: only |C| is needed
    for bounds, and the phase does not depend on t).  ``gaussian=False``
    drops the Gaussian decay factor (negative control for the slice bound).
    """
    if not t > 0:
        raise PreconditionError("t must be > 0")
    Ot = p.Omega_tilde
    c = float(_coth(2 * Ot * t))
    r2 = np.sum(d * d, axis=-1)
    expo = -t * p.m**2
    if gaussian:
        expo = expo - 0.5 * Ot * c * r2
    else:
        expo = expo + 0 * r2
    phase = 0 if x_wedge_y is None else p.Omega * np.asarray(x_wedge_y)
    scal = -(p.Omega / (p.theta * math.pi)) * np.exp(expo + 1j * phase)
    bracket = 1j * Ot * c * slash(d) + p.Omega * slash(tilde(d, p.theta)) - p.m * ID2
    # matrix factor / sinh(2Ω̃t) = coth 𝟙 − i γ⁰γ¹
    mf = c * ID2 - 1j * G01
    return scal[:, None, None] * (bracket @ mf)


def kernel(t: float, x, y, p: PhysicalParams) -> np.ndarray:
    """The 2×2 matrix C(t; x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = (x - y)[None, :]
    return kernel_batch(t, d, p, x_wedge_y=wedge(x, y, p.theta)[None])[0]


def kernel_direct(t: float, x, y, p: PhysicalParams) -> np.ndarray:
    """The formula evaluated literally with sinh, cosh and the series exponential (oracle)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    Ot = p.Omega_tilde
    s = math.sinh(2 * Ot * t)
    c = math.cosh(2 * Ot * t) / s
    d = x - y
    pref = -(p.Omega / (p.theta * math.pi)) * math.exp(-t * p.m**2) / s
    gauss = np.exp(-0.5 * Ot * c * float(d @ d) + 1j * p.Omega * float(wedge(x, y, p.theta)))
    bracket = 1j * Ot * c * slash(d) + p.Omega * (slash(tilde(x, p.theta)) - slash(tilde(y, p.theta))) - p.m * ID2
    return pref * gauss * bracket @ matrix_factor_series(t, p)


# --------------------------------------------------------------------------
# slices


def slice_interval(i: int, p: PhysicalParams, T: float | None = None) -> tuple[float, float]:
    """The t-interval of slice i; the unbounded i = 0 slice is truncated."""
    if i < 0:
        raise PreconditionError("slice index must be ≥ 0")
    if i >= 1:
        return (p.M ** (-2 * i), p.M ** (-2 * (i - 1)))
    if T is None:
        if p.m > 0:
            T = -math.log(TAIL_EPS) / p.m**2
        else:
            T = MASSLESS_T
            log.warning("massless i=0 slice truncated at T=%g; the tail is not bounded", T)
    return (1.0, max(T, 1.0))


def _quad_matrix(f: Callable[[float], np.ndarray], a: float, b: float, epsrel: float, shape) -> np.ndarray:
    def g(t):
        v = f(t)
        return np.concatenate([v.real.ravel(), v.imag.ravel()])

    val, err = integrate.quad_vec(g, a, b, epsrel=epsrel, epsabs=0, norm="max", limit=2000)
    scale = np.max(np.abs(val)) if np.size(val) else 0.0
    if scale > 0 and err > 10 * epsrel * scale:
        raise QuadratureError("slice quadrature did not converge", err / scale)
    half = val.size // 2
    return (val[:half] + 1j * val[half:]).reshape(shape)


def sliced_kernel_batch(i: int, d: np.ndarray, p: PhysicalParams, epsrel: float = 1e-8,
                        gaussian: bool = True, T: float | None = None) -> np.ndarray:
    """C^i for many separations (phase x∧y omitted), shape (S, 2, 2)."""
    d = np.atleast_2d(np.asarray(d, dtype=float))
    a, b = slice_interval(i, p, T)
    return _quad_matrix(lambda t: kernel_batch(t, d, p, gaussian=gaussian), a, b, epsrel, (len(d), 2, 2))


def sliced_kernel(i: int, x, y, p: PhysicalParams, epsrel: float = 1e-8, T: float | None = None) -> np.ndarray:
    """C^i(x, y) = ∫ over the slice of C(t; x, y) dt."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    val = sliced_kernel_batch(i, (x - y)[None, :], p, epsrel, T=T)[0]
    return val * np.exp(1j * p.Omega * float(wedge(x, y, p.theta)))


def integrate_kernel(a: float, b: float, x, y, p: PhysicalParams, epsrel: float = 1e-10) -> np.ndarray:
    """∫_a^b C(t; x, y) dt over an arbitrary interval."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _quad_matrix(lambda t: kernel(t, x, y, p), a, b, epsrel, (2, 2))


# --------------------------------------------------------------------------
# slice bound


@dataclass(frozen=True)
class SliceBoundFit:
    K: float
    k: float
    passed: bool
    per_slice: dict  # i -> {"K": ..., "k": ...}
    counter_sample: dict | None
    rho_max: float
    samples: int

    def as_dict(self) -> dict:
        return {
            "K": self.K, "k": self.k, "passed": self.passed,
            "per_slice": {str(i): v for i, v in self.per_slice.items()},
            "counter_sample": self.counter_sample, "rho_max": self.rho_max, "samples": self.samples,
        }


def sample_separations(n: int, rho_max: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` scaled separations: radii stratified on [0, rho_max], random directions."""
    r = (np.arange(n) + rng.random(n)) * rho_max / n
    phi = rng.random(n) * 2 * math.pi
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)


def _fit_exponential_envelope(rho: np.ndarray, f: np.ndarray, K: float) -> float:
    """Largest k with f ≤ K e^{−kρ} at every sample (given K ≥ max f)."""
    mask = (rho > 0) & (f > 0)
    if not mask.any():
        return math.inf
    return float(np.min(np.log(K / f[mask]) / rho[mask]))


def verify_slice_bound(i_range: Sequence[int], p: PhysicalParams, samples: int = 200, rho_max: float = 20.0,
                       seed: int = 0, gaussian: bool = True, K_ratio: float = 4.0,
                       decay_target: float = 1e3) -> SliceBoundFit:
    """Look for one (K, k) with |C^i(x,y)| ≤ K M^i e^{−k M^i |x−y|} on all slices.

    Separations are sampled in the scaled variable ρ = M^i|x−y| ∈ [0, ρ_max]
    and |·| is the spectral norm.  With f_i(ρ) = |C^i|/M^i and F = max f,
    the constant is fixed at K = K_ratio·F and k is the largest rate such
    that the envelope holds at every sample of every slice.  The fit passes
    when this envelope has decayed by at least ``decay_target`` at ρ_max,
    i.e. k ρ_max ≥ ln(K_ratio · decay_target); otherwise the sample that
    limits k is returned as a counter-example.
    """
    if samples < 100:
        raise PreconditionError("at least 100 samples per slice are required")
    rng = np.random.default_rng(seed)
    scaled = sample_separations(samples, rho_max, rng)
    rho = np.linalg.norm(scaled, axis=-1)
    data = {}
    for i in i_range:
        d = scaled / p.M**i
        C = sliced_kernel_batch(i, d, p, gaussian=gaussian)
        data[i] = np.linalg.norm(C, ord=2, axis=(1, 2)) / p.M**i
    F = max(float(np.max(v)) for v in data.values())
    K = K_ratio * F
    per_slice = {}
    k = math.inf
    worst = None
    for i, f in data.items():
        Fi = float(np.max(f))
        per_slice[i] = {"K": K_ratio * Fi, "k": _fit_exponential_envelope(rho, f, K_ratio * Fi)}
        ki = _fit_exponential_envelope(rho, f, K)
        if ki < k:
            k = ki
            mask = (rho > 0) & (f > 0)
            idx = np.flatnonzero(mask)[np.argmin(np.log(K / f[mask]) / rho[mask])]
            worst = {"i": i, "rho": float(rho[idx]), "value": float(f[idx] * p.M**i)}
    passed = math.isfinite(k) and k * rho_max >= math.log(K_ratio * decay_target)
    return SliceBoundFit(K, k, passed, per_slice, None if passed else worst, rho_max, samples)


# --------------------------------------------------------------------------
# masslets


@dataclass(frozen=True)
class MassletCheck:
    numeric: float
    closed_form: float
    rel_error: float

    def as_dict(self) -> dict:
        return {"numeric": self.numeric, "closed_form": self.closed_form, "rel_error": self.rel_error}


def masslet_closed_form(i: int, w, theta: float, M: float) -> float:
    """∫ d²u exp(−M^{2i}|u|² + i u∧w) = π M^{−2i} exp(−|w|²/(θ² M^{2i}))."""
    w = np.asarray(w, dtype=float)
    a = M ** (2 * i)
    return math.pi / a * math.exp(-float(w @ w) / (theta**2 * a))


def _breakpoints(lo: float, hi: float, wavelength: float, cap: int = 200) -> list[float]:
    if not math.isfinite(wavelength) or wavelength <= 0:
        return []
    n = int((hi - lo) / wavelength)
    if n <= 1:
        return []
    n = min(n, cap)
    return [lo + (hi - lo) * k / n for k in range(1, n)]


def masslet_check(i: int, w, p: PhysicalParams | None = None, theta: float | None = None, M: float | None = None,
                  epsrel: float = 1e-11) -> MassletCheck:
    """Two-dimensional quadrature of the oscillatory Gaussian against its closed form.

    The imaginary part vanishes by the parity u → −u, so the real integrand
    ``e^{−a|u|²} cos(b·u)`` with ``b = (2/θ)(w₁, −w₀)`` is integrated over a
    box carrying all but e^{−60} of the Gaussian mass, with breakpoints at
    the oscillation wavelength.
    """
    if i < 0:
        raise PreconditionError("i must be ≥ 0")
    theta = theta if theta is not None else (p.theta if p else 1.0)
    M = M if M is not None else (p.M if p else 2.0)
    w = np.asarray(w, dtype=float)
    a = M ** (2 * i)
    b = (2 / theta) * np.array([w[1], -w[0]])
    L = math.sqrt(60 / a)
    # frequencies far below 1/L do not oscillate over the box
    pts0 = _breakpoints(-L, L, 2 * math.pi / abs(b[0]) if abs(b[0]) * L > 1e-9 else math.inf)
    pts1 = _breakpoints(-L, L, 2 * math.pi / abs(b[1]) if abs(b[1]) * L > 1e-9 else math.inf)

    def inner(u0: float) -> float:
        val, _ = integrate.quad(lambda u1: math.exp(-a * u1 * u1) * math.cos(b[0] * u0 + b[1] * u1),
                                -L, L, points=pts1 or None, epsabs=0, epsrel=epsrel, limit=400)
        return math.exp(-a * u0 * u0) * val

    with warnings.catch_warnings():
        # near-cancelling oscillations trigger round-off warnings well below the target accuracy
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        num, _ = integrate.quad(inner, -L, L, points=pts0 or None, epsabs=0, epsrel=epsrel, limit=400)
    closed = masslet_closed_form(i, w, theta, M)
    rel = abs(num - closed) / abs(closed)
    return MassletCheck(num, closed, rel)


# --------------------------------------------------------------------------
# vacuum graphs


@dataclass(frozen=True)
class VacuumInvariance:
    invariant: bool
    residual: str  # reduced a-coefficient in position variables
    residual_lines: str  # the same in line variables
    raw: str

    def as_dict(self) -> dict:
        return {"invariant": self.invariant, "residual": self.residual,
                "residual_lines": self.residual_lines, "raw": self.raw}


def vacuum_invariance(graph: RibbonGraph, tree=None, root=None) -> VacuumInvariance:
    """a-dependence of a vacuum amplitude under the global shift x → x + a.

    Each propagator phase Ω x∧y picks up Ω a∧(y − x), with x its ψ end and y
    its ψ̄ end; the amplitude depends on a through Ω a∧R, R = Σ_l (s_ψ̄ − s_ψ).
    R is reduced modulo the vertex delta functions; the amplitude is
    translation invariant exactly when the residual vanishes.
    """
    from .rosette import vertex_phases

    if not graph.is_vacuum:
        raise PreconditionError("vacuum_invariance needs a graph without external legs")
    if graph.n == 0:
        return VacuumInvariance(True, "0", "0", "0")
    ordered = total_order(graph, tree, root)
    R = LinearForm()
    for l in graph.lines:
        a, b = l.end_a, l.end_b
        na, nb = ordered.numbering[a], ordered.numbering[b]
        if graph.polarity(a) == graph.polarity(b):
            # both ends alike (relaxed mode only): orient from the smaller number
            psi_end, bar_end = (na, nb) if na < nb else (nb, na)
        elif graph.polarity(a) == PSI:
            psi_end, bar_end = na, nb
        else:
            psi_end, bar_end = nb, na
        R = R + LinearForm({sym("s", bar_end): Fraction(1), sym("s", psi_end): Fraction(-1)})
    _, deltas = vertex_phases(ordered)
    reduced = R.substitute(deltas.solution())
    o = orient(ordered, relaxed=graph.relaxed)
    lv = line_variables(ordered, o)
    ldeltas = deltas.substitute(lv)
    reduced_lines = R.substitute(lv).substitute(ldeltas.solution())
    return VacuumInvariance(not reduced, str(reduced) if reduced else "0",
                            str(reduced_lines) if reduced_lines else "0", str(R))
