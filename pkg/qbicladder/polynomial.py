"""
Dense complex polynomials and the Aberth-Ehrlich root finder.

The dispersion polynomial of the ladder-with-adatom model is assembled with exact
rational arithmetic from the low-degree factors and rounded once at the end, so
its coefficients carry a single rounding error each.
"""

import logging
import math
from fractions import Fraction
from typing import Optional, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import ConfigDict, Field, field_validator, model_validator

from qbicladder.errors import ConvergenceError
from qbicladder.model import ModelParams
from qbicladder.pydantic import Complex, QbicBaseModel

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps

# fixed angular offset of the initial Aberth circle; breaks the symmetry of
# real-coefficient inputs without a random number generator
ABERTH_PHASE_OFFSET = 0.4
NEWTON_POLISH_STEPS = 3


class ComplexPoly(QbicBaseModel):
    """
    Dense polynomial with complex coefficients.

    ``coeffs[i]`` is the coefficient of ``z**i``. Trailing coefficients that are
    exactly zero are stripped on construction, so the highest stored coefficient
    is nonzero. The zero polynomial has no coefficients and degree ``-inf``.
    """

    model_config = ConfigDict(frozen=True)

    coeffs: list[Complex] = Field(default_factory=list)

    @field_validator("coeffs", mode="after")
    @classmethod
    def strip_trailing_zeros(cls, value: list[complex]) -> list[complex]:
        value = list(value)
        while value and value[-1] == 0:
            value.pop()
        return value

    @classmethod
    def from_array(cls, coeffs) -> "ComplexPoly":
        return cls(coeffs=[complex(c) for c in np.asarray(coeffs).ravel()])

    @property
    def degree(self) -> Union[int, float]:
        if not self.coeffs:
            return -math.inf
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_real(self) -> bool:
        """all coefficients have exactly zero imaginary part"""
        return all(c.imag == 0.0 for c in self.coeffs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=complex)

    def max_abs_coeff(self) -> float:
        if self.is_zero:
            return 0.0
        return float(np.max(np.abs(self.as_array())))

    def __call__(self, z):
        if self.is_zero:
            return np.zeros_like(np.asarray(z, dtype=complex))
        return npoly.polyval(z, self.as_array())

    def derivative(self) -> "ComplexPoly":
        if self.is_zero:
            return self
        return ComplexPoly.from_array(npoly.polyder(self.as_array()))

    def __add__(self, other):
        return poly_add(self, other)

    def __sub__(self, other):
        if not isinstance(other, ComplexPoly):
            return poly_add(self, -complex(other))
        return poly_add(self, poly_scale(other, -1.0))

    def __mul__(self, other):
        if isinstance(other, ComplexPoly):
            return poly_mul(self, other)
        return poly_scale(self, other)

    __rmul__ = __mul__


class RootSet(QbicBaseModel):
    """
    All roots of a polynomial with per-root diagnostics.

    Attributes
    ----------
    roots : list of complex
        Roots listed with multiplicity.
    residuals : list of float
        ``|P(z)|`` at each root.
    iterations : list of int
        Aberth iterations spent on each root before it was frozen.
    cluster_ids : list of int
        Roots sharing an id belong to one numerical cluster.
    flagged : list of bool
        True where the residual exceeds the polish tolerance bound.
    """

    roots: list[Complex]
    residuals: list[float]
    iterations: list[int]
    cluster_ids: list[int]
    flagged: list[bool]

    @model_validator(mode="after")
    def validate_lengths(self):
        n = len(self.roots)
        for name in ("residuals", "iterations", "cluster_ids", "flagged"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per root")
        return self

    def __len__(self) -> int:
        return len(self.roots)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.roots, dtype=complex)

    def sorted_by_real(self) -> list[complex]:
        return sorted(self.roots, key=lambda z: (z.real, z.imag))

    def clusters(self) -> list[dict]:
        """summary of each cluster: id, multiplicity and centre"""
        out = []
        roots = self.as_array()
        ids = np.asarray(self.cluster_ids)
        for cid in sorted(set(self.cluster_ids)):
            members = roots[ids == cid]
            out.append(
                {
                    "cluster_id": int(cid),
                    "multiplicity": int(len(members)),
                    "centre": complex(np.mean(members)),
                }
            )
        return out


def poly_add(a: ComplexPoly, b: Union[ComplexPoly, complex, float]) -> ComplexPoly:
    if not isinstance(b, ComplexPoly):
        b = ComplexPoly(coeffs=[complex(b)])
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    return ComplexPoly.from_array(npoly.polyadd(a.as_array(), b.as_array()))


def poly_mul(a: ComplexPoly, b: Union[ComplexPoly, complex, float]) -> ComplexPoly:
    if not isinstance(b, ComplexPoly):
        return poly_scale(a, b)
    if a.is_zero or b.is_zero:
        return ComplexPoly()
    return ComplexPoly.from_array(npoly.polymul(a.as_array(), b.as_array()))


def poly_scale(a: ComplexPoly, b: Union[complex, float]) -> ComplexPoly:
    if a.is_zero:
        return a
    return ComplexPoly.from_array(a.as_array() * complex(b))


def _exact(coeffs) -> np.ndarray:
    return np.array([Fraction(c) for c in coeffs], dtype=object)


def dispersion_polynomial(params: ModelParams) -> ComplexPoly:
    """
    Degree-12 polynomial whose roots are the discrete eigenvalues on all four
    Riemann sheets.

    With ``A = z - E_d`` and ``B_s = (z + s t'_h)^2 - t_h^2`` the two square roots
    of the dispersion equation are eliminated by squaring twice::

        P = [A^2 B+ B- - (g^4/4)(B+ + B-)]^2 - (g^8/4) B+ B-

    The float parameters are converted to exact fractions, the factors are
    multiplied exactly and the coefficients are rounded once.

    Parameters
    ----------
    params : ModelParams

    Returns
    -------
    ComplexPoly
        Real-coefficient polynomial of degree 12 (monic).
    """
    t = Fraction(params.t_h)
    tp = Fraction(params.tp_h)
    g2 = Fraction(params.g) ** 2
    ed = Fraction(params.e_d)

    a = _exact([-ed, 1])
    b_plus = _exact([tp * tp - t * t, 2 * tp, 1])
    b_minus = _exact([tp * tp - t * t, -2 * tp, 1])

    a2 = npoly.polymul(a, a)
    b_prod = npoly.polymul(b_plus, b_minus)
    inner = npoly.polysub(
        npoly.polymul(a2, b_prod),
        npoly.polyadd(b_plus, b_minus) * (g2 * g2 / 4),
    )
    full = npoly.polysub(npoly.polymul(inner, inner), b_prod * (g2**4 / 4))

    poly = ComplexPoly(coeffs=[complex(float(c), 0.0) for c in full])
    logger.debug(f"dispersion polynomial of degree {poly.degree} for {params}")
    return poly


def residual_bound(p: ComplexPoly, z: complex, tol: float) -> float:
    """``tol * max|c| * max(1, |z|)**degree``"""
    return tol * p.max_abs_coeff() * max(1.0, abs(z)) ** p.degree


def _initial_guesses(coeffs: np.ndarray) -> np.ndarray:
    n = len(coeffs) - 1
    radius = 1.0 + np.max(np.abs(coeffs[:-1] / coeffs[-1]))
    angles = 2.0 * np.pi * np.arange(n) / n + ABERTH_PHASE_OFFSET
    return radius * np.exp(1j * angles)


def _aberth_corrections(
    z: np.ndarray, values: np.ndarray, derivs: np.ndarray
) -> np.ndarray:
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(diff == 0.0, 0.0, 1.0 / diff)
    np.fill_diagonal(inv, 0.0)
    sums = inv.sum(axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = values / derivs
        denom = 1.0 - ratio * sums
        w = np.where(denom == 0.0, ratio, ratio / denom)
    # derivative vanished exactly: leave the root where it is this sweep
    return np.where(np.isfinite(w), w, 0.0)


def _newton_polish(p: ComplexPoly, dp: ComplexPoly, z: complex) -> complex:
    best, best_res = z, abs(p(z))
    for _ in range(NEWTON_POLISH_STEPS):
        d = dp(best)
        if d == 0:
            break
        candidate = best - p(best) / d
        res = abs(p(candidate))
        if not res < best_res:
            break
        best, best_res = candidate, res
    return complex(best)


def _pair_conjugates(roots: np.ndarray) -> np.ndarray:
    """
    Make the root multiset exactly conjugation invariant. Each root is matched
    with the root closest to its mirror image; pairs are averaged and roots that
    match themselves are put on the real axis.
    """
    roots = roots.copy()
    unmatched = set(range(len(roots)))
    for i in np.argsort(-roots.imag):
        if i not in unmatched:
            continue
        candidates = sorted(unmatched)
        target = np.conj(roots[i])
        j = min(candidates, key=lambda k: abs(roots[k] - target))
        if j == i:
            roots[i] = roots[i].real
            unmatched.discard(i)
            continue
        mean = 0.5 * (roots[i] + np.conj(roots[j]))
        roots[i], roots[j] = mean, np.conj(mean)
        unmatched.discard(i)
        unmatched.discard(j)
    return roots


def cluster_roots(
    roots, radius: float = 1e-9, inclusion_radii: Optional[np.ndarray] = None
) -> list[int]:
    """
    Group roots into numerical clusters.

    Two roots are linked when their distance is below ``radius`` (scaled by
    ``max(1, |z|)``) or when their inclusion disks overlap; clusters are the
    connected components of that relation.
    """
    roots = np.asarray(roots, dtype=complex)
    n = len(roots)
    radii = np.zeros(n) if inclusion_radii is None else np.asarray(inclusion_radii)
    ids = list(range(n))

    def find(i):
        while ids[i] != i:
            ids[i] = ids[ids[i]]
            i = ids[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            scale = max(1.0, abs(roots[i]), abs(roots[j]))
            dist = abs(roots[i] - roots[j])
            if dist <= radius * scale or dist <= radii[i] + radii[j]:
                ids[find(i)] = find(j)

    # relabel in order of first appearance
    labels: dict[int, int] = {}
    return [labels.setdefault(find(i), len(labels)) for i in range(n)]


def _inclusion_radii(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Weierstrass inclusion radii ``n |P(z_i) / (c_n prod_{j!=i}(z_i - z_j))|``"""
    n = len(z)
    values = npoly.polyval(z, coeffs)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        radii = n * np.abs(values / (coeffs[-1] * np.prod(diff, axis=1)))
    return np.where(np.isfinite(radii), radii, np.inf)


def find_roots(
    p: ComplexPoly,
    tol: float = 1e-13,
    max_iter: int = 200,
    cluster_radius: float = 1e-9,
) -> RootSet:
    """
    All complex roots of a polynomial by Aberth-Ehrlich simultaneous iteration
    followed by Newton polish.

    Parameters
    ----------
    p : ComplexPoly
        Polynomial of degree >= 1.
    tol : float
        Relative residual tolerance; a root is accepted once
        ``|P(z)| <= tol * max|c| * max(1, |z|)**degree``.
    max_iter : int
        Maximum number of Aberth sweeps.
    cluster_radius : float
        Relative distance below which roots share a cluster id.

    Returns
    -------
    RootSet

    Raises
    ------
    ValueError
        If the polynomial has degree < 1 or ``tol <= 0``.
    ConvergenceError
        If some root is still moving after ``max_iter`` sweeps.
    """
    if p.is_zero or p.degree < 1:
        raise ValueError(f"polynomial must have degree >= 1, got {p.degree}")
    if tol <= 0:
        raise ValueError("tol must be positive")

    coeffs = p.as_array()
    n = int(p.degree)
    dp = p.derivative()
    dcoeffs = dp.as_array()
    scale = p.max_abs_coeff()

    z = _initial_guesses(coeffs)
    active = np.ones(n, dtype=bool)
    iterations = np.zeros(n, dtype=int)

    for sweep in range(max_iter):
        values = npoly.polyval(z, coeffs)
        bounds = tol * scale * np.maximum(1.0, np.abs(z)) ** n
        active &= np.abs(values) > bounds
        if not active.any():
            break

        derivs = npoly.polyval(z, dcoeffs)
        w = _aberth_corrections(z, values, derivs)
        small_step = np.abs(w) <= 4.0 * EPS * np.maximum(1.0, np.abs(z))
        z = np.where(active, z - w, z)
        iterations[active] += 1
        active &= ~small_step
        if not active.any():
            break
    else:
        values = np.abs(npoly.polyval(z, coeffs))
        worst = int(np.argmax(np.where(active, values, -np.inf)))
        raise ConvergenceError(
            f"Aberth iteration did not converge in {max_iter} sweeps "
            f"({int(active.sum())} roots still moving)",
            best=[complex(v) for v in z],
            residual=float(values[worst]),
        )

    z = np.array([_newton_polish(p, dp, complex(zk)) for zk in z])
    if p.is_real:
        z = _pair_conjugates(z)

    residuals = np.abs(npoly.polyval(z, coeffs))
    bounds = np.array([residual_bound(p, zk, tol) for zk in z])
    flagged = residuals > bounds
    if flagged.any():
        logger.warning(
            f"{int(flagged.sum())} of {n} roots exceed the residual bound after polish"
        )

    cluster_ids = cluster_roots(z, cluster_radius, _inclusion_radii(coeffs, z))
    logger.debug(
        f"found {n} roots in {int(iterations.max())} sweeps, "
        f"{len(set(cluster_ids))} clusters"
    )

    return RootSet(
        roots=[complex(v) for v in z],
        residuals=[float(r) for r in residuals],
        iterations=[int(i) for i in iterations],
        cluster_ids=cluster_ids,
        flagged=[bool(f) for f in flagged],
    )
