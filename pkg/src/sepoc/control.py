"""Control inputs as truncated normalized-Chebyshev expansions.

A control mu(t) on [0, T] is stored as coefficients p_1..p_q over the basis

    That_1(s) = 1/sqrt(pi),   That_i(s) = sqrt(2/pi) * T_{i-1}(s)  (i >= 2),

with s = 2t/T - 1 and T_k the Chebyshev polynomials of the first kind.  This
basis is orthonormal under the Chebyshev weight; any other fixed scaling of
the basis leaves mu(t) itself unchanged and only rescales the coefficients.

The module also evaluates the two functionals used throughout the package,
the total rescaled time I(mu) = int_0^T mu dt and the control cost
G(mu) = int_0^T g(mu) dt, together with their coefficient gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_NORM0 = 1.0 / math.sqrt(math.pi)
_NORMK = math.sqrt(2.0 / math.pi)

_leggauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(m: int) -> tuple[np.ndarray, np.ndarray]:
    if m not in _leggauss_cache:
        _leggauss_cache[m] = np.polynomial.legendre.leggauss(m)
    return _leggauss_cache[m]


@dataclass(frozen=True)
class CostFunction:
    """Scalar control cost g with its derivative.

    g must be positive on (0, inf) and g' must not be constant on any open
    interval; both are assumptions of the constant-control reference
    solutions and are not checked at construction.
    """

    g: Callable[[float], float]
    gprime: Callable[[float], float]
    tag: str = "user-supplied"

    def ghat(self, mu: float) -> float:
        """g(mu)/mu, the quantity inverted by the minimum-horizon solve."""
        return self.g(mu) / mu

    @classmethod
    def square(cls) -> "CostFunction":
        return cls(g=lambda mu: mu * mu, gprime=lambda mu: 2.0 * mu, tag="square")

    @property
    def is_square(self) -> bool:
        return self.tag == "square"


@dataclass(frozen=True)
class ControlPolynomial:
    """Coefficients of a control over the normalized Chebyshev basis on [0, T]."""

    coeffs: np.ndarray
    T: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-D vector")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "T", float(self.T))

    @property
    def q(self) -> int:
        return self.coeffs.size

    def sigma(self, t):
        return 2.0 * np.asarray(t, dtype=float) / self.T - 1.0

    def chebyshev_coeffs(self) -> np.ndarray:
        """Plain Chebyshev-series coefficients c_k with mu = sum c_k T_k(s)."""
        c = self.coeffs * _NORMK
        c[0] = self.coeffs[0] * _NORM0
        return c

    def __call__(self, t):
        return eval_mu(self, t)

    def to_csv_row(self) -> str:
        vals = list(self.coeffs) + [self.T]
        return ",".join(format(v, ".17g") for v in vals)

    @classmethod
    def from_csv_row(cls, row: str) -> "ControlPolynomial":
        parts = [float(v) for v in row.strip().split(",")]
        if len(parts) < 2:
            raise ValueError("expected at least one coefficient and the horizon")
        return cls(np.array(parts[:-1]), parts[-1])


def basis_values(q: int, sigma) -> np.ndarray:
    """Normalized basis values That_i(sigma), shape (q,) or (q, len(sigma))."""
    s = np.asarray(sigma, dtype=float)
    out = np.empty((q,) + s.shape)
    out[0] = _NORM0
    if q > 1:
        out[1] = _NORMK * s
    # recurrence runs on the plain T_k, scaling applied per row
    tprev, tcur = np.ones_like(s), s
    for k in range(2, q):
        tprev, tcur = tcur, 2.0 * s * tcur - tprev
        out[k] = _NORMK * tcur
    return out


def eval_mu(c: ControlPolynomial, t):
    """Evaluate mu(t) by the Clenshaw recurrence.  t may be scalar or array."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < -1e-12) or np.any(t_arr > c.T * (1 + 1e-12)):
        raise ValueError(f"t outside [0, {c.T}]")
    s = 2.0 * t_arr / c.T - 1.0
    ck = c.chebyshev_coeffs()
    b1 = np.zeros_like(s)
    b2 = np.zeros_like(s)
    for k in range(ck.size - 1, 0, -1):
        b1, b2 = ck[k] + 2.0 * s * b1 - b2, b1
    res = ck[0] + s * b1 - b2
    return float(res) if np.isscalar(t) or t_arr.ndim == 0 else res


def grad_I(c: ControlPolynomial) -> np.ndarray:
    """dI/dp_i.  Exact: int_{-1}^{1} T_k ds = 0 (k odd), 2/(1-k^2) (k even)."""
    out = np.zeros(c.q)
    out[0] = c.T * _NORM0
    for i in range(1, c.q):
        k = i
        if k % 2 == 0:
            out[i] = 0.5 * c.T * _NORMK * 2.0 / (1.0 - k * k)
    return out


def integral_I(c: ControlPolynomial) -> float:
    """I(mu) = int_0^T mu dt by Gauss-Legendre, exact for the expansion."""
    m = (c.q + 1) // 2 + 1
    nodes, weights = _leggauss(m)
    vals = eval_mu(c, 0.5 * c.T * (nodes + 1.0))
    return 0.5 * c.T * float(np.dot(weights, vals))


def _g_grid(c: ControlPolynomial):
    m = max(c.q, 12)
    nodes, weights = _leggauss(m)
    t = 0.5 * c.T * (nodes + 1.0)
    return t, nodes, 0.5 * c.T * weights


def integral_G(c: ControlPolynomial, g: CostFunction) -> float:
    """G(mu) = int_0^T g(mu) dt by Gauss-Legendre (exact for g = mu^2)."""
    t, _, w = _g_grid(c)
    mu = eval_mu(c, t)
    return float(np.dot(w, [g.g(m) for m in mu]))


def grad_G(c: ControlPolynomial, g: CostFunction) -> np.ndarray:
    """dG/dp_i = int_0^T g'(mu) That_i dt on the same quadrature grid as G."""
    t, nodes, w = _g_grid(c)
    mu = eval_mu(c, t)
    gp = np.array([g.gprime(m) for m in mu])
    basis = basis_values(c.q, nodes)  # (q, m)
    return basis @ (w * gp)


def chebyshev_nodes(q: int) -> np.ndarray:
    """Gauss-Chebyshev points, enough to interpolate a degree q-1 expansion."""
    j = np.arange(q)
    return np.cos(math.pi * (j + 0.5) / q)


def fit(values_at_nodes: np.ndarray, T: float) -> ControlPolynomial:
    """Recover coefficients from values at the q Gauss-Chebyshev nodes."""
    vals = np.asarray(values_at_nodes, dtype=float)
    q = vals.size
    s = chebyshev_nodes(q)
    ck = np.polynomial.chebyshev.chebfit(s, vals, q - 1)
    p = ck / _NORMK
    p[0] = ck[0] / _NORM0
    return ControlPolynomial(p, T)


def is_positive(c: ControlPolynomial, samples: int = 200) -> bool:
    """min over `samples` uniform points of mu(t) > 0."""
    t = np.linspace(0.0, c.T, samples)
    return bool(np.min(eval_mu(c, t)) > 0.0)


def constant_control(mu_star: float, T: float, q: int) -> ControlPolynomial:
    """The coefficient vector representing mu(t) == mu_star."""
    p = np.zeros(q)
    p[0] = mu_star / _NORM0
    return ControlPolynomial(p, T)


NORM0 = _NORM0
NORMK = _NORMK
