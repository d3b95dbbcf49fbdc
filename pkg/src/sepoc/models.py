"""Built-in separable systems.

Three models, each packaged as a :class:`~sepoc.core.SeparableSystem`:

* ``kuramoto_system``: N identical phase oscillators on an undirected graph,
  x_i' = mu(t) sum_j a_ij sin(x_j - x_i), observable |centroid|.
* ``oa_system``: degree-class reduction of the same dynamics in the continuum
  limit; one complex amplitude alpha_i per degree class, observable the
  amplitude of the population centroid sum_j phat_j conj(alpha_j).
* ``adn_system``: susceptible-infected spreading on an activity-driven
  network with M activity classes, I_i' = beta(t)(1-I_i)(a_i <I> + <aI>),
  observable the mean infected fraction <I>.

The natural oscillator frequency is already removed by the co-rotating frame
in which the phase equations are written; it is not a runtime parameter.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import SeparableSystem
from .errors import DegenerateObservableError
from .kernels import KIND_ADN, KIND_KURAMOTO, KIND_OA, KernelSpec

EPS_DEGENERATE = 1e-8


@dataclass(frozen=True)
class Graph:
    """Undirected, unweighted graph as a set of 0-based edge pairs."""

    n: int
    edges: tuple

    def __post_init__(self):
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i},{j}) outside 0..{self.n - 1}")
            seen.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @classmethod
    def from_edges(cls, pairs, n=None):
        pairs = [(min(int(i), int(j)), max(int(i), int(j))) for i, j in pairs]
        if n is None:
            n = 1 + max(max(p) for p in pairs)
        return cls(n=n, edges=tuple(pairs))

    @classmethod
    def from_file(cls, path):
        """Edge list: two whitespace-separated 0-based ints per line, '#' comments."""
        pairs = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected two node ids")
                pairs.append((int(parts[0]), int(parts[1])))
        if not pairs:
            raise ValueError(f"{path}: no edges")
        return cls.from_edges(pairs)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1.0
        return A

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        adj = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        stack = [0]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == self.n

    def edge_array(self) -> np.ndarray:
        return np.array(self.edges, dtype=np.int64).reshape(-1, 2)


def default_graph() -> Graph:
    """The shipped 10-node graph: a ring plus two symmetry-breaking chords.

    Chosen so that the evenly spread phase state is not an equilibrium and
    the rescaled centroid curve rises through a local maximum and minimum
    before saturating at full synchronization.
    """
    with resources.as_file(resources.files("sepoc.data").joinpath("default10.edges")) as p:
        return Graph.from_file(p)


def splay_state(n: int) -> np.ndarray:
    """Phases spread evenly around the circle; zero centroid."""
    return 2.0 * math.pi * np.arange(n) / n


def kuramoto_centroid(x: np.ndarray) -> complex:
    return complex(np.mean(np.exp(1j * np.asarray(x, dtype=float))))


def kuramoto_system(g: Graph) -> SeparableSystem:
    """Finite Kuramoto network on graph g with observable |centroid|."""
    if not g.is_connected():
        warnings.warn(f"graph with {g.n} nodes is not connected", stacklevel=2)
    A = g.adjacency()
    n = g.n

    def h(x, p):
        z = np.exp(1j * x)
        return (np.conj(z) * (A @ z)).imag

    def jac(x, p):
        C = A * np.cos(np.subtract.outer(x, x).T)
        J = C.copy()
        np.fill_diagonal(J, J.diagonal() - C.sum(axis=1))
        return J

    def phi(x):
        return abs(kuramoto_centroid(x))

    def grad_phi(x):
        sc = float(np.sum(np.cos(x)))
        ss = float(np.sum(np.sin(x)))
        amp = math.hypot(sc, ss) / n
        if amp <= EPS_DEGENERATE:
            raise DegenerateObservableError(f"|centroid|={amp:.3g} at the gradient cutoff")
        return (ss * np.cos(x) - sc * np.sin(x)) / (n * n * amp)

    return SeparableSystem(
        state_dim=n, h=h, params=np.empty(0), phi=phi, grad_phi=grad_phi,
        label=f"kuramoto-n{n}", jac=jac,
        kernel=KernelSpec(kind=KIND_KURAMOTO, n=n, edges=g.edge_array()),
    )


@dataclass(frozen=True)
class ClassDistribution:
    """Discrete attribute classes (degrees or activity rates) with weights."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if v.ndim != 1 or v.size == 0 or v.shape != w.shape:
            raise ValueError("values and weights must be matching 1-D vectors")
        if np.any(v <= 0):
            raise ValueError("class values must be strictly positive")
        if np.any(np.diff(v) <= 0):
            raise ValueError("class values must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        total = w.sum()
        if abs(total - 1.0) > 1e-6:
            raise ValueError("weights must sum to 1 (within 1e-6) before renormalization")
        object.__setattr__(self, "values", v)
        # renormalize so downstream sums can rely on sum(w) == 1 exactly
        object.__setattr__(self, "weights", w / total)

    @property
    def M(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(np.dot(self.values, self.weights))


def power_law_weights(values, gamma: float) -> np.ndarray:
    """Normalized weights proportional to value^(-gamma)."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        raise ValueError("power-law weights need strictly positive values")
    w = v ** (-gamma)
    return w / w.sum()


def power_law_distribution(values, gamma: float) -> ClassDistribution:
    return ClassDistribution(np.asarray(values, dtype=float), power_law_weights(values, gamma))


def oa_initial_state(M: int, alpha0: float) -> np.ndarray:
    """Class amplitudes alpha_j(0) = alpha0 e^{i 2 pi (j-1)/M}, interleaved."""
    a = alpha0 * np.exp(1j * 2.0 * math.pi * np.arange(M) / M)
    return interleave_complex(a)


def interleave_complex(a: np.ndarray) -> np.ndarray:
    out = np.empty(2 * a.size)
    out[0::2] = a.real
    out[1::2] = a.imag
    return out


def complex_view(state: np.ndarray) -> np.ndarray:
    return np.asarray(state)[0::2] + 1j * np.asarray(state)[1::2]


def oa_centroid(d: ClassDistribution, state: np.ndarray) -> complex:
    return complex(np.dot(d.weights, np.conj(complex_view(state))))


def oa_order_parameter(d: ClassDistribution, state: np.ndarray) -> complex:
    kw = d.values * d.weights
    return complex(np.dot(kw, np.conj(complex_view(state))) / kw.sum())


def oa_system(d: ClassDistribution) -> SeparableSystem:
    """Degree-class reduction with one complex amplitude per class.

    State layout is (Re alpha_1, Im alpha_1, ..., Re alpha_M, Im alpha_M) so
    the integrator stays real-valued.  Class i obeys
    alpha_i' = -(k_i/2)(r alpha_i^2 - conj(r)) with the degree-weighted order
    parameter r = sum_j k_j phat_j conj(alpha_j) / <k>.
    """
    M = d.M
    kvals = d.values.copy()
    wvals = d.weights.copy()

    def h(y, p):
        k = p[:M]
        w = p[M:]
        rw = k * w / np.dot(k, w)
        u, v = y[0::2], y[1::2]
        rr = np.dot(rw, u)
        ri = -np.dot(rw, v)
        ck = -0.5 * k
        a2 = u * u - v * v
        pp = u * v
        out = np.empty_like(y)
        out[0::2] = ck * (rr * (a2 - 1.0) - 2.0 * ri * pp)
        out[1::2] = ck * (ri * (a2 + 1.0) + 2.0 * rr * pp)
        return out

    def jac(y, p):
        k = p[:M]
        w = p[M:]
        rw = k * w / np.dot(k, w)
        u, v = y[0::2], y[1::2]
        rr = np.dot(rw, u)
        ri = -np.dot(rw, v)
        ck = -0.5 * k
        a2 = u * u - v * v
        pp = u * v
        J = np.zeros((2 * M, 2 * M))
        J[0::2, 0::2] = np.outer(ck * (a2 - 1.0), rw)
        J[0::2, 1::2] = np.outer(ck * 2.0 * pp, rw)
        J[1::2, 0::2] = np.outer(ck * 2.0 * pp, rw)
        J[1::2, 1::2] = np.outer(-ck * (a2 + 1.0), rw)
        duu = ck * (2.0 * u * rr - 2.0 * v * ri)
        duv = ck * (-2.0 * v * rr - 2.0 * u * ri)
        dvu = ck * (2.0 * u * ri + 2.0 * v * rr)
        idx = np.arange(M)
        J[2 * idx, 2 * idx] += duu
        J[2 * idx, 2 * idx + 1] += duv
        J[2 * idx + 1, 2 * idx] += dvu
        J[2 * idx + 1, 2 * idx + 1] += duu
        return J

    def phi(y):
        u, v = y[0::2], y[1::2]
        return math.hypot(float(np.dot(wvals, u)), float(np.dot(wvals, v)))

    def grad_phi(y):
        u, v = y[0::2], y[1::2]
        A = float(np.dot(wvals, u))
        B = -float(np.dot(wvals, v))
        amp = math.hypot(A, B)
        if amp <= EPS_DEGENERATE:
            raise DegenerateObservableError(f"|centroid|={amp:.3g} at the gradient cutoff")
        out = np.empty(2 * M)
        out[0::2] = wvals * A / amp
        out[1::2] = -wvals * B / amp
        return out

    return SeparableSystem(
        state_dim=2 * M, h=h, params=np.concatenate([kvals, wvals]),
        phi=phi, grad_phi=grad_phi, label=f"oa-M{M}", jac=jac,
        kernel=KernelSpec(kind=KIND_OA, n=2 * M, w1=wvals, w2=kvals),
    )


def adn_initial_state(M: int, I0: float) -> np.ndarray:
    return np.full(M, float(I0))


def adn_system(d: ClassDistribution) -> SeparableSystem:
    """Activity-driven SI spreading over M activity-rate classes.

    The infection pressure on class i combines the active channel a_i <I>
    (class-i agents reaching out) and the passive channel <aI> (being
    reached); the observable is the mean infected fraction <I>.
    """
    M = d.M
    avals = d.values.copy()
    wvals = d.weights.copy()

    def h(I, p):
        a = p[:M]
        w = p[M:]
        mean_i = np.dot(w, I)
        mean_ai = np.dot(w * a, I)
        return (1.0 - I) * (a * mean_i + mean_ai)

    def jac(I, p):
        a = p[:M]
        w = p[M:]
        mean_i = np.dot(w, I)
        mean_ai = np.dot(w * a, I)
        J = np.outer(1.0 - I, w) * np.add.outer(a, a)
        np.fill_diagonal(J, J.diagonal() - (a * mean_i + mean_ai))
        return J

    def phi(I):
        return float(np.dot(wvals, I))

    def grad_phi(I):
        return wvals.copy()

    return SeparableSystem(
        state_dim=M, h=h, params=np.concatenate([avals, wvals]),
        phi=phi, grad_phi=grad_phi, label=f"adn-M{M}", jac=jac,
        kernel=KernelSpec(kind=KIND_ADN, n=M, w1=wvals, w2=avals),
    )
