"""Finite-support return distributions and the exact Cramer metric.

Return laws are represented either exactly, as sorted atoms with positive
weights, or approximately, as a right-continuous CDF sampled on a uniform
grid.  Both carriers are step functions at the CDF level, so the Cramer
distance (the L2 distance between CDFs) can be integrated exactly by
piecewise-constant integration over merged breakpoints.  That exactness is
relied on throughout: this module is the ground-truth layer against which
the spectral machinery is certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "AtomicDistribution",
    "GridCdf",
    "CentredCdf",
    "Distribution",
    "make_atomic",
    "point_mass",
    "two_point",
    "from_samples",
    "cdf_eval",
    "cdf_values",
    "cramer_distance",
    "cramer_distance_energy_form",
    "signed_difference",
    "centre",
    "to_grid",
    "grid_to_atomic",
    "merge_atoms",
    "mean",
    "dist_to_jsonable",
    "dist_from_jsonable",
]

# Absolute tolerance on total probability mass after construction.
WEIGHT_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class AtomicDistribution:
    """Exact finite-support probability law.

    ``xs`` holds strictly increasing atom locations and ``ws`` the matching
    weights, all positive and summing to one within ``WEIGHT_TOL``.  Use
    :func:`make_atomic` to build instances from raw (location, weight)
    pairs; the constructor itself only validates.  Instances are immutable
    and safe to share between threads.
    """

    xs: np.ndarray
    ws: np.ndarray

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=np.float64)
        ws = np.asarray(self.ws, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != ws.shape or xs.size == 0:
            raise ValueError("atoms must be two equal-length nonempty 1-D arrays")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ws))):
            raise ValueError("non-finite atom location or weight")
        if xs.size > 1 and not np.all(np.diff(xs) > 0):
            raise ValueError("atom locations must be strictly increasing")
        if np.any(ws <= 0):
            raise ValueError("atom weights must be strictly positive")
        total = float(ws.sum())
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"atom weights sum to {total!r}, expected 1 within {WEIGHT_TOL}")
        object.__setattr__(self, "xs", _readonly(xs))
        object.__setattr__(self, "ws", _readonly(ws))

    @property
    def n_atoms(self) -> int:
        return int(self.xs.size)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ws.tolist()))

    @property
    def support(self) -> tuple[float, float]:
        return float(self.xs[0]), float(self.xs[-1])

    @property
    def cum_weights(self) -> np.ndarray:
        cw = self.__dict__.get("_cum")
        if cw is None:
            cw = _readonly(np.cumsum(self.ws))
            object.__setattr__(self, "_cum", cw)
        return cw

    def cdf(self, x: float) -> float:
        return cdf_eval(self, x)

    def mean(self) -> float:
        return float(self.xs @ self.ws)

    def __repr__(self) -> str:  # keep reprs short; atoms can number millions
        lo, hi = self.support
        return f"AtomicDistribution(n_atoms={self.n_atoms}, support=[{lo:g}, {hi:g}])"


@dataclass(frozen=True, eq=False)
class GridCdf:
    """Right-continuous CDF sampled on a uniform grid.

    ``values[k]`` is the CDF at node ``x_min + k * step``.  Jump (step)
    semantics apply between nodes, matching CDFs of atomic laws; linear
    interpolation is used only for reads inside the grid Bellman backend.
    """

    x_min: float
    step: float
    values: np.ndarray

    def __post_init__(self) -> None:
        if not (np.isfinite(self.x_min) and np.isfinite(self.step) and self.step > 0):
            raise ValueError("grid needs finite x_min and positive step")
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("grid values must be a 1-D array with at least 2 nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite grid value")
        if np.any(np.diff(v) < -WEIGHT_TOL):
            raise ValueError("grid CDF values must be nondecreasing")
        if abs(v[-1] - 1.0) > WEIGHT_TOL:
            raise ValueError(f"last grid value is {v[-1]!r}, expected 1 within {WEIGHT_TOL}")
        # Repair sub-tolerance wiggles, clamp into [0, 1] and pin the top.
        v = np.clip(np.maximum.accumulate(v), 0.0, 1.0)
        v[-1] = 1.0
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n_nodes(self) -> int:
        return int(self.values.size)

    @property
    def x_max(self) -> float:
        return self.x_min + self.step * (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        nd = self.__dict__.get("_nodes")
        if nd is None:
            nd = _readonly(self.x_min + self.step * np.arange(self.n_nodes))
            object.__setattr__(self, "_nodes", nd)
        return nd

    def cdf(self, x: float) -> float:
        return cdf_eval(self, x)

    def mean(self) -> float:
        jumps = np.diff(self.values, prepend=0.0)
        return float(jumps @ self.nodes)

    def interp(self, x: np.ndarray) -> np.ndarray:
        """Linear-interpolation read, clamped to [0, 1] outside the grid."""
        return np.interp(x, self.nodes, self.values, left=0.0, right=1.0)

    def __repr__(self) -> str:
        return f"GridCdf(x_min={self.x_min:g}, step={self.step:g}, n_nodes={self.n_nodes})"


Distribution = Union[AtomicDistribution, GridCdf]


@dataclass(frozen=True, eq=False)
class CentredCdf:
    """Centred CDF H(x) = F(x) - F_{delta_0}(x) of a distribution.

    H vanishes outside the convex hull of the support and the origin, and is
    square integrable for any bounded-support carrier.  Centring is a
    bijection: the source distribution is kept and can be recovered.
    """

    source: Distribution

    def evaluate(self, x: float) -> float:
        return cdf_eval(self.source, x) - (1.0 if x >= 0.0 else 0.0)

    def jumps(self) -> tuple[np.ndarray, np.ndarray]:
        """Locations and signed jump sizes of H (atoms plus -1 at the origin)."""
        xs, ws = _jump_data(self.source)
        return _merge_signed(np.concatenate([xs, [0.0]]), np.concatenate([ws, [-1.0]]))

    def uncentre(self) -> Distribution:
        return self.source


# ---------------------------------------------------------------------------
# construction helpers

def _merge_signed(xs: np.ndarray, cs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort by location and add coefficients at exactly coincident locations."""
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    cs = cs[order]
    if xs.size > 1:
        starts = np.concatenate(([True], np.diff(xs) > 0))
        idx = np.flatnonzero(starts)
        xs = xs[idx]
        cs = np.add.reduceat(cs, idx)
    return xs, cs


def make_atomic(pairs) -> AtomicDistribution:
    """Build an :class:`AtomicDistribution` from (location, weight) pairs.

    Locations are sorted, coincident locations merged by weight addition,
    zero-weight atoms dropped, and weights normalised to total mass one.

    Raises
    ------
    ValueError
        On empty input, negative or all-zero weights, or non-finite values.
    """
    arr = np.asarray(list(pairs), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("need at least one (location, weight) pair")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must be (location, weight) 2-tuples")
    return atomic_from_arrays(arr[:, 0], arr[:, 1])


def atomic_from_arrays(xs, ws) -> AtomicDistribution:
    """Array form of :func:`make_atomic`; the hot path for operator code."""
    xs = np.asarray(xs, dtype=np.float64)
    ws = np.asarray(ws, dtype=np.float64)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ws))):
        raise ValueError("non-finite atom location or weight")
    if np.any(ws < 0):
        raise ValueError("atom weights must be nonnegative")
    xs, ws = _merge_signed(xs, ws)
    keep = ws > 0
    xs, ws = xs[keep], ws[keep]
    total = ws.sum()
    if not total > 0:
        raise ValueError("total weight must be positive")
    ws = ws / total
    alive = ws > 0  # normalising subnormal dust can underflow to zero
    if not alive.all():
        xs, ws = xs[alive], ws[alive]
        ws = ws / ws.sum()
    return AtomicDistribution(xs, ws)


def point_mass(x: float) -> AtomicDistribution:
    """Dirac law at ``x``."""
    return AtomicDistribution(np.array([x]), np.array([1.0]))


def two_point(x0: float, x1: float, p1: float) -> AtomicDistribution:
    """Law placing mass ``1 - p1`` at ``x0`` and ``p1`` at ``x1``."""
    return make_atomic([(x0, 1.0 - p1), (x1, p1)])


def from_samples(values) -> AtomicDistribution:
    """Empirical law of a sample array, duplicates merged exactly."""
    values = np.asarray(values, dtype=np.float64)
    xs, counts = np.unique(values, return_counts=True)
    return atomic_from_arrays(xs, counts.astype(np.float64))


# ---------------------------------------------------------------------------
# CDF evaluation

def _jump_data(dist: Distribution) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints and jump weights of the CDF viewed as a step function."""
    if isinstance(dist, AtomicDistribution):
        return dist.xs, dist.ws
    if isinstance(dist, GridCdf):
        jumps = np.diff(dist.values, prepend=0.0)
        keep = jumps > 0
        return dist.nodes[keep], jumps[keep]
    raise TypeError(f"not a distribution: {dist!r}")


def _step_cdf_at(xs: np.ndarray, cum: np.ndarray, where: np.ndarray) -> np.ndarray:
    """Right-continuous step CDF with breakpoints ``xs`` evaluated at ``where``."""
    padded = np.concatenate(([0.0], cum))
    return padded[np.searchsorted(xs, where, side="right")]


def cdf_values(dist: Distribution, x) -> np.ndarray:
    """Vectorised right-continuous CDF evaluation (step semantics)."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("CDF argument must be finite")
    if isinstance(dist, AtomicDistribution):
        return _step_cdf_at(dist.xs, dist.cum_weights, x)
    if isinstance(dist, GridCdf):
        return _step_cdf_at(dist.nodes, dist.values, x)
    raise TypeError(f"not a distribution: {dist!r}")


def cdf_eval(dist: Distribution, x: float) -> float:
    """Right-continuous CDF value P(X <= x); step semantics for both carriers."""
    return float(cdf_values(dist, np.asarray([x]))[0])


def mean(dist: Distribution) -> float:
    """First moment of either carrier."""
    return dist.mean()


# ---------------------------------------------------------------------------
# Cramer metric

def cramer_distance(d1: Distribution, d2: Distribution) -> float:
    """Cramer distance ( integral of (F1 - F2)^2 dx )^(1/2), computed exactly.

    Both carriers are step CDFs, so the integrand is piecewise constant on
    the merged breakpoints and the integral is a finite sum.  Symmetric,
    zero iff the laws coincide.
    """
    x1, w1 = _jump_data(d1)
    x2, w2 = _jump_data(d2)
    t = np.union1d(x1, x2)
    if t.size < 2:
        return 0.0
    f1 = _step_cdf_at(x1, np.cumsum(w1), t[:-1])
    f2 = _step_cdf_at(x2, np.cumsum(w2), t[:-1])
    diff = f1 - f2
    return math.sqrt(max(float(np.sum(diff * diff * np.diff(t))), 0.0))


def signed_difference(d1: AtomicDistribution, d2: AtomicDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Merged signed atom list of d1 - d2; coefficients sum to zero."""
    xs = np.concatenate([d1.xs, d2.xs])
    cs = np.concatenate([d1.ws, -d2.ws])
    return _merge_signed(xs, cs)


def cramer_distance_energy_form(d1: AtomicDistribution, d2: AtomicDistribution) -> float:
    """Cramer distance via the energy-distance double sum.

    For the signed merged atoms {(x_j, c_j)} of d1 - d2 the squared distance
    equals -1/2 * sum_{j,k} c_j c_k |x_j - x_k|.  Kept as an independent
    oracle for :func:`cramer_distance`; both must agree to 1e-10 relative.
    """
    if not isinstance(d1, AtomicDistribution) or not isinstance(d2, AtomicDistribution):
        raise TypeError("energy form is defined for atomic laws")
    xs, cs = signed_difference(d1, d2)
    if xs.size == 0:
        return 0.0
    gaps = np.abs(xs[:, None] - xs[None, :])
    sq = -0.5 * float(cs @ gaps @ cs)
    return math.sqrt(max(sq, 0.0))


def centre(dist: Distribution) -> CentredCdf:
    """Centred representation H = F - F_{delta_0}."""
    return CentredCdf(dist)


# ---------------------------------------------------------------------------
# grid conversion and atom control

def to_grid(dist: AtomicDistribution, x_min: float, step: float, n: int) -> GridCdf:
    """Sample the CDF of an atomic law on a uniform grid (step semantics).

    The grid must cover the support; the final node is forced to CDF value 1.
    """
    if n < 2 or step <= 0:
        raise ValueError("need step > 0 and at least 2 nodes")
    lo, hi = dist.support
    x_max = x_min + step * (n - 1)
    if lo < x_min or hi > x_max:
        raise ValueError(
            f"grid [{x_min}, {x_max}] does not cover support [{lo}, {hi}]"
        )
    nodes = x_min + step * np.arange(n)
    values = cdf_values(dist, nodes)
    values[-1] = 1.0
    return GridCdf(x_min, step, values)


def grid_to_atomic(grid: GridCdf) -> AtomicDistribution:
    """Atomic law carrying the jumps of a grid CDF (inverse of `to_grid` on lattices)."""
    xs, ws = _jump_data(grid)
    return atomic_from_arrays(xs, ws)


def merge_atoms(dist: AtomicDistribution, delta: float) -> AtomicDistribution:
    """Collapse chains of atoms spaced within ``delta`` to weighted means.

    Total mass and the first moment are preserved exactly.  The Cramer
    perturbation is bounded by sum over clusters of mass * sqrt(diameter),
    since each cluster's mass moves by at most its diameter.
    """
    if delta < 0:
        raise ValueError("merge tolerance must be nonnegative")
    if delta == 0 or dist.n_atoms == 1:
        return dist
    starts = np.concatenate(([True], np.diff(dist.xs) > delta))
    if starts.all():
        return dist
    idx = np.flatnonzero(starts)
    ws = np.add.reduceat(dist.ws, idx)
    wx = np.add.reduceat(dist.ws * dist.xs, idx)
    return atomic_from_arrays(wx / ws, ws)


def merge_perturbation_bound(dist: AtomicDistribution, delta: float) -> float:
    """A-priori Cramer bound for :func:`merge_atoms` with the same arguments."""
    if delta <= 0 or dist.n_atoms == 1:
        return 0.0
    starts = np.concatenate(([True], np.diff(dist.xs) > delta))
    idx = np.flatnonzero(starts)
    ws = np.add.reduceat(dist.ws, idx)
    ends = np.concatenate([dist.xs[idx[1:] - 1], dist.xs[-1:]])
    diam = ends - dist.xs[idx]
    return float(np.sum(ws * np.sqrt(np.maximum(diam, 0.0))))


# ---------------------------------------------------------------------------
# JSON forms (bit-exact for atomic carriers; see SCHEMAS.md)

def _float17(x: float) -> str:
    return format(float(x), ".17g")


def dist_to_jsonable(dist: Distribution) -> dict:
    """JSON object form; atomic coordinates use 17-significant-digit strings."""
    if isinstance(dist, AtomicDistribution):
        return {"atoms": [[_float17(x), _float17(w)] for x, w in zip(dist.xs, dist.ws)]}
    if isinstance(dist, GridCdf):
        return {
            "grid": {
                "x_min": _float17(dist.x_min),
                "step": _float17(dist.step),
                "values": [float(v) for v in dist.values],
            }
        }
    raise TypeError(f"not a distribution: {dist!r}")


def dist_from_jsonable(obj: dict) -> Distribution:
    """Inverse of :func:`dist_to_jsonable`; accepts numbers or strings."""
    if not isinstance(obj, dict):
        raise ValueError(f"expected a distribution object, got {type(obj).__name__}")
    if "atoms" in obj:
        pairs = [(float(x), float(w)) for x, w in obj["atoms"]]
        xs = np.array([p[0] for p in pairs])
        ws = np.array([p[1] for p in pairs])
        # No renormalisation here: round trips must be bit exact.
        return AtomicDistribution(xs, ws)
    if "grid" in obj:
        g = obj["grid"]
        return GridCdf(float(g["x_min"]), float(g["step"]), np.asarray(g["values"], dtype=np.float64))
    raise ValueError("distribution object needs an 'atoms' or 'grid' key")
