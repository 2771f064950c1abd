"""Signal model, perception coefficients and mixed prospect density operators.

The composite basis vector |psi^s phi_k> is stored at coordinate ``s * d + k``
(signal-major). Every serialized matrix uses this ordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

NORM_TOL = 1e-12
PMF_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_pmf(pmf, name="pmf") -> np.ndarray:
    p = np.asarray(pmf, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise PreconditionError(f"{name} must be a non-empty vector")
    if np.any(p < 0):
        raise PreconditionError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > PMF_TOL:
        raise PreconditionError(f"{name} sums to {p.sum()!r}, not 1")
    return p


@dataclass(frozen=True)
class SignalModel:
    """Discrete signal grid with per-hypothesis pmfs and the prior p(H1)."""

    grid: np.ndarray
    pmf0: np.ndarray
    pmf1: np.ndarray
    prior1: float

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise PreconditionError("grid must be a non-empty vector")
        if np.any(np.diff(grid) <= 0):
            raise PreconditionError("grid must be strictly increasing")
        pmf0 = _check_pmf(self.pmf0, "pmf0")
        pmf1 = _check_pmf(self.pmf1, "pmf1")
        if pmf0.size != grid.size or pmf1.size != grid.size:
            raise PreconditionError("pmf lengths must match the grid")
        if not 0.0 <= self.prior1 <= 1.0:
            raise PreconditionError(f"prior1 must lie in [0, 1], got {self.prior1}")
        object.__setattr__(self, "grid", _frozen(grid))
        object.__setattr__(self, "pmf0", _frozen(pmf0))
        object.__setattr__(self, "pmf1", _frozen(pmf1))
        object.__setattr__(self, "prior1", float(self.prior1))

    @property
    def k(self) -> int:
        return int(self.grid.size)

    @property
    def prior0(self) -> float:
        return 1.0 - self.prior1

    def pmf(self, hypothesis: int) -> np.ndarray:
        return self.pmf1 if hypothesis == 1 else self.pmf0

    @classmethod
    def gaussian(cls, means=(0.0, 1.0), variances=(1.0, 1.0), k=5, prior1=0.5, width=3.0):
        """Two discretized Gaussians on a shared uniform grid.

        The grid spans ``[min(mean) - width*sigma, max(mean) + width*sigma]``
        with sigma the largest standard deviation.
        """
        grid = default_grid(means, variances, k, width)
        return cls(
            grid=grid,
            pmf0=discretize_gaussian(means[0], variances[0], grid),
            pmf1=discretize_gaussian(means[1], variances[1], grid),
            prior1=prior1,
        )


def default_grid(means, variances, k: int, width: float = 3.0) -> np.ndarray:
    if k < 1:
        raise PreconditionError("k must be >= 1")
    sigma = float(np.sqrt(max(variances)))
    lo = min(means) - width * sigma
    hi = max(means) + width * sigma
    if k == 1:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, k)


def discretize_gaussian(mean: float, variance: float, grid) -> np.ndarray:
    """Gaussian density sampled on ``grid`` and normalized to a pmf."""
    if variance <= 0:
        raise PreconditionError(f"variance must be positive, got {variance}")
    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise PreconditionError("grid must be a non-empty vector")
    if np.any(np.diff(x) <= 0):
        raise PreconditionError("grid must be strictly increasing")
    # Shift the exponent so the largest weight is exactly 1 (no underflow to an all-zero pmf).
    expo = -((x - mean) ** 2) / (2.0 * variance)
    w = np.exp(expo - expo.max())
    return w / w.sum()


@dataclass(frozen=True)
class PerceptionCoefficients:
    """K x d matrix of unit-norm rows a_{sk}."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise PreconditionError(f"coefficient matrix must be K x d, got shape {rows.shape}")
        norms = np.sqrt(np.sum(rows * rows, axis=1))
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise PreconditionError("every coefficient row must have unit Euclidean norm")
        object.__setattr__(self, "rows", _frozen(rows))

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def to_dict(self) -> dict:
        return {"k": self.k, "d": self.d, "rows": self.rows.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PerceptionCoefficients":
        out = cls(np.asarray(data["rows"], dtype=float))
        if (out.k, out.d) != (data["k"], data["d"]):
            raise PreconditionError("k/d fields disagree with the rows shape")
        return out


@dataclass(frozen=True)
class ProspectState:
    """Unit vector of length K*d supported on one signal block."""

    vec: np.ndarray
    signal_index: int

    def __post_init__(self):
        object.__setattr__(self, "vec", _frozen(self.vec))


@dataclass(frozen=True)
class DensityOperator:
    """Real symmetric PSD trace-one matrix."""

    mat: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=float)
        if self.check:
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise PreconditionError(f"density must be square, got shape {m.shape}")
            if np.max(np.abs(m - m.T)) > 1e-12:
                raise PreconditionError("density must be symmetric")
            if abs(np.trace(m) - 1.0) > 1e-12:
                raise PreconditionError(f"density trace is {np.trace(m)!r}, not 1")
            if np.linalg.eigvalsh(m)[0] < -1e-10:
                raise PreconditionError("density must be positive semidefinite")
        object.__setattr__(self, "mat", _frozen(m))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def expectation(self, phi) -> float:
        """<phi|rho|phi>."""
        v = phi.vec if isinstance(phi, ProspectState) else np.asarray(phi, dtype=float)
        return float(v @ self.mat @ v)

    def to_dict(self, d: int | None = None) -> dict:
        dim = self.dim
        d = d or dim
        return {"k": dim // d, "d": d, "mat": self.mat.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DensityOperator":
        out = cls(np.asarray(data["mat"], dtype=float))
        if data["k"] * data["d"] != out.dim:
            raise PreconditionError("k*d does not match the matrix dimension")
        return out


def build_prospect_state(s_index: int, coeffs: PerceptionCoefficients) -> ProspectState:
    """Prospect state for signal ``s_index``: a_{s,k} placed in block ``s``."""
    if not 0 <= s_index < coeffs.k:
        raise PreconditionError(f"signal index {s_index} out of range [0, {coeffs.k})")
    d = coeffs.d
    vec = np.zeros(coeffs.k * d)
    vec[s_index * d:(s_index + 1) * d] = coeffs.rows[s_index]
    return ProspectState(vec, int(s_index))


def build_density(pmf, coeffs: PerceptionCoefficients) -> DensityOperator:
    """Mixed prospect state sum_s pmf[s] |Phi_s><Phi_s|.

    Block-diagonal with block ``s`` equal to ``pmf[s] * a_s a_s^T``.
    """
    p = _check_pmf(pmf)
    if p.size != coeffs.k:
        raise PreconditionError(f"pmf has {p.size} entries but coefficients have {coeffs.k} rows")
    d = coeffs.d
    mat = np.zeros((coeffs.k * d, coeffs.k * d))
    for s, a in enumerate(coeffs.rows):
        mat[s * d:(s + 1) * d, s * d:(s + 1) * d] = p[s] * np.outer(a, a)
    return DensityOperator(mat)


def sample_signal(pmf, rng: np.random.Generator, size=None):
    """Categorical draw(s) by inverse CDF on one uniform per draw."""
    p = _check_pmf(pmf)
    cdf = np.cumsum(p)
    u = rng.random(size)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, p.size - 1)


def sample_prospect(pmf, coeffs: PerceptionCoefficients, rng: np.random.Generator) -> ProspectState:
    return build_prospect_state(int(sample_signal(pmf, rng)), coeffs)


def random_coefficients(k: int, d: int, rng: np.random.Generator) -> PerceptionCoefficients:
    """Rows drawn from a standard normal and normalized to unit length."""
    if k < 1 or d < 1:
        raise PreconditionError("k and d must be >= 1")
    g = rng.standard_normal((k, d))
    norms = np.sqrt(np.sum(g * g, axis=1, keepdims=True))
    return PerceptionCoefficients(g / norms)


def dumps(obj, d: int | None = None) -> str:
    """JSON text for coefficients or a density operator (row-major, repr precision)."""
    if isinstance(obj, DensityOperator):
        return json.dumps(obj.to_dict(d))
    return json.dumps(obj.to_dict())


def loads(text: str):
    data = json.loads(text)
    if "rows" in data:
        return PerceptionCoefficients.from_dict(data)
    return DensityOperator.from_dict(data)
