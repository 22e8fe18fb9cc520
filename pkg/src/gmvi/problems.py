"""Operator model and benchmark instance families over the standard simplex.

All feasible sets are the probability simplex
``X = {x : sum(x) = 1, x >= 0}``.  An instance bundles an operator
``F: X -> R^n`` with provenance metadata (family, seed, known
monotonicity class).  Random families draw from numpy's PCG64 bit
generator, which is seedable and has a frozen, documented stream, so
instances are reproducible from ``(family, n, seed)`` alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

FAMILIES = ("KS", "WAT", "SUN", "MHPH", "RG", "Custom")

MONOTONE = "Monotone"
GENERALIZED_MONOTONE = "GeneralizedMonotone"
UNKNOWN = "Unknown"

# Instances observed to diverge under extragradient runs; treated as
# expected-divergence metadata, not a proven classification.
KNOWN_NON_GMVI = frozenset({"WAT3"})

# Number of interior samples used by the heuristic Lipschitz estimate
# for the (quadratic) Kojima-Shindo operator, and its safety factor.
_KS_LIPSCHITZ_SAMPLES = 10_000
_KS_LIPSCHITZ_SAFETY = 1.1
_KS_LIPSCHITZ_SEED = 1905


class DimensionMismatch(ValueError):
    """Input vector length does not match the instance dimension."""


@dataclass(frozen=True)
class NormPair:
    """A primal norm and its conjugate: l1 pairs with linf, l2 with l2."""

    primal: str  # "l1" | "l2"
    dual: str = field(init=False)

    def __post_init__(self):
        if self.primal not in ("l1", "l2"):
            raise ValueError(f"unsupported primal norm {self.primal!r}")
        object.__setattr__(self, "dual", "linf" if self.primal == "l1" else "l2")


L1_LINF = NormPair("l1")
L2_L2 = NormPair("l2")


def primal_norm(v: np.ndarray, norms: NormPair) -> float:
    if norms.primal == "l1":
        return float(np.sum(np.abs(v)))
    return float(np.linalg.norm(v))


def dual_norm(v: np.ndarray, norms: NormPair) -> float:
    if norms.dual == "linf":
        return float(np.max(np.abs(v))) if v.size else 0.0
    return float(np.linalg.norm(v))


def as_point(x, n: Optional[int] = None) -> np.ndarray:
    """Validate ``x`` as a simplex point and return it as a float array.

    Coordinates in [-1e-12, 0) are rounding debris and get clamped to 0;
    anything more negative, a bad sum, or a wrong length is an error.
    """
    v = np.asarray(x, dtype=float).copy()
    if v.ndim != 1:
        raise ValueError("a point must be a 1-d vector")
    if n is not None and v.size != n:
        raise DimensionMismatch(f"expected length {n}, got {v.size}")
    if np.min(v) < -1e-12:
        raise ValueError(f"coordinate {np.min(v):g} below the simplex")
    np.clip(v, 0.0, None, out=v)
    s = float(v.sum())
    if abs(s - 1.0) > 1e-9:
        raise ValueError(f"coordinates sum to {s!r}, not 1")
    return v


def simplex_center(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


@dataclass(frozen=True)
class AffineOperator:
    """F(x) = A x + b with a dense square matrix A."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if b.shape != (A.shape[0],):
            raise ValueError("b length must match A")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("operator entries must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.b.size

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.b


@dataclass(frozen=True)
class KojimaShindoOperator:
    """The classic 4-dimensional quadratic test operator."""

    n: int = 4

    def __post_init__(self):
        if self.n != 4:
            raise ValueError("the Kojima-Shindo operator is 4-dimensional")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x1, x2, x3, x4 = x
        return np.array(
            [
                3 * x1**2 + 2 * x1 * x2 + 2 * x2**2 + x3 + 3 * x4 - 6,
                2 * x1**2 + x1 + x2**2 + 10 * x3 + 2 * x4 - 2,
                3 * x1**2 + x1 * x2 + 2 * x2**2 + 2 * x3 + 9 * x4 - 9,
                x1**2 + 3 * x2**2 + 2 * x3 + 3 * x4 - 3,
            ]
        )

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x1, x2 = x[0], x[1]
        return np.array(
            [
                [6 * x1 + 2 * x2, 2 * x1 + 4 * x2, 1.0, 3.0],
                [4 * x1 + 1, 2 * x2, 10.0, 2.0],
                [6 * x1 + x2, x1 + 4 * x2, 2.0, 9.0],
                [2 * x1, 6 * x2, 2.0, 3.0],
            ]
        )


@dataclass(frozen=True)
class ProblemInstance:
    """An operator over the n-simplex plus provenance metadata.

    Immutable after construction; safe to share across concurrent
    solver runs.
    """

    name: str
    n: int
    operator: object
    family: str
    seed: Optional[int] = None
    monotonicity: str = UNKNOWN

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if (self.seed is not None) != (self.family in ("MHPH", "RG")):
            raise ValueError("seed must be present exactly for the random families")

    def eval(self, x: np.ndarray) -> np.ndarray:
        return self.operator(x)


def eval_operator(inst: ProblemInstance, x: np.ndarray) -> np.ndarray:
    """Evaluate F(x); raises DimensionMismatch on a wrong-length input."""
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.n,):
        raise DimensionMismatch(f"expected length {inst.n}, got {x.shape}")
    return inst.operator(x)


def make_kojima_shindo() -> ProblemInstance:
    return ProblemInstance(
        name="KS", n=4, operator=KojimaShindoOperator(), family="KS"
    )


# 10x10 coefficient matrix of the Watson affine family; the offset is
# the i-th unit vector, giving instances WAT1..WAT10.
_WATSON_A = np.array(
    [
        [0, 0, -1, -1, -1, 1, 1, 0, 1, 1],
        [-2, -1, 0, 1, 1, 2, 2, 0, -1, 0],
        [1, 0, 1, -2, -1, -1, 0, 2, 0, 0],
        [2, 1, -1, 0, 1, 0, -1, -1, -1, 1],
        [-2, 0, 1, 1, 0, 2, 2, -1, 1, 0],
        [-1, 0, 1, 1, 1, 0, -1, 2, 0, 1],
        [0, -1, 1, 0, 2, -1, 0, 0, 1, -1],
        [0, -2, 2, 0, 0, 1, 2, 2, -1, 0],
        [0, -1, 0, 2, 2, 1, 1, 1, -1, 0],
        [2, -1, -1, 0, 1, 0, 0, -1, 2, 2],
    ],
    dtype=float,
)


def make_watson(i: int) -> ProblemInstance:
    """Watson instance WATi, i in 1..10: fixed 10x10 matrix, offset e_i."""
    if not 1 <= i <= 10:
        raise ValueError(f"Watson index must be in 1..10, got {i}")
    b = np.zeros(10)
    b[i - 1] = 1.0
    return ProblemInstance(
        name=f"WAT{i}",
        n=10,
        operator=AffineOperator(_WATSON_A.copy(), b),
        family="WAT",
    )


def make_sun(n: int) -> ProblemInstance:
    """Upper-triangular affine instance: unit diagonal, 2 above, offset -1.

    A + A^T is twice the all-ones matrix, which is positive
    semidefinite, so the operator is monotone.
    """
    if n < 1:
        raise ValueError("n must be positive")
    A = np.triu(np.full((n, n), 2.0), k=1)
    np.fill_diagonal(A, 1.0)
    b = np.full(n, -1.0)
    return ProblemInstance(
        name=f"SUN{n}",
        n=n,
        operator=AffineOperator(A, b),
        family="SUN",
        monotonicity=MONOTONE,
    )


def _uniform(rng: np.random.Generator, lo: float, hi: float, shape) -> np.ndarray:
    # Half-open transform lo + (hi-lo)*u with u in [0,1); endpoint
    # inclusion is immaterial at double precision.
    return lo + (hi - lo) * rng.random(shape)


def make_mhph(n: int, seed: int) -> ProblemInstance:
    """Random monotone affine instance A = M M^T.

    Draw order from PCG64(seed): M row-major with entries uniform on
    (-15,-12), then the offset uniform on (-500,0).
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    M = _uniform(rng, -15.0, -12.0, (n, n))
    b = _uniform(rng, -500.0, 0.0, n)
    return ProblemInstance(
        name=f"MHPH{n}",
        n=n,
        operator=AffineOperator(M @ M.T, b),
        family="MHPH",
        seed=int(seed),
        monotonicity=MONOTONE,
    )


def make_rg(n: int, seed: int) -> ProblemInstance:
    """Random affine instance with no known monotonicity.

    Draw order from PCG64(seed): A row-major uniform on (-50,150),
    then the offset uniform on (-200,300).
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    A = _uniform(rng, -50.0, 150.0, (n, n))
    b = _uniform(rng, -200.0, 300.0, n)
    return ProblemInstance(
        name=f"RG{n}",
        n=n,
        operator=AffineOperator(A, b),
        family="RG",
        seed=int(seed),
    )


def spectral_norm(A: np.ndarray, rel_tol: float = 1e-8, max_iter: int = 50_000) -> float:
    """Largest singular value of A by power iteration on A^T A."""
    rng = np.random.Generator(np.random.PCG64(0))
    v = rng.random(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        sigma_new = float(np.sqrt(nw))
        if abs(sigma_new - sigma) <= rel_tol * sigma_new:
            return sigma_new
        sigma = sigma_new
    return sigma


def lipschitz_constant(inst: ProblemInstance, norms: NormPair) -> float:
    """Lipschitz constant of F for the given norm pair.

    Affine operators: the exact induced norm of A -- spectral norm for
    (l2,l2), max absolute entry for (l1,linf).  The Kojima-Shindo
    operator is quadratic, so this falls back to a heuristic upper
    estimate: the largest induced Jacobian norm over seeded simplex
    samples, inflated by a 1.1 safety factor.
    """
    op = inst.operator
    if isinstance(op, AffineOperator):
        if norms.primal == "l2":
            return spectral_norm(op.A)
        return float(np.max(np.abs(op.A)))
    if isinstance(op, KojimaShindoOperator):
        rng = np.random.Generator(np.random.PCG64(_KS_LIPSCHITZ_SEED))
        best = 0.0
        for _ in range(_KS_LIPSCHITZ_SAMPLES):
            x = rng.dirichlet(np.ones(4))
            J = op.jacobian(x)
            if norms.primal == "l2":
                val = float(np.linalg.norm(J, 2))
            else:
                val = float(np.max(np.abs(J)))
            if val > best:
                best = val
        return _KS_LIPSCHITZ_SAFETY * best
    raise ValueError(f"no Lipschitz estimate for operator {type(op).__name__}")


def instance_to_json(inst: ProblemInstance) -> str:
    """Serialize to the caching schema {name, family, n, seed, matrix?, offset?}."""
    doc = {
        "name": inst.name,
        "family": inst.family,
        "n": inst.n,
        "seed": inst.seed,
    }
    if isinstance(inst.operator, AffineOperator):
        doc["matrix"] = inst.operator.A.tolist()
        doc["offset"] = inst.operator.b.tolist()
    return json.dumps(doc)


def instance_from_json(text: str) -> ProblemInstance:
    doc = json.loads(text)
    family = doc["family"]
    if family == "KS":
        op = KojimaShindoOperator()
        monotonicity = UNKNOWN
    else:
        op = AffineOperator(np.array(doc["matrix"], dtype=float), np.array(doc["offset"], dtype=float))
        monotonicity = MONOTONE if family in ("SUN", "MHPH") else UNKNOWN
    return ProblemInstance(
        name=doc["name"],
        n=int(doc["n"]),
        operator=op,
        family=family,
        seed=doc.get("seed"),
        monotonicity=monotonicity,
    )


def make_instance(spec_name: str, n: Optional[int] = None, seed: Optional[int] = None) -> ProblemInstance:
    """Build an instance from a short name: ks, wat3, sun, mhph, rg."""
    s = spec_name.strip().lower()
    if s == "ks":
        return make_kojima_shindo()
    if s.startswith("wat"):
        idx = int(s[3:]) if len(s) > 3 else 1
        return make_watson(idx)
    if s == "sun":
        if n is None:
            raise ValueError("sun requires a dimension")
        return make_sun(n)
    if s in ("mhph", "rg"):
        if n is None or seed is None:
            raise ValueError(f"{s} requires a dimension and a seed")
        return make_mhph(n, seed) if s == "mhph" else make_rg(n, seed)
    raise ValueError(f"unknown instance {spec_name!r}")
