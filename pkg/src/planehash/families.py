"""Randomized hash families for point-to-hyperplane search.

Three families are provided, each sensitive to the point-to-hyperplane
angle alpha:

* AH: dual-bit functions [sgn(u.z), sgn(v.z)] for database points and
  [sgn(u.z), sgn(-v.z)] for hyperplane normals; a query and a point
  collide with probability 1/4 - alpha^2/pi^2 per function.
* EH: a single bit sgn(U . vec(z z^T)) over the d^2-dimensional outer
  product embedding (negated for normals); collision probability
  arccos(sin^2 alpha)/pi.
* BH: the bilinear bit sgn(u.z * z.v), with the hyperplane-role bit
  defined as the negation of the point-role bit; collision probability
  1/2 - 2 alpha^2/pi^2, twice AH's at every alpha.

All randomized constructors take an explicit seed (or generator) and
draw projections i.i.d. from the standard Gaussian. The sign convention
is sgn(0) = -1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidInputError, InvalidParametersError
from .geometry import as_vector

__all__ = [
    "InputRole",
    "ProjectionPair",
    "EHProjection",
    "sign_pm1",
    "ah_hash",
    "eh_hash",
    "bh_hash",
    "collision_prob",
    "estimate_collision",
    "LSHParams",
    "lsh_params",
    "AHFamily",
    "EHFamily",
    "BilinearFamily",
    "random_family",
    "family_from_dict",
    "RANDOM_SCHEMES",
]

RANDOM_SCHEMES = ("ah", "eh", "bh")


class InputRole(Enum):
    """Which role a vector plays when hashed: database point or hyperplane normal."""

    DATABASE_POINT = "point"
    HYPERPLANE_NORMAL = "normal"


@dataclass(frozen=True)
class ProjectionPair:
    """The (u, v) projection vectors parameterizing one bilinear (or AH) hash function."""

    u: np.ndarray
    v: np.ndarray

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "ProjectionPair":
        return cls(u=rng.standard_normal(dim), v=rng.standard_normal(dim))


@dataclass(frozen=True)
class EHProjection:
    """A d^2-dimensional projection for the outer-product embedding.

    `u` is the flat projection; entry i + d*j multiplies z_i * z_j
    (column-major vectorization of z z^T).
    """

    u: np.ndarray

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "EHProjection":
        return cls(u=rng.standard_normal(dim * dim))

    def as_matrix(self, dim: int) -> np.ndarray:
        if self.u.shape != (dim * dim,):
            raise InvalidInputError(
                f"projection has dim {self.u.shape[0]}, expected {dim * dim}"
            )
        return self.u.reshape((dim, dim), order="F")


def sign_pm1(values) -> np.ndarray:
    """Map values to {+1, -1} with sgn(0) = -1."""
    return np.where(np.asarray(values) > 0, 1, -1).astype(np.int8)


def ah_hash(z, role: InputRole, pair: ProjectionPair) -> np.ndarray:
    """The dual-bit hash [sgn(u.z), sgn(±v.z)]; the v-bit is negated for normals."""
    zv = as_vector(z)
    if np.linalg.norm(zv) <= 0.0:
        raise InvalidInputError("z has zero norm")
    bit_u = sign_pm1(np.dot(pair.u, zv))
    vz = np.dot(pair.v, zv)
    if role is InputRole.HYPERPLANE_NORMAL:
        vz = -vz
    return np.array([bit_u, sign_pm1(vz)], dtype=np.int8)


def eh_hash(z, role: InputRole, proj: EHProjection) -> int:
    """Single bit sgn(±U . vec(z z^T)), computed as z^T M z without forming z z^T."""
    zv = as_vector(z)
    if np.linalg.norm(zv) <= 0.0:
        raise InvalidInputError("z has zero norm")
    mat = proj.as_matrix(zv.shape[0])
    val = float(zv @ mat @ zv)
    if role is InputRole.HYPERPLANE_NORMAL:
        val = -val
    return int(sign_pm1(val))


def bh_hash(z, pair: ProjectionPair) -> int:
    """The bilinear bit sgn(u.z * z.v); scale-invariant in z.

    For a hyperplane query the caller negates the bit (the hyperplane-role
    code is the pointwise negation of the point-role code).
    """
    zv = as_vector(z)
    if np.linalg.norm(zv) <= 0.0:
        raise InvalidInputError("z has zero norm")
    return int(sign_pm1(np.dot(pair.u, zv) * np.dot(zv, pair.v)))


def collision_prob(scheme: str, alpha: float) -> float:
    """Closed-form query/point collision probability at angle alpha in [0, pi/2]."""
    if not 0.0 <= alpha <= math.pi / 2.0 + 1e-12:
        raise InvalidInputError(f"alpha {alpha} outside [0, pi/2]")
    alpha = min(alpha, math.pi / 2.0)
    scheme = scheme.lower()
    if scheme == "ah":
        return 0.25 - alpha**2 / math.pi**2
    if scheme == "eh":
        return math.acos(min(1.0, math.sin(alpha) ** 2)) / math.pi
    if scheme in ("bh", "lbh"):
        return 0.5 - 2.0 * alpha**2 / math.pi**2
    raise InvalidParametersError(f"unknown scheme {scheme!r}")


def _angle_pair(alpha: float, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """A (normal, point) pair in R^dim whose point-to-hyperplane angle is exactly alpha."""
    w = np.zeros(dim)
    w[0] = 1.0
    x = np.zeros(dim)
    theta = math.pi / 2.0 - alpha
    x[0] = math.cos(theta)
    x[1] = math.sin(theta)
    return w, x


def estimate_collision(
    scheme: str,
    alpha: float,
    trials: int,
    seed: int,
    dim: int = 8,
    chunk: int = 32768,
) -> float:
    """Monte-Carlo collision frequency over `trials` independent hash draws.

    A fixed (w, x) pair at angle alpha is hashed under the scheme's query
    convention by `trials` freshly drawn functions; returns the collision
    fraction. Deterministic given the seed. The embedding dimension does
    not affect the collision law; it is exposed for completeness.
    """
    if trials < 1:
        raise InvalidParametersError("trials must be >= 1")
    if dim < 2:
        raise InvalidParametersError("dim must be >= 2")
    scheme = scheme.lower()
    if scheme not in RANDOM_SCHEMES:
        raise InvalidParametersError(f"unknown scheme {scheme!r}")
    collision_prob(scheme, alpha)  # range check
    w, x = _angle_pair(alpha, dim)
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = trials
    while remaining > 0:
        block = min(chunk, remaining)
        if scheme == "ah":
            pu = rng.standard_normal((block, dim))
            pv = rng.standard_normal((block, dim))
            same_u = sign_pm1(pu @ x) == sign_pm1(pu @ w)
            same_v = sign_pm1(pv @ x) == sign_pm1(-(pv @ w))
            hits += int(np.count_nonzero(same_u & same_v))
        elif scheme == "eh":
            proj = rng.standard_normal((block, dim * dim))
            vx = np.outer(x, x).flatten(order="F")
            vw = np.outer(w, w).flatten(order="F")
            hits += int(
                np.count_nonzero(sign_pm1(proj @ vx) == sign_pm1(-(proj @ vw)))
            )
        else:
            pu = rng.standard_normal((block, dim))
            pv = rng.standard_normal((block, dim))
            hx = sign_pm1((pu @ x) * (pv @ x))
            hw = sign_pm1((pu @ w) * (pv @ w))
            hits += int(np.count_nonzero(hx == -hw))
        remaining -= block
    return hits / trials


@dataclass(frozen=True)
class LSHParams:
    """Locality-sensitivity parameters for a family at radius r and gap epsilon.

    p1/p2 are the collision probabilities at squared angles r and r(1+eps);
    rho = ln p1 / ln p2 is the query-time exponent; a guarantee-grade table
    structure uses num_tables = ceil(n^rho) tables of k_bits keys.
    """

    scheme: str
    r: float
    epsilon: float
    n: int
    c: float
    p1: float
    p2: float
    rho: float
    k_bits: int
    num_tables: int


def lsh_params(scheme: str, r: float, epsilon: float, n: int, c: float = 2.0) -> LSHParams:
    """Compute (p1, p2, rho, k, tables) for a family; distance measure is alpha^2."""
    if r <= 0.0 or epsilon <= 0.0:
        raise InvalidParametersError("r and epsilon must be positive")
    if n < 2:
        raise InvalidParametersError("n must be >= 2")
    if c < 2.0:
        raise InvalidParametersError("c must be >= 2")
    far = r * (1.0 + epsilon)
    if far > (math.pi / 2.0) ** 2:
        raise InvalidParametersError(
            f"r(1+epsilon) = {far:.6g} exceeds the maximum squared angle (pi/2)^2"
        )
    p1 = collision_prob(scheme, math.sqrt(r))
    p2 = collision_prob(scheme, math.sqrt(far))
    if p2 <= 0.0 or p1 <= p2:
        raise InvalidParametersError(
            f"degenerate probabilities p1={p1:.6g}, p2={p2:.6g}"
        )
    rho = math.log(p1) / math.log(p2)
    k_bits = math.ceil(math.log(n) / math.log(1.0 / p2))
    num_tables = math.ceil(n**rho)
    return LSHParams(
        scheme=scheme.lower(),
        r=r,
        epsilon=epsilon,
        n=n,
        c=c,
        p1=p1,
        p2=p2,
        rho=rho,
        k_bits=k_bits,
        num_tables=num_tables,
    )


class AHFamily:
    """k/2 dual-bit hash functions concatenated into a k-bit key.

    Each function contributes two adjacent bits (u-bit then v-bit); the
    v-bit flips for hyperplane normals.
    """

    scheme = "ah"

    def __init__(self, proj_u: np.ndarray, proj_v: np.ndarray):
        self.proj_u = np.asarray(proj_u, dtype=np.float64)
        self.proj_v = np.asarray(proj_v, dtype=np.float64)
        if self.proj_u.shape != self.proj_v.shape or self.proj_u.ndim != 2:
            raise InvalidInputError("projection matrices must share shape (n_funcs, dim)")

    @classmethod
    def random(cls, dim: int, n_bits: int, seed: int) -> "AHFamily":
        if n_bits % 2 != 0:
            raise InvalidParametersError("AH key length must be even (dual-bit functions)")
        rng = np.random.default_rng(seed)
        n_funcs = n_bits // 2
        return cls(rng.standard_normal((n_funcs, dim)), rng.standard_normal((n_funcs, dim)))

    @property
    def dim(self) -> int:
        return self.proj_u.shape[1]

    @property
    def n_bits(self) -> int:
        return 2 * self.proj_u.shape[0]

    def bit_matrix(self, points: np.ndarray, role: InputRole) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        vu = pts @ self.proj_u.T
        vv = pts @ self.proj_v.T
        if role is InputRole.HYPERPLANE_NORMAL:
            vv = -vv
        bits = np.empty((pts.shape[0], self.n_bits), dtype=np.int8)
        bits[:, 0::2] = sign_pm1(vu)
        bits[:, 1::2] = sign_pm1(vv)
        return bits

    def bits(self, z, role: InputRole) -> np.ndarray:
        return self.bit_matrix(as_vector(z)[None, :], role)[0]

    def pairs(self) -> list[ProjectionPair]:
        return [ProjectionPair(u, v) for u, v in zip(self.proj_u, self.proj_v)]

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "dim": self.dim,
            "n_bits": self.n_bits,
            "proj_u": self.proj_u.tolist(),
            "proj_v": self.proj_v.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AHFamily":
        return cls(np.array(data["proj_u"]), np.array(data["proj_v"]))


class EHFamily:
    """k independent outer-product-embedding bits."""

    scheme = "eh"

    def __init__(self, mats: np.ndarray):
        self.mats = np.asarray(mats, dtype=np.float64)
        if self.mats.ndim != 3 or self.mats.shape[1] != self.mats.shape[2]:
            raise InvalidInputError("expected shape (n_bits, dim, dim)")

    @classmethod
    def random(cls, dim: int, n_bits: int, seed: int) -> "EHFamily":
        rng = np.random.default_rng(seed)
        mats = np.stack(
            [EHProjection.random(dim, rng).as_matrix(dim) for _ in range(n_bits)]
        )
        return cls(mats)

    @property
    def dim(self) -> int:
        return self.mats.shape[1]

    @property
    def n_bits(self) -> int:
        return self.mats.shape[0]

    def bit_matrix(self, points: np.ndarray, role: InputRole) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.dim:
            raise InvalidInputError(
                f"points have dim {pts.shape[1]}, family expects {self.dim}"
            )
        vals = np.empty((pts.shape[0], self.n_bits))
        for b in range(self.n_bits):
            vals[:, b] = np.einsum("ni,ni->n", pts @ self.mats[b], pts)
        if role is InputRole.HYPERPLANE_NORMAL:
            vals = -vals
        return sign_pm1(vals)

    def bits(self, z, role: InputRole) -> np.ndarray:
        return self.bit_matrix(as_vector(z)[None, :], role)[0]

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "dim": self.dim,
            "n_bits": self.n_bits,
            "mats": self.mats.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EHFamily":
        return cls(np.array(data["mats"]))


class BilinearFamily:
    """k bilinear bits sgn(u_j.z * z.v_j); hyperplane-role codes are bitwise negations."""

    scheme = "bh"

    def __init__(self, proj_u: np.ndarray, proj_v: np.ndarray, scheme: str = "bh"):
        self.proj_u = np.asarray(proj_u, dtype=np.float64)
        self.proj_v = np.asarray(proj_v, dtype=np.float64)
        self.scheme = scheme
        if self.proj_u.shape != self.proj_v.shape or self.proj_u.ndim != 2:
            raise InvalidInputError("projection matrices must share shape (n_bits, dim)")

    @classmethod
    def random(cls, dim: int, n_bits: int, seed: int) -> "BilinearFamily":
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal((n_bits, dim)), rng.standard_normal((n_bits, dim)))

    @classmethod
    def from_pairs(cls, pairs: list[ProjectionPair], scheme: str = "bh") -> "BilinearFamily":
        return cls(
            np.stack([p.u for p in pairs]),
            np.stack([p.v for p in pairs]),
            scheme=scheme,
        )

    @property
    def dim(self) -> int:
        return self.proj_u.shape[1]

    @property
    def n_bits(self) -> int:
        return self.proj_u.shape[0]

    def bit_matrix(self, points: np.ndarray, role: InputRole) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.dim:
            raise InvalidInputError(
                f"points have dim {pts.shape[1]}, family expects {self.dim}"
            )
        bits = sign_pm1((pts @ self.proj_u.T) * (pts @ self.proj_v.T))
        if role is InputRole.HYPERPLANE_NORMAL:
            bits = -bits
        return bits

    def bits(self, z, role: InputRole) -> np.ndarray:
        return self.bit_matrix(as_vector(z)[None, :], role)[0]

    def pairs(self) -> list[ProjectionPair]:
        return [ProjectionPair(u, v) for u, v in zip(self.proj_u, self.proj_v)]

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "dim": self.dim,
            "n_bits": self.n_bits,
            "proj_u": self.proj_u.tolist(),
            "proj_v": self.proj_v.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BilinearFamily":
        return cls(
            np.array(data["proj_u"]),
            np.array(data["proj_v"]),
            scheme=data.get("scheme", "bh"),
        )


def random_family(scheme: str, dim: int, n_bits: int, seed: int):
    """Construct a fresh randomized family of the given scheme."""
    scheme = scheme.lower()
    if scheme == "ah":
        return AHFamily.random(dim, n_bits, seed)
    if scheme == "eh":
        return EHFamily.random(dim, n_bits, seed)
    if scheme == "bh":
        return BilinearFamily.random(dim, n_bits, seed)
    raise InvalidParametersError(f"no randomized constructor for scheme {scheme!r}")


def family_from_dict(data: dict):
    """Rebuild a family from its serialized form."""
    scheme = data["scheme"]
    if scheme == "ah":
        return AHFamily.from_dict(data)
    if scheme == "eh":
        return EHFamily.from_dict(data)
    if scheme in ("bh", "lbh"):
        return BilinearFamily.from_dict(data)
    raise InvalidParametersError(f"unknown scheme {scheme!r}")
