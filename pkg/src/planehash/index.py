"""Bit-packed hash codes, Hamming-ball lookup, and hyperplane queries.

Codes are k-bit integers (k <= 64): bit j is 1 when hash function j
returned +1, 0 when it returned -1, with function 0 at the least
significant position. A hyperplane query is answered by encoding the
normal under the hyperplane-role convention (for bilinear families this
equals the bitwise NOT of its point-role code) and probing a small
Hamming ball around that key, which is equivalent to retrieving the
points whose codes are maximally far from the query's point-role code.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InvalidInputError, InvalidParametersError
from .families import InputRole, LSHParams, family_from_dict, random_family
from .geometry import as_vector, margins

__all__ = [
    "HashCode",
    "pack_bits",
    "unpack_bits",
    "flip_code",
    "hamming_distance",
    "encode",
    "QueryResult",
    "HammingIndex",
    "TablePlan",
    "theoretical_table_plan",
]

MAX_BITS = 64


@dataclass(frozen=True)
class HashCode:
    """A packed k-bit code."""

    value: int
    k: int


def pack_bits(bits: np.ndarray) -> int:
    """Pack a ±1 bit vector into an integer (-1 stored as 0, function 0 at the LSB)."""
    bits = np.asarray(bits)
    if bits.shape[0] > MAX_BITS:
        raise InvalidParametersError(f"at most {MAX_BITS} bits per code")
    value = 0
    for j in range(bits.shape[0]):
        if bits[j] > 0:
            value |= 1 << j
    return value


def unpack_bits(value: int, k: int) -> np.ndarray:
    """Inverse of pack_bits: recover the ±1 bit vector of length k."""
    return np.array([1 if (value >> j) & 1 else -1 for j in range(k)], dtype=np.int8)


def flip_code(value: int, k: int) -> int:
    """Bitwise NOT within k bits."""
    return value ^ ((1 << k) - 1)


def hamming_distance(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def encode(z, role: InputRole, family) -> HashCode:
    """Hash a vector into a packed code under the family's role convention."""
    return HashCode(value=pack_bits(family.bits(z, role)), k=family.n_bits)


def _ball_keys(center: int, k: int, radius: int):
    yield center
    for dist in range(1, radius + 1):
        for positions in combinations(range(k), dist):
            flipped = center
            for pos in positions:
                flipped ^= 1 << pos
            yield flipped


@dataclass(frozen=True)
class QueryResult:
    """Outcome of one hyperplane query against an index."""

    candidate_ids: list
    best_id: int | None
    best_margin: float
    buckets_probed: int
    fallback_used: bool


class HammingIndex:
    """One or more hash tables mapping packed codes to buckets of point ids.

    Buckets hold ids only; point coordinates stay in the caller's dataset.
    Immutable after construction.
    """

    def __init__(self, families, tables, n: int):
        self.families = list(families)
        self.tables = list(tables)
        self.n = n
        if not self.families:
            raise InvalidParametersError("need at least one hash family")
        if len(self.families) != len(self.tables):
            raise InvalidParametersError("one table per family required")

    @property
    def scheme(self) -> str:
        return self.families[0].scheme

    @property
    def k(self) -> int:
        return self.families[0].n_bits

    @property
    def num_tables(self) -> int:
        return len(self.tables)

    @classmethod
    def build(cls, points: np.ndarray, families) -> "HammingIndex":
        """Encode every point under every family and insert it into that family's table."""
        if not isinstance(families, (list, tuple)):
            families = [families]
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2:
            raise InvalidInputError("points must be a 2-D array")
        n = points.shape[0]
        tables = []
        for family in families:
            if family.n_bits > MAX_BITS:
                raise InvalidParametersError(f"at most {MAX_BITS} bits per table")
            table: dict[int, list[int]] = {}
            if n:
                bit_matrix = family.bit_matrix(points, InputRole.DATABASE_POINT)
                weights = (1 << np.arange(family.n_bits, dtype=np.uint64))
                keys = ((bit_matrix > 0).astype(np.uint64) @ weights).astype(np.uint64)
                for idx, key in enumerate(keys):
                    table.setdefault(int(key), []).append(idx)
            tables.append(table)
        return cls(families, tables, n)

    @classmethod
    def build_random(
        cls, points: np.ndarray, scheme: str, k: int, num_tables: int = 1, seed: int = 0
    ) -> "HammingIndex":
        """Build with freshly drawn randomized families, one per table."""
        points = np.asarray(points, dtype=np.float64)
        children = np.random.SeedSequence(seed).spawn(num_tables)
        families = [
            random_family(scheme, points.shape[1], k, child.generate_state(1)[0])
            for child in children
        ]
        return cls.build(points, families)

    def ball_lookup(self, key, radius: int) -> list[int]:
        """Deduplicated union of buckets within the Hamming ball, across all tables.

        `key` is an int or HashCode for a single-table index, or one per table.
        """
        ids, _ = self._ball_candidates(self._normalize_keys(key), radius)
        return sorted(ids)

    def _normalize_keys(self, key) -> list[int]:
        if isinstance(key, HashCode):
            keys = [key.value]
        elif isinstance(key, (int, np.integer)):
            keys = [int(key)]
        else:
            keys = [k.value if isinstance(k, HashCode) else int(k) for k in key]
        if len(keys) == 1 and self.num_tables > 1:
            keys = keys * self.num_tables
        if len(keys) != self.num_tables:
            raise InvalidParametersError(
                f"expected {self.num_tables} keys, got {len(keys)}"
            )
        return keys

    def _ball_candidates(self, keys: list[int], radius: int) -> tuple[set, int]:
        if radius < 0 or radius > self.k:
            raise InvalidParametersError(f"radius must be in [0, {self.k}]")
        seen: set[int] = set()
        probed = 0
        for table, key in zip(self.tables, keys):
            for probe in _ball_keys(key, self.k, radius):
                probed += 1
                bucket = table.get(probe)
                if bucket:
                    seen.update(bucket)
        return seen, probed

    def query_hyperplane(
        self, normal, radius: int, points: np.ndarray, exclude=None
    ) -> QueryResult:
        """Find the indexed point nearest the hyperplane with the given normal.

        Probes the Hamming ball around the hyperplane-role code in every
        table, scans the candidate union, and returns the id minimizing
        |w.x|/|w| (ties to the lowest id). When every probed bucket is
        empty (or all candidates are excluded), fallback_used is set and
        best_id is None; the caller decides the fallback policy.
        """
        wv = as_vector(normal)
        keys = [
            pack_bits(family.bits(wv, InputRole.HYPERPLANE_NORMAL))
            for family in self.families
        ]
        candidates, probed = self._ball_candidates(keys, radius)
        if exclude:
            candidates = candidates - set(exclude)
        ids = sorted(candidates)
        if not ids:
            return QueryResult(
                candidate_ids=[],
                best_id=None,
                best_margin=float("nan"),
                buckets_probed=probed,
                fallback_used=True,
            )
        dists = margins(wv, np.asarray(points, dtype=np.float64)[ids])
        best = int(np.lexsort((ids, dists))[0])
        return QueryResult(
            candidate_ids=ids,
            best_id=ids[best],
            best_margin=float(dists[best]),
            buckets_probed=probed,
            fallback_used=False,
        )

    def to_dict(self) -> dict:
        return {
            "format": "planehash-index",
            "version": 1,
            "scheme": self.scheme,
            "k": self.k,
            "n": self.n,
            "num_tables": self.num_tables,
            "families": [family.to_dict() for family in self.families],
            "tables": [
                {str(key): bucket for key, bucket in sorted(table.items())}
                for table in self.tables
            ],
        }

    def save(self, path: str) -> None:
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(self.to_dict(), fh)
        os.replace(tmp, path)

    @classmethod
    def from_dict(cls, data: dict) -> "HammingIndex":
        families = []
        for fam in data["families"]:
            if fam["scheme"] == "lbh" and "training_meta" in fam:
                from .learning import LearnedHashFamily

                families.append(LearnedHashFamily.from_dict(fam))
            else:
                families.append(family_from_dict(fam))
        tables = [
            {int(key): list(bucket) for key, bucket in table.items()}
            for table in data["tables"]
        ]
        return cls(families, tables, data["n"])

    @classmethod
    def load(cls, path: str) -> "HammingIndex":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class TablePlan:
    """Guarantee-grade table structure implied by a parameter set.

    The success-probability lower bound is reported under both readings of
    the constant in the guarantee (gap term 1/epsilon, or Euler's 1/e).
    """

    scheme: str
    n: int
    k_bits: int
    num_tables: int
    rho: float
    p1: float
    p2: float
    c: float
    expected_hash_evaluations: int
    expected_candidate_scans: float
    success_prob_eps_reading: float
    success_prob_e_reading: float


def theoretical_table_plan(params: LSHParams) -> TablePlan:
    """Expand LSH parameters into the table plan used for theory-vs-practice reports."""
    n_rho = params.n**params.rho
    return TablePlan(
        scheme=params.scheme,
        n=params.n,
        k_bits=params.k_bits,
        num_tables=params.num_tables,
        rho=params.rho,
        p1=params.p1,
        p2=params.p2,
        c=params.c,
        expected_hash_evaluations=params.num_tables * params.k_bits,
        expected_candidate_scans=params.c * n_rho,
        success_prob_eps_reading=1.0 - 1.0 / params.c - 1.0 / params.epsilon,
        success_prob_e_reading=1.0 - 1.0 / params.c - 1.0 / np.e,
    )
