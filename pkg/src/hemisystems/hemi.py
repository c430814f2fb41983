"""Hemisystem assembly from a two-group orbit comparison.

B = Omega(W) is normal of index two in A = <B, tau>.  When A and B have the
same orbits on points while every A-orbit of maximals splits into a
tau-swapped pair of B-orbits, picking one side of every pair yields a set of
half the maximals covering each point exactly (t + 1)/2 times -- for every
one of the 2^m choices, where m is the number of pairs.

Verification is independent of the construction: it recounts the degree of
every point against the chosen maximals, either through the incidence index
or, on the slow path, by reducing every point against every chosen basis.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gf import Field
from .groups import (
    GeneratedGroup,
    GenerationFailure,
    GroupElement,
    group_a,
    mulclose,
    omega_w,
    tau,
)
from .linform import StandardModel, standard_model
from .orbits import OrbitPartition, partition, tau_image_of_orbit
from .quadric import QuadricModel


class MaskLength(ValueError):
    """The selection mask does not fit the number of orbit pairs."""


class TooManyOrbits(RuntimeError):
    """Full enumeration was requested beyond the configured cap."""


class UnknownMaximalId(ValueError):
    """A certificate referenced a maximal id outside the model."""


@dataclass(frozen=True)
class OrbitSplit:
    """B-orbits on maximals, grouped into tau-swapped pairs."""

    partition: OrbitPartition
    pairs: tuple

    @property
    def m(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class ActionBundle:
    """Generator actions resolved to permutations, with their partitions."""

    b_point_perms: tuple
    b_maximal_perms: tuple
    tau_point_perm: np.ndarray
    tau_maximal_perm: np.ndarray
    b_point_part: OrbitPartition
    b_maximal_part: OrbitPartition
    a_point_part: OrbitPartition
    a_maximal_part: OrbitPartition


def resolve_actions(qm: QuadricModel, b: GeneratedGroup, t: GroupElement) -> ActionBundle:
    bp = tuple(qm.point_permutation(g.mat) for g in b.generators)
    bm = tuple(qm.maximal_permutation(g.mat) for g in b.generators)
    tp = qm.point_permutation(t.mat)
    tm = qm.maximal_permutation(t.mat)
    return ActionBundle(
        b_point_perms=bp,
        b_maximal_perms=bm,
        tau_point_perm=tp,
        tau_maximal_perm=tm,
        b_point_part=partition(qm.num_points, list(bp)),
        b_maximal_part=partition(qm.num_maximals, list(bm)),
        a_point_part=partition(qm.num_points, list(bp) + [tp]),
        a_maximal_part=partition(qm.num_maximals, list(bm) + [tm]),
    )


@dataclass(frozen=True)
class ABReport:
    """Outcome of the two-group hypotheses, with a witness on failure."""

    b_order: int
    a_order: int
    tau_outside_b: bool
    tau_involution: bool
    b_normal_in_a: bool
    index_two: bool
    point_orbits_match: bool
    n_point_orbits: int
    n_b_maximal_orbits: int
    n_a_maximal_orbits: int
    orbit_pairing_complete: bool
    witness: str | None
    split: OrbitSplit | None

    @property
    def ok(self) -> bool:
        return (
            self.tau_outside_b
            and self.tau_involution
            and self.b_normal_in_a
            and self.index_two
            and self.point_orbits_match
            and self.orbit_pairing_complete
            and self.split is not None
        )

    @property
    def m(self) -> int:
        return 0 if self.split is None else self.split.m


def ab_check(
    qm: QuadricModel,
    b: GeneratedGroup,
    t: GroupElement,
    actions: ActionBundle | None = None,
) -> ABReport:
    """Test every hypothesis of the two-group construction, exhaustively."""
    F = qm.field
    witness = None

    tau_outside_b = t not in b
    tau_involution = (t * t).is_identity()

    t_inv = t.inverse()
    b_normal = True
    for g in b:
        if (t * g * t_inv) not in b:
            b_normal = False
            witness = f"conjugate of a B element left B: {g.mat.tolist()}"
            break

    a_order = b.order
    index_two = False
    if tau_outside_b and b_normal:
        try:
            a = mulclose(F, list(b.generators) + [t], limit=2 * b.order)
            a_order = a.order
            index_two = a_order == 2 * b.order
        except GenerationFailure:
            a_order = -1
            witness = witness or "closure of <B, tau> exceeded twice the order of B"

    acts = actions if actions is not None else resolve_actions(qm, b, t)

    point_orbits_match = np.array_equal(
        acts.b_point_part.orbit_of, acts.a_point_part.orbit_of
    )
    if not point_orbits_match and witness is None:
        diff = np.nonzero(acts.b_point_part.orbit_of != acts.a_point_part.orbit_of)[0]
        witness = f"point {int(diff[0])} changes orbit between B and A"

    bpart, apart = acts.b_maximal_part, acts.a_maximal_part
    pairs = []
    pairing_ok = True
    for oid in range(bpart.n_orbits):
        img = tau_image_of_orbit(bpart, oid, acts.tau_maximal_perm)
        if img == oid:
            pairing_ok = False
            witness = witness or f"maximal orbit {oid} is fixed by tau"
            break
        if tau_image_of_orbit(bpart, img, acts.tau_maximal_perm) != oid:
            pairing_ok = False
            witness = witness or f"tau does not involute maximal orbit {oid}"
            break
        if bpart.sizes[oid] != bpart.sizes[img]:
            pairing_ok = False
            witness = witness or f"maximal orbits {oid} and {img} differ in size"
            break
        if oid < img:
            pairs.append((oid, int(img)))
    if pairing_ok:
        if 2 * len(pairs) != bpart.n_orbits or apart.n_orbits != len(pairs):
            pairing_ok = False
            witness = witness or "pairing does not cover the B orbits exactly"
    if pairing_ok:
        for o1, o2 in pairs:
            aid = apart.orbit_of[bpart.reps[o1]]
            if (
                apart.orbit_of[bpart.reps[o2]] != aid
                or apart.sizes[aid] != bpart.sizes[o1] + bpart.sizes[o2]
            ):
                pairing_ok = False
                witness = f"A orbit does not fuse the pair ({o1}, {o2})"
                break

    split = OrbitSplit(bpart, tuple(pairs)) if pairing_ok else None
    return ABReport(
        b_order=b.order,
        a_order=a_order,
        tau_outside_b=tau_outside_b,
        tau_involution=tau_involution,
        b_normal_in_a=b_normal,
        index_two=index_two,
        point_orbits_match=bool(point_orbits_match),
        n_point_orbits=acts.b_point_part.n_orbits,
        n_b_maximal_orbits=bpart.n_orbits,
        n_a_maximal_orbits=apart.n_orbits,
        orbit_pairing_complete=pairing_ok,
        witness=witness,
        split=split,
    )


def assemble(split: OrbitSplit, mask: int) -> np.ndarray:
    """Member ids for one mask: bit i picks the higher orbit of pair i."""
    if not 0 <= mask < (1 << split.m):
        raise MaskLength(f"mask needs {split.m} bits")
    chosen = []
    for i, (low, high) in enumerate(split.pairs):
        oid = high if (mask >> i) & 1 else low
        chosen.append(split.partition.members[oid])
    return np.sort(np.concatenate(chosen))


def enumerate_all_hemisystems(split: OrbitSplit, cap: int = 2**16):
    """Yield (mask, members) for every mask; refuses beyond the cap."""
    total = 1 << split.m
    if total > cap:
        raise TooManyOrbits(f"2^{split.m} selections exceed the cap of {cap}")
    for mask in range(total):
        yield mask, assemble(split, mask)


@dataclass(frozen=True)
class VerificationReport:
    """Result of recounting point degrees against a candidate member set."""

    ok: bool
    size: int
    expected_size: int
    target_degree: int
    histogram: tuple
    bad_points: tuple
    method: str


def _degrees_by_reduction(qm: QuadricModel, ids: np.ndarray, jobs: int) -> np.ndarray:
    """Point degrees without the incidence index: reduce points by bases."""
    F = qm.field
    ADD, MUL, NEG = F.add_table, F.mul_table, F.neg_table
    pts = qm.points

    def count_chunk(chunk: np.ndarray) -> np.ndarray:
        local = np.zeros(qm.num_points, dtype=np.int64)
        for mid in chunk:
            basis = qm.maximal_bases[mid]
            R = pts.copy()
            for row in basis:
                pivot = int(np.argmax(row != 0))
                factors = R[:, pivot]
                R = ADD[R, MUL[NEG[factors][:, None], row[None, :]]]
            local += ~R.any(axis=1)
        return local

    if jobs <= 1:
        return count_chunk(ids)
    chunks = np.array_split(ids, jobs * 4)
    degrees = np.zeros(qm.num_points, dtype=np.int64)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for part_counts in pool.map(count_chunk, [c for c in chunks if c.size]):
            degrees += part_counts
    return degrees


def verify_hemisystem(
    qm: QuadricModel, ids, slow: bool = False, jobs: int = 1
) -> VerificationReport:
    """Recount every point degree over the given member ids."""
    arr = np.asarray(ids, dtype=np.int64)
    if arr.ndim != 1:
        raise UnknownMaximalId("member ids must form a flat list")
    if arr.size and (arr.min() < 0 or arr.max() >= qm.num_maximals):
        raise UnknownMaximalId("member id outside the model")
    if np.unique(arr).size != arr.size:
        raise UnknownMaximalId("duplicate member id")

    if slow:
        degrees = _degrees_by_reduction(qm, arr, jobs)
        method = "reduction"
    else:
        degrees = np.bincount(
            qm.maximal_points[arr].ravel(), minlength=qm.num_points
        )
        method = "index"

    target = qm.target_degree
    expected = qm.num_maximals // 2
    bad = np.nonzero(degrees != target)[0]
    values, counts = np.unique(degrees, return_counts=True)
    histogram = tuple((int(v), int(c)) for v, c in zip(values, counts))
    ok = arr.size == expected and bad.size == 0
    return VerificationReport(
        ok=bool(ok),
        size=int(arr.size),
        expected_size=expected,
        target_degree=target,
        histogram=histogram,
        bad_points=tuple(int(i) for i in bad[:5]),
        method=method,
    )


@dataclass(frozen=True)
class Prepared:
    """Everything the pipeline needs for one field and rank."""

    field: Field
    model: StandardModel
    qm: QuadricModel
    b: GeneratedGroup
    tau_elt: GroupElement
    a: GeneratedGroup
    actions: ActionBundle
    report: ABReport


def prepare(field: Field, d: int) -> Prepared:
    """Build the model, both groups, their actions, and the AB report."""
    m = standard_model(field, d)
    qm = QuadricModel(m)
    b = omega_w(m)
    t = tau(m)
    a = group_a(m, b, t)
    actions = resolve_actions(qm, b, t)
    report = ab_check(qm, b, t, actions)
    return Prepared(
        field=field, model=m, qm=qm, b=b, tau_elt=t, a=a, actions=actions, report=report
    )
