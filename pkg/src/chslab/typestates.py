"""Type vectors, type states, prefix collision-freeness, and phase twirling.

A type is a multiset of ``t`` strings over the alphabet ``{0,1}^width``; its
type state is the unit-norm symmetric superposition over all orderings of the
multiset, with coefficient ``sqrt(prod_i T_i! / t!)`` on each ordering. Uniform
mixtures of type states reproduce averages over Haar-random product states,
which is what makes the phase-twirl identities in this module checkable by
finite enumeration.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Iterator

import numpy as np

from .budgets import DEFAULT_BUDGETS, Budgets
from .qla import DensityOperator, PureState

# ---------------------------------------------------------------------------
# Types and ordered tuples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeVector:
    """Multiset of ``total`` strings over ``{0,1}^width`` with a designated prefix.

    ``elements`` is the sorted expansion of the multiset (one entry per copy),
    and ``prefix_bits`` marks how many leading bits the phase operations and
    collision predicates look at.
    """

    elements: tuple[int, ...]
    width: int
    prefix_bits: int

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(sorted(int(x) for x in self.elements)))
        if not self.elements:
            raise ValueError("type must contain at least one element")
        if not 0 <= self.prefix_bits <= self.width:
            raise ValueError(f"prefix_bits {self.prefix_bits} not in [0, {self.width}]")
        for x in self.elements:
            if not 0 <= x < (1 << self.width):
                raise ValueError(f"element {x} does not fit in {self.width} bits")

    @property
    def total(self) -> int:
        return len(self.elements)

    @property
    def alphabet_size(self) -> int:
        return 1 << self.width

    def multiplicities(self) -> Counter:
        return Counter(self.elements)

    def collision_free(self) -> bool:
        return len(set(self.elements)) == len(self.elements)

    def prefixes(self) -> tuple[int, ...]:
        shift = self.width - self.prefix_bits
        return tuple(x >> shift for x in self.elements)

    def remove(self, positions: Iterable[int]) -> "TypeVector":
        drop = set(positions)
        kept = tuple(x for i, x in enumerate(self.elements) if i not in drop)
        return TypeVector(kept, self.width, self.prefix_bits)

    def take(self, positions: Iterable[int]) -> "TypeVector":
        pick = sorted(set(positions))
        return TypeVector(tuple(self.elements[i] for i in pick), self.width, self.prefix_bits)


@dataclass(frozen=True)
class OrderedTuple:
    """An ordered tuple of strings; ``type_of`` forgets the order."""

    entries: tuple[int, ...]
    width: int
    prefix_bits: int

    def type_of(self) -> TypeVector:
        return TypeVector(self.entries, self.width, self.prefix_bits)

    def permuted(self, sigma: tuple[int, ...]) -> "OrderedTuple":
        # Left action on tuples: entry i of the image is entry sigma[i].
        return OrderedTuple(
            tuple(self.entries[sigma[i]] for i in range(len(self.entries))),
            self.width,
            self.prefix_bits,
        )


def enumerate_types(
    N: int, t: int, budgets: Budgets = DEFAULT_BUDGETS, prefix_bits: int | None = None
) -> Iterator[TypeVector]:
    """All multisets of size ``t`` over an alphabet of ``N = 2^width`` strings."""
    width = _width_of(N)
    count = math.comb(N + t - 1, t)
    budgets.check_type_count(count, f"enumerate_types(N={N}, t={t})")
    pb = width if prefix_bits is None else prefix_bits
    for combo in itertools.combinations_with_replacement(range(N), t):
        yield TypeVector(combo, width, pb)


def _width_of(N: int) -> int:
    width = N.bit_length() - 1
    if N <= 0 or (1 << width) != N:
        raise ValueError(f"alphabet size {N} must be a power of two")
    return width


def distinct_orderings(elements: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Distinct permutations of a multiset, in a fixed sorted order."""
    return sorted(set(itertools.permutations(elements)))


def type_state(T: TypeVector) -> PureState:
    """Symmetric superposition over the orderings of the multiset.

    Amplitude ``sqrt(prod_i T_i! / t!)`` on every distinct ordering; a
    collision-free type therefore carries ``1/sqrt(t!)`` on each of its ``t!``
    orderings, and a fully repeated type is a single basis state.
    """
    t = T.total
    coeff = math.sqrt(
        reduce(lambda acc, mult: acc * math.factorial(mult), T.multiplicities().values(), 1)
        / math.factorial(t)
    )
    amps = {ordering: complex(coeff) for ordering in distinct_orderings(T.elements)}
    return PureState((T.width,) * t, amps)


# ---------------------------------------------------------------------------
# Prefix collision-freeness
# ---------------------------------------------------------------------------


def is_l_fold_prefix_cf(T: TypeVector, ell: int, budgets: Budgets = DEFAULT_BUDGETS) -> bool:
    """Whether all size-``ell`` position subsets have distinct prefix XORs.

    The multiset is expanded into its ``t`` copies; the predicate holds iff
    the map {ell-subset of positions} -> prefix of the XOR of the selected
    strings is injective. Repeated elements therefore fail for ``t > ell``
    (two positions holding the same string XOR to the same prefix), which
    makes the 1-fold predicate imply ordinary collision-freeness.
    """
    t = T.total
    if ell > t:
        raise ValueError(f"ell={ell} exceeds type size t={t}")
    n_subsets = math.comb(t, ell)
    budgets.check_subset_pairs(n_subsets * n_subsets, f"is_l_fold_prefix_cf(t={t}, ell={ell})")
    prefixes = T.prefixes()
    seen: set[int] = set()
    for positions in itertools.combinations(range(t), ell):
        folded = 0
        for i in positions:
            folded ^= prefixes[i]
        if folded in seen:
            return False
        seen.add(folded)
    return True


def exact_cf_probability(
    lam: int, m_suffix: int, ell: int, t: int, budgets: Budgets = DEFAULT_BUDGETS
) -> float:
    """Exact probability that a uniform type is ell-fold prefix collision-free."""
    total = 0
    good = 0
    for T in enumerate_types(1 << (lam + m_suffix), t, budgets, prefix_bits=lam):
        total += 1
        good += is_l_fold_prefix_cf(T, ell, budgets)
    return good / total


def estimate_cf_probability(
    lam: int,
    m_suffix: int,
    ell: int,
    t: int,
    trials: int,
    rng: np.random.Generator,
    budgets: Budgets = DEFAULT_BUDGETS,
) -> float:
    """Monte-Carlo estimate of the prefix collision-free probability."""
    if trials < 1:
        raise ValueError("trials must be positive")
    hits = 0
    N = 1 << (lam + m_suffix)
    for _ in range(trials):
        T = sample_type(N, t, rng, prefix_bits=lam)
        hits += is_l_fold_prefix_cf(T, ell, budgets)
    return hits / trials


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_type(
    N: int, t: int, rng: np.random.Generator, prefix_bits: int | None = None
) -> TypeVector:
    """Uniform multiset of size ``t`` over ``N`` strings.

    Uses the stars-and-bars bijection: a uniform ``t``-combination of
    ``[N + t - 1]`` maps to a multiset by subtracting the index rank.
    """
    width = _width_of(N)
    positions = np.sort(rng.choice(N + t - 1, size=t, replace=False))
    elements = tuple(int(p) - i for i, p in enumerate(positions))
    return TypeVector(elements, width, width if prefix_bits is None else prefix_bits)


def sample_type_conditioned(
    N: int,
    t: int,
    predicate: Callable[[TypeVector], bool],
    rng: np.random.Generator,
    max_rejects: int = 100_000,
    prefix_bits: int | None = None,
) -> TypeVector:
    """Rejection-sample a uniform type satisfying ``predicate``."""
    for _ in range(max_rejects):
        T = sample_type(N, t, rng, prefix_bits=prefix_bits)
        if predicate(T):
            return T
    raise RuntimeError(
        f"no type satisfying the predicate in {max_rejects} draws; "
        "the conditioned set is too thin for these parameters"
    )


# ---------------------------------------------------------------------------
# Phase action and the two averaging identities
# ---------------------------------------------------------------------------


def phase_sign(k: int, prefix: int) -> int:
    """(-1)**<k, prefix> as bit vectors."""
    return -1 if (k & prefix).bit_count() & 1 else 1


def apply_phase(k: int, lam: int, state: PureState, targets: Iterable[int]) -> PureState:
    """Diagonal phase (-1)**<k, prefix> on the lam-bit prefix of each target register."""
    if not 0 <= k < (1 << lam):
        raise ValueError(f"key {k} does not fit in {lam} bits")
    targets = sorted(set(int(i) for i in targets))
    shape = state.register_shape
    for i in targets:
        if i < 0 or i >= len(shape):
            raise ValueError(f"target register {i} out of range")
        if shape[i] < lam:
            raise ValueError(f"target register {i} has {shape[i]} bits, needs at least {lam}")
    amps: dict[tuple[int, ...], complex] = {}
    for label, amp in state.amplitudes.items():
        sign = 1
        for i in targets:
            sign *= phase_sign(k, label[i] >> (shape[i] - lam))
        amps[label] = sign * amp
    return PureState._unchecked(shape, amps)


class PermutationVerdict(enum.Enum):
    IDENTITY_KEPT = "identity-kept"
    ZEROED = "zeroed"


def permutation_average_verdict(
    v: OrderedTuple, sigma: tuple[int, ...], ell: int, lam: int
) -> PermutationVerdict:
    """Average the phased outer product |v><sigma(v)| over all 2^lam keys.

    The key phases hit the first ``ell`` registers of both sides, so each key
    contributes the sign of the XOR of the two prefix folds; the exact average
    is either 1 (operator kept) or 0 (operator cancelled). The verdict is
    cross-checked against the combinatorial criterion that sigma maps the
    first ``ell`` positions onto themselves; a prefix collision-free type is
    required for that criterion to be equivalent.
    """
    T = v.type_of()
    if not is_l_fold_prefix_cf(TypeVector(T.elements, T.width, lam), ell):
        raise ValueError("tuple type is not ell-fold prefix collision-free")
    if sorted(sigma) != list(range(len(v.entries))):
        raise ValueError(f"sigma {sigma} is not a permutation of the tuple positions")
    shift = v.width - lam
    u = v.permuted(sigma)
    acc = 0
    for k in range(1 << lam):
        sign = 1
        for i in range(ell):
            sign *= phase_sign(k, v.entries[i] >> shift)
            sign *= phase_sign(k, u.entries[i] >> shift)
        acc += sign
    coefficient = acc / (1 << lam)
    verdict = (
        PermutationVerdict.IDENTITY_KEPT if coefficient == 1.0 else PermutationVerdict.ZEROED
    )
    if coefficient not in (0.0, 1.0):
        raise RuntimeError(f"key average produced coefficient {coefficient}, expected 0 or 1")
    maps_first_block = set(sigma[:ell]) == set(range(ell))
    if maps_first_block != (verdict is PermutationVerdict.IDENTITY_KEPT):
        raise RuntimeError(
            "averaged-matrix verdict disagrees with the set criterion "
            f"(sigma={sigma}, ell={ell})"
        )
    return verdict


def key_average(T: TypeVector, ell: int, lam: int, check: bool = True) -> DensityOperator:
    """Uniform mixture of the type state phase-twirled on its first ell registers."""
    if check and not is_l_fold_prefix_cf(TypeVector(T.elements, T.width, lam), ell):
        raise ValueError("type is not ell-fold prefix collision-free")
    base = type_state(T)
    members = []
    n_keys = 1 << lam
    for k in range(n_keys):
        members.append((1.0 / n_keys, apply_phase(k, lam, base, range(ell))))
    return DensityOperator.from_ensemble(members)


def split_average(T: TypeVector, ell: int) -> DensityOperator:
    """Uniform mixture of |X><X| (x) |T\\X><T\\X| over ell-position subsets of T."""
    t = T.total
    if not 1 <= ell <= t:
        raise ValueError(f"ell={ell} out of range for type size {t}")
    groups: Counter = Counter()
    for positions in itertools.combinations(range(t), ell):
        keep = set(positions)
        first = tuple(T.elements[i] for i in positions)
        rest = tuple(x for i, x in enumerate(T.elements) if i not in keep)
        groups[(first, rest)] += 1
    n_splits = math.comb(t, ell)
    members = []
    for (first, rest), count in sorted(groups.items()):
        state = type_state(TypeVector(first, T.width, T.prefix_bits))
        if rest:
            state = state.tensor(type_state(TypeVector(rest, T.width, T.prefix_bits)))
        members.append((count / n_splits, state))
    return DensityOperator.from_ensemble(members)
