"""Randomized measurements: local Haar unitaries, shot tables, purity.

Protocol per random-unitary round: rotate the state by a product of
independently Haar-sampled single-qubit unitaries, measure in the
computational basis, and keep the outcome counts. Subsystem purity is then
recovered from the Hamming-distance pair kernel

    Tr[rho_I^2] = 2^{N_I} * avg_U sum_{s,s'} (-2)^(-D[s,s']) P(s) P(s')

where the average runs over the unitary rounds and P are the subsystem
outcome probabilities of one round. Two finite-shot estimators are provided:
the plug-in form substitutes empirical frequencies directly, which is biased
by O(1/num_shots); the unbiased form rescales by num_shots/(num_shots - 1)
and subtracts the same-shot coincidence term, making each round an exact
U-statistic. The pair kernel factorizes per qubit, so the quadratic form is
evaluated in O(N_I 2^{N_I}) without materializing a 4^{N_I} kernel.

Seeding: every stochastic task derives its generator through
``child_generator(master_seed, *key)``, a counter-based spawn of
``numpy.random.SeedSequence``. Work items keyed by (stream, time index,
unitary index) are therefore reproducible regardless of execution order or
worker count.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .state import (
    Gate1Q,
    QuantumState,
    apply_gate,
    counts_from_outcomes,
    probabilities,
    sample_outcomes,
    sample_shots,
)


def child_generator(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the work item identified by ``key``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def sample_haar_unitary(rng: np.random.Generator) -> np.ndarray:
    """2x2 unitary from the circular unitary ensemble.

    QR orthonormalization of a complex Gaussian matrix with the R diagonal
    phase fixed, the standard Haar construction.
    """
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]


@dataclass(frozen=True, eq=False)
class ShotTable:
    """Counts collected for one random-unitary round.

    ``unitaries`` records the sampled 2x2 matrices (empty for identity-basis
    tables, which use ``unitary_index`` 0 by convention).
    """

    unitary_index: int
    num_qubits: int
    num_shots: int
    counts: dict[int, int]
    unitaries: tuple[np.ndarray, ...] = field(default=(), repr=False)

    def __post_init__(self):
        total = sum(self.counts.values())
        if total != self.num_shots:
            raise ValueError(f"counts sum to {total}, expected {self.num_shots}")
        if self.counts and max(self.counts) >= (1 << self.num_qubits):
            raise ValueError("bitstring outside the qubit register")


def rotate_state(state: QuantumState, unitaries: Sequence[np.ndarray]) -> QuantumState:
    """Apply one single-qubit unitary per qubit."""
    if len(unitaries) != state.num_qubits:
        raise ValueError("need exactly one unitary per qubit")
    for q, u in enumerate(unitaries):
        state = apply_gate(state, Gate1Q(u, q, name="RAND"))
    return state


def collect_shot_table(
    state: QuantumState,
    unitary_index: int,
    num_shots: int,
    rng: np.random.Generator,
    unitary_sampler: Callable[[np.random.Generator], np.ndarray] = sample_haar_unitary,
    distribution_map: Callable[[np.ndarray], np.ndarray] | None = None,
    outcome_map: Callable[[np.ndarray, np.random.Generator], np.ndarray] | None = None,
) -> ShotTable:
    """One randomized-measurement round.

    ``distribution_map`` and ``outcome_map`` are the noise insertion points:
    the first transforms the outcome distribution (e.g. mixing with the
    uniform one), the second transforms sampled outcome indices (e.g. readout
    bit flips).
    """
    unitaries = tuple(unitary_sampler(rng) for _ in range(state.num_qubits))
    dist = probabilities(rotate_state(state, unitaries))
    if distribution_map is not None:
        dist = distribution_map(dist)
    if outcome_map is None:
        counts = sample_shots(dist, num_shots, rng)
    else:
        outcomes = outcome_map(sample_outcomes(dist, num_shots, rng), rng)
        counts = counts_from_outcomes(outcomes)
    return ShotTable(unitary_index, state.num_qubits, num_shots, counts, unitaries)


def run_randomized_measurements(
    state: QuantumState,
    num_unitaries: int,
    num_shots: int,
    rng: np.random.Generator,
    unitary_sampler: Callable[[np.random.Generator], np.ndarray] = sample_haar_unitary,
) -> list[ShotTable]:
    """Collect ``num_unitaries`` shot tables; deterministic for a fixed rng."""
    if num_unitaries < 1:
        raise ValueError("num_unitaries must be >= 1")
    return [
        collect_shot_table(state, u, num_shots, rng, unitary_sampler=unitary_sampler)
        for u in range(1, num_unitaries + 1)
    ]


_PAIR_KERNEL = np.array([[1.0, -0.5], [-0.5, 1.0]])


def _kernel_transform(vec: np.ndarray, num_qubits: int) -> np.ndarray:
    """Apply the per-qubit pair kernel along every axis of ``vec``."""
    out = np.asarray(vec, dtype=float)
    for q in range(num_qubits):
        v = out.reshape(1 << q, 2, -1)
        out = np.empty_like(v)
        out[:, 0, :] = v[:, 0, :] - 0.5 * v[:, 1, :]
        out[:, 1, :] = -0.5 * v[:, 0, :] + v[:, 1, :]
        out = out.reshape(-1)
    return out


def hamming_pair_sum(weights: np.ndarray) -> float:
    """sum_{s,s'} (-2)^(-D[s,s']) w_s w_s' over all index pairs."""
    w = np.asarray(weights, dtype=float)
    n = int(w.size).bit_length() - 1
    if w.size != (1 << n):
        raise ValueError("weight vector length must be a power of two")
    return float(w @ _kernel_transform(w, n))


def marginal_counts(table: ShotTable, subset: Sequence[int]) -> np.ndarray:
    """Count vector over the subset register (subset in ascending site order)."""
    n = table.num_qubits
    sub = tuple(subset)
    keys = np.fromiter(table.counts.keys(), dtype=np.int64, count=len(table.counts))
    vals = np.fromiter(table.counts.values(), dtype=np.int64, count=len(table.counts))
    out = np.zeros(1 << len(sub), dtype=np.int64)
    if keys.size == 0:
        return out
    idx = np.zeros_like(keys)
    for pos, q in enumerate(sub):
        bit = (keys >> (n - 1 - q)) & 1
        idx |= bit << (len(sub) - 1 - pos)
    np.add.at(out, idx, vals)
    return out


def purity_statistic(count_vector: np.ndarray, num_shots: int, variant: str) -> float:
    """Per-round purity statistic from a subset count vector."""
    n_i = int(count_vector.size).bit_length() - 1
    quad = hamming_pair_sum(count_vector.astype(float))
    scale = float(1 << n_i)
    if variant == "plugin":
        return scale * quad / (num_shots * num_shots)
    if variant == "unbiased":
        if num_shots < 2:
            raise ValueError("unbiased variant needs at least 2 shots")
        return scale * (quad - num_shots) / (num_shots * (num_shots - 1))
    raise ValueError(f"variant must be 'plugin' or 'unbiased', got {variant!r}")


def purity_from_subset_distribution(distribution: np.ndarray) -> float:
    """Infinite-shot statistic of a single round, from exact subset probabilities."""
    d = np.asarray(distribution, dtype=float)
    n_i = int(d.size).bit_length() - 1
    return float(1 << n_i) * hamming_pair_sum(d)


@dataclass(frozen=True)
class PurityEstimate:
    """Ensemble-averaged purity; ``value`` may leave [0, 1] statistically."""

    value: float
    subsystem: tuple[int, ...]
    variant: str
    num_unitaries: int
    sigma: float  # standard error of the round average; nan for one round
    per_unitary: np.ndarray | None = field(repr=False, default=None)


def estimate_purity(
    tables: Iterable[ShotTable], subset: Sequence[int], variant: str = "unbiased"
) -> PurityEstimate:
    """Average the per-round Hamming-kernel statistic over all tables."""
    tables = list(tables)
    if not tables:
        raise ValueError("need at least one shot table")
    n = tables[0].num_qubits
    shots = tables[0].num_shots
    sub = tuple(subset)
    if not sub or len(set(sub)) != len(sub) or min(sub) < 0 or max(sub) >= n:
        raise ValueError(f"invalid subsystem {sub} for {n} qubits")
    for tb in tables:
        if tb.num_qubits != n or tb.num_shots != shots:
            raise ValueError("tables disagree on qubit count or shot budget")
    stats = np.array(
        [purity_statistic(marginal_counts(tb, sub), shots, variant) for tb in tables]
    )
    sigma = (
        float(np.std(stats, ddof=1) / np.sqrt(len(stats)))
        if len(stats) > 1
        else float("nan")
    )
    return PurityEstimate(
        value=float(np.mean(stats)),
        subsystem=sub,
        variant=variant,
        num_unitaries=len(stats),
        sigma=sigma,
        per_unitary=stats,
    )


def renyi2(purity_value: float) -> float:
    """Second-order Renyi entropy in bits; nan for a nonpositive estimate.

    Statistical purity estimates can cross zero, so a nonpositive input is
    reported as a missing data point rather than raised.
    """
    if not purity_value > 0.0:
        return float("nan")
    return float(-np.log2(purity_value))
