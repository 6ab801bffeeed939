"""Two-channel slot transport with adversary interposition and noise.

Slots are abstract indices: after the interval-evening discipline all slots
are equidistant and timing carries no information, so transport reduces to
order-preserving bookkeeping plus state degradation. The upper channel
always carries the preparation order; the lower channel carries whatever
rearrangement the sender baked in. ``transmit`` itself never permutes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import adversary
from .adversary import EveLog, EveStrategy
from .quantum import SIGMA_X, SIGMA_Y, SIGMA_Z, StateVector, apply_single_qubit
from .rearrange import CoreOpSet

_PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True)
class TransitBlock:
    """One block in flight: the joint register and the slot-to-qubit orders."""

    register: StateVector
    upper: tuple[int, ...]
    lower: tuple[int, ...]


def depolarize(
    register: StateVector,
    qubits: tuple[int, ...],
    probability: float,
    rng: np.random.Generator,
) -> StateVector:
    """Per-qubit depolarizing noise at the given rate.

    Each listed qubit is replaced by the maximally mixed state with the
    given probability; on a pure-state trajectory that is X, Y or Z applied
    each with probability p/4 (identity otherwise).
    """
    if not 0.0 <= probability < 1.0 + 1e-12:
        raise ValueError("noise probability must lie in [0, 1]")
    if probability == 0.0:
        return register
    quarter = probability / 4.0
    for q in qubits:
        u = rng.random()
        if u < 3.0 * quarter:
            register = apply_single_qubit(register, q, _PAULIS[int(u / quarter)])
    return register


def transmit(
    block: TransitBlock,
    eve: EveStrategy | None,
    noise: float,
    rng: np.random.Generator,
    *,
    op_set: CoreOpSet,
    block_index: int = 0,
    log: EveLog | None = None,
    noise_first: bool = False,
) -> tuple[TransitBlock, int | None]:
    """Transport one block through both insecure lines.

    Applies the adversary strategy (if any), then per-qubit depolarizing
    noise on every transmitted qubit; with no adversary and zero noise the
    delivery is exact. ``noise_first`` moves the noise in front of the
    adversary for a far-side eavesdropper. Returns the delivered block and
    the adversary's guessed op index, when the strategy guesses one.
    """
    register = block.register
    guess: int | None = None

    def run_eve(reg: StateVector) -> StateVector:
        nonlocal guess
        if eve is not None and eve.kind != "none":
            reg, guess = adversary.intercept(
                eve, reg, block.upper, block.lower, block_index, op_set, rng, log
            )
        return reg

    def run_noise(reg: StateVector) -> StateVector:
        if noise > 0.0:
            return depolarize(reg, block.upper + block.lower, noise, rng)
        return reg

    if noise_first:
        register = run_eve(run_noise(register))
    else:
        register = run_noise(run_eve(register))
    return TransitBlock(register, block.upper, block.lower), guess
