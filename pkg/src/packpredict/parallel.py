"""Parallel copies: pack prediction by multiplexing single-item aggregators.

Keep a pool of independent copies of the one-item aggregator.  Within a pack,
item k goes to the lowest-numbered copy that is *ready* (has seen the outcome
for everything it predicted); a copy that predicts becomes blocked until the
pack's outcomes arrive at the end of the trial.  Since all outcomes of a pack
arrive together, a pack of size K occupies copies 0..K-1, so the pool never
needs more copies than the largest pack.

Each copy thus sees a subsequence of the items as its own one-item game, and
delays between a copy's prediction and its feedback never exceed the pack
structure's span.  The aggregate guarantee degrades with the number of copies
an expert's loss is split across, which is why item order inside packs (and
pack order) changes the total loss: shuffling reassigns items to copies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregator import (
    DivisorPolicy,
    init_state,
    observe_pack,
    predict_item,
    uniform_prior,
)
from .algorithms import PackStream, _LossLedger
from .games import GameSpec


class CopyPool:
    """Lazily grown pool of one-item aggregators with lowest-ready dispatch."""

    def __init__(self, game: GameSpec, prior):
        self.game = game
        self.prior = np.asarray(prior, dtype=float)
        self.states = []
        self.blocked = []           # blocked[i]: copy i awaits feedback
        self.pending = []           # (copy_index, expert_losses) for this pack
        self.assignment_log = []    # copy index per item, in stream order

    @property
    def num_copies(self) -> int:
        return len(self.states)

    def _acquire(self) -> int:
        for i, busy in enumerate(self.blocked):
            if not busy:
                return i
        self.states.append(init_state(self.prior))
        self.blocked.append(False)
        return len(self.states) - 1

    def predict(self, expert_preds) -> float:
        """Route one item to the lowest-numbered ready copy and predict."""
        i = self._acquire()
        self.blocked[i] = True
        pred = predict_item(self.states[i], expert_preds, self.game)
        self.pending.append((i, np.asarray(expert_preds, dtype=float)))
        return pred

    def feed_outcomes(self, outcomes) -> None:
        """Deliver a pack's outcomes to the copies that predicted its items,
        releasing them in the order they were acquired."""
        outcomes = np.asarray(outcomes, dtype=float)
        if outcomes.size != len(self.pending):
            raise ValueError(
                f"{outcomes.size} outcomes for {len(self.pending)} pending items"
            )
        policy = DivisorPolicy.fixed(1)
        for (i, preds), omega in zip(self.pending, outcomes):
            losses = (preds - omega) ** 2
            observe_pack(self.states[i], losses[:, None], policy, self.game)
            self.blocked[i] = False
            self.assignment_log.append(i)
        self.pending = []


def run_parallel(stream: PackStream, game: GameSpec, prior=None) -> list:
    """Run the copy pool over a pack stream, returning per-trial records."""
    if len(stream) == 0:
        return []
    stream.validate_for_game(game)
    if prior is None:
        prior = uniform_prior(stream.num_experts)
    pool = CopyPool(game, prior)
    ledger = _LossLedger(stream.num_experts)
    for t, pack in enumerate(stream):
        preds = np.array([pool.predict(pack.expert_preds[:, k])
                          for k in range(pack.size)])
        pool.feed_outcomes(pack.outcomes)
        learner_losses = (preds - pack.outcomes) ** 2
        expert_losses = (pack.expert_preds - pack.outcomes[None, :]) ** 2
        ledger.record(t, preds, learner_losses, expert_losses)
    return ledger.records


@dataclass(frozen=True)
class ShuffleSummary:
    """Total losses of the copy pool over within-pack reshuffles of one stream."""

    losses: tuple
    mean: float
    min: float
    max: float
    num_shuffles: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "losses": list(self.losses),
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
            "num_shuffles": self.num_shuffles,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShuffleSummary":
        return cls(
            losses=tuple(float(x) for x in d["losses"]),
            mean=float(d["mean"]),
            min=float(d["min"]),
            max=float(d["max"]),
            num_shuffles=int(d["num_shuffles"]),
            seed=int(d["seed"]),
        )


def shuffle_within_packs(stream: PackStream, rng) -> PackStream:
    """Permute items inside each pack (expert columns and outcomes jointly);
    pack order and membership are untouched."""
    from .algorithms import Pack

    shuffled = []
    for pack in stream:
        perm = rng.permutation(pack.size)
        shuffled.append(Pack(pack.expert_preds[:, perm], pack.outcomes[perm]))
    return PackStream(tuple(shuffled))


def shuffle_experiment(stream: PackStream, game: GameSpec, prior=None,
                       num_shuffles: int = 20, seed: int = 0) -> ShuffleSummary:
    """Total copy-pool loss across `num_shuffles` within-pack reshuffles.

    The spread (max - min) measures how order-sensitive the copy pool is on
    this stream; the pack algorithms are invariant to within-pack order, so
    any nonzero spread is attributable to item-to-copy assignment.
    """
    if num_shuffles < 1:
        raise ValueError("need at least one shuffle")
    rng = np.random.default_rng(seed)
    losses = []
    for _ in range(num_shuffles):
        records = run_parallel(shuffle_within_packs(stream, rng), game, prior)
        losses.append(records[-1].cumulative_loss if records else 0.0)
    arr = np.array(losses)
    return ShuffleSummary(
        losses=tuple(losses),
        mean=float(arr.mean()),
        min=float(arr.min()),
        max=float(arr.max()),
        num_shuffles=num_shuffles,
        seed=seed,
    )
