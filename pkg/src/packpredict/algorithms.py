"""Pack prediction protocols built on the aggregation engine.

A pack is a batch of items revealed together: the learner sees all expert
predictions for the batch, commits predictions for every item, and only then
observes the outcomes.  Weights are therefore frozen within a pack and updated
once per pack.

Four variants, differing only in the loss divisor fed to the weight update:

  run_aap_equal        packs of one known size K          (divisor: K)
  run_aap_max          sizes vary, max size K known ahead (divisor: K)
  run_aap_incremental  nothing known ahead                (divisor: running max)
  run_aap_current      nothing known ahead                (divisor: current size)

Every variant predicts each item with the plain full-rate substitution at
the current weights; only the weight update is slowed by the divisor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregator import (
    DivisorPolicy,
    init_state,
    observe_pack,
    predict_pack,
    uniform_prior,
)
from .games import GameSpec


@dataclass(eq=False)
class Pack:
    """One trial: an N x K matrix of expert predictions plus K outcomes."""

    expert_preds: np.ndarray
    outcomes: np.ndarray

    def __post_init__(self):
        self.expert_preds = np.asarray(self.expert_preds, dtype=float)
        self.outcomes = np.asarray(self.outcomes, dtype=float)
        if self.expert_preds.ndim != 2:
            raise ValueError(
                f"expert predictions must be N x K, got shape {self.expert_preds.shape}"
            )
        if self.outcomes.ndim != 1 or self.outcomes.size != self.expert_preds.shape[1]:
            raise ValueError(
                f"outcomes shape {self.outcomes.shape} does not match "
                f"{self.expert_preds.shape[1]} items"
            )
        if self.size < 1:
            raise ValueError("empty pack")

    @property
    def num_experts(self) -> int:
        return self.expert_preds.shape[0]

    @property
    def size(self) -> int:
        return self.expert_preds.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Pack):
            return NotImplemented
        return np.array_equal(self.expert_preds, other.expert_preds) and np.array_equal(
            self.outcomes, other.outcomes
        )


@dataclass(eq=False)
class PackStream:
    """An ordered sequence of packs sharing one expert panel."""

    trials: tuple

    def __post_init__(self):
        self.trials = tuple(self.trials)
        if self.trials:
            n = self.trials[0].num_experts
            for i, t in enumerate(self.trials):
                if t.num_experts != n:
                    raise ValueError(
                        f"trial {i} has {t.num_experts} experts, expected {n}"
                    )

    def __len__(self):
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    def __getitem__(self, i):
        return self.trials[i]

    def __eq__(self, other):
        if not isinstance(other, PackStream):
            return NotImplemented
        return len(self) == len(other) and all(
            a == b for a, b in zip(self.trials, other.trials)
        )

    @property
    def num_experts(self) -> int:
        if not self.trials:
            raise ValueError("empty stream has no expert panel")
        return self.trials[0].num_experts

    @property
    def num_items(self) -> int:
        return sum(t.size for t in self.trials)

    @property
    def max_pack_size(self) -> int:
        return max(t.size for t in self.trials)

    @property
    def min_pack_size(self) -> int:
        return min(t.size for t in self.trials)

    @property
    def pack_sizes(self) -> tuple:
        return tuple(t.size for t in self.trials)

    def validate_for_game(self, game: GameSpec) -> None:
        for i, t in enumerate(self.trials):
            if not game.contains(t.expert_preds):
                raise ValueError(
                    f"trial {i}: expert prediction outside [{game.lower}, {game.upper}]"
                )
            if not game.contains(t.outcomes):
                raise ValueError(
                    f"trial {i}: outcome outside [{game.lower}, {game.upper}]"
                )


@dataclass(frozen=True)
class TrialRecord:
    """Everything an audit needs about one trial, in plain Python floats."""

    trial_index: int
    pack_size: int
    learner_preds: tuple
    learner_pack_loss: float
    expert_pack_losses: tuple
    cumulative_loss: float
    cumulative_average_loss: float
    expert_cumulative_losses: tuple
    expert_cumulative_average_losses: tuple

    def to_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "pack_size": self.pack_size,
            "learner_preds": list(self.learner_preds),
            "learner_pack_loss": self.learner_pack_loss,
            "expert_pack_losses": list(self.expert_pack_losses),
            "cumulative_loss": self.cumulative_loss,
            "cumulative_average_loss": self.cumulative_average_loss,
            "expert_cumulative_losses": list(self.expert_cumulative_losses),
            "expert_cumulative_average_losses": list(
                self.expert_cumulative_average_losses
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        return cls(
            trial_index=int(d["trial_index"]),
            pack_size=int(d["pack_size"]),
            learner_preds=tuple(d["learner_preds"]),
            learner_pack_loss=float(d["learner_pack_loss"]),
            expert_pack_losses=tuple(d["expert_pack_losses"]),
            cumulative_loss=float(d["cumulative_loss"]),
            cumulative_average_loss=float(d["cumulative_average_loss"]),
            expert_cumulative_losses=tuple(d["expert_cumulative_losses"]),
            expert_cumulative_average_losses=tuple(
                d["expert_cumulative_average_losses"]
            ),
        )


class _LossLedger:
    """Accumulates totals and average-loss totals while a run unfolds."""

    def __init__(self, num_experts: int):
        self.total = 0.0
        self.avg_total = 0.0
        self.expert_totals = np.zeros(num_experts)
        self.expert_avg_totals = np.zeros(num_experts)
        self.records = []

    def record(self, trial_index: int, learner_preds: np.ndarray,
               learner_losses: np.ndarray, expert_losses: np.ndarray) -> None:
        k = learner_losses.size
        pack_loss = float(learner_losses.sum())
        expert_pack = expert_losses.sum(axis=1)
        self.total += pack_loss
        self.avg_total += pack_loss / k
        self.expert_totals += expert_pack
        self.expert_avg_totals += expert_pack / k
        self.records.append(
            TrialRecord(
                trial_index=trial_index,
                pack_size=k,
                learner_preds=tuple(float(x) for x in learner_preds),
                learner_pack_loss=pack_loss,
                expert_pack_losses=tuple(float(x) for x in expert_pack),
                cumulative_loss=self.total,
                cumulative_average_loss=self.avg_total,
                expert_cumulative_losses=tuple(float(x) for x in self.expert_totals),
                expert_cumulative_average_losses=tuple(
                    float(x) for x in self.expert_avg_totals
                ),
            )
        )


def _run_with_policy(stream: PackStream, game: GameSpec, policy: DivisorPolicy,
                     prior) -> list:
    if len(stream) == 0:
        return []
    stream.validate_for_game(game)
    if prior is None:
        prior = uniform_prior(stream.num_experts)
    state = init_state(prior)
    if np.asarray(prior).size != stream.num_experts:
        raise ValueError(
            f"prior has {np.asarray(prior).size} entries for "
            f"{stream.num_experts} experts"
        )
    if policy.kind == "fixed" and stream.max_pack_size > policy.pack_size:
        raise ValueError(
            f"pack of size {stream.max_pack_size} exceeds declared size "
            f"{policy.pack_size}"
        )
    ledger = _LossLedger(stream.num_experts)
    for t, pack in enumerate(stream):
        preds = predict_pack(state, pack.expert_preds, game)
        learner_losses = (preds - pack.outcomes) ** 2
        expert_losses = (pack.expert_preds - pack.outcomes[None, :]) ** 2
        ledger.record(t, preds, learner_losses, expert_losses)
        observe_pack(state, expert_losses, policy, game)
    return ledger.records


def run_aap_equal(stream: PackStream, pack_size: int, game: GameSpec,
                  prior=None) -> list:
    """Pack prediction when every pack has the same known size.

    Raises if any pack's size differs from `pack_size`.
    """
    for i, t in enumerate(stream):
        if t.size != pack_size:
            raise ValueError(
                f"trial {i} has size {t.size}; this protocol requires every "
                f"pack to have size {pack_size}"
            )
    return _run_with_policy(stream, game, DivisorPolicy.fixed(pack_size), prior)


def run_aap_max(stream: PackStream, max_pack_size: int, game: GameSpec,
                prior=None) -> list:
    """Pack prediction when only an upper bound on pack sizes is known ahead."""
    return _run_with_policy(stream, game, DivisorPolicy.fixed(max_pack_size), prior)


def run_aap_incremental(stream: PackStream, game: GameSpec, prior=None) -> list:
    """Pack prediction with no size information: divisor is the running max
    pack size, with weights recomputed from the prior whenever it grows."""
    return _run_with_policy(stream, game, DivisorPolicy.running_max(), prior)


def run_aap_current(stream: PackStream, game: GameSpec, prior=None) -> list:
    """Pack prediction with no size information: divisor is the current pack
    size.  Controls average per-item loss rather than total loss."""
    return _run_with_policy(stream, game, DivisorPolicy.current_pack(), prior)


def run_aa(stream: PackStream, game: GameSpec, prior=None) -> list:
    """Classic one-item-at-a-time aggregation: a stream whose packs all have
    size one, run with divisor 1."""
    for i, t in enumerate(stream):
        if t.size != 1:
            raise ValueError(f"trial {i} has size {t.size}; expected single items")
    return _run_with_policy(stream, game, DivisorPolicy.fixed(1), prior)
