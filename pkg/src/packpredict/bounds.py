"""Closed-form loss guarantees and run auditing.

Every protocol in this package carries a guarantee of the shape

    learner_total <= mult * C * expert_total + (C * D / eta) * ln(1 / p_n)

for each expert n with prior weight p_n.  What varies is the divisor D, the
multiplier `mult`, and whether the "total" is a plain sum of losses or a sum
of per-pack average losses:

  algorithm              metric    D                        mult
  -------------------    -------   ----------------------   ----------------
  aa                     total     1                        1
  aap-equal              total     K (the common size)      1
  aap-max                total     K (declared max size)    1
  aap-incremental        total     max size seen so far     1
  aap-current-average    average   1                        1
  aap-current-plain      total     max size seen so far     max/min size seen
  parallel               total     pool size (= max size)   1

`audit_run` replays a finished run's records against the matching guarantee
for every expert, either at the end or at every prefix, and reports the slack
bound - learner_total.  Anything below -1e-9 is a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .games import _as_weights

# A guarantee holds if bound - loss >= -SLACK_TOL (room for float accumulation).
SLACK_TOL = 1e-9

AA = "aa"
AAP_EQUAL = "aap-equal"
AAP_MAX = "aap-max"
AAP_INCREMENTAL = "aap-incremental"
AAP_CURRENT_AVERAGE = "aap-current-average"
AAP_CURRENT_PLAIN = "aap-current-plain"
PARALLEL = "parallel"

ALGORITHMS = (
    AA,
    AAP_EQUAL,
    AAP_MAX,
    AAP_INCREMENTAL,
    AAP_CURRENT_AVERAGE,
    AAP_CURRENT_PLAIN,
    PARALLEL,
)


def theoretical_bound(algorithm: str, expert_loss, *, c: float, eta: float,
                      prior_weight: float, pack_size: int | None = None,
                      max_pack: int | None = None, min_pack: int | None = None,
                      max_delay: int | None = None):
    """Guaranteed learner total against one expert.  `expert_loss` is that
    expert's total (or average-loss total, for aap-current-average).

    Accepts scalars or arrays for `expert_loss` and broadcasts.
    """
    if not 0 < prior_weight <= 1:
        raise ValueError(f"prior weight must be in (0, 1], got {prior_weight}")
    log_term = math.log(1.0 / prior_weight)
    loss = np.asarray(expert_loss, dtype=float)

    if algorithm == AA:
        out = c * loss + (c / eta) * log_term
    elif algorithm in (AAP_EQUAL, AAP_MAX):
        if pack_size is None or pack_size < 1:
            raise ValueError(f"{algorithm} bound needs pack_size >= 1")
        out = c * loss + (c * pack_size / eta) * log_term
    elif algorithm == AAP_INCREMENTAL:
        if max_pack is None or max_pack < 1:
            raise ValueError("aap-incremental bound needs max_pack >= 1")
        out = c * loss + (c * max_pack / eta) * log_term
    elif algorithm == AAP_CURRENT_AVERAGE:
        out = c * loss + (c / eta) * log_term
    elif algorithm == AAP_CURRENT_PLAIN:
        if max_pack is None or min_pack is None or min_pack < 1:
            raise ValueError("aap-current-plain bound needs max_pack and min_pack")
        out = (max_pack / min_pack) * c * loss + (c * max_pack / eta) * log_term
    elif algorithm == PARALLEL:
        if max_delay is None or max_delay < 1:
            raise ValueError("parallel bound needs max_delay (pool size) >= 1")
        out = c * loss + (c * max_delay / eta) * log_term
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BoundEntry:
    """One (prefix, expert) check: did the guarantee hold at this point?"""

    expert_index: int
    learner_loss: float
    expert_loss: float
    bound: float
    slack: float
    prefix: int  # number of trials included

    def to_dict(self) -> dict:
        return {
            "expert_index": self.expert_index,
            "learner_loss": self.learner_loss,
            "expert_loss": self.expert_loss,
            "bound": self.bound,
            "slack": self.slack,
            "prefix": self.prefix,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundEntry":
        return cls(
            expert_index=int(d["expert_index"]),
            learner_loss=float(d["learner_loss"]),
            expert_loss=float(d["expert_loss"]),
            bound=float(d["bound"]),
            slack=float(d["slack"]),
            prefix=int(d["prefix"]),
        )


@dataclass(frozen=True)
class BoundReport:
    """All guarantee checks for one algorithm on one run."""

    algorithm: str
    metric: str  # "total" or "average"
    params: dict
    entries: tuple

    @property
    def min_slack(self) -> float | None:
        if not self.entries:
            return None
        return min(e.slack for e in self.entries)

    @property
    def passed(self) -> bool:
        ms = self.min_slack
        return ms is None or ms >= -SLACK_TOL

    @property
    def violations(self) -> tuple:
        return tuple(e for e in self.entries if e.slack < -SLACK_TOL)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "metric": self.metric,
            "params": dict(self.params),
            "passed": self.passed,
            "min_slack": self.min_slack,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        return cls(
            algorithm=str(d["algorithm"]),
            metric=str(d["metric"]),
            params=dict(d["params"]),
            entries=tuple(BoundEntry.from_dict(e) for e in d["entries"]),
        )


def _stack_records(records):
    """Per-trial cumulative arrays out of a record list."""
    learner_total = np.array([r.cumulative_loss for r in records])
    learner_avg = np.array([r.cumulative_average_loss for r in records])
    expert_total = np.array([r.expert_cumulative_losses for r in records])
    expert_avg = np.array([r.expert_cumulative_average_losses for r in records])
    sizes = np.array([r.pack_size for r in records])
    return learner_total, learner_avg, expert_total, expert_avg, sizes


def audit_run(records, algorithm: str, game, prior, *,
              declared_pack_size: int | None = None,
              every_prefix: bool = False) -> BoundReport:
    """Check a run's records against the guarantee for `algorithm`.

    `declared_pack_size` is required for aap-equal and aap-max (the size the
    run was configured with).  With `every_prefix` the guarantee is checked
    after every trial, not just the last; prefix-dependent divisors (running
    max size, pool size, max/min ratio) use their value as of that prefix.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    prior = _as_weights(prior)
    params = {"c": game.c, "eta": game.eta}
    metric = "average" if algorithm == AAP_CURRENT_AVERAGE else "total"
    if not records:
        return BoundReport(algorithm, metric, params, ())

    learner_total, learner_avg, expert_total, expert_avg, sizes = \
        _stack_records(records)
    num_trials, num_experts = expert_total.shape
    if prior.size != num_experts:
        raise ValueError(
            f"prior has {prior.size} entries for {num_experts} experts"
        )

    if algorithm == AA and np.any(sizes != 1):
        raise ValueError("aa guarantee applies to single-item trials only")
    if algorithm == AAP_EQUAL:
        if declared_pack_size is None:
            raise ValueError("aap-equal audit needs declared_pack_size")
        if np.any(sizes != declared_pack_size):
            raise ValueError(
                f"aap-equal audit declared size {declared_pack_size} but "
                f"saw sizes {sorted(set(sizes.tolist()))}"
            )
        params["pack_size"] = declared_pack_size
    if algorithm == AAP_MAX:
        if declared_pack_size is None:
            raise ValueError("aap-max audit needs declared_pack_size")
        if np.any(sizes > declared_pack_size):
            raise ValueError(
                f"aap-max audit declared max size {declared_pack_size} but "
                f"saw a pack of size {int(sizes.max())}"
            )
        params["pack_size"] = declared_pack_size

    running_max = np.maximum.accumulate(sizes)
    running_min = np.minimum.accumulate(sizes)
    prefixes = np.arange(1, num_trials + 1) if every_prefix \
        else np.array([num_trials])
    idx = prefixes - 1

    log_terms = np.log(1.0 / prior)[None, :]  # (1, N)
    if metric == "average":
        learner = learner_avg[idx, None]
        expert = expert_avg[idx, :]
    else:
        learner = learner_total[idx, None]
        expert = expert_total[idx, :]

    c, eta = game.c, game.eta
    if algorithm == AA:
        bounds = c * expert + (c / eta) * log_terms
    elif algorithm in (AAP_EQUAL, AAP_MAX):
        bounds = c * expert + (c * declared_pack_size / eta) * log_terms
    elif algorithm == AAP_INCREMENTAL:
        divisors = running_max[idx, None]
        bounds = c * expert + (c * divisors / eta) * log_terms
        params["max_pack"] = int(running_max[-1])
    elif algorithm == AAP_CURRENT_AVERAGE:
        bounds = c * expert + (c / eta) * log_terms
    elif algorithm == AAP_CURRENT_PLAIN:
        ratio = (running_max[idx, None] / running_min[idx, None])
        bounds = ratio * c * expert + (c * running_max[idx, None] / eta) * log_terms
        params["max_pack"] = int(running_max[-1])
        params["min_pack"] = int(running_min[-1])
    else:  # PARALLEL: pool size = largest pack seen so far
        divisors = running_max[idx, None]
        bounds = c * expert + (c * divisors / eta) * log_terms
        params["max_delay"] = int(running_max[-1])

    slack = bounds - learner
    entries = []
    for row, prefix in enumerate(prefixes):
        for n in range(num_experts):
            entries.append(BoundEntry(
                expert_index=n,
                learner_loss=float(learner[row, 0]),
                expert_loss=float(expert[row, n]),
                bound=float(bounds[row, n]),
                slack=float(slack[row, n]),
                prefix=int(prefix),
            ))
    return BoundReport(algorithm, metric, params, tuple(entries))
