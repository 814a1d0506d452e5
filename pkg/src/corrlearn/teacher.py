"""Simulated teachers: latent utilities, Gaussian noise, and thresholded
decide-to-correct behavior on any feedback channel.

Randomness contract: one generator per trial, consumed in a fixed order
each step -- per-action noise draws first (only when sigma > 0), then a
single preference-candidate draw (only when a preference correction is
actually emitted).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .feedback import (
    ActionFeedback,
    CoactiveFeedback,
    Feedback,
    NoFeedback,
    PreferenceFeedback,
    SemanticFeedback,
    semantic_signals,
)

CHANNELS = ("action", "preference", "semantic", "coactive")


@dataclass(frozen=True)
class Teacher:
    w_star: np.ndarray
    threshold: float = 1.0
    noise_sigma: float = 0.0
    channel: str = "action"
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "w_star", np.asarray(self.w_star, dtype=float))
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}")


@dataclass(frozen=True)
class LatentEval:
    """Per-action teacher utilities and latent losses over a selectable set.

    losses[i] = utility(best) - utility(i) for selectable i, +inf otherwise.
    After perturbation losses carry noise and may go negative; best_index is
    then the noisy argmin.
    """

    utilities: np.ndarray
    losses: np.ndarray
    selectable: tuple[int, ...]
    best_index: int

    def loss_of(self, index: int) -> float:
        return float(self.losses[index])


def latent_eval(teacher: Teacher, features_all: np.ndarray, selectable) -> LatentEval:
    """Clean latent evaluation: best = argmax utility among selectable
    (lowest index on ties), losses measured against it."""
    sel = tuple(int(i) for i in selectable)
    if not sel:
        raise ValueError("selectable must be non-empty")
    phi = np.asarray(features_all, dtype=float)
    utilities = phi @ teacher.w_star
    sel_arr = np.asarray(sel, dtype=int)
    best = int(sel_arr[np.argmax(utilities[sel_arr])])
    losses = np.full(len(utilities), np.inf)
    losses[sel_arr] = utilities[best] - utilities[sel_arr]
    return LatentEval(utilities=utilities, losses=losses, selectable=sel, best_index=best)


def perturb(latent: LatentEval, sigma: float, rng: np.random.Generator) -> LatentEval:
    """Add i.i.d. N(0, sigma^2) noise to each selectable latent loss and
    recompute the best index as the noisy argmin. sigma = 0 is the identity
    and consumes no randomness."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return latent
    sel = np.asarray(latent.selectable, dtype=int)
    noisy = latent.losses.copy()
    noisy[sel] = noisy[sel] + rng.normal(0.0, sigma, size=len(sel))
    best = int(sel[np.argmin(noisy[sel])])
    return LatentEval(
        utilities=latent.utilities,
        losses=noisy,
        selectable=latent.selectable,
        best_index=best,
    )


def decide_correction(
    teacher: Teacher,
    noisy: LatentEval,
    learner_index: int,
    features_all: np.ndarray,
    rng: np.random.Generator,
    epsilon: float = 0.1,
) -> Feedback:
    """Stay silent when the learner's (noisy) latent loss is within the
    threshold (ties are silence); otherwise emit feedback on the teacher's
    channel. The emitted best action is the noisy best."""
    if noisy.loss_of(learner_index) <= teacher.threshold:
        return NoFeedback()
    if teacher.channel == "action":
        return ActionFeedback(teacher_index=noisy.best_index)
    if teacher.channel == "coactive":
        return CoactiveFeedback(improved_index=noisy.best_index)
    if teacher.channel == "preference":
        candidates = [i for i in noisy.selectable if i != learner_index]
        if not candidates:
            return NoFeedback()
        other = candidates[int(rng.integers(len(candidates)))]
        # ties keep the learner's own action preferred
        if noisy.loss_of(learner_index) <= noisy.loss_of(other):
            return PreferenceFeedback(preferred_index=learner_index, other_index=other)
        return PreferenceFeedback(preferred_index=other, other_index=learner_index)
    if teacher.channel == "semantic":
        signals = semantic_signals(features_all, noisy.best_index, learner_index, epsilon)
        if all(s == "neutral" for s in signals.values()):
            return NoFeedback()
        return SemanticFeedback.from_dict(signals)
    raise ValueError(f"unknown channel {teacher.channel!r}")
