"""Feedback types and their conversion into zero-biased pseudo-loss vectors.

Each feedback kind maps to a non-negative length-k loss over the candidate
action set whose minimum is exactly zero, so the per-step pseudo regret of a
chosen action is just its pseudo-loss entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .world import FEATURE_NAMES

ACTION_PENALTY = 100.0
SEMANTIC_PENALTY = 100.0
COACTIVE_PENALTY = 1.0

SEMANTIC_SIGNAL_CHANNELS = ("doors", "stairs", "chairs", "path")
_CHANNEL_FEATURE = {
    "doors": FEATURE_NAMES.index("door_dist"),
    "stairs": FEATURE_NAMES.index("stair_dist"),
    "chairs": FEATURE_NAMES.index("chair_dist"),
    "path": FEATURE_NAMES.index("cross_track"),
}
SIGNALS = ("prefer", "avoid", "neutral")


class NoSemanticSignal(ValueError):
    """Teacher and learner features agree within epsilon on every channel."""


class FeedbackError(ValueError):
    """Malformed or out-of-range feedback payload."""


# ---------- feedback union ----------

@dataclass(frozen=True)
class NoFeedback:
    kind: str = field(default="none", init=False)


@dataclass(frozen=True)
class ActionFeedback:
    teacher_index: int
    kind: str = field(default="action", init=False)


@dataclass(frozen=True)
class PreferenceFeedback:
    preferred_index: int
    other_index: int
    kind: str = field(default="preference", init=False)

    def __post_init__(self):
        if self.preferred_index == self.other_index:
            raise FeedbackError("preference indices must be distinct")


@dataclass(frozen=True)
class SemanticFeedback:
    signals: tuple[tuple[str, str], ...]
    kind: str = field(default="semantic", init=False)

    def __post_init__(self):
        sig = dict(self.signals)
        for ch, s in sig.items():
            if ch not in SEMANTIC_SIGNAL_CHANNELS:
                raise FeedbackError(f"unknown semantic channel: {ch}")
            if s not in SIGNALS:
                raise FeedbackError(f"unknown semantic signal: {s}")
        if all(s == "neutral" for s in sig.values()) or not sig:
            raise FeedbackError("semantic feedback needs a non-neutral channel")

    @classmethod
    def from_dict(cls, signals: dict[str, str]) -> "SemanticFeedback":
        return cls(tuple(sorted(signals.items())))

    def as_dict(self) -> dict[str, str]:
        return dict(self.signals)


@dataclass(frozen=True)
class CoactiveFeedback:
    improved_index: int
    kind: str = field(default="coactive", init=False)


Feedback = NoFeedback | ActionFeedback | PreferenceFeedback | SemanticFeedback | CoactiveFeedback


def feedback_to_json(fb: Feedback) -> dict:
    """Wire form: {"kind": ..., ...payload} as used by the teach service."""
    if isinstance(fb, NoFeedback):
        return {"kind": "none"}
    if isinstance(fb, ActionFeedback):
        return {"kind": "action", "teacher_index": fb.teacher_index}
    if isinstance(fb, PreferenceFeedback):
        return {
            "kind": "preference",
            "preferred_index": fb.preferred_index,
            "other_index": fb.other_index,
        }
    if isinstance(fb, SemanticFeedback):
        return {"kind": "semantic", "signals": fb.as_dict()}
    if isinstance(fb, CoactiveFeedback):
        return {"kind": "coactive", "improved_index": fb.improved_index}
    raise FeedbackError(f"unknown feedback: {fb!r}")


def feedback_from_json(payload: dict) -> Feedback:
    if not isinstance(payload, dict):
        raise FeedbackError("feedback payload must be an object")
    kind = payload.get("kind")
    try:
        if kind == "none":
            return NoFeedback()
        if kind == "action":
            return ActionFeedback(teacher_index=_index(payload, "teacher_index"))
        if kind == "preference":
            return PreferenceFeedback(
                preferred_index=_index(payload, "preferred_index"),
                other_index=_index(payload, "other_index"),
            )
        if kind == "semantic":
            signals = payload.get("signals")
            if not isinstance(signals, dict):
                raise FeedbackError("semantic feedback needs a signals object")
            return SemanticFeedback.from_dict({str(k): str(v) for k, v in signals.items()})
        if kind == "coactive":
            return CoactiveFeedback(improved_index=_index(payload, "improved_index"))
    except FeedbackError:
        raise
    except (TypeError, ValueError) as e:
        raise FeedbackError(str(e)) from e
    raise FeedbackError(f"unknown feedback kind: {kind!r}")


def _index(payload: dict, key: str) -> int:
    val = payload.get(key)
    if not isinstance(val, int) or isinstance(val, bool) or val < 0:
        raise FeedbackError(f"{key} must be a non-negative integer")
    return val


def validate_feedback(fb: Feedback, k: int) -> None:
    """Range-check indices against an action set of size k."""
    idx = []
    if isinstance(fb, ActionFeedback):
        idx = [fb.teacher_index]
    elif isinstance(fb, PreferenceFeedback):
        idx = [fb.preferred_index, fb.other_index]
    elif isinstance(fb, CoactiveFeedback):
        idx = [fb.improved_index]
    for i in idx:
        if not 0 <= i < k:
            raise FeedbackError(f"action index {i} out of range [0, {k})")


# ---------- pseudo-losses ----------

@dataclass(frozen=True)
class PseudoLoss:
    """Non-negative per-action loss with min exactly zero."""

    values: np.ndarray
    best_index: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("pseudo-loss must be a non-empty vector")
        if not np.isfinite(v).all():
            raise ValueError("pseudo-loss must be finite")
        if (v < 0).any() or v.min() != 0.0:
            raise ValueError("pseudo-loss must be zero-biased and non-negative")
        object.__setattr__(self, "values", v)


def zero_bias(raw) -> PseudoLoss:
    """Shift a raw loss vector so its minimum is exactly zero; ties resolve
    to the lowest index."""
    v = np.asarray(raw, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("raw loss must be a non-empty vector")
    if not np.isfinite(v).all():
        raise ValueError("raw loss must be finite")
    shifted = v - v.min()
    return PseudoLoss(values=shifted, best_index=int(np.argmin(shifted)))


def action_pseudo_loss(teacher_index: int, k: int, penalty: float = ACTION_PENALTY) -> PseudoLoss:
    """Teacher's action costs 0, every other action costs the penalty."""
    if not 0 <= teacher_index < k:
        raise FeedbackError(f"teacher_index {teacher_index} out of range [0, {k})")
    values = np.full(k, penalty)
    values[teacher_index] = 0.0
    return PseudoLoss(values=values, best_index=teacher_index)


def coactive_pseudo_loss(improved_index: int, k: int, penalty: float = COACTIVE_PENALTY) -> PseudoLoss:
    """0-1 loss: zero at the improved action, one elsewhere."""
    if not 0 <= improved_index < k:
        raise FeedbackError(f"improved_index {improved_index} out of range [0, {k})")
    values = np.full(k, penalty)
    values[improved_index] = 0.0
    return PseudoLoss(values=values, best_index=improved_index)


def preference_pseudo_loss(
    features_all: np.ndarray, preferred_index: int, other_index: int
) -> PseudoLoss:
    """Promotes actions near the preferred action's features and away from
    the non-preferred one: raw(a) = |phi_p - phi_a| - |phi_np - phi_a|."""
    phi = np.asarray(features_all, dtype=float)
    k = len(phi)
    if preferred_index == other_index:
        raise FeedbackError("preference indices must be distinct")
    for i in (preferred_index, other_index):
        if not 0 <= i < k:
            raise FeedbackError(f"action index {i} out of range [0, {k})")
    d_pref = np.linalg.norm(phi - phi[preferred_index], axis=1)
    d_other = np.linalg.norm(phi - phi[other_index], axis=1)
    return zero_bias(d_pref - d_other)


def semantic_signals(
    features_all: np.ndarray, teacher_index: int, learner_index: int, epsilon: float = 0.1
) -> dict[str, str]:
    """Extract per-channel prefer/avoid signals by comparing the teacher's
    and the learner's action features.

    Distance channels read larger-as-avoiding; the path channel is
    hard-coded lower-is-better (smaller cross track = stay on path), so it
    only ever emits "prefer". Differences within epsilon stay neutral.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    phi = np.asarray(features_all, dtype=float)
    signals = {}
    for channel, col in _CHANNEL_FEATURE.items():
        t, l = phi[teacher_index, col], phi[learner_index, col]
        if channel == "path":
            signals[channel] = "prefer" if t < l - epsilon else "neutral"
        elif t > l + epsilon:
            signals[channel] = "avoid"
        elif t < l - epsilon:
            signals[channel] = "prefer"
        else:
            signals[channel] = "neutral"
    return signals


def semantic_loss_from_signals(
    features_all: np.ndarray,
    learner_index: int,
    signals: dict[str, str],
    penalty: float = SEMANTIC_PENALTY,
) -> PseudoLoss:
    """Per fired channel, actions strictly better than the learner's value
    cost 0 and all others cost the penalty; channels sum, then zero-bias."""
    phi = np.asarray(features_all, dtype=float)
    k = len(phi)
    if not 0 <= learner_index < k:
        raise FeedbackError(f"learner_index {learner_index} out of range [0, {k})")
    total = np.zeros(k)
    fired = 0
    for channel, signal in signals.items():
        if channel not in _CHANNEL_FEATURE:
            raise FeedbackError(f"unknown semantic channel: {channel}")
        if signal == "neutral":
            continue
        if signal not in ("prefer", "avoid"):
            raise FeedbackError(f"unknown semantic signal: {signal}")
        fired += 1
        col = _CHANNEL_FEATURE[channel]
        baseline = phi[learner_index, col]
        if channel == "path":
            # prefer = stay on path = lower cross track; avoid inverts
            better = phi[:, col] < baseline if signal == "prefer" else phi[:, col] > baseline
        elif signal == "avoid":
            better = phi[:, col] > baseline
        else:
            better = phi[:, col] < baseline
        total += np.where(better, 0.0, penalty)
    if fired == 0:
        raise NoSemanticSignal("no semantic signal")
    return zero_bias(total)


def semantic_pseudo_loss(
    features_all: np.ndarray,
    teacher_index: int,
    learner_index: int,
    epsilon: float = 0.1,
    penalty: float = SEMANTIC_PENALTY,
) -> PseudoLoss:
    """Signals extracted from the teacher/learner feature comparison, summed
    into a per-action loss. Raises NoSemanticSignal in the dead zone."""
    phi = np.asarray(features_all, dtype=float)
    k = len(phi)
    for i in (teacher_index, learner_index):
        if not 0 <= i < k:
            raise FeedbackError(f"action index {i} out of range [0, {k})")
    signals = semantic_signals(phi, teacher_index, learner_index, epsilon)
    if all(s == "neutral" for s in signals.values()):
        raise NoSemanticSignal("no semantic signal")
    return semantic_loss_from_signals(phi, learner_index, signals, penalty)


def feedback_to_pseudo_loss(
    fb: Feedback,
    features_all: np.ndarray,
    learner_index: int,
    epsilon: float = 0.1,
) -> PseudoLoss:
    """Route a non-silent feedback through its pseudo-loss constructor."""
    k = len(features_all)
    validate_feedback(fb, k)
    if isinstance(fb, ActionFeedback):
        return action_pseudo_loss(fb.teacher_index, k)
    if isinstance(fb, PreferenceFeedback):
        return preference_pseudo_loss(features_all, fb.preferred_index, fb.other_index)
    if isinstance(fb, SemanticFeedback):
        return semantic_loss_from_signals(features_all, learner_index, fb.as_dict())
    if isinstance(fb, CoactiveFeedback):
        return coactive_pseudo_loss(fb.improved_index, k)
    raise FeedbackError(f"cannot build a pseudo-loss from {fb!r}")
