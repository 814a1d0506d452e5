"""Linear argmax policy, generalized hinge surrogate, and online updates.

The surrogate is oriented the standard multiclass way,
loss(w) = max_i [ delta_i + w.phi_i ] - w.phi_best, so a gradient-descent
step moves weights toward the pseudo-loss's best action; with the 0-1
pseudo-loss and a unit step this reduces exactly to the coactive
perceptron update.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .feedback import PseudoLoss
from .world import FEATURE_DIM


@dataclass(frozen=True)
class SurrogateEval:
    loss: float
    selected_index: int
    subgradient: np.ndarray


def zero_weights(dim: int = FEATURE_DIM) -> np.ndarray:
    return np.zeros(dim)


def select_action(w: np.ndarray, features_all: np.ndarray, selectable) -> int:
    """Argmax of w.phi over the selectable indices, lowest index on ties."""
    sel = np.asarray(list(selectable), dtype=int)
    if sel.size == 0:
        raise ValueError("selectable must be non-empty")
    scores = np.asarray(features_all, dtype=float)[sel] @ np.asarray(w, dtype=float)
    return int(sel[np.argmax(scores)])


def hinge_eval(w: np.ndarray, features_all: np.ndarray, pseudo: PseudoLoss) -> SurrogateEval:
    """Generalized hinge loss and its subgradient at w.

    The maximizing term's index is the selected index (lowest on ties);
    the subgradient is phi(selected) - phi(best), where best is the
    pseudo-loss minimizer. Loss is >= 0 because the best action's term
    contributes w.phi(best) to the max.
    """
    phi = np.asarray(features_all, dtype=float)
    w = np.asarray(w, dtype=float)
    scores = phi @ w
    terms = pseudo.values + scores
    selected = int(np.argmax(terms))
    best = pseudo.best_index
    return SurrogateEval(
        loss=float(terms[selected] - scores[best]),
        selected_index=selected,
        subgradient=phi[selected] - phi[best],
    )


def ogd_update(w: np.ndarray, g: np.ndarray, eta: float) -> np.ndarray:
    """One online gradient descent step: w - eta * g."""
    if not eta > 0:
        raise ValueError("eta must be > 0")
    g = np.asarray(g, dtype=float)
    if not np.isfinite(g).all():
        raise ValueError("gradient must be finite")
    return np.asarray(w, dtype=float) - eta * g


def coactive_update(w: np.ndarray, phi_improved: np.ndarray, phi_chosen: np.ndarray) -> np.ndarray:
    """Perceptron-style step toward the improved action's features.

    Grouped as w + (improved - chosen) so identical feature vectors are an
    exact no-op and the step matches a unit-rate descent on the hinge
    subgradient bit for bit.
    """
    delta = np.asarray(phi_improved, dtype=float) - np.asarray(phi_chosen, dtype=float)
    return np.asarray(w, dtype=float) + delta


def bc_fit(dataset, epochs: int, eta: float) -> np.ndarray:
    """Behavior cloning: hinge + OGD passes over (features_all, teacher_index)
    pairs with the 0/100 action pseudo-loss, starting from zero weights."""
    from .feedback import action_pseudo_loss

    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    w = zero_weights()
    for _ in range(epochs):
        for features_all, teacher_index in dataset:
            pseudo = action_pseudo_loss(teacher_index, len(features_all))
            ev = hinge_eval(w, features_all, pseudo)
            w = ogd_update(w, ev.subgradient, eta)
    return w


def empirical_alpha(latent_gaps) -> float:
    """Largest alpha consistent with the informativeness inequality on an
    observed stream: min over steps of
    (latent gap closed by the pseudo-best) / (latent gap to the best action).
    Entries must have strictly positive denominators."""
    pairs = list(latent_gaps)
    if not pairs:
        raise ValueError("empirical alpha is undefined on an empty stream")
    ratios = []
    for to_pseudo_best, to_latent_best in pairs:
        if not to_latent_best > 0:
            raise ValueError("gap_to_latent_best entries must be > 0")
        ratios.append(to_pseudo_best / to_latent_best)
    return min(ratios)


# ---------- weight checkpoints ----------

def weights_to_json(w: np.ndarray) -> str:
    return json.dumps([float(x) for x in np.asarray(w, dtype=float)])


def weights_from_json(text: str) -> np.ndarray:
    data = json.loads(text)
    if not isinstance(data, list) or len(data) != FEATURE_DIM:
        raise ValueError(f"weights checkpoint must be a list of {FEATURE_DIM} numbers")
    return np.array([float(x) for x in data])


def weights_digest(w: np.ndarray) -> str:
    """Stable hash of a weight vector (little-endian float64 bytes)."""
    return hashlib.sha256(np.asarray(w, dtype="<f8").tobytes()).hexdigest()
