"""Live teaching session: one learner, one world, one human teacher.

The session drives the same library loop as the experiment harness, but the
feedback comes over the wire. Weights change exactly once per accepted
non-silent feedback; stale or duplicate proposal ids are rejected without
touching state. All methods are synchronous and fast, so calls interleave
atomically under a single event loop.
"""

from __future__ import annotations

import uuid

import numpy as np

from .. import learner, world
from ..feedback import FeedbackError, NoFeedback, feedback_from_json, feedback_to_pseudo_loss
from ..harness import ExperimentConfig, StepRecord, TrialLog, trial_csv_text
from ..teacher import latent_eval
from .schemas import (
    AckMessage,
    Candidate,
    ExportMessage,
    HelloMessage,
    MapSummary,
    ProposeMessage,
    PROTOCOL_VERSION,
)


class SessionError(Exception):
    def __init__(self, code: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


class TeachSession:
    """State machine for a single teaching session."""

    def __init__(self, config: ExperimentConfig, mode: str | None = None,
                 auto_advance_ms: int | None = None):
        config.validate(require_teacher=False)
        self.config = config
        self.mode = mode or config.mode
        self.auto_advance_ms = auto_advance_ms or config.auto_advance_ms
        if self.mode == "timed" and not self.auto_advance_ms:
            self.auto_advance_ms = 1000
        self.session_id = "s-" + uuid.uuid4().hex[:10]
        self.map = world.load_map(config.map)
        self.metric_teacher = config.build_teacher() if config.teacher else None
        self.state = world.initial_state(self.map)
        self.weights = learner.zero_weights()
        # consumed once per proposal for the preference alternative draw
        self.rng = np.random.default_rng([config.seed, 0x7EAC])
        self.records: list[StepRecord] = []
        self.update_count = 0
        self.correction_count = 0
        self.seq = 0
        self.proposal_id = 0
        self.pending = None  # dict with the current proposal's working data
        self.closed = False

    # ---------- messages ----------

    def _next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def hello(self) -> HelloMessage:
        doc = world.map_to_document(self.map)
        return HelloMessage(
            session=self.session_id,
            seq=self._next_seq(),
            mode=self.mode,
            auto_advance_ms=self.auto_advance_ms,
            k=self.config.k,
            map=MapSummary(**doc),
            weights=[float(x) for x in self.weights],
            step_count=self.state.step_count,
        )

    def current_proposal(self) -> ProposeMessage | None:
        return self.pending["message"] if self.pending else None

    def propose_step(self) -> ProposeMessage:
        """Generate the next proposal. Errors if one is already pending."""
        if self.closed:
            raise SessionError("closed", "session is closed")
        if self.pending is not None:
            raise SessionError("awaiting_feedback", "a proposal is already pending")
        cfg = self.config
        trajs = world.generate_action_set(
            self.state.pose, k=cfg.k, kappa_max=cfg.kappa_max, n_samples=cfg.n_samples
        )
        selectable = world.mask_colliding(self.map, trajs)
        if not selectable:
            raise SessionError("unrecoverable", "no collision-free action at this pose")
        phi = world.feature_matrix(self.map, self.state, trajs, clip=cfg.clip)
        chosen = learner.select_action(self.weights, phi, selectable)
        scores = phi @ self.weights
        blocked = set(range(cfg.k)) - set(selectable)
        alternatives = [i for i in selectable if i != chosen]
        alternative = (
            alternatives[int(self.rng.integers(len(alternatives)))]
            if alternatives else chosen
        )
        seg0 = max(0, self.state.path_cursor - 1)
        s0, _ = self.map.project_onto_path(
            self.state.pose.x, self.state.pose.y, min_segment=seg0
        )
        ref, _ = self.map.point_at(s0 + 1.0)
        window = self.map.path[
            self.state.path_cursor : self.state.path_cursor + 12
        ]
        self.proposal_id += 1
        msg = ProposeMessage(
            session=self.session_id,
            seq=self._next_seq(),
            proposal_id=self.proposal_id,
            t=len(self.records),
            pose=[self.state.pose.x, self.state.pose.y, self.state.pose.heading],
            path_window=[[float(x), float(y)] for x, y in window],
            ref_point=[float(ref[0]), float(ref[1])],
            candidates=[
                Candidate(
                    index=tr.index,
                    curvature=tr.curvature,
                    blocked=tr.index in blocked,
                    score=float(scores[tr.index]),
                    points=[[float(x), float(y)] for x, y, _ in tr.samples],
                    features=[float(v) for v in phi[tr.index]],
                )
                for tr in trajs
            ],
            chosen_index=chosen,
            preference_alternative=alternative,
        )
        self.pending = {
            "message": msg,
            "trajs": trajs,
            "selectable": selectable,
            "phi": phi,
            "chosen": chosen,
        }
        return msg

    def submit_feedback(self, proposal_id: int, payload: dict, auto: bool = False) -> AckMessage:
        """Apply one feedback message to the pending proposal.

        The already-chosen action executes regardless; the update only
        shapes future steps. Returns the ack; the caller emits the next
        proposal.
        """
        if self.closed:
            raise SessionError("closed", "session is closed")
        if self.pending is None:
            raise SessionError("no_proposal", "no proposal is awaiting feedback")
        if proposal_id != self.pending["message"].proposal_id:
            raise SessionError(
                "stale_proposal",
                f"proposal {proposal_id} is not the pending proposal",
            )
        try:
            fb = feedback_from_json(payload)
            phi = self.pending["phi"]
            chosen = self.pending["chosen"]
            corrected = not isinstance(fb, NoFeedback)
            hinge_loss = None
            pseudo_inc = 0.0
            if corrected:
                pseudo = feedback_to_pseudo_loss(fb, phi, chosen, epsilon=self.config.epsilon)
                ev = learner.hinge_eval(self.weights, phi, pseudo)
                hinge_loss = ev.loss
                pseudo_inc = float(pseudo.values[chosen])
        except FeedbackError as e:
            raise SessionError("bad_feedback", str(e)) from e

        # past the validation point: commit exactly once
        if corrected:
            self.weights = learner.ogd_update(self.weights, ev.subgradient, self.config.eta)
            self.update_count += 1
            self.correction_count += 1
        latent_loss = 0.0
        if self.metric_teacher is not None:
            lat = latent_eval(self.metric_teacher, phi, self.pending["selectable"])
            latent_loss = float(lat.losses[chosen])
        prev_resets = self.state.reset_count
        self.state = world.step(
            self.state,
            self.pending["trajs"][chosen],
            k=self.config.k,
            kappa_max=self.config.kappa_max,
            n_samples=self.config.n_samples,
        )
        self.records.append(
            StepRecord(
                t=len(self.records),
                chosen_index=chosen,
                latent_loss=latent_loss,
                corrected=corrected,
                feedback_kind=fb.kind,
                pseudo_regret_increment=pseudo_inc,
                reset=self.state.reset_count > prev_resets,
            )
        )
        self.pending = None
        return AckMessage(
            session=self.session_id,
            seq=self._next_seq(),
            proposal_id=proposal_id,
            accepted=True,
            updated=corrected,
            auto=auto,
            feedback_kind=fb.kind,
            weights_digest=learner.weights_digest(self.weights),
            hinge_loss=hinge_loss,
            update_count=self.update_count,
            correction_count=self.correction_count,
            step_count=self.state.step_count,
            reset_count=self.state.reset_count,
        )

    def export_csv(self) -> str:
        """Session log in the experiment harness trial CSV schema."""
        log = TrialLog(
            config_hash=self.config.config_hash(),
            records=tuple(self.records),
            final_weights=self.weights,
            update_count=self.update_count,
            alpha_pairs=(),
        )
        return trial_csv_text(log)

    def export_message(self) -> ExportMessage:
        return ExportMessage(
            session=self.session_id, seq=self._next_seq(), csv=self.export_csv()
        )

    def snapshot(self) -> dict:
        return {
            "v": PROTOCOL_VERSION,
            "session": self.session_id,
            "mode": self.mode,
            "auto_advance_ms": self.auto_advance_ms,
            "steps": len(self.records),
            "awaiting_feedback": self.pending is not None,
            "proposal_id": self.proposal_id,
            "weights": [float(x) for x in self.weights],
            "weights_digest": learner.weights_digest(self.weights),
            "update_count": self.update_count,
            "correction_count": self.correction_count,
            "reset_count": self.state.reset_count,
        }
