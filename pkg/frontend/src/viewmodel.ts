/**
 * UI state reducer for a teaching session: applies server messages, gates
 * user gestures behind awaiting_feedback, and guarantees at most one
 * feedback message per proposal id.
 */

import {
  AckMessage,
  Candidate,
  Feedback,
  HelloMessage,
  ProposeMessage,
  ServerMessage,
} from "./protocol.js";

export interface ChartSeries {
  // smoothed latent proxy: hinge loss of each applied update
  hingeLoss: number[];
  cumulativeCorrections: number[];
}

export interface ViewModel {
  connection: "connecting" | "open" | "closed" | "retrying";
  session: string | null;
  mode: "stepper" | "timed" | null;
  map: HelloMessage["map"] | null;
  k: number;
  pose: number[] | null;
  pathWindow: number[][];
  refPoint: number[] | null;
  candidates: Candidate[];
  chosenIndex: number | null;
  preferenceAlternative: number | null;
  pendingProposalId: number | null;
  awaitingFeedback: boolean;
  respondedProposals: Set<number>;
  weightsDigest: string | null;
  stepCount: number;
  resetCount: number;
  correctionCount: number;
  charts: ChartSeries;
  lastError: string | null;
  exportedCsv: string | null;
}

export function initialViewModel(): ViewModel {
  return {
    connection: "connecting",
    session: null,
    mode: null,
    map: null,
    k: 0,
    pose: null,
    pathWindow: [],
    refPoint: null,
    candidates: [],
    chosenIndex: null,
    preferenceAlternative: null,
    pendingProposalId: null,
    awaitingFeedback: false,
    respondedProposals: new Set(),
    weightsDigest: null,
    stepCount: 0,
    resetCount: 0,
    correctionCount: 0,
    charts: { hingeLoss: [], cumulativeCorrections: [] },
    lastError: null,
    exportedCsv: null,
  };
}

export function applyServerMessage(vm: ViewModel, msg: ServerMessage): ViewModel {
  switch (msg.kind) {
    case "hello": {
      return {
        ...vm,
        connection: "open",
        session: msg.session,
        mode: msg.mode,
        map: msg.map,
        k: msg.k,
        stepCount: msg.step_count,
        lastError: null,
      };
    }
    case "propose": {
      // a stale proposal (id not beyond anything we have answered) is ignored
      if (msg.proposal_id <= Math.max(0, ...vm.respondedProposals)) {
        return vm;
      }
      return {
        ...vm,
        pose: msg.pose,
        pathWindow: msg.path_window,
        refPoint: msg.ref_point,
        candidates: msg.candidates,
        chosenIndex: msg.chosen_index,
        preferenceAlternative: msg.preference_alternative,
        pendingProposalId: msg.proposal_id,
        awaitingFeedback: true,
      };
    }
    case "ack": {
      const responded = new Set(vm.respondedProposals);
      responded.add(msg.proposal_id);
      const charts: ChartSeries = {
        hingeLoss: [...vm.charts.hingeLoss, msg.hinge_loss ?? 0],
        cumulativeCorrections: [
          ...vm.charts.cumulativeCorrections,
          msg.correction_count,
        ],
      };
      return {
        ...vm,
        respondedProposals: responded,
        pendingProposalId:
          vm.pendingProposalId === msg.proposal_id ? null : vm.pendingProposalId,
        awaitingFeedback:
          vm.pendingProposalId === msg.proposal_id ? false : vm.awaitingFeedback,
        weightsDigest: msg.weights_digest,
        stepCount: msg.step_count,
        resetCount: msg.reset_count,
        correctionCount: msg.correction_count,
        charts,
      };
    }
    case "error": {
      return { ...vm, lastError: `${msg.code}: ${msg.detail}` };
    }
    case "export": {
      return { ...vm, exportedCsv: msg.csv };
    }
    default:
      return vm;
  }
}

export type Gesture =
  | { type: "clickCandidate"; index: number }
  | { type: "preferAlternative" }
  | { type: "preferChosen" }
  | { type: "semantic"; signals: Partial<Record<string, string>> }
  | { type: "skip" };

/**
 * Turn a user gesture into a feedback payload for the pending proposal, or
 * null when input is disabled (nothing pending, already answered, blocked
 * candidate, or no distinct preference pair).
 */
export function gestureToFeedback(vm: ViewModel, gesture: Gesture): Feedback | null {
  if (!vm.awaitingFeedback || vm.pendingProposalId === null) return null;
  if (vm.respondedProposals.has(vm.pendingProposalId)) return null;
  switch (gesture.type) {
    case "clickCandidate": {
      const c = vm.candidates[gesture.index];
      if (!c || c.blocked) return null;
      return { kind: "action", teacher_index: gesture.index };
    }
    case "preferAlternative": {
      if (
        vm.preferenceAlternative === null ||
        vm.chosenIndex === null ||
        vm.preferenceAlternative === vm.chosenIndex
      )
        return null;
      return {
        kind: "preference",
        preferred_index: vm.preferenceAlternative,
        other_index: vm.chosenIndex,
      };
    }
    case "preferChosen": {
      if (
        vm.preferenceAlternative === null ||
        vm.chosenIndex === null ||
        vm.preferenceAlternative === vm.chosenIndex
      )
        return null;
      return {
        kind: "preference",
        preferred_index: vm.chosenIndex,
        other_index: vm.preferenceAlternative,
      };
    }
    case "semantic": {
      const signals: Record<string, string> = {};
      for (const [ch, sig] of Object.entries(gesture.signals)) {
        if (sig && sig !== "neutral") signals[ch] = sig;
      }
      if (Object.keys(signals).length === 0) return null;
      return { kind: "semantic", signals: signals as never };
    }
    case "skip":
      return { kind: "none" };
  }
}

/** Mark the pending proposal as answered; returns null if nothing pending
 * (enforces one feedback per proposal id at the source). */
export function consumePendingProposal(vm: ViewModel): {
  vm: ViewModel;
  proposalId: number;
} | null {
  if (!vm.awaitingFeedback || vm.pendingProposalId === null) return null;
  if (vm.respondedProposals.has(vm.pendingProposalId)) return null;
  const responded = new Set(vm.respondedProposals);
  responded.add(vm.pendingProposalId);
  return {
    vm: { ...vm, awaitingFeedback: false, respondedProposals: responded },
    proposalId: vm.pendingProposalId,
  };
}
