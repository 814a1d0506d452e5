/**
 * Wire protocol types for the teach service (schema v1), plus a small
 * JSON-Schema validator covering the subset the shared fixtures use, so
 * emitted payloads are checked against the exact same files the server
 * tests use.
 */

export const PROTOCOL_VERSION = 1;

export type SemanticSignal = "prefer" | "avoid" | "neutral";
export type SemanticChannel = "doors" | "stairs" | "chairs" | "path";

export type Feedback =
  | { kind: "none" }
  | { kind: "action"; teacher_index: number }
  | { kind: "preference"; preferred_index: number; other_index: number }
  | { kind: "semantic"; signals: Partial<Record<SemanticChannel, SemanticSignal>> }
  | { kind: "coactive"; improved_index: number };

export interface Envelope {
  v: number;
  kind: string;
  session: string;
  seq: number;
}

export interface MapSummary {
  resolution: number;
  grid: string[];
  doors: number[][];
  stairs: number[][];
  chairs: number[][];
  path: number[][];
  start: number[];
}

export interface HelloMessage extends Envelope {
  kind: "hello";
  mode: "stepper" | "timed";
  auto_advance_ms: number | null;
  k: number;
  map: MapSummary;
  weights: number[];
  step_count: number;
}

export interface Candidate {
  index: number;
  curvature: number;
  blocked: boolean;
  score: number;
  points: number[][];
  features: number[];
}

export interface ProposeMessage extends Envelope {
  kind: "propose";
  proposal_id: number;
  t: number;
  pose: number[];
  path_window: number[][];
  ref_point: number[];
  candidates: Candidate[];
  chosen_index: number;
  preference_alternative: number;
}

export interface AckMessage extends Envelope {
  kind: "ack";
  proposal_id: number;
  accepted: boolean;
  updated: boolean;
  auto: boolean;
  feedback_kind: string;
  weights_digest: string;
  hinge_loss: number | null;
  update_count: number;
  correction_count: number;
  step_count: number;
  reset_count: number;
}

export interface ErrorMessage extends Envelope {
  kind: "error";
  code: string;
  detail: string;
  proposal_id?: number | null;
}

export interface ExportMessage extends Envelope {
  kind: "export";
  csv: string;
}

export type ServerMessage =
  | HelloMessage
  | ProposeMessage
  | AckMessage
  | ErrorMessage
  | ExportMessage;

export interface FeedbackMessage extends Envelope {
  kind: "feedback";
  proposal_id: number;
  feedback: Feedback;
}

export interface ExportRequest extends Envelope {
  kind: "export";
}

export type ClientMessage = FeedbackMessage | ExportRequest;

export function feedbackMessage(
  session: string,
  seq: number,
  proposalId: number,
  feedback: Feedback,
): FeedbackMessage {
  return {
    v: PROTOCOL_VERSION,
    kind: "feedback",
    session,
    seq,
    proposal_id: proposalId,
    feedback,
  };
}

export function exportRequest(session: string, seq: number): ExportRequest {
  return { v: PROTOCOL_VERSION, kind: "export", session, seq };
}

// ---------- minimal JSON-Schema validation ----------

type Schema = Record<string, unknown>;

interface Ctx {
  root: Schema;
  store: Record<string, Schema>;
}

/** Validate against a root schema document, resolving internal #/ refs
 * against that document and absolute $ref ids through the store. Covers the
 * draft-07 subset the v1 fixtures use; returns error strings, empty when
 * valid. */
export function validateAgainst(
  value: unknown,
  root: Schema,
  store: Record<string, Schema> = {},
): string[] {
  return validate(value, root, { root, store }, "$");
}

function validate(value: unknown, schema: Schema, ctx: Ctx, path: string): string[] {
  const errors: string[] = [];
  const ref = schema["$ref"] as string | undefined;
  if (ref !== undefined) {
    const resolved = resolveRef(ref, ctx);
    if (!resolved) return [`${path}: unresolvable $ref ${ref}`];
    const nextCtx = ref.startsWith("#/") ? ctx : { root: resolved, store: ctx.store };
    return validate(value, resolved, nextCtx, path);
  }
  if ("const" in schema) {
    if (value !== schema["const"]) errors.push(`${path}: expected const ${schema["const"]}`);
    return errors;
  }
  if ("enum" in schema) {
    if (!(schema["enum"] as unknown[]).includes(value)) errors.push(`${path}: not in enum`);
    return errors;
  }
  const oneOf = schema["oneOf"] as Schema[] | undefined;
  if (oneOf) {
    const passing = oneOf.filter((s) => validate(value, s, ctx, path).length === 0);
    if (passing.length !== 1) {
      errors.push(`${path}: matched ${passing.length} of oneOf, expected exactly 1`);
    }
    return errors;
  }
  const type = schema["type"] as string | string[] | undefined;
  if (type !== undefined && !checkType(value, type)) {
    errors.push(`${path}: expected type ${JSON.stringify(type)}`);
    return errors;
  }
  if (typeof value === "number") {
    const min = schema["minimum"] as number | undefined;
    if (min !== undefined && value < min) errors.push(`${path}: ${value} < minimum ${min}`);
  }
  if (Array.isArray(value)) {
    const items = schema["items"] as Schema | undefined;
    const minItems = schema["minItems"] as number | undefined;
    const maxItems = schema["maxItems"] as number | undefined;
    if (minItems !== undefined && value.length < minItems) errors.push(`${path}: too few items`);
    if (maxItems !== undefined && value.length > maxItems) errors.push(`${path}: too many items`);
    if (items) {
      value.forEach((item, i) => errors.push(...validate(item, items, ctx, `${path}[${i}]`)));
    }
  }
  if (value !== null && typeof value === "object" && !Array.isArray(value)) {
    const obj = value as Record<string, unknown>;
    const properties = (schema["properties"] ?? {}) as Record<string, Schema>;
    const required = (schema["required"] ?? []) as string[];
    const minProps = schema["minProperties"] as number | undefined;
    for (const key of required) {
      if (!(key in obj)) errors.push(`${path}: missing required ${key}`);
    }
    if (minProps !== undefined && Object.keys(obj).length < minProps) {
      errors.push(`${path}: too few properties`);
    }
    for (const [key, sub] of Object.entries(properties)) {
      if (key in obj) errors.push(...validate(obj[key], sub, ctx, `${path}.${key}`));
    }
    if (schema["additionalProperties"] === false) {
      for (const key of Object.keys(obj)) {
        if (!(key in properties)) errors.push(`${path}: unexpected property ${key}`);
      }
    }
  }
  return errors;
}

function checkType(value: unknown, type: string | string[]): boolean {
  const types = Array.isArray(type) ? type : [type];
  return types.some((t) => {
    switch (t) {
      case "object":
        return value !== null && typeof value === "object" && !Array.isArray(value);
      case "array":
        return Array.isArray(value);
      case "string":
        return typeof value === "string";
      case "number":
        return typeof value === "number" && Number.isFinite(value);
      case "integer":
        return typeof value === "number" && Number.isInteger(value);
      case "boolean":
        return typeof value === "boolean";
      case "null":
        return value === null;
      default:
        return false;
    }
  });
}

function resolveRef(ref: string, ctx: Ctx): Schema | null {
  if (ref.startsWith("#/")) {
    let node: unknown = ctx.root;
    for (const part of ref.slice(2).split("/")) {
      if (node === null || typeof node !== "object") return null;
      node = (node as Record<string, unknown>)[part];
    }
    return (node as Schema) ?? null;
  }
  return ctx.store[ref] ?? null;
}
