/**
 * Teach-service session client: REST lifecycle plus the WebSocket message
 * loop, with reconnect backoff and at-most-one feedback per proposal.
 *
 * The socket factory is injected so tests and the headless driver can use
 * the `ws` package while the browser uses the native WebSocket.
 */

import {
  ClientMessage,
  Feedback,
  HelloMessage,
  ServerMessage,
  exportRequest,
  feedbackMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: ((err: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  baseUrl: string; // e.g. http://127.0.0.1:8000
  socketFactory: SocketFactory;
  onMessage: (msg: ServerMessage) => void;
  onStatus?: (status: "connecting" | "open" | "closed" | "retrying") => void;
  onBadMessage?: (detail: string) => void;
  maxRetries?: number;
  backoffMs?: number;
}

export class TeachClient {
  private opts: ClientOptions;
  private socket: SocketLike | null = null;
  private session: string | null = null;
  private seq = 0;
  private answered = new Set<number>();
  private retries = 0;
  private closedByUser = false;

  constructor(opts: ClientOptions) {
    this.opts = { maxRetries: 5, backoffMs: 250, ...opts };
  }

  get sessionId(): string | null {
    return this.session;
  }

  async startSession(config: unknown, mode?: string, autoAdvanceMs?: number): Promise<HelloMessage> {
    const res = await fetch(`${this.opts.baseUrl}/session`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ config, mode, auto_advance_ms: autoAdvanceMs }),
    });
    if (!res.ok) {
      throw new Error(`start session failed: ${res.status} ${await res.text()}`);
    }
    const hello = (await res.json()) as HelloMessage;
    this.session = hello.session;
    return hello;
  }

  connect(): void {
    if (!this.session) throw new Error("no session started");
    this.closedByUser = false;
    this.openSocket();
  }

  private wsUrl(): string {
    const base = this.opts.baseUrl.replace(/^http/, "ws");
    return `${base}/session/${this.session}/ws`;
  }

  private openSocket(): void {
    this.opts.onStatus?.(this.retries > 0 ? "retrying" : "connecting");
    const sock = this.opts.socketFactory(this.wsUrl());
    this.socket = sock;
    sock.onopen = () => {
      this.retries = 0;
      this.opts.onStatus?.("open");
    };
    sock.onmessage = (ev) => {
      let msg: ServerMessage;
      try {
        msg = JSON.parse(String(ev.data)) as ServerMessage;
        if (typeof msg !== "object" || msg === null || typeof msg.kind !== "string") {
          throw new Error("not a protocol message");
        }
      } catch (e) {
        this.opts.onBadMessage?.(`unreadable server message: ${e}`);
        return;
      }
      this.opts.onMessage(msg);
    };
    sock.onclose = () => {
      this.socket = null;
      if (this.closedByUser) {
        this.opts.onStatus?.("closed");
        return;
      }
      if (this.retries >= (this.opts.maxRetries ?? 5)) {
        this.opts.onStatus?.("closed");
        return;
      }
      const delay = (this.opts.backoffMs ?? 250) * 2 ** this.retries;
      this.retries += 1;
      this.opts.onStatus?.("retrying");
      setTimeout(() => {
        if (!this.closedByUser) this.openSocket();
      }, delay);
    };
    sock.onerror = () => {
      // the close handler drives the retry
    };
  }

  /** Send feedback for a proposal; refuses duplicates for the same id. */
  sendFeedback(proposalId: number, feedback: Feedback): boolean {
    if (!this.socket || !this.session) return false;
    if (this.answered.has(proposalId)) return false;
    this.answered.add(proposalId);
    this.send(feedbackMessage(this.session, this.nextSeq(), proposalId, feedback));
    return true;
  }

  requestExport(): boolean {
    if (!this.socket || !this.session) return false;
    this.send(exportRequest(this.session, this.nextSeq()));
    return true;
  }

  async downloadExport(): Promise<string> {
    const res = await fetch(`${this.opts.baseUrl}/session/${this.session}/export`);
    if (!res.ok) throw new Error(`export failed: ${res.status}`);
    return res.text();
  }

  async closeSession(): Promise<void> {
    this.close();
    if (this.session) {
      await fetch(`${this.opts.baseUrl}/session/${this.session}`, { method: "DELETE" });
      this.session = null;
    }
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
    this.socket = null;
  }

  private nextSeq(): number {
    this.seq += 1;
    return this.seq;
  }

  private send(msg: ClientMessage): void {
    this.socket?.send(JSON.stringify(msg));
  }
}
