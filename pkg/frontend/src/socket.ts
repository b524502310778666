/**
 * Connection management: hello/resume handshake, exponential backoff
 * (0.5 s doubling to an 8 s cap), pong replies, optimistic preference
 * patches. The WebSocket constructor is injectable so tests can run the
 * same code against fakes or node's `ws`.
 */
import { CaptionView } from "./ring.js";
import { parseServerMessage } from "./protocol.js";
import type { ProfileDict } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface CaptionClientOptions {
  factory?: SocketFactory;
  initialPrefs?: Partial<ProfileDict>;
  backoffBaseMs?: number;
  backoffCapMs?: number;
  lostAfterAttempts?: number;
}

const defaultFactory: SocketFactory = (url) =>
  new (globalThis as any).WebSocket(url) as SocketLike;

export class CaptionClient {
  readonly view: CaptionView;
  private url: string;
  private factory: SocketFactory;
  private socket: SocketLike | null = null;
  private initialPrefs?: Partial<ProfileDict>;
  private backoffBaseMs: number;
  private backoffCapMs: number;
  private lostAfterAttempts: number;
  private failedAttempts = 0;
  private closedByUser = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  /** Counts sockets opened; lets tests assert "no reconnect happened". */
  connectionsOpened = 0;

  constructor(url: string, view: CaptionView, options: CaptionClientOptions = {}) {
    this.url = url;
    this.view = view;
    this.factory = options.factory ?? defaultFactory;
    this.initialPrefs = options.initialPrefs;
    this.backoffBaseMs = options.backoffBaseMs ?? 500;
    this.backoffCapMs = options.backoffCapMs ?? 8000;
    this.lostAfterAttempts = options.lostAfterAttempts ?? 3;
  }

  connect(): void {
    this.closedByUser = false;
    this.openSocket();
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
  }

  sendPrefsPatch(patch: Partial<ProfileDict>): void {
    // Optimistic: the overlay re-renders immediately; the server's
    // prefs_ack reconciles (server value wins on mismatch).
    this.view.applyLocalPatch(patch);
    this.sendJson({ type: "prefs", patch });
  }

  private sendJson(obj: unknown): void {
    try {
      this.socket?.send(JSON.stringify(obj));
    } catch {
      // A send on a closing socket is indistinguishable from a drop; the
      // reconnect path handles recovery.
    }
  }

  private openSocket(): void {
    this.view.setConnection(this.view.resumeToken ? "resuming" : "connecting");
    let socket: SocketLike;
    try {
      socket = this.factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.socket = socket;
    this.connectionsOpened += 1;

    socket.onopen = () => {
      const hello: Record<string, unknown> = { type: "hello", v: 1 };
      if (this.view.resumeToken) hello.resume = this.view.resumeToken;
      if (this.initialPrefs && !this.view.resumeToken) {
        hello.prefs = this.initialPrefs;
      }
      this.sendJson(hello);
    };

    socket.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg === null) {
        this.view.noteSchemaViolation();
        return;
      }
      if (msg.type === "ping") {
        this.sendJson({ type: "pong" });
        return;
      }
      this.view.handleServerMessage(msg);
      if (msg.type === "snapshot") {
        this.failedAttempts = 0;
        this.view.setConnection("live");
      }
    };

    socket.onerror = () => {
      // onclose follows; reconnect is handled there.
    };

    socket.onclose = () => {
      this.socket = null;
      if (this.closedByUser) return;
      this.failedAttempts += 1;
      this.view.setConnection(
        this.failedAttempts >= this.lostAfterAttempts ? "lost" : "resuming",
      );
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.closedByUser || this.reconnectTimer !== null) return;
    const exponent = Math.max(0, this.failedAttempts - 1);
    const delay = Math.min(this.backoffCapMs, this.backoffBaseMs * 2 ** exponent);
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      if (!this.closedByUser) this.openSocket();
    }, delay);
  }
}
