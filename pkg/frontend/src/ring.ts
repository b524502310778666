/**
 * Client view state: the ring of recent finalized captions, the live open
 * line, the local preference mirror, and the connection badge.
 *
 * All mutation goes through handleServerMessage/applyLocalPatch so the
 * invariants hold everywhere: finals are unique per segment id and ordered
 * by start time; stale revisions never regress the open line; the open
 * line and a final line never share a segment id.
 */
import { DEFAULT_PROFILE } from "./profile.js";
import { renderSegmentText } from "./render.js";
import type { ProfileDict, SegmentMsg, ServerMessage } from "./protocol.js";

export type Connection = "connecting" | "live" | "resuming" | "lost";

/** Finals kept in memory; the display only ever needs max_lines of them. */
const FINALS_RETAINED = 200;

export interface DisplayedLine {
  id: string;
  text: string;
  open: boolean;
}

export class CaptionView {
  profile: ProfileDict = { ...DEFAULT_PROFILE };
  connection: Connection = "connecting";
  sessionId: string | null = null;
  resumeToken: string | null = null;
  lastError: string | null = null;
  schemaWarnings = 0;

  private finals: SegmentMsg[] = [];
  private finalIds = new Set<string>();
  private openLine: SegmentMsg | null = null;
  private listeners: Array<() => void> = [];
  private finalLog: string[] = [];
  // Never cleared on resume: a re-delivered final must not re-log.
  private loggedIds = new Set<string>();

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** Ordered ids of every final ever shown; re-deliveries do not repeat. */
  get displayedFinalLog(): readonly string[] {
    return this.finalLog;
  }

  get open(): SegmentMsg | null {
    return this.openLine;
  }

  get finalCount(): number {
    return this.finals.length;
  }

  handleServerMessage(msg: ServerMessage): void {
    switch (msg.type) {
      case "segment":
        this.handleSegment(msg);
        break;
      case "snapshot":
        // A snapshot replaces the ring wholesale: it is the authoritative
        // join/resume state.
        this.finals = [];
        this.finalIds.clear();
        for (const seg of msg.segments) {
          if (seg.state === "final") this.insertFinal(seg);
        }
        this.openLine = msg.open && msg.open.state === "open" ? msg.open : null;
        this.resumeToken = msg.cursor;
        this.connection = "live";
        this.notify();
        break;
      case "hello_ack":
        this.sessionId = msg.session;
        this.profile = { ...msg.prefs };
        if (msg.warning === "invalid_resume_token") {
          // Fresh session: whatever we held belongs to a dead cursor.
          this.finals = [];
          this.finalIds.clear();
          this.openLine = null;
          this.resumeToken = null;
          this.finalLog = [];
          this.loggedIds.clear();
        }
        this.notify();
        break;
      case "prefs_ack":
        this.profile = { ...msg.prefs };
        this.notify();
        break;
      case "error":
        this.lastError = msg.code;
        this.notify();
        break;
      case "ping":
        break;
    }
  }

  noteSchemaViolation(): void {
    this.schemaWarnings += 1;
    this.notify();
  }

  private handleSegment(msg: SegmentMsg): void {
    if (msg.state === "final") {
      if (this.openLine && this.openLine.id === msg.id) {
        this.openLine = null;
      }
      this.insertFinal(msg);
      this.notify();
      return;
    }
    // Open/revision updates: stale revisions for the current line are
    // ignored; a different id supersedes the open line entirely.
    if (this.finalIds.has(msg.id)) return;
    if (this.openLine && this.openLine.id === msg.id && msg.rev <= this.openLine.rev) {
      return;
    }
    this.openLine = msg;
    this.notify();
  }

  private insertFinal(seg: SegmentMsg): void {
    if (this.finalIds.has(seg.id)) {
      const index = this.finals.findIndex((s) => s.id === seg.id);
      if (index >= 0) this.finals[index] = seg;
      return;
    }
    this.finalIds.add(seg.id);
    if (!this.loggedIds.has(seg.id)) {
      this.loggedIds.add(seg.id);
      this.finalLog.push(seg.id);
    }
    let at = this.finals.length;
    while (at > 0 && this.finals[at - 1].t0 > seg.t0) at -= 1;
    this.finals.splice(at, 0, seg);
    if (this.finals.length > FINALS_RETAINED) {
      const dropped = this.finals.shift()!;
      this.finalIds.delete(dropped.id);
    }
  }

  applyLocalPatch(patch: Partial<ProfileDict>): void {
    this.profile = { ...this.profile, ...patch };
    this.notify();
  }

  setConnection(connection: Connection): void {
    if (this.connection !== connection) {
      this.connection = connection;
      this.notify();
    }
  }

  /**
   * What the overlay shows: the last max_lines finals in start-time order,
   * rendered locally with the current profile, plus the open line last.
   */
  displayedLines(): DisplayedLine[] {
    const budget = this.profile.max_lines;
    const tail = this.finals.slice(-budget);
    const lines: DisplayedLine[] = tail.map((seg) => ({
      id: seg.id,
      text: renderSegmentText(seg.plain, seg.annotations, this.profile),
      open: false,
    }));
    if (this.openLine) {
      lines.push({
        id: this.openLine.id,
        text: renderSegmentText(
          this.openLine.plain,
          this.openLine.annotations,
          this.profile,
        ),
        open: true,
      });
    }
    return lines;
  }
}
