/**
 * Wire types for the caption delivery protocol.
 *
 * Every frame is one JSON object. The server renders text per session
 * profile, but also ships plain text plus structured annotations so this
 * client can re-render locally and apply preference changes instantly.
 */

export type Verbosity = "off" | "minimal" | "verbose";
export type Contrast = "light" | "dark" | "high_contrast";
export type Placement = "bottom" | "top" | "near_speaker";

export interface ProfileDict {
  font_scale: number;
  contrast: Contrast;
  placement: Placement;
  verbosity: Verbosity;
  show_tone: boolean;
  show_gestures: boolean;
  max_lines: number;
}

export interface AnnotationMsg {
  cat: "tone" | "gesture";
  label: string;
  anchor: number;
  conf: number;
}

export interface SegmentMsg {
  type: "segment";
  id: string;
  state: "open" | "final";
  rev: number;
  t0: number;
  t1: number;
  plain: string;
  rendered: string;
  annotations: AnnotationMsg[];
}

export interface HelloAckMsg {
  type: "hello_ack";
  session: string;
  prefs: ProfileDict;
  resumed: boolean;
  warning?: string;
}

export interface SnapshotMsg {
  type: "snapshot";
  segments: SegmentMsg[];
  open: SegmentMsg | null;
  cursor: string;
}

export interface PrefsAckMsg {
  type: "prefs_ack";
  prefs: ProfileDict;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  detail: string;
}

export interface PingMsg {
  type: "ping";
}

export type ServerMessage =
  | SegmentMsg
  | HelloAckMsg
  | SnapshotMsg
  | PrefsAckMsg
  | ErrorMsg
  | PingMsg;

const SERVER_TYPES = new Set([
  "segment",
  "hello_ack",
  "snapshot",
  "prefs_ack",
  "error",
  "ping",
]);

function isSegmentShaped(msg: any): boolean {
  return (
    typeof msg.id === "string" &&
    (msg.state === "open" || msg.state === "final") &&
    typeof msg.rev === "number" &&
    typeof msg.t0 === "number" &&
    typeof msg.t1 === "number" &&
    typeof msg.plain === "string" &&
    Array.isArray(msg.annotations)
  );
}

/**
 * Parse one frame. Returns null (caller shows a warning badge and drops
 * the frame) when the payload does not validate against the schema.
 */
export function parseServerMessage(raw: string): ServerMessage | null {
  let msg: any;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null || !SERVER_TYPES.has(msg.type)) {
    return null;
  }
  if (msg.type === "segment" && !isSegmentShaped(msg)) {
    return null;
  }
  if (msg.type === "snapshot") {
    if (!Array.isArray(msg.segments) || typeof msg.cursor !== "string") {
      return null;
    }
    if (msg.open !== null && !isSegmentShaped(msg.open)) {
      return null;
    }
  }
  if (msg.type === "hello_ack" && typeof msg.session !== "string") {
    return null;
  }
  return msg as ServerMessage;
}
