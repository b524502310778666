/**
 * Tag surface forms, mirroring the engine's grammar exactly. Conformance
 * against the shared fixture corpus keeps the two in lockstep.
 */
import type { Verbosity } from "./protocol.js";

const GESTURE_MINIMAL: Record<string, string> = {
  nods: "nods",
  shrugs: "shrugs",
  pointing: "points",
  "head-shake": "shakes head",
  "hand-raise": "raises hand",
};

const GESTURE_BASE: Record<string, string> = {
  nods: "nod",
  shrugs: "shrug",
  pointing: "pointing",
  "head-shake": "head-shake",
  "hand-raise": "hand-raise",
};

/** Bracketed display tag for one annotation; "" when nothing renders. */
export function formatTag(
  cat: "tone" | "gesture",
  label: string,
  verbosity: Verbosity,
): string {
  if (verbosity === "off") return "";
  if (cat === "tone") {
    if (label === "neutral") return "";
    return verbosity === "minimal" ? `[${label}]` : `[${label} tone]`;
  }
  const surface =
    verbosity === "minimal" ? GESTURE_MINIMAL[label] : GESTURE_BASE[label];
  if (surface === undefined) return "";
  return verbosity === "minimal" ? `[${surface}]` : `[${surface} gesture]`;
}
