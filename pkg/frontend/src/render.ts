/**
 * Local caption rendering from plain text plus structured annotations.
 *
 * This must produce byte-identical output to the engine's renderer for the
 * same segment and profile; the shared fixture corpus pins that contract.
 * Rendering locally (instead of trusting the server's `rendered` string)
 * is what makes preference toggles apply without a server round trip.
 */
import { formatTag } from "./labels.js";
import type { AnnotationMsg, ProfileDict } from "./protocol.js";

export function renderSegmentText(
  plain: string,
  annotations: AnnotationMsg[],
  profile: ProfileDict,
): string {
  const words = plain.split(" ");
  if (profile.verbosity === "off") {
    return words.join(" ");
  }

  const toneTags: string[] = [];
  const gestureTags = new Map<number, string[]>();
  for (const ann of annotations) {
    if (ann.cat === "tone") {
      if (!profile.show_tone) continue;
      const tag = formatTag("tone", ann.label, profile.verbosity);
      if (tag) toneTags.push(tag);
    } else {
      if (!profile.show_gestures) continue;
      const tag = formatTag("gesture", ann.label, profile.verbosity);
      if (tag) {
        const bucket = gestureTags.get(ann.anchor);
        if (bucket) bucket.push(tag);
        else gestureTags.set(ann.anchor, [tag]);
      }
    }
  }

  const parts: string[] = [...toneTags];
  words.forEach((word, index) => {
    parts.push(word);
    const tags = gestureTags.get(index);
    if (tags) parts.push(...tags);
  });
  return parts.join(" ");
}
