/**
 * Settings panel: one control per preference field. Changes apply locally
 * at once and go to the server as a patch; if the server answers with a
 * different effective profile, the panel snaps back to the server's value.
 */
import { CaptionClient } from "./socket.js";
import {
  FONT_SCALE_MAX,
  FONT_SCALE_MIN,
  MAX_LINES_MAX,
  MAX_LINES_MIN,
  clampFontScale,
  clampMaxLines,
} from "./profile.js";
import type { ProfileDict } from "./protocol.js";

export class SettingsPanel {
  private inputs: Partial<Record<keyof ProfileDict, HTMLInputElement | HTMLSelectElement>> = {};

  constructor(
    private root: HTMLElement,
    private client: CaptionClient,
  ) {
    this.build();
    client.view.onChange(() => this.syncFromProfile());
    this.syncFromProfile();
  }

  private build(): void {
    const panel = document.createElement("div");
    panel.className = "capfuse-panel";
    panel.style.cssText =
      "position:fixed;top:8px;left:12px;background:rgba(20,20,20,0.85);" +
      "color:#eee;font:13px sans-serif;padding:10px;border-radius:6px;" +
      "display:grid;grid-template-columns:auto auto;gap:6px;z-index:10;";

    const addRow = (label: string, control: HTMLElement) => {
      const caption = document.createElement("label");
      caption.textContent = label;
      panel.appendChild(caption);
      panel.appendChild(control);
    };

    const select = (field: keyof ProfileDict, options: string[]) => {
      const el = document.createElement("select");
      for (const value of options) {
        const opt = document.createElement("option");
        opt.value = value;
        opt.textContent = value.replace("_", " ");
        el.appendChild(opt);
      }
      el.addEventListener("change", () => this.patch(field, el.value));
      this.inputs[field] = el;
      return el;
    };

    const checkbox = (field: keyof ProfileDict) => {
      const el = document.createElement("input");
      el.type = "checkbox";
      el.addEventListener("change", () => this.patch(field, el.checked));
      this.inputs[field] = el;
      return el;
    };

    const fontScale = document.createElement("input");
    fontScale.type = "range";
    fontScale.min = String(FONT_SCALE_MIN);
    fontScale.max = String(FONT_SCALE_MAX);
    fontScale.step = "0.1";
    fontScale.addEventListener("change", () =>
      this.patch("font_scale", clampFontScale(Number(fontScale.value))),
    );
    this.inputs.font_scale = fontScale;

    const maxLines = document.createElement("input");
    maxLines.type = "number";
    maxLines.min = String(MAX_LINES_MIN);
    maxLines.max = String(MAX_LINES_MAX);
    maxLines.addEventListener("change", () =>
      this.patch("max_lines", clampMaxLines(Number(maxLines.value))),
    );
    this.inputs.max_lines = maxLines;

    addRow("caption size", fontScale);
    addRow("contrast", select("contrast", ["light", "dark", "high_contrast"]));
    addRow("placement", select("placement", ["bottom", "top", "near_speaker"]));
    addRow("annotations", select("verbosity", ["off", "minimal", "verbose"]));
    addRow("tone tags", checkbox("show_tone"));
    addRow("gesture tags", checkbox("show_gestures"));
    addRow("lines", maxLines);
    this.root.appendChild(panel);
  }

  private patch(field: keyof ProfileDict, value: unknown): void {
    this.client.sendPrefsPatch({ [field]: value } as Partial<ProfileDict>);
  }

  private syncFromProfile(): void {
    const profile = this.client.view.profile;
    for (const [field, input] of Object.entries(this.inputs)) {
      const value = profile[field as keyof ProfileDict];
      if (input instanceof HTMLInputElement && input.type === "checkbox") {
        input.checked = Boolean(value);
      } else if (input) {
        (input as HTMLInputElement).value = String(value);
      }
    }
  }
}
