/**
 * DOM overlay: a caption band positioned per the viewer's placement
 * preference. The band never exceeds a third of the viewport height at
 * font scale 1.0; the open line is visually distinguished from finals.
 */
import { renderDirectives } from "./profile.js";
import { CaptionView } from "./ring.js";

export interface NearSpeakerAnchor {
  xPercent: number;
  yPercent: number;
}

// Without head tracking, near_speaker is a configurable screen coordinate.
const DEFAULT_NEAR_SPEAKER: NearSpeakerAnchor = { xPercent: 50, yPercent: 30 };

export class OverlayRenderer {
  private band: HTMLElement;
  private badge: HTMLElement;

  constructor(
    private root: HTMLElement,
    private view: CaptionView,
    private nearSpeaker: NearSpeakerAnchor = DEFAULT_NEAR_SPEAKER,
  ) {
    this.band = document.createElement("div");
    this.band.className = "capfuse-band";
    this.badge = document.createElement("div");
    this.badge.className = "capfuse-badge";
    this.root.appendChild(this.band);
    this.root.appendChild(this.badge);
    view.onChange(() => this.render());
    this.render();
  }

  render(): void {
    const directives = renderDirectives(this.view.profile);
    const style = this.band.style;
    style.position = "fixed";
    style.left = "50%";
    style.maxWidth = "90vw";
    style.maxHeight = "33vh";
    style.overflow = "hidden";
    style.padding = "0.4em 0.8em";
    style.borderRadius = "6px";
    style.fontSize = `${directives.fontScale * 1.6}rem`;
    style.color = directives.foreground;
    style.background = directives.background;
    style.top = "";
    style.bottom = "";
    style.transform = "translateX(-50%)";
    if (directives.anchor === "bottom") {
      style.bottom = "6vh";
    } else if (directives.anchor === "top") {
      style.top = "4vh";
    } else {
      style.left = `${this.nearSpeaker.xPercent}%`;
      style.top = `${this.nearSpeaker.yPercent}%`;
      style.transform = "translate(-50%, 0)";
    }

    this.band.replaceChildren();
    for (const line of this.view.displayedLines()) {
      const el = document.createElement("div");
      el.className = line.open ? "capfuse-line capfuse-open" : "capfuse-line";
      el.style.opacity = line.open ? "0.7" : "1.0";
      el.style.fontStyle = line.open ? "italic" : "normal";
      el.textContent = line.text;
      el.dataset.segmentId = line.id;
      this.band.appendChild(el);
    }

    const connection = this.view.connection;
    this.badge.textContent =
      connection === "live"
        ? ""
        : connection === "lost"
          ? "connection lost"
          : connection;
    this.badge.style.cssText =
      "position:fixed;top:8px;right:12px;font:14px sans-serif;color:#fff;" +
      (connection === "live" ? "display:none;" : "display:block;") +
      (connection === "lost" ? "background:#a00;" : "background:#555;") +
      "padding:2px 8px;border-radius:4px;";
  }
}
