/**
 * The viewer's preference profile: defaults, client-side clamping (mirrors
 * server validation) and the mapping to concrete display directives.
 */
import type { Contrast, Placement, ProfileDict } from "./protocol.js";

export const FONT_SCALE_MIN = 0.5;
export const FONT_SCALE_MAX = 3.0;
export const MAX_LINES_MIN = 1;
export const MAX_LINES_MAX = 5;

export const DEFAULT_PROFILE: ProfileDict = {
  font_scale: 1.0,
  contrast: "dark",
  placement: "bottom",
  verbosity: "minimal",
  show_tone: true,
  show_gestures: true,
  max_lines: 2,
};

export interface RenderDirectives {
  fontScale: number;
  foreground: string;
  background: string;
  anchor: Placement;
  lineBudget: number;
}

const THEME_COLORS: Record<Contrast, [string, string]> = {
  light: ["#1A1A1A", "#F5F5F5"],
  dark: ["#F5F5F5", "#1A1A1A"],
  high_contrast: ["#FFFFFF", "#000000"],
};

export function renderDirectives(profile: ProfileDict): RenderDirectives {
  const [foreground, background] = THEME_COLORS[profile.contrast];
  return {
    fontScale: profile.font_scale,
    foreground,
    background,
    anchor: profile.placement,
    lineBudget: profile.max_lines,
  };
}

export function clampFontScale(value: number): number {
  if (!Number.isFinite(value)) return DEFAULT_PROFILE.font_scale;
  return Math.min(FONT_SCALE_MAX, Math.max(FONT_SCALE_MIN, value));
}

export function clampMaxLines(value: number): number {
  if (!Number.isFinite(value)) return DEFAULT_PROFILE.max_lines;
  return Math.min(MAX_LINES_MAX, Math.max(MAX_LINES_MIN, Math.round(value)));
}

const STORAGE_PREFIX = "capfuse:profile:";

export function loadStoredProfile(name: string): Partial<ProfileDict> | null {
  try {
    const raw = globalThis.localStorage?.getItem(STORAGE_PREFIX + name);
    return raw ? (JSON.parse(raw) as Partial<ProfileDict>) : null;
  } catch {
    return null;
  }
}

export function storeProfile(name: string, profile: ProfileDict): void {
  try {
    globalThis.localStorage?.setItem(STORAGE_PREFIX + name, JSON.stringify(profile));
  } catch {
    // Storage may be unavailable (private mode); presentation still works.
  }
}
