/**
 * Boot the overlay from URL query parameters:
 *   index.html?server=host:port&profile=name&nsx=50&nsy=30
 *
 * `profile` names a locally stored preference set (the viewer's own);
 * nsx/nsy position the near_speaker anchor as viewport percentages.
 */
import { CaptionClient } from "./socket.js";
import { CaptionView } from "./ring.js";
import { OverlayRenderer } from "./overlay.js";
import { SettingsPanel } from "./panel.js";
import { loadStoredProfile, storeProfile } from "./profile.js";

function boot(): void {
  const params = new URLSearchParams(location.search);
  const server = params.get("server") ?? "127.0.0.1:7002";
  const profileName = params.get("profile") ?? "default";
  const nearSpeaker = {
    xPercent: Number(params.get("nsx") ?? 50),
    yPercent: Number(params.get("nsy") ?? 30),
  };

  const view = new CaptionView();
  const client = new CaptionClient(`ws://${server}`, view, {
    initialPrefs: loadStoredProfile(profileName) ?? undefined,
  });
  view.onChange(() => storeProfile(profileName, view.profile));

  const root = document.getElementById("capfuse-root")!;
  new OverlayRenderer(root, view, nearSpeaker);
  new SettingsPanel(root, client);
  client.connect();
}

boot();
