// DOM control panel: mode switch, motion-scale and zone-size sliders,
// record/replay, seed placement + register, overlays, status and toasts.

import type { Mode } from "./protocol.js";

export interface MenuHandlers {
  onMode(mode: Mode): void;
  onMotionScale(k: number): void;
  onZoneScale(scale: number): void;
  onShowZones(on: boolean): void;
  onShowTracer(on: boolean): void;
  onRecord(on: boolean, path?: string): void;
  onReplay(path: string): void;
  onRegister(scenePath: string): void;
  onPlaceSeed(on: boolean): void;
  onReposition(on: boolean): void;
  onViewScale(scale: number): void;
}

export interface MenuView {
  setStatus(text: string, ok: boolean): void;
  setRegistration(text: string): void;
  setResidual(text: string): void;
  toast(text: string): void;
  showZones(): boolean;
  showTracer(): boolean;
  zoneScale(): number;
}

export function createMenu(root: HTMLElement, handlers: MenuHandlers): MenuView {
  root.innerHTML = `
    <div class="row status"><span id="hg-status">connecting…</span></div>
    <div class="row">
      <label>mode</label>
      <select id="hg-mode">
        <option value="idle">idle</option>
        <option value="link_guidance">link guidance</option>
        <option value="ee_drag">end-effector drag</option>
      </select>
    </div>
    <div class="row"><label>motion scale K <span id="hg-k-val">1.0</span></label>
      <input id="hg-k" type="range" min="0.1" max="3" step="0.1" value="1"></div>
    <div class="row"><label>zone size <span id="hg-zone-val">1.5</span></label>
      <input id="hg-zone" type="range" min="1" max="4" step="0.1" value="1.5"></div>
    <div class="row">
      <label><input id="hg-show-zones" type="checkbox"> show active zones</label>
      <label><input id="hg-show-tracer" type="checkbox" checked> tracers</label>
    </div>
    <div class="row">
      <button id="hg-record">start recording</button>
      <input id="hg-record-path" placeholder="save path (optional)">
    </div>
    <div class="row">
      <input id="hg-replay-path" placeholder="trajectory path">
      <button id="hg-replay">replay</button>
    </div>
    <div class="row">
      <label><input id="hg-seed" type="checkbox"> place seed</label>
      <input id="hg-scene-path" placeholder="scene cloud path (.ply)">
      <button id="hg-register">register</button>
    </div>
    <div class="row">
      <label><input id="hg-reposition" type="checkbox"> reposition hologram</label>
    </div>
    <div class="row"><label>hologram size <span id="hg-view-scale-val">1.0</span></label>
      <input id="hg-view-scale" type="range" min="0.25" max="3" step="0.05" value="1"></div>
    <div class="row" id="hg-registration"></div>
    <div class="row" id="hg-residual"></div>
    <div id="hg-toasts"></div>
  `;

  const el = <T extends HTMLElement>(id: string) =>
    root.querySelector<T>(`#${id}`)!;

  const mode = el<HTMLSelectElement>("hg-mode");
  mode.addEventListener("change", () => handlers.onMode(mode.value as Mode));

  const k = el<HTMLInputElement>("hg-k");
  k.addEventListener("input", () => {
    el("hg-k-val").textContent = k.value;
    handlers.onMotionScale(parseFloat(k.value));
  });

  const zone = el<HTMLInputElement>("hg-zone");
  zone.addEventListener("input", () => {
    el("hg-zone-val").textContent = zone.value;
    handlers.onZoneScale(parseFloat(zone.value));
  });

  const showZones = el<HTMLInputElement>("hg-show-zones");
  showZones.addEventListener("change", () => handlers.onShowZones(showZones.checked));
  const showTracer = el<HTMLInputElement>("hg-show-tracer");
  showTracer.addEventListener("change", () => handlers.onShowTracer(showTracer.checked));

  let recording = false;
  const record = el<HTMLButtonElement>("hg-record");
  record.addEventListener("click", () => {
    recording = !recording;
    record.textContent = recording ? "stop recording" : "start recording";
    const path = el<HTMLInputElement>("hg-record-path").value.trim();
    handlers.onRecord(recording, path || undefined);
  });

  el<HTMLButtonElement>("hg-replay").addEventListener("click", () => {
    const path = el<HTMLInputElement>("hg-replay-path").value.trim();
    if (path) handlers.onReplay(path);
  });

  const seed = el<HTMLInputElement>("hg-seed");
  seed.addEventListener("change", () => handlers.onPlaceSeed(seed.checked));

  el<HTMLButtonElement>("hg-register").addEventListener("click", () => {
    const path = el<HTMLInputElement>("hg-scene-path").value.trim();
    if (path) handlers.onRegister(path);
  });

  const reposition = el<HTMLInputElement>("hg-reposition");
  reposition.addEventListener("change", () => handlers.onReposition(reposition.checked));

  const viewScale = el<HTMLInputElement>("hg-view-scale");
  viewScale.addEventListener("input", () => {
    el("hg-view-scale-val").textContent = viewScale.value;
    handlers.onViewScale(parseFloat(viewScale.value));
  });

  return {
    setStatus(text, ok) {
      const node = el("hg-status");
      node.textContent = text;
      node.className = ok ? "ok" : "bad";
    },
    setRegistration(text) {
      el("hg-registration").textContent = text;
    },
    setResidual(text) {
      el("hg-residual").textContent = text;
    },
    toast(text) {
      const box = el("hg-toasts");
      const item = document.createElement("div");
      item.className = "toast";
      item.textContent = text;
      box.appendChild(item);
      setTimeout(() => item.remove(), 6000);
    },
    showZones: () => showZones.checked,
    showTracer: () => showTracer.checked,
    zoneScale: () => parseFloat(zone.value),
  };
}
