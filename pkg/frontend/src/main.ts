// DOM wiring.  All state lives in SessionController; this file only maps
// browser events to controller calls and snapshots to the page.

import { ApiClient } from "./api";
import { hitTest, viewTransform } from "./geometry";
import { opForKey } from "./keys";
import { drawScene, type Draw2D } from "./render";
import { SessionController, type Snapshot } from "./session";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const sceneSelect = el<HTMLSelectElement>("scene-select");
const participant = el<HTMLInputElement>("participant");
const startBtn = el<HTMLButtonElement>("start-btn");
const bootError = el<HTMLDivElement>("boot-error");
const workbench = el<HTMLElement>("workbench");
const canvas = el<HTMLCanvasElement>("table");
const meta = el<HTMLDivElement>("session-meta");
const totalsBox = el<HTMLDivElement>("totals");
const noticeBox = el<HTMLDivElement>("notice");
const help = el<HTMLParagraphElement>("help");
const tlxForm = el<HTMLFormElement>("tlx-form");
const finishBtn = el<HTMLButtonElement>("finish-btn");
const metricsPanel = el<HTMLDivElement>("metrics-panel");

const TLX_FIELDS = ["mental", "performance", "frustration"] as const;
const ctx = canvas.getContext("2d") as unknown as Draw2D;
const api = new ApiClient();
const controller = new SessionController(api, render);

function render(snap: Snapshot): void {
  const payload = snap.payload;
  workbench.hidden = payload === null;
  if (payload === null) return;

  drawScene(ctx, canvas.width, canvas.height, payload.scene, payload.selected_object);

  const selected =
    payload.selected_object === null
      ? "nothing selected"
      : `selected: ${describeObject(payload, payload.selected_object)}`;
  meta.textContent = `scene ${payload.scene_id} (${payload.scene.environment_tag}) · ${selected}`;

  // totals come straight from the last server response / metrics record
  const totals = controller.displayedTotals();
  totalsBox.textContent =
    totals === null
      ? ""
      : `${totals.distance_cm} cm moved · ${totals.rotation_deg}° rotated · ${totals.op_count} edits`;

  noticeBox.hidden = snap.notice === null;
  if (snap.notice !== null) {
    noticeBox.textContent = snap.notice.text;
    noticeBox.className = `notice ${snap.notice.kind}`;
  }

  const finished = snap.phase === "finished";
  help.hidden = finished;
  tlxForm.hidden = finished;
  finishBtn.disabled = snap.pendingEvents > 0;
  metricsPanel.hidden = !finished || snap.metrics === null;
  if (!metricsPanel.hidden && snap.metrics !== null) {
    const m = snap.metrics;
    const tlx = m.tlx === null
      ? ""
      : ` · ratings: mental ${m.tlx.mental_demand}, performance ${m.tlx.performance}, frustration ${m.tlx.frustration}`;
    metricsPanel.textContent =
      `session recorded for ${m.participant}: ${m.totals.distance_cm} cm, ` +
      `${m.totals.rotation_deg}°, ${m.totals.op_count} edits${tlx}`;
  }
}

function describeObject(payload: { scene: { objects: { id: number; category: string }[] } }, id: number): string {
  const obj = payload.scene.objects.find((o) => o.id === id);
  return obj === undefined ? `object ${id}` : `${obj.category} (#${id})`;
}

function editableTarget(target: EventTarget | null): boolean {
  return (
    target instanceof HTMLElement &&
    ["INPUT", "SELECT", "TEXTAREA", "BUTTON"].includes(target.tagName)
  );
}

canvas.addEventListener("mousedown", (ev) => {
  const payload = controller.snapshot().payload;
  if (payload === null || payload.finished) return;
  const rect = canvas.getBoundingClientRect();
  const px = ((ev.clientX - rect.left) * canvas.width) / rect.width;
  const py = ((ev.clientY - rect.top) * canvas.height) / rect.height;
  const view = viewTransform(payload.scene.workspace, canvas.width, canvas.height);
  const id = hitTest(payload.scene, view.toTable([px, py]));
  if (id !== null) void controller.select(id);
});

window.addEventListener("keydown", (ev) => {
  if (editableTarget(ev.target)) return;
  if (opForKey(ev.key) === null) return;
  ev.preventDefault(); // arrows must edit the scene, not scroll the page
  void controller.handleKey(ev.key);
});

startBtn.addEventListener("click", async () => {
  await controller.start(sceneSelect.value, participant.value.trim() || "anonymous");
  startBtn.blur(); // let arrow keys reach the scene immediately
});

for (const name of TLX_FIELDS) {
  const slider = el<HTMLInputElement>(`tlx-${name}`);
  const label = el<HTMLSpanElement>(`tlx-${name}-val`);
  slider.addEventListener("input", () => {
    label.textContent = slider.value;
  });
}

tlxForm.addEventListener("submit", (ev) => {
  ev.preventDefault();
  void controller.finish({
    mental_demand: Number(el<HTMLInputElement>("tlx-mental").value),
    performance: Number(el<HTMLInputElement>("tlx-performance").value),
    frustration: Number(el<HTMLInputElement>("tlx-frustration").value),
  });
});

async function boot(): Promise<void> {
  try {
    const listing = await api.listScenes();
    for (const entry of listing.scenes) {
      const option = document.createElement("option");
      option.value = entry.id;
      option.textContent = `${entry.id} (${entry.environment}, ${entry.scene.objects.length} objects)`;
      sceneSelect.appendChild(option);
    }
    bootError.hidden = true;
  } catch (err) {
    bootError.hidden = false;
    bootError.textContent = `could not load scenes: ${String(err)}`;
  }
}

void boot();
