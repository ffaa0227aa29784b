// Browser entry point: canvas, keyboard, HUD, and the websocket client.

import { OrbitCamera } from "./camera.js";
import { TeleopClient } from "./client.js";
import { DEFAULT_VM_MAX_PA } from "./colorscale.js";
import { isActionKey } from "./keymap.js";
import { Renderer } from "./renderer.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("scene");
const ctx = canvas.getContext("2d")!;
const status = el<HTMLDivElement>("status");
const readouts = el<HTMLDivElement>("readouts");
const controls = el<HTMLDivElement>("controls");

const params = new URLSearchParams(window.location.search);
const url = params.get("ws") ?? `ws://${window.location.hostname || "127.0.0.1"}:8765`;
const camera = new OrbitCamera();
const renderer = new Renderer(ctx, camera, DEFAULT_VM_MAX_PA);

const client = new TeleopClient(url, {
  onFrame(view) {
    if (view.latest) renderer.draw(view.latest);
    status.textContent = view.statusLine();
    const f = view.latest;
    if (f) {
      readouts.textContent =
        `reward ${f.reward.toFixed(3)}  width ${(f.width * 100).toFixed(1)} cm\n` +
        `stress mean ${f.stress.mean.toFixed(0)}  top10med ` +
        `${f.stress.top10_median.toFixed(0)}  max ${f.stress.max.toFixed(0)} Pa`;
    }
    if (view.role !== "driver") controls.style.display = "none";
  },
  onMessage(msg) {
    if (msg.type === "error") status.textContent = `error: ${msg.message}`;
  },
});

window.addEventListener("keydown", (ev) => {
  if (isActionKey(ev.key)) {
    client.driver.keyDown(ev.key);
    ev.preventDefault();
  }
});
window.addEventListener("keyup", (ev) => {
  if (isActionKey(ev.key)) client.driver.keyUp(ev.key);
});
window.addEventListener("blur", () => client.driver.clearKeys());

el<HTMLButtonElement>("btn-reset").onclick = () => client.reset();
el<HTMLButtonElement>("btn-record").onclick = () => client.recordStart();
el<HTMLButtonElement>("btn-stop").onclick = () => client.recordStop();
el<HTMLButtonElement>("btn-save").onclick = () => client.save();

// mouse orbit
let dragging = false;
let last: [number, number] = [0, 0];
canvas.addEventListener("mousedown", (ev) => {
  dragging = true;
  last = [ev.clientX, ev.clientY];
});
window.addEventListener("mouseup", () => (dragging = false));
window.addEventListener("mousemove", (ev) => {
  if (!dragging) return;
  camera.orbit(-(ev.clientX - last[0]) * 0.01, (ev.clientY - last[1]) * 0.01);
  last = [ev.clientX, ev.clientY];
  if (client.view.latest) renderer.draw(client.view.latest);
});
canvas.addEventListener("wheel", (ev) => {
  camera.zoom(ev.deltaY > 0 ? 1.1 : 0.9);
  if (client.view.latest) renderer.draw(client.view.latest);
  ev.preventDefault();
});
