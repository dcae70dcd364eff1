/**
 * Browser entry point: binds the console client to the DOM laid out in
 * index.html and redraws every panel whenever the session state changes.
 */

import { ConsoleClient, connectWebSocket } from "./client.js";
import { drawCameraThumb, drawMiniMap, drawSensorPanel } from "./draw.js";
import { renderPanels } from "./render.js";

const params = new URLSearchParams(location.search);
const vehicleId = params.get("vehicle") ?? "van-1";
const sender = `console-${Math.random().toString(36).slice(2, 8)}`;

const el = (id: string) => document.getElementById(id)!;
const canvas = (id: string) => el(id) as HTMLCanvasElement;

function redraw(): void {
  const panels = renderPanels(client.state);

  const banner = el("banner");
  banner.textContent = panels.banner;
  banner.className = panels.banner ? `banner ${panels.banner === "EMERGENCY STOP" ? "alarm" : "warn"}` : "banner hidden";

  el("summary").innerHTML = panels.summary
    .map((r) => `<div class="row${r.alarm ? " alarm" : ""}"><span>${r.attribute}</span><b>${r.value}</b></div>`)
    .join("");
  el("rights").textContent = `control rights: ${panels.rights}`;
  el("notice").textContent = panels.notice;

  if (panels.sensor) drawSensorPanel(canvas("sensor").getContext("2d")!, panels.sensor);
  drawMiniMap(canvas("minimap").getContext("2d")!, panels.miniMap);

  const camBox = el("cameras");
  camBox.innerHTML = "";
  for (const cam of panels.cameras) {
    const wrap = document.createElement("div");
    wrap.className = `cam ${cam.validity === "Invalid" ? "invalid" : ""}`;
    const c = document.createElement("canvas");
    drawCameraThumb(c.getContext("2d")!, cam.thumb);
    const label = document.createElement("span");
    label.textContent = `${cam.id} — ${cam.validity}`;
    wrap.append(c, label);
    camBox.append(wrap);
  }

  const controls = el("controls");
  controls.innerHTML = "";
  for (const b of panels.buttons) {
    const btn = document.createElement("button");
    btn.textContent = b.label;
    btn.disabled = !b.enabled;
    btn.title = b.reason;
    btn.onclick = () => {
      if (b.id === "acquire") client.acquireControl();
      else if (b.id === "release") client.releaseControl();
      else if (b.id.startsWith("cage-")) client.request({ cage: b.label.replace("Cage ", "") });
      else client.request({ mode: b.label });
    };
    controls.append(btn);
  }

  const dests = el("destinations");
  dests.innerHTML = "";
  for (const d of panels.destinations) {
    const btn = document.createElement("button");
    btn.textContent = `${d.name} [${d.status}]`;
    btn.disabled = !d.activatable;
    btn.onclick = () => client.activateDestination(d.id);
    dests.append(btn);
  }
}

const client = new ConsoleClient(vehicleId, sender, redraw);
connectWebSocket(client, `ws://${location.host}/ws`);

// remote-manual teleop: arrow keys at a fixed cadence while held
const keys = new Set<string>();
addEventListener("keydown", (e) => keys.add(e.key));
addEventListener("keyup", (e) => keys.delete(e.key));
setInterval(() => {
  if (client.state.snapshot?.["Driving Mode"] !== "Remote Manual Driving") return;
  const speed = keys.has("ArrowUp") ? 1.0 : keys.has("ArrowDown") ? -0.5 : 0;
  const steering = keys.has("ArrowLeft") ? 0.3 : keys.has("ArrowRight") ? -0.3 : 0;
  client.teleop(steering, speed);
}, 50);

redraw();
