/**
 * Pure view model: latest session state in, declarative panel description
 * out. The canvas/DOM layer only draws what this file computes, so the
 * same snapshot always produces the same panels, and every zone vertex
 * shown on screen comes straight from the wire payload.
 */

import { UiSessionState } from "./model.js";
import { DRIVING_MODES, Destination, SUMMARY_ATTRIBUTES, StateSnapshot } from "./protocol.js";

export const COLOR_CLEAR_ZONE = "green";
export const COLOR_FOCUS_ZONE = "orange";
export const COLOR_VEHICLE_SENSOR = "blue";
export const COLOR_VEHICLE_MINIMAP = "red";
export const COLOR_DESTINATION = "blue";
export const COLOR_LIDAR_POINT = "black";

export interface SummaryRow {
  attribute: string;
  value: string;
  alarm: boolean; // drives the red banner styling
}

export interface Polygon {
  points: [number, number][];
  color: string;
}

export interface SensorPanel {
  vehicle: { color: string; length_m: number; width_m: number };
  focusZone: Polygon; // drawn first (underneath)
  clearZone: Polygon;
  lidarPoints: { points: [number, number][]; color: string };
  highlight: "none" | "focus" | "clear";
}

export interface MiniMapMarker {
  x: number;
  y: number;
  color: string;
  label: string;
  active: boolean;
}

export interface ButtonState {
  id: string;
  label: string;
  enabled: boolean;
  reason: string; // why disabled, shown as tooltip
}

export interface PanelModel {
  summary: SummaryRow[];
  banner: string; // "", "stale data", "connection lost", or the ES alarm
  sensor: SensorPanel | null;
  miniMap: MiniMapMarker[];
  cameras: { id: string; validity: string; thumb: { width: number; height: number; gray8_b64: string } }[];
  buttons: ButtonState[];
  destinations: (Destination & { activatable: boolean })[];
  rights: string;
  notice: string;
}

const VEHICLE_LENGTH_M = 2.4;
const VEHICLE_WIDTH_M = 1.4;

function summaryRows(snapshot: StateSnapshot | null): SummaryRow[] {
  return SUMMARY_ATTRIBUTES.map((attribute) => {
    const value = snapshot ? String(snapshot[attribute]) : "—";
    const alarm =
      (attribute === "Driving Mode" && value === "Emergency Stop") ||
      (attribute === "Sensor Validity" && value === "Invalid") ||
      (attribute === "Cage State" && value === "Clear Zone Occupied");
    return { attribute, value, alarm };
  });
}

function sensorPanel(snapshot: StateSnapshot): SensorPanel {
  const cage = snapshot["Cage State"];
  return {
    vehicle: { color: COLOR_VEHICLE_SENSOR, length_m: VEHICLE_LENGTH_M, width_m: VEHICLE_WIDTH_M },
    focusZone: { points: snapshot.zone.focus_outline, color: COLOR_FOCUS_ZONE },
    clearZone: { points: snapshot.zone.clear_outline, color: COLOR_CLEAR_ZONE },
    lidarPoints: { points: snapshot.lidar ?? [], color: COLOR_LIDAR_POINT },
    highlight: cage === "Clear Zone Occupied" ? "clear" : cage === "Focus Zone Occupied" ? "focus" : "none",
  };
}

function miniMap(snapshot: StateSnapshot | null, destinations: Destination[]): MiniMapMarker[] {
  const markers: MiniMapMarker[] = destinations.map((d) => ({
    x: d.x,
    y: d.y,
    color: COLOR_DESTINATION,
    label: d.name,
    active: d.status === "Active",
  }));
  if (snapshot) {
    markers.push({
      x: snapshot.pose.x,
      y: snapshot.pose.y,
      color: COLOR_VEHICLE_MINIMAP,
      label: "vehicle",
      active: true,
    });
  }
  return markers;
}

function buttons(state: UiSessionState): ButtonState[] {
  const held = state.rights === "held";
  const connected = state.connected;
  const gate = (wantRights: boolean): { enabled: boolean; reason: string } => {
    if (!connected) return { enabled: false, reason: "not connected" };
    if (wantRights && !held) return { enabled: false, reason: "control rights not held" };
    return { enabled: true, reason: "" };
  };
  const pendingIds = new Set(state.pending.map((p) => p.label));

  const all: ButtonState[] = [];
  all.push({
    id: "acquire",
    label: "Acquire control",
    ...(connected && !held
      ? { enabled: state.rights !== "requested", reason: state.rights === "requested" ? "request pending" : "" }
      : { enabled: false, reason: held ? "already held" : "not connected" }),
  });
  all.push({ id: "release", label: "Release control", ...gate(true) });
  for (const cage of ["On", "Off"]) {
    all.push({ id: `cage-${cage.toLowerCase()}`, label: `Cage ${cage}`, ...gate(true) });
  }
  for (const mode of DRIVING_MODES) {
    all.push({ id: `mode-${mode}`, label: mode, ...gate(true) });
  }
  // a pressed control stays disabled until its ack arrives
  for (const b of all) {
    if (b.enabled && pendingIds.has(b.label.toLowerCase())) {
      b.enabled = false;
      b.reason = "awaiting acknowledgement";
    }
  }
  return all;
}

export function renderPanels(state: UiSessionState): PanelModel {
  const snapshot = state.snapshot;
  let banner = "";
  if (!state.connected) banner = "connection lost";
  else if (state.staleData) banner = "stale data";
  else if (snapshot && snapshot["Driving Mode"] === "Emergency Stop") banner = "EMERGENCY STOP";

  return {
    summary: summaryRows(snapshot),
    banner,
    sensor: snapshot ? sensorPanel(snapshot) : null,
    miniMap: miniMap(snapshot, state.destinations),
    cameras: snapshot
      ? Object.entries(snapshot.cameras ?? {}).map(([id, thumb]) => ({
          id,
          validity: snapshot.camera_validity?.[id] ?? "Valid",
          thumb,
        }))
      : [],
    buttons: buttons(state),
    destinations: state.destinations.map((d) => ({
      ...d,
      activatable: state.connected && state.rights === "held" && d.status !== "Reached",
    })),
    rights: state.rights,
    notice: state.notice,
  };
}
