/**
 * Session state and its reducer: every incoming envelope and every local
 * action maps to a new state. Keeping this pure makes the console's
 * behavior (rights gating, ack correlation, stale-data handling) testable
 * without a browser or a socket.
 */

import {
  Destination,
  KIND_COMMAND_ACK,
  KIND_CONTROL_DENY,
  KIND_CONTROL_GRANT,
  KIND_DESTINATION_LIST,
  KIND_STATE_UPDATE,
  StateSnapshot,
  WireMessage,
  isValidSnapshot,
} from "./protocol.js";

export type RightsStatus = "none" | "requested" | "held";

export interface PendingCommand {
  sequence: number;
  label: string;
  sentAt: number; // ms epoch, for round-trip display
}

export interface UiSessionState {
  vehicleId: string;
  rights: RightsStatus;
  snapshot: StateSnapshot | null;
  staleData: boolean;
  destinations: Destination[];
  pending: PendingCommand[];
  connected: boolean;
  /** last ack/denial text, rendered verbatim */
  notice: string;
}

export function initialState(vehicleId: string): UiSessionState {
  return {
    vehicleId,
    rights: "none",
    snapshot: null,
    staleData: false,
    destinations: [],
    pending: [],
    connected: false,
    notice: "",
  };
}

function withoutPending(state: UiSessionState, sequence: number): PendingCommand[] {
  return state.pending.filter((p) => p.sequence !== sequence);
}

function pendingLabel(state: UiSessionState, sequence: number): string {
  return state.pending.find((p) => p.sequence === sequence)?.label ?? "command";
}

/** Fold one incoming envelope into the session state. */
export function applyMessage(state: UiSessionState, msg: WireMessage, now: number): UiSessionState {
  if (msg.vehicle_id !== state.vehicleId) return state;

  switch (msg.kind) {
    case KIND_STATE_UPDATE: {
      if (!isValidSnapshot(msg.payload)) {
        return { ...state, staleData: true };
      }
      return { ...state, snapshot: msg.payload as unknown as StateSnapshot, staleData: false };
    }
    case KIND_CONTROL_GRANT: {
      const seq = msg.payload.correlates;
      const pending = typeof seq === "number" ? withoutPending(state, seq) : state.pending;
      return { ...state, rights: "held", pending, notice: "control rights granted" };
    }
    case KIND_CONTROL_DENY: {
      const holder = msg.payload.holder;
      const seq = msg.payload.correlates;
      return {
        ...state,
        rights: "none",
        pending: typeof seq === "number" ? withoutPending(state, seq) : state.pending,
        notice: `control rights denied${holder ? ` (held by ${holder})` : ""}`,
      };
    }
    case KIND_COMMAND_ACK: {
      const seq = msg.payload.correlates;
      if (typeof seq !== "number") return state;
      const label = pendingLabel(state, seq);
      const status = String(msg.payload.status ?? "");
      const reason = msg.payload.reason ? `: ${msg.payload.reason}` : "";
      const rtt = state.pending.find((p) => p.sequence === seq)
        ? ` (${Math.max(0, Math.round(now - state.pending.find((p) => p.sequence === seq)!.sentAt))} ms)`
        : "";
      const next = { ...state, pending: withoutPending(state, seq) };
      if (status === "accepted") {
        next.notice = `${label} accepted${rtt}`;
        if (msg.payload.reason === "already held") next.rights = "held";
      } else {
        next.notice = `${label} rejected${reason}`;
        if (label === "acquire control" && state.rights === "requested") next.rights = "none";
      }
      return next;
    }
    case KIND_DESTINATION_LIST: {
      const list = msg.payload.destinations;
      if (!Array.isArray(list)) return state;
      return { ...state, destinations: list as Destination[] };
    }
    default:
      return state; // unknown kinds are ignored, never faulted
  }
}

export function onConnect(state: UiSessionState): UiSessionState {
  return { ...state, connected: true, notice: "" };
}

/** Transport loss locks the controls and drops any claimed rights. */
export function onDisconnect(state: UiSessionState): UiSessionState {
  return { ...state, connected: false, rights: "none", pending: [], notice: "connection lost" };
}

export function trackCommand(
  state: UiSessionState,
  sequence: number,
  label: string,
  now: number,
): UiSessionState {
  const next: UiSessionState = {
    ...state,
    pending: [...state.pending, { sequence, label, sentAt: now }],
  };
  if (label === "acquire control") next.rights = state.rights === "held" ? "held" : "requested";
  if (label === "release control") next.rights = "none";
  return next;
}
