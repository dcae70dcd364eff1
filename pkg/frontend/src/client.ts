/**
 * Console-side command surface: owns the WebSocket, the outgoing sequence
 * counter, and the gating rule that no command other than acquire-control
 * leaves the console unless rights are held.
 */

import { UiSessionState, applyMessage, initialState, onConnect, onDisconnect, trackCommand } from "./model.js";
import { KIND_COMMAND_REQUEST, KIND_TELEOP, makeMessage, parseMessage } from "./protocol.js";

export interface Transport {
  send(text: string): void;
}

export type StateListener = (state: UiSessionState) => void;

export class ConsoleClient {
  state: UiSessionState;
  private sequence = 0;
  private transport: Transport | null = null;

  constructor(
    readonly vehicleId: string,
    readonly sender: string,
    private readonly listener: StateListener,
    private readonly clock: () => number = () => Date.now(),
  ) {
    this.state = initialState(vehicleId);
  }

  private update(next: UiSessionState): void {
    this.state = next;
    this.listener(next);
  }

  attach(transport: Transport): void {
    this.transport = transport;
    this.update(onConnect(this.state));
    this.send("subscribe", { action: "subscribe" });
  }

  detach(): void {
    this.transport = null;
    this.update(onDisconnect(this.state));
  }

  onText(text: string): void {
    const msg = parseMessage(text);
    if (!msg) {
      this.update({ ...this.state, staleData: true });
      return;
    }
    this.update(applyMessage(this.state, msg, this.clock()));
  }

  private send(label: string, payload: Record<string, unknown>, kind = KIND_COMMAND_REQUEST): boolean {
    if (!this.transport) return false;
    const seq = this.sequence++;
    this.transport.send(JSON.stringify(makeMessage(kind, this.vehicleId, this.sender, seq, payload)));
    this.update(trackCommand(this.state, seq, label, this.clock()));
    return true;
  }

  acquireControl(): boolean {
    return this.send("acquire control", { action: "acquire_control" });
  }

  releaseControl(): boolean {
    if (this.state.rights !== "held") return false;
    return this.send("release control", { action: "release_control" });
  }

  /** Driving-mode / cage requests; refused locally without rights. */
  request(fields: { mode?: string; cage?: string }): boolean {
    if (this.state.rights !== "held") return false;
    return this.send(`request ${fields.mode ?? fields.cage ?? ""}`.trim(), {
      action: "request",
      ...fields,
    });
  }

  activateDestination(id: string): boolean {
    if (this.state.rights !== "held") return false;
    return this.send(`activate ${id}`, { action: "activate_destination", id });
  }

  teleop(steering: number, speed: number): boolean {
    if (this.state.rights !== "held") return false;
    return this.send("teleop", { steering, speed }, KIND_TELEOP);
  }
}

/** Browser wiring: connect the client to a live WebSocket with reconnect. */
export function connectWebSocket(client: ConsoleClient, url: string): void {
  const ws = new WebSocket(url);
  ws.onopen = () => client.attach({ send: (text) => ws.send(text) });
  ws.onmessage = (ev) => client.onText(String(ev.data));
  ws.onclose = () => {
    client.detach();
    setTimeout(() => connectWebSocket(client, url), 1000);
  };
}
