// WebSocket client for one live session: validates every outbound message
// against the protocol schema before sending and parses/validates every
// inbound frame before it may touch the view model.

import { parseInbound, validateOutbound, type Inbound, type Outbound } from "./protocol.js";

export interface WebSocketLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface SessionEvents {
  onMessage: (msg: Inbound) => void;
  onStatus?: (status: "connecting" | "open" | "closed") => void;
  onProtocolError?: (error: unknown, raw: string) => void;
}

const OPEN = 1;

export class SessionClient {
  private ws: WebSocketLike;
  private events: SessionEvents;

  constructor(url: string, events: SessionEvents,
              factory?: WebSocketFactory) {
    this.events = events;
    const make: WebSocketFactory =
      factory ?? ((u) => new (globalThis as never as { WebSocket: new (u: string) => WebSocketLike }).WebSocket(u));
    events.onStatus?.("connecting");
    this.ws = make(url);
    this.ws.onopen = () => events.onStatus?.("open");
    this.ws.onclose = () => events.onStatus?.("closed");
    this.ws.onerror = () => events.onStatus?.("closed");
    this.ws.onmessage = (ev) => {
      const raw = typeof ev.data === "string" ? ev.data : String(ev.data);
      for (const line of raw.split("\n")) {
        if (!line.trim()) continue;
        let parsed: Inbound;
        try {
          parsed = parseInbound(line);
        } catch (error) {
          this.events.onProtocolError?.(error, line);
          continue;
        }
        this.events.onMessage(parsed);
      }
    };
  }

  get open(): boolean {
    return this.ws.readyState === OPEN;
  }

  send(msg: Outbound): boolean {
    if (!this.open) return false;
    this.ws.send(JSON.stringify(validateOutbound(msg)));
    return true;
  }

  close(): void {
    this.ws.close();
  }
}

/** Session URL from page query parameters (?host=...&port=...). */
export function sessionUrl(search: string, defaults = { host: "127.0.0.1", port: 8473 }): string {
  const params = new URLSearchParams(search);
  const host = params.get("host") ?? defaults.host;
  const port = params.get("port") ?? String(defaults.port);
  return `ws://${host}:${port}/ws`;
}
