// Socket wrapper with automatic reconnect. The view model is told about
// connection changes; parsing failures are dropped silently (the server
// rejects unknown inbound types on its side).

import { parseMessage, type ServerMessage } from "./protocol.js";

const RECONNECT_DELAY_MS = 1000;

export class SessionSocket {
  private ws: WebSocket | null = null;
  private closed = false;

  constructor(
    private url: string,
    private onMessage: (msg: ServerMessage) => void,
    private onStatus: (status: "connecting" | "open" | "closed") => void,
  ) {}

  start(): void {
    this.closed = false;
    this.connect();
  }

  private connect(): void {
    this.onStatus("connecting");
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => this.onStatus("open");
    ws.onmessage = (ev: MessageEvent) => {
      const msg = parseMessage(String(ev.data));
      if (msg) this.onMessage(msg);
    };
    ws.onclose = () => {
      this.onStatus("closed");
      if (!this.closed) {
        setTimeout(() => this.connect(), RECONNECT_DELAY_MS);
      }
    };
    ws.onerror = () => {
      ws.close();
    };
  }

  send(payload: unknown): boolean {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(payload));
      return true;
    }
    return false;
  }

  stop(): void {
    this.closed = true;
    this.ws?.close();
  }
}
