// Websocket wrapper with automatic reconnect. The view is rebuilt from the
// server's first snapshot after every reconnect, so dropping the socket
// loses nothing.

export type SocketHandlers = {
  onText(text: string): void;
  onStatus(open: boolean): void;
};

export class SessionSocket {
  private ws: WebSocket | null = null;
  private closed = false;
  private retryMs = 250;

  constructor(private url: string, private handlers: SocketHandlers) {}

  connect(): void {
    if (this.closed) return;
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.retryMs = 250;
      this.handlers.onStatus(true);
    };
    ws.onmessage = (ev) => this.handlers.onText(String(ev.data));
    ws.onclose = () => {
      this.handlers.onStatus(false);
      if (!this.closed) {
        setTimeout(() => this.connect(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 5000);
      }
    };
    ws.onerror = () => ws.close();
  }

  send(payload: string | null): boolean {
    if (payload === null || this.ws === null || this.ws.readyState !== WebSocket.OPEN) {
      return false;
    }
    this.ws.send(payload);
    return true;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}

export function defaultSessionUrl(loc: { protocol: string; host: string }): string {
  const scheme = loc.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${loc.host}/ws`;
}
