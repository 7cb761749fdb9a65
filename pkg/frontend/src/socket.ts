import { ClientMessage, parseServerMessage, ServerMessage } from "./protocol";
import { ConnectionStatus } from "./viewmodel";

// Minimal surface shared by the browser WebSocket and the "ws" package.
// Handler parameter types are left loose so both implementations assign.
export interface SocketLike {
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
  readyState: number;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

const BACKOFF_INITIAL_MS = 250;
const BACKOFF_CAP_MS = 4000;
const SOCKET_OPEN = 1;

/**
 * Reconnecting client for the /session endpoint. Messages sent while the
 * socket is down are dropped (controls are ephemeral); the named session
 * keeps running server-side, so reconnecting just resumes the stream.
 */
export class CockpitSocket {
  onMessage: ((msg: ServerMessage) => void) | null = null;
  onStatus: ((status: ConnectionStatus) => void) | null = null;

  private socket: SocketLike | null = null;
  private backoffMs = BACKOFF_INITIAL_MS;
  private closedByUser = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private factory: SocketFactory,
    private schedule: (fn: () => void, ms: number) => ReturnType<typeof setTimeout> = setTimeout,
  ) {}

  connect(): void {
    this.closedByUser = false;
    this.open();
  }

  private open(): void {
    this.setStatus("connecting");
    const sock = this.factory(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.backoffMs = BACKOFF_INITIAL_MS;
      this.setStatus("open");
    };
    sock.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg && this.onMessage) this.onMessage(msg);
    };
    sock.onerror = () => {
      // onclose follows; nothing to do here.
    };
    sock.onclose = () => {
      this.setStatus("closed");
      if (!this.closedByUser) this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    const delay = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_CAP_MS);
    this.reconnectTimer = this.schedule(() => this.open(), delay);
  }

  /** Delay that would be used for the next reconnect (exposed for tests). */
  get nextBackoffMs(): number {
    return this.backoffMs;
  }

  send(msg: ClientMessage): void {
    if (this.socket && this.socket.readyState === SOCKET_OPEN) {
      this.socket.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    if (this.socket) this.socket.close();
  }

  private setStatus(status: ConnectionStatus): void {
    if (this.onStatus) this.onStatus(status);
  }
}
