import {
  parseServerMessage,
  type AckMessage,
  type HelloMessage,
  type SnapshotMessage,
  type StatusMessage,
} from "./messages.js";

// The subset of the browser WebSocket the client touches, so tests can hand
// in a fake without a real socket.
export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionState = "connecting" | "live" | "stale" | "closed";

export interface StreamHandlers {
  onCatchUp(hello: HelloMessage): void;
  onSnapshot(snapshot: SnapshotMessage): void;
  onAck(ack: AckMessage): void;
  onStatus(status: StatusMessage): void;
  onConnection(state: ConnectionState): void;
}

const BACKOFF_BASE_MS = 500;
const BACKOFF_MAX_MS = 15_000;

/** Push-channel client for WS /stream.
 *
 *  Every (re)connect starts with a hello frame carrying the full history, so
 *  the consumer resets its series store in onCatchUp and a connection gap can
 *  never leave holes in the data.  Until that hello arrives the connection is
 *  not "live".  Loss of the socket flips to "stale" and retries with
 *  exponential backoff; close() stops the cycle for good.
 */
export class StreamClient {
  state: ConnectionState = "closed";

  private socket: SocketLike | null = null;
  private attempts = 0;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private readonly url: string,
    private readonly handlers: StreamHandlers,
    private readonly factory: SocketFactory = (u) =>
      new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    if (this.stopped || this.socket) return;
    this.setState("connecting");
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      // not live yet: live means the hello catch-up has been applied
    };
    socket.onmessage = (ev) => this.dispatch(ev.data);
    socket.onclose = () => {
      this.socket = null;
      if (this.stopped) return;
      this.setState("stale");
      this.scheduleRetry();
    };
  }

  close(): void {
    this.stopped = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.retryTimer = null;
    this.socket?.close();
    this.socket = null;
    this.setState("closed");
  }

  /** Milliseconds until the next attempt: 500ms doubling, capped at 15s. */
  backoffMs(): number {
    return Math.min(BACKOFF_BASE_MS * 2 ** this.attempts, BACKOFF_MAX_MS);
  }

  private scheduleRetry(): void {
    if (this.retryTimer !== null) return;
    const delay = this.backoffMs();
    this.attempts += 1;
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.connect();
    }, delay);
  }

  private dispatch(raw: string): void {
    const message = parseServerMessage(raw);
    if (message === null) return;
    switch (message.type) {
      case "hello":
        this.attempts = 0;
        this.setState("live");
        this.handlers.onCatchUp(message);
        break;
      case "snapshot":
        this.handlers.onSnapshot(message);
        break;
      case "ack":
        this.handlers.onAck(message);
        break;
      case "status":
        this.handlers.onStatus(message);
        break;
    }
  }

  private setState(state: ConnectionState): void {
    if (state === this.state) return;
    this.state = state;
    this.handlers.onConnection(state);
  }
}
