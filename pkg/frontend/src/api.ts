import type { AckMessage, Command, SeriesRow, SimEvent, StateSummary } from "./messages.js";

export interface RunnerState {
  run_state: string;
  step: number;
  total_steps: number;
  error: string | null;
  summary: StateSummary;
}

export interface EventPage {
  total: number;
  events: SimEvent[];
}

export interface SeriesPage {
  columns: string[];
  rows: SeriesRow[];
}

type FetchFn = typeof fetch;

/** Thin wrapper over the request/response endpoints.  Commands go through
 *  POST /command with ?wait= so the returned promise resolves to the real
 *  acknowledgment, not an optimistic echo. */
export class Api {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchFn = fetch.bind(globalThis),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path);
    if (!res.ok) throw new Error(`GET ${path}: ${res.status}`);
    return (await res.json()) as T;
  }

  state(): Promise<RunnerState> {
    return this.get("/state");
  }

  config(): Promise<Record<string, unknown>> {
    return this.get("/config");
  }

  events(since = 0, kind?: string, limit = 1000): Promise<EventPage> {
    const params = new URLSearchParams({ since: String(since), limit: String(limit) });
    if (kind) params.set("kind", kind);
    return this.get(`/events?${params}`);
  }

  series(): Promise<SeriesPage> {
    return this.get("/series?format=json");
  }

  /** The engine's own CSV -- the dashboard adds no export format of its own. */
  seriesCsvUrl(): string {
    return `${this.base}/series?format=csv`;
  }

  async command(cmd: Command, waitSeconds = 5): Promise<AckMessage> {
    const res = await this.fetchFn(`${this.base}/command?wait=${waitSeconds}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(cmd),
    });
    if (res.status === 422) {
      const detail = (await res.json()) as { detail?: string };
      return {
        type: "ack",
        id: -1, // never reached the runner, so no id was assigned
        command: cmd.command,
        status: "rejected",
        error: detail.detail ?? "invalid command",
      };
    }
    if (!res.ok) throw new Error(`POST /command: ${res.status}`);
    return (await res.json()) as AckMessage;
  }
}
