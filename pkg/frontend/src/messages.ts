// Client-side mirror of the banksim/control/v1 message schema.  The service
// ships the authoritative JSON Schema at GET /schema/messages; the test suite
// cross-checks these shapes against the schema file so they cannot drift.

export type RunState = "running" | "paused" | "finished" | "stopped" | "failed";

export type CommandKind =
  | "set_param"
  | "pause"
  | "resume"
  | "step"
  | "snapshot"
  | "stop";

export type AckStatus =
  | "applied"
  | "scheduled"
  | "superseded"
  | "rejected"
  | "expired"
  | "done"
  | "queued";

// One time-series sample: step + base_rate_bp always present, everything else
// is a per-bank or system_* column.  Values stay exactly as the server sent
// them -- the dashboard never recomputes aggregates.
export interface SeriesRow {
  step: number;
  base_rate_bp: number;
  [column: string]: number | string;
}

export interface SimEvent {
  step: number;
  kind: string;
  [field: string]: unknown;
}

export interface StateSummary {
  step: number;
  total_steps: number;
  base_rate_bp: number;
  default_rate_permil: number;
  government_balance: number;
  tax_total: number;
  banks: BankSummary[];
  agents: { borrowers: number; savers: number; investors: number; defaulted: number };
  events: number;
  postings: number;
}

export interface BankSummary {
  bank: string;
  ledgers: Record<string, number>;
  assets: number;
  liabilities: number;
  capital: number;
  insolvent: boolean;
  weighted_outstanding: number;
  binding: string;
  loans_active: number;
}

export interface HelloMessage {
  type: "hello";
  columns: string[];
  history: SeriesRow[];
  events_seen: number;
  state: StateSummary;
  run_state: RunState;
}

export interface SnapshotMessage {
  type: "snapshot";
  row: SeriesRow;
  events: SimEvent[];
}

export interface AckMessage {
  type: "ack";
  id: number;
  command: CommandKind;
  status: AckStatus;
  applied_step?: number;
  path?: string;
  value?: number;
  steps?: number;
  error?: string;
  state?: StateSummary;
  row?: SeriesRow;
}

export interface StatusMessage {
  type: "status";
  run_state: RunState;
  step: number;
  error?: string | null;
}

export type ServerMessage = HelloMessage | SnapshotMessage | AckMessage | StatusMessage;

export interface Command {
  command: CommandKind;
  path?: string;
  value?: number;
  steps?: number;
}

export function setParam(path: string, value: number): Command {
  return { command: "set_param", path, value };
}

export function stepCommand(steps: number): Command {
  return { command: "step", steps };
}

const SERVER_TYPES = new Set(["hello", "snapshot", "ack", "status"]);

/** Parse one frame off the stream; null for anything that is not a
 *  recognizable server message (the client drops it rather than crash). */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  return data as ServerMessage;
}

export function isRow(value: unknown): value is SeriesRow {
  return (
    typeof value === "object" &&
    value !== null &&
    typeof (value as SeriesRow).step === "number" &&
    typeof (value as SeriesRow).base_rate_bp === "number"
  );
}
