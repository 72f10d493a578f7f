import type { SeriesRow } from "./messages.js";

export interface Point {
  step: number;
  value: number;
}

// Columns look like "<bank>_reserves" or "system_narrow"; bank names may
// themselves contain underscores, so always match against known suffixes.
export const BANK_METRICS = [
  "narrow",
  "broad",
  "loans",
  "new_lending",
  "reserves",
  "capital",
  "binding",
] as const;

export type BankMetric = (typeof BANK_METRICS)[number];

/** Time-series mirror of the run, keyed by step.
 *
 *  A reconnect replays the whole history in the hello frame and the step that
 *  finished during the handshake can arrive twice (once in history, once as a
 *  snapshot) -- keying rows on `step` makes both harmless, which is exactly
 *  the contract the service documents.
 */
export class SeriesStore {
  columns: string[] = [];
  private rows = new Map<number, SeriesRow>();

  /** Fresh catch-up: replace everything with the hello payload. */
  reset(columns: string[], history: SeriesRow[]): void {
    this.columns = [...columns];
    this.rows.clear();
    for (const row of history) this.rows.set(row.step, row);
  }

  append(row: SeriesRow): void {
    this.rows.set(row.step, row);
  }

  get size(): number {
    return this.rows.size;
  }

  lastStep(): number {
    let last = -1;
    for (const step of this.rows.keys()) if (step > last) last = step;
    return last;
  }

  steps(): number[] {
    return [...this.rows.keys()].sort((a, b) => a - b);
  }

  /** True when the stored steps run 0..last without holes. */
  contiguous(): boolean {
    return this.size === this.lastStep() + 1;
  }

  /** The bank names the columns describe, in column order. */
  banks(): string[] {
    const names: string[] = [];
    for (const column of this.columns) {
      if (!column.endsWith("_narrow")) continue;
      const name = column.slice(0, -"_narrow".length);
      if (name !== "system") names.push(name);
    }
    return names;
  }

  /** Numeric column values in step order, verbatim from the snapshots. */
  values(column: string): Point[] {
    const out: Point[] = [];
    for (const step of this.steps()) {
      const value = this.rows.get(step)![column];
      if (typeof value === "number") out.push({ step, value });
    }
    return out;
  }

  bankValues(bank: string, metric: BankMetric): Point[] {
    return this.values(`${bank}_${metric}`);
  }

  row(step: number): SeriesRow | undefined {
    return this.rows.get(step);
  }
}
