import { setParam, stepCommand, type AckMessage, type Command, type SimEvent } from "./messages.js";

export type SubmitFn = (cmd: Command) => Promise<AckMessage>;
export type MarkerFn = (step: number, label: string) => void;

interface ParamSpec {
  param: string; // whitelisted parameter name
  label: string;
  unit: string;
  min: number;
  max: number | null;
  scoped: boolean; // may carry a "<bank>." prefix
  slider?: [number, number];
}

const PARAMS: ParamSpec[] = [
  { param: "base_rate", label: "base rate", unit: "bp", min: 0, max: null, scoped: false, slider: [0, 2000] },
  { param: "default_rate", label: "default hazard", unit: "permil", min: 0, max: 1000, scoped: false },
  { param: "reserve_requirement", label: "reserve req R", unit: "permil", min: 1, max: 1000, scoped: true },
  { param: "capital_requirement", label: "capital req C", unit: "permil", min: 1, max: 1000, scoped: true },
  { param: "dividend_rate", label: "dividend rate", unit: "permil", min: 0, max: 1000, scoped: true },
];

/** One steerable parameter: an input, its last *acknowledged* value, and a
 *  pending flag.  The displayed value only ever moves on acknowledgment or on
 *  a param_change event -- never optimistically on user input. */
class ParamControl {
  readonly root: HTMLElement;
  readonly input: HTMLInputElement;
  readonly ackedEl: HTMLElement;
  readonly noteEl: HTMLElement;
  readonly button: HTMLButtonElement | null = null;
  acked: number | null = null;
  inFlight = false;

  constructor(
    doc: Document,
    readonly spec: ParamSpec,
    private readonly send: (control: ParamControl) => void,
  ) {
    this.root = doc.createElement("div");
    this.root.className = "control-row";
    this.root.dataset["param"] = spec.param;

    const label = doc.createElement("label");
    label.textContent = `${spec.label} (${spec.unit})`;
    this.root.appendChild(label);

    this.input = doc.createElement("input");
    if (spec.slider) {
      this.input.type = "range";
      this.input.min = String(spec.slider[0]);
      this.input.max = String(spec.slider[1]);
      this.input.addEventListener("change", () => this.send(this));
    } else {
      this.input.type = "number";
      this.input.min = String(spec.min);
      if (spec.max !== null) this.input.max = String(spec.max);
    }
    this.root.appendChild(this.input);

    if (!spec.slider) {
      const button = doc.createElement("button");
      button.textContent = "set";
      button.addEventListener("click", () => this.send(this));
      this.root.appendChild(button);
      (this as { button: HTMLButtonElement | null }).button = button;
    }

    this.ackedEl = doc.createElement("span");
    this.ackedEl.className = "acked";
    this.ackedEl.textContent = "—";
    this.root.appendChild(this.ackedEl);

    this.noteEl = doc.createElement("span");
    this.noteEl.className = "note";
    this.root.appendChild(this.noteEl);
  }

  setAcked(value: number): void {
    this.acked = value;
    this.ackedEl.textContent = String(value);
    if (this.spec.slider) this.input.value = String(value);
  }

  setPending(pending: boolean): void {
    this.inFlight = pending;
    this.root.classList.toggle("pending", pending);
    this.noteEl.classList.remove("error");
    this.noteEl.textContent = pending ? "pending…" : "";
    if (this.button) this.button.disabled = pending;
  }

  showRejection(reason: string): void {
    this.setPending(false);
    this.noteEl.classList.add("error");
    this.noteEl.textContent = reason;
    // snap a slider back to the last acknowledged position
    if (this.spec.slider && this.acked !== null) this.input.value = String(this.acked);
  }
}

/** The steering side of the dashboard: parameter inputs plus run controls.
 *
 *  At most one command is in flight per control.  Acks may resolve on the
 *  HTTP response or later on the stream (a paused run holds set_param until
 *  the next step), so pending commands are tracked by ack id.
 */
export class ControlPanel {
  readonly root: HTMLElement;
  readonly scopeSelect: HTMLSelectElement;
  readonly runStateEl: HTMLElement;
  readonly stepInput: HTMLInputElement;

  private readonly controls = new Map<string, ParamControl>();
  private readonly awaitingAck = new Map<number, ParamControl>();
  private readonly buttons = new Map<string, HTMLButtonElement>();

  constructor(
    host: HTMLElement,
    private readonly submit: SubmitFn,
    private readonly addMarker: MarkerFn,
  ) {
    const doc = host.ownerDocument;
    this.root = doc.createElement("section");
    this.root.className = "controls";

    const heading = doc.createElement("h3");
    heading.textContent = "Controls";
    this.root.appendChild(heading);

    const runRow = doc.createElement("div");
    runRow.className = "run-row";
    this.runStateEl = doc.createElement("span");
    this.runStateEl.className = "run-state";
    runRow.appendChild(this.runStateEl);
    for (const kind of ["pause", "resume", "stop"] as const) {
      const b = doc.createElement("button");
      b.textContent = kind;
      b.dataset["command"] = kind;
      b.addEventListener("click", () => void this.sendSimple({ command: kind }));
      this.buttons.set(kind, b);
      runRow.appendChild(b);
    }
    const stepButton = doc.createElement("button");
    stepButton.textContent = "step";
    stepButton.dataset["command"] = "step";
    this.stepInput = doc.createElement("input");
    this.stepInput.type = "number";
    this.stepInput.min = "1";
    this.stepInput.value = "1";
    stepButton.addEventListener("click", () =>
      void this.sendSimple(stepCommand(Number(this.stepInput.value) || 1)),
    );
    this.buttons.set("step", stepButton);
    runRow.appendChild(this.stepInput);
    runRow.appendChild(stepButton);
    this.root.appendChild(runRow);

    const scopeRow = doc.createElement("div");
    scopeRow.className = "control-row";
    const scopeLabel = doc.createElement("label");
    scopeLabel.textContent = "bank scope";
    scopeRow.appendChild(scopeLabel);
    this.scopeSelect = doc.createElement("select");
    const all = doc.createElement("option");
    all.value = "";
    all.textContent = "all banks";
    this.scopeSelect.appendChild(all);
    scopeRow.appendChild(this.scopeSelect);
    this.root.appendChild(scopeRow);

    for (const spec of PARAMS) {
      const control = new ParamControl(doc, spec, (c) => void this.sendParam(c));
      this.controls.set(spec.param, control);
      this.root.appendChild(control.root);
    }

    host.appendChild(this.root);
  }

  setBanks(names: string[]): void {
    const doc = this.root.ownerDocument;
    while (this.scopeSelect.options.length > 1) this.scopeSelect.remove(1);
    for (const name of names) {
      const option = doc.createElement("option");
      option.value = name;
      option.textContent = name;
      this.scopeSelect.appendChild(option);
    }
  }

  /** Initial acknowledged values, straight from GET /config. */
  seedFromConfig(config: Record<string, unknown>): void {
    const country = config["country"] as
      | { central_bank?: { base_rate_bp?: number } }
      | undefined;
    const rate = country?.central_bank?.base_rate_bp;
    if (typeof rate === "number") this.controls.get("base_rate")?.setAcked(rate);
    const hazard = config["default_rate_permil"];
    if (typeof hazard === "number") this.controls.get("default_rate")?.setAcked(hazard);
    const banks = (config["banks"] as Record<string, unknown>[] | undefined) ?? [];
    const first = banks[0];
    if (first) {
      const posts: [string, string][] = [
        ["reserve_requirement_permil", "reserve_requirement"],
        ["capital_requirement_permil", "capital_requirement"],
        ["dividend_permil", "dividend_rate"],
      ];
      for (const [key, param] of posts) {
        const value = first[key];
        if (typeof value === "number") this.controls.get(param)?.setAcked(value);
      }
    }
  }

  setRunState(state: string): void {
    this.runStateEl.textContent = state;
    this.runStateEl.dataset["state"] = state;
  }

  /** Route an ack that arrived over the stream (queued commands resolve
   *  there once the step boundary hits). */
  handleAck(ack: AckMessage): void {
    const control = this.awaitingAck.get(ack.id);
    if (!control) return;
    this.awaitingAck.delete(ack.id);
    this.resolveParamAck(control, ack);
  }

  /** param_change events are the run's own record of applied steering --
   *  schedule- or command-sourced both move the acknowledged display. */
  noteParamChange(event: SimEvent): void {
    const path = event["path"];
    const value = event["value"];
    if (typeof path !== "string" || typeof value !== "number") return;
    const param = path.includes(".") ? path.split(".").pop()! : path;
    this.controls.get(param)?.setAcked(value);
  }

  private paramPath(control: ParamControl): string {
    const scope = this.scopeSelect.value;
    if (control.spec.scoped && scope) return `${scope}.${control.spec.param}`;
    return control.spec.param;
  }

  private async sendParam(control: ParamControl): Promise<void> {
    if (control.inFlight) return; // one in-flight command per control
    const value = Number(control.input.value);
    if (!Number.isFinite(value)) {
      control.showRejection("not a number");
      return;
    }
    control.setPending(true);
    let ack: AckMessage;
    try {
      ack = await this.submit(setParam(this.paramPath(control), value));
    } catch (err) {
      control.showRejection(String(err));
      return;
    }
    if (ack.status === "queued") {
      this.awaitingAck.set(ack.id, control);
      return; // stays pending until the stream delivers the resolution
    }
    this.resolveParamAck(control, ack);
  }

  private resolveParamAck(control: ParamControl, ack: AckMessage): void {
    switch (ack.status) {
      case "applied": {
        control.setPending(false);
        if (typeof ack.value === "number") control.setAcked(ack.value);
        const at = ack.applied_step;
        if (typeof at === "number")
          this.addMarker(at, `${control.spec.param}=${ack.value}`);
        break;
      }
      case "rejected":
        control.showRejection(ack.error ?? "rejected");
        break;
      case "superseded":
        control.setPending(false);
        control.noteEl.textContent = "superseded";
        break;
      case "expired":
        control.showRejection("run ended before the change applied");
        break;
      default:
        control.setPending(false);
    }
  }

  private async sendSimple(cmd: Command): Promise<void> {
    const button = this.buttons.get(cmd.command);
    if (button?.disabled) return;
    if (button) button.disabled = true;
    try {
      const ack = await this.submit(cmd);
      if (ack.status === "rejected" && button)
        button.title = ack.error ?? "rejected";
    } finally {
      if (button) button.disabled = false;
    }
  }
}
