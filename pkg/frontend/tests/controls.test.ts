import { beforeEach, describe, expect, it, vi } from "vitest";

import { ControlPanel } from "../src/controls.js";
import type { AckMessage, Command } from "../src/messages.js";
import { event } from "./fakes.js";

type Deferred = { resolve: (ack: AckMessage) => void };

function ack(fields: Partial<AckMessage>): AckMessage {
  return { type: "ack", id: 1, command: "set_param", status: "applied", ...fields };
}

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

function panel() {
  const sent: Command[] = [];
  const pending: Deferred[] = [];
  const markers: { step: number; label: string }[] = [];
  const submit = vi.fn((cmd: Command) => {
    sent.push(cmd);
    return new Promise<AckMessage>((resolve) => pending.push({ resolve }));
  });
  const host = document.createElement("div");
  const controls = new ControlPanel(host, submit, (step, label) =>
    markers.push({ step, label }),
  );
  return { host, controls, sent, pending, markers };
}

function paramRow(host: HTMLElement, param: string) {
  const root = host.querySelector<HTMLElement>(`[data-param="${param}"]`)!;
  return {
    root,
    input: root.querySelector("input")!,
    button: root.querySelector("button"),
    acked: root.querySelector(".acked")!,
    note: root.querySelector(".note")!,
  };
}

const CONFIG = {
  country: { central_bank: { base_rate_bp: 200 } },
  default_rate_permil: 5,
  banks: [
    { name: "north", reserve_requirement_permil: 100, dividend_permil: 50 },
  ],
};

describe("seeding", () => {
  it("renders config values as the acknowledged baseline", () => {
    const { host, controls } = panel();
    controls.seedFromConfig(CONFIG);
    expect(paramRow(host, "base_rate").acked.textContent).toBe("200");
    expect(paramRow(host, "default_rate").acked.textContent).toBe("5");
    expect(paramRow(host, "reserve_requirement").acked.textContent).toBe("100");
    expect(paramRow(host, "dividend_rate").acked.textContent).toBe("50");
  });

  it("fills the bank scope select", () => {
    const { host, controls } = panel();
    controls.setBanks(["north", "south"]);
    const options = [...host.querySelectorAll("select option")].map((o) => o.textContent);
    expect(options).toEqual(["all banks", "north", "south"]);
  });
});

describe("set_param round trip", () => {
  it("shows pending and never renders the value optimistically", async () => {
    const { host, controls, sent, pending } = panel();
    controls.seedFromConfig(CONFIG);
    const row = paramRow(host, "base_rate");

    row.input.value = "500";
    row.input.dispatchEvent(new Event("change"));
    await flush();

    expect(sent).toEqual([{ command: "set_param", path: "base_rate", value: 500 }]);
    expect(row.root.classList.contains("pending")).toBe(true);
    expect(row.acked.textContent).toBe("200"); // still the old acknowledged value

    pending[0]!.resolve(ack({ status: "applied", value: 500, applied_step: 241 }));
    await flush();
    expect(row.acked.textContent).toBe("500");
    expect(row.root.classList.contains("pending")).toBe(false);
  });

  it("marks the applied step on acknowledgment", async () => {
    const { host, controls, pending, markers } = panel();
    controls.seedFromConfig(CONFIG);
    const row = paramRow(host, "base_rate");
    row.input.value = "500";
    row.input.dispatchEvent(new Event("change"));
    await flush();
    pending[0]!.resolve(ack({ status: "applied", value: 500, applied_step: 241 }));
    await flush();
    expect(markers).toEqual([{ step: 241, label: "base_rate=500" }]);
  });

  it("surfaces rejections inline, adds no marker, keeps the old value", async () => {
    const { host, controls, pending, markers } = panel();
    controls.seedFromConfig(CONFIG);
    const row = paramRow(host, "reserve_requirement");
    row.input.value = "-5";
    row.button!.click();
    await flush();
    pending[0]!.resolve(ack({ status: "rejected", error: "-5 out of range" }));
    await flush();
    expect(row.note.textContent).toBe("-5 out of range");
    expect(row.note.classList.contains("error")).toBe(true);
    expect(row.acked.textContent).toBe("100");
    expect(markers).toEqual([]);
  });

  it("a rejected slider snaps back to the acknowledged position", async () => {
    const { host, controls, pending } = panel();
    controls.seedFromConfig(CONFIG);
    const row = paramRow(host, "base_rate");
    expect(row.input.value).toBe("200"); // slider tracks acked values
    row.input.value = "1500";
    row.input.dispatchEvent(new Event("change"));
    await flush();
    pending[0]!.resolve(ack({ status: "rejected", error: "nope" }));
    await flush();
    expect(row.input.value).toBe("200");
  });

  it("allows one in-flight command per control", async () => {
    const { host, controls, sent, pending } = panel();
    controls.seedFromConfig(CONFIG);
    const row = paramRow(host, "default_rate");
    row.input.value = "10";
    row.button!.click();
    row.button!.click(); // ignored while pending
    await flush();
    expect(sent).toHaveLength(1);
    expect(row.button!.disabled).toBe(true);
    pending[0]!.resolve(ack({ status: "applied", value: 10, applied_step: 3 }));
    await flush();
    expect(row.button!.disabled).toBe(false);
    row.button!.click();
    await flush();
    expect(sent).toHaveLength(2);
  });

  it("a queued command stays pending until the stream delivers the ack", async () => {
    const { host, controls, pending, markers } = panel();
    controls.seedFromConfig(CONFIG);
    const row = paramRow(host, "base_rate");
    row.input.value = "700";
    row.input.dispatchEvent(new Event("change"));
    await flush();
    pending[0]!.resolve(ack({ id: 7, status: "queued" }));
    await flush();
    expect(row.root.classList.contains("pending")).toBe(true);

    controls.handleAck(ack({ id: 7, status: "applied", value: 700, applied_step: 12 }));
    expect(row.root.classList.contains("pending")).toBe(false);
    expect(row.acked.textContent).toBe("700");
    expect(markers).toEqual([{ step: 12, label: "base_rate=700" }]);
  });

  it("ignores stream acks for commands it never sent", () => {
    const { controls } = panel();
    controls.handleAck(ack({ id: 404, status: "applied", value: 9 }));
    // nothing to assert beyond "did not throw": foreign acks are not ours to render
  });

  it("superseded commands report quietly", async () => {
    const { host, controls, pending } = panel();
    controls.seedFromConfig(CONFIG);
    const row = paramRow(host, "base_rate");
    row.input.value = "300";
    row.input.dispatchEvent(new Event("change"));
    await flush();
    pending[0]!.resolve(ack({ status: "superseded" }));
    await flush();
    expect(row.note.textContent).toBe("superseded");
    expect(row.acked.textContent).toBe("200");
  });
});

describe("bank scoping", () => {
  it("prefixes scoped params with the selected bank", async () => {
    const { host, controls, sent } = panel();
    controls.setBanks(["north", "south"]);
    const select = host.querySelector("select")!;
    select.value = "south";
    const row = paramRow(host, "capital_requirement");
    row.input.value = "120";
    row.button!.click();
    await flush();
    expect(sent[0]).toEqual({
      command: "set_param",
      path: "south.capital_requirement",
      value: 120,
    });
  });

  it("never scopes the global params", async () => {
    const { host, controls, sent } = panel();
    controls.setBanks(["north"]);
    host.querySelector("select")!.value = "north";
    const row = paramRow(host, "base_rate");
    row.input.value = "900";
    row.input.dispatchEvent(new Event("change"));
    await flush();
    expect(sent[0]?.path).toBe("base_rate");
  });
});

describe("param_change events from the run", () => {
  it("moves the acknowledged display (schedule- or command-sourced)", () => {
    const { host, controls } = panel();
    controls.seedFromConfig(CONFIG);
    controls.noteParamChange(event(240, "param_change", { path: "base_rate", value: 500, source: "schedule" }));
    expect(paramRow(host, "base_rate").acked.textContent).toBe("500");
  });

  it("resolves bank-scoped paths to the right control", () => {
    const { host, controls } = panel();
    controls.noteParamChange(
      event(9, "param_change", { path: "north.reserve_requirement", value: 150, source: "command" }),
    );
    expect(paramRow(host, "reserve_requirement").acked.textContent).toBe("150");
  });
});

describe("run controls", () => {
  it("sends pause/resume/stop", async () => {
    const { host, sent, pending } = panel();
    for (const kind of ["pause", "resume", "stop"]) {
      host.querySelector<HTMLButtonElement>(`button[data-command="${kind}"]`)!.click();
      await flush();
      pending[pending.length - 1]!.resolve(ack({ command: kind as never, status: "done" }));
      await flush();
    }
    expect(sent.map((c) => c.command)).toEqual(["pause", "resume", "stop"]);
  });

  it("step sends the requested count", async () => {
    const { host, controls, sent, pending } = panel();
    controls.stepInput.value = "12";
    host.querySelector<HTMLButtonElement>('button[data-command="step"]')!.click();
    await flush();
    expect(sent[0]).toEqual({ command: "step", steps: 12 });
    pending[0]!.resolve(ack({ command: "step", status: "done" }));
  });

  it("renders the run state it is told", () => {
    const { host, controls } = panel();
    controls.setRunState("paused");
    expect(host.querySelector(".run-state")?.textContent).toBe("paused");
  });
});
