import { Api } from "./api.js";
import { LineChart, type ChartSeries, type Marker } from "./charts.js";
import { ControlPanel } from "./controls.js";
import { EventLogView } from "./events.js";
import type {
  HelloMessage,
  SimEvent,
  SnapshotMessage,
  StatusMessage,
} from "./messages.js";
import { SeriesStore } from "./series.js";
import { StreamClient, type ConnectionState, type SocketFactory } from "./stream.js";

const PALETTE = ["#4cc2ff", "#ffb454", "#7ee28a", "#f27ee2", "#c7cf5e"] as const;

export interface AppOptions {
  api: Api;
  streamUrl: string;
  socketFactory?: SocketFactory;
}

/** The dashboard: charts mirroring the run's CSV columns, a steering panel,
 *  and the event log.  All numbers come verbatim from snapshots; the only
 *  client-side state is which bank the per-bank charts focus on. */
export class Dashboard {
  readonly store = new SeriesStore();
  readonly markers: Marker[] = [];
  readonly stream: StreamClient;
  readonly controls: ControlPanel;
  readonly eventLog: EventLogView;

  readonly stepEl: HTMLElement;
  readonly connectionEl: HTMLElement;
  readonly bankFilter: HTMLSelectElement;

  private readonly api: Api;
  private readonly charts: {
    money: LineChart;
    lending: LineChart;
    rate: LineChart;
    reserves: LineChart;
    capital: LineChart;
  };
  private totalSteps = 0;

  constructor(root: HTMLElement, options: AppOptions) {
    this.api = options.api;
    const doc = root.ownerDocument;

    const header = doc.createElement("header");
    const title = doc.createElement("h1");
    title.textContent = "banksim";
    header.appendChild(title);
    this.stepEl = doc.createElement("span");
    this.stepEl.className = "step-counter";
    header.appendChild(this.stepEl);
    this.connectionEl = doc.createElement("span");
    this.connectionEl.className = "connection";
    header.appendChild(this.connectionEl);
    const csv = doc.createElement("a");
    csv.textContent = "CSV";
    csv.className = "csv-link";
    csv.href = this.api.seriesCsvUrl();
    header.appendChild(csv);
    root.appendChild(header);

    const main = doc.createElement("main");
    const chartsHost = doc.createElement("div");
    chartsHost.className = "charts";
    const filterRow = doc.createElement("div");
    filterRow.className = "filter-row";
    const filterLabel = doc.createElement("label");
    filterLabel.textContent = "focus bank";
    filterRow.appendChild(filterLabel);
    this.bankFilter = doc.createElement("select");
    const all = doc.createElement("option");
    all.value = "";
    all.textContent = "whole system";
    this.bankFilter.appendChild(all);
    this.bankFilter.addEventListener("change", () => this.render());
    filterRow.appendChild(this.bankFilter);
    chartsHost.appendChild(filterRow);

    this.charts = {
      money: new LineChart(chartsHost, "money supply (narrow / broad)"),
      lending: new LineChart(chartsHost, "new lending per step"),
      rate: new LineChart(chartsHost, "base rate (bp)"),
      reserves: new LineChart(chartsHost, "reserves by bank"),
      capital: new LineChart(chartsHost, "capital by bank"),
    };
    main.appendChild(chartsHost);

    const side = doc.createElement("div");
    side.className = "side";
    this.controls = new ControlPanel(
      side,
      (cmd) => this.api.command(cmd),
      (step, label) => this.addMarker(step, label),
    );
    this.eventLog = new EventLogView(side);
    main.appendChild(side);
    root.appendChild(main);

    this.stream = new StreamClient(
      options.streamUrl,
      {
        onCatchUp: (hello) => void this.onCatchUp(hello),
        onSnapshot: (snapshot) => this.onSnapshot(snapshot),
        onAck: (ack) => this.controls.handleAck(ack),
        onStatus: (status) => this.onStatus(status),
        onConnection: (state) => this.onConnection(state),
      },
      options.socketFactory ?? ((url) => new WebSocket(url) as never),
    );
  }

  async start(): Promise<void> {
    try {
      this.controls.seedFromConfig(await this.api.config());
    } catch {
      // stream hello still seeds most of the view; config is best-effort
    }
    this.stream.connect();
  }

  addMarker(step: number, label: string): void {
    this.markers.push({ step, label });
    this.render();
  }

  private async onCatchUp(hello: HelloMessage): Promise<void> {
    this.store.reset(hello.columns, hello.history);
    this.totalSteps = hello.state.total_steps;
    this.controls.setBanks(this.store.banks());
    this.controls.setRunState(hello.run_state);
    this.setBankFilterOptions(this.store.banks());
    this.setStep(hello.state.step);
    // the hello frame carries no events: backfill the log over HTTP so a
    // reconnect leaves no gap between history and the live tail
    this.eventLog.clear();
    try {
      const page = await this.api.events(0, undefined, 1000);
      this.ingestEvents(page.events);
    } catch {
      // log stays empty until the next snapshot batch
    }
    this.render();
  }

  private onSnapshot(snapshot: SnapshotMessage): void {
    this.store.append(snapshot.row);
    this.ingestEvents(snapshot.events);
    this.setStep(snapshot.row.step);
    this.render();
  }

  private onStatus(status: StatusMessage): void {
    this.controls.setRunState(status.run_state);
    this.setStep(status.step);
  }

  private onConnection(state: ConnectionState): void {
    this.connectionEl.textContent = state;
    this.connectionEl.dataset["state"] = state;
    this.connectionEl.classList.toggle("stale", state !== "live");
  }

  private ingestEvents(events: SimEvent[]): void {
    this.eventLog.addEvents(events);
    for (const event of events) {
      if (event.kind === "param_change") this.controls.noteParamChange(event);
    }
  }

  private setStep(step: number): void {
    this.stepEl.textContent = `step ${step} / ${this.totalSteps}`;
  }

  private setBankFilterOptions(banks: string[]): void {
    const doc = this.bankFilter.ownerDocument;
    while (this.bankFilter.options.length > 1) this.bankFilter.remove(1);
    for (const name of banks) {
      const option = doc.createElement("option");
      option.value = name;
      option.textContent = name;
      this.bankFilter.appendChild(option);
    }
  }

  render(): void {
    const focus = this.bankFilter.value;
    const scope = focus === "" ? "system" : focus;
    const banks = focus === "" ? this.store.banks() : [focus];

    this.charts.money.render(
      [
        line(`${scope} narrow`, 0, this.store.values(`${scope}_narrow`)),
        line(`${scope} broad`, 1, this.store.values(`${scope}_broad`)),
      ],
      this.markers,
    );
    this.charts.lending.render(
      [line(`${scope} new lending`, 2, this.store.values(`${scope}_new_lending`))],
      this.markers,
    );
    this.charts.rate.render(
      [line("base rate", 3, this.store.values("base_rate_bp"))],
      this.markers,
    );
    this.charts.reserves.render(
      banks.map((bank, i) => line(bank, i, this.store.bankValues(bank, "reserves"))),
      this.markers,
    );
    this.charts.capital.render(
      banks.map((bank, i) => line(bank, i, this.store.bankValues(bank, "capital"))),
      this.markers,
    );
  }
}

function line(label: string, colorIndex: number, points: ChartSeries["points"]): ChartSeries {
  return { label, color: PALETTE[colorIndex % PALETTE.length]!, points };
}
