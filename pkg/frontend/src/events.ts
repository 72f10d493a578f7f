import type { SimEvent } from "./messages.js";

// Event kinds worth a line in the log; grants and reinvestments are too
// chatty to show by default.
const QUIET_KINDS = new Set(["grant", "reinvest"]);

const MAX_ROWS = 400;

function describe(event: SimEvent): string {
  switch (event.kind) {
    case "denial":
      return `loan denied: borrower ${event["borrower"]} at ${event["bank"]} ` +
        `(${event["constraint"]} bound, size ${event["size"]})`;
    case "missed_payment":
      return `missed payment: borrower ${event["borrower"]} at ${event["bank"]} ` +
        `(${event["reason"]}, due ${event["due"]}, streak ${event["streak"]})`;
    case "default":
      return `default: borrower ${event["borrower"]} at ${event["bank"]} ` +
        `(${event["reason"]}, outstanding ${event["outstanding"]})`;
    case "insolvency":
      return `INSOLVENT: ${event["bank"]} (uncovered residual ${event["residual"]})`;
    case "government_illiquid":
      return `government short of funds at ${event["bank"]}`;
    case "interbank_failed":
      return `interbank repayment failed: ${event["lender"]} unpaid`;
    case "param_change":
      return `param ${event["path"]} -> ${event["value"]} (${event["source"]})`;
    case "grant":
      return `loan granted: borrower ${event["borrower"]} at ${event["bank"]} ` +
        `(size ${event["size"]}, ${event["rate_bp"]}bp)`;
    default: {
      const rest = Object.entries(event)
        .filter(([k]) => k !== "step" && k !== "kind")
        .map(([k, v]) => `${k}=${v}`)
        .join(" ");
      return `${event.kind}: ${rest}`;
    }
  }
}

/** Scrolling event log, newest first.  Denials carry their binding
 *  constraint as a CSS class (reserve-bound red, capital-bound amber); an
 *  insolvency additionally raises a sticky banner for that bank. */
export class EventLogView {
  readonly root: HTMLElement;
  readonly list: HTMLElement;
  readonly banner: HTMLElement;
  showAll = false;

  constructor(host: HTMLElement) {
    const doc = host.ownerDocument;
    this.root = doc.createElement("section");
    this.root.className = "event-log";

    const heading = doc.createElement("h3");
    heading.textContent = "Events";
    this.root.appendChild(heading);

    this.banner = doc.createElement("div");
    this.banner.className = "banner";
    this.banner.hidden = true;
    this.root.appendChild(this.banner);

    const toggleRow = doc.createElement("label");
    toggleRow.className = "toggle";
    const toggle = doc.createElement("input");
    toggle.type = "checkbox";
    toggle.addEventListener("change", () => {
      this.showAll = toggle.checked;
    });
    toggleRow.appendChild(toggle);
    toggleRow.appendChild(doc.createTextNode(" include grants"));
    this.root.appendChild(toggleRow);

    this.list = doc.createElement("ul");
    this.root.appendChild(this.list);
    host.appendChild(this.root);
  }

  clear(): void {
    while (this.list.firstChild) this.list.removeChild(this.list.firstChild);
    this.banner.hidden = true;
    this.banner.textContent = "";
  }

  addEvents(events: SimEvent[]): void {
    const doc = this.root.ownerDocument;
    for (const event of events) {
      if (event.kind === "insolvency") {
        this.banner.textContent =
          `${String(event["bank"]).toUpperCase()} IS INSOLVENT (step ${event.step})`;
        this.banner.hidden = false;
      }
      if (!this.showAll && QUIET_KINDS.has(event.kind)) continue;
      const item = doc.createElement("li");
      item.className = `event ${event.kind}`;
      if (event.kind === "denial")
        item.classList.add(`denial-${event["constraint"]}`);
      const stepTag = doc.createElement("span");
      stepTag.className = "step";
      stepTag.textContent = String(event.step);
      item.appendChild(stepTag);
      item.appendChild(doc.createTextNode(" " + describe(event)));
      this.list.insertBefore(item, this.list.firstChild);
    }
    while (this.list.children.length > MAX_ROWS) {
      this.list.removeChild(this.list.lastChild!);
    }
  }
}
