import type { Point } from "./series.js";

export interface ChartSeries {
  label: string;
  color: string;
  points: Point[];
}

export interface Marker {
  step: number;
  label: string;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function scaleLinear(
  domainMin: number,
  domainMax: number,
  rangeMin: number,
  rangeMax: number,
): (v: number) => number {
  const span = domainMax - domainMin;
  if (span === 0) return () => (rangeMin + rangeMax) / 2;
  return (v) => rangeMin + ((v - domainMin) / span) * (rangeMax - rangeMin);
}

/** Round tick positions covering [min, max]: 1/2/5 ladder, ~count ticks. */
export function niceTicks(min: number, max: number, count = 5): number[] {
  if (min === max) return [min];
  const rawStep = (max - min) / count;
  const power = 10 ** Math.floor(Math.log10(rawStep));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[3]!;
  const ticks: number[] = [];
  for (let t = Math.ceil(min / step) * step; t <= max; t += step) {
    // kill float dust like 0.30000000000000004
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

export function formatTick(v: number): string {
  const abs = Math.abs(v);
  if (abs >= 1_000_000_000) return `${Number((v / 1e9).toPrecision(3))}B`;
  if (abs >= 1_000_000) return `${Number((v / 1e6).toPrecision(3))}M`;
  if (abs >= 10_000) return `${Number((v / 1e3).toPrecision(3))}k`;
  return String(v);
}

const WIDTH = 460;
const HEIGHT = 180;
const PAD = { left: 48, right: 10, top: 10, bottom: 22 };

/** A small multiples line chart rendered as plain SVG.
 *
 *  Values are plotted verbatim; vertical dashed markers flag the steps where
 *  acknowledged parameter changes landed.
 */
export class LineChart {
  private readonly svg: SVGSVGElement;

  constructor(host: HTMLElement, title: string) {
    const card = host.ownerDocument.createElement("section");
    card.className = "chart-card";
    const heading = host.ownerDocument.createElement("h3");
    heading.textContent = title;
    card.appendChild(heading);
    this.svg = host.ownerDocument.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
    this.svg.setAttribute("class", "chart");
    card.appendChild(this.svg);
    host.appendChild(card);
  }

  render(series: ChartSeries[], markers: Marker[] = []): void {
    const doc = this.svg.ownerDocument;
    while (this.svg.firstChild) this.svg.removeChild(this.svg.firstChild);

    const allPoints = series.flatMap((s) => s.points);
    if (allPoints.length === 0) return;

    let [x0, x1] = [Infinity, -Infinity];
    let [y0, y1] = [Infinity, -Infinity];
    for (const p of allPoints) {
      if (p.step < x0) x0 = p.step;
      if (p.step > x1) x1 = p.step;
      if (p.value < y0) y0 = p.value;
      if (p.value > y1) y1 = p.value;
    }
    if (y0 > 0 && y0 / (y1 || 1) < 0.5) y0 = 0; // anchor at zero unless zoomed flat
    const sx = scaleLinear(x0, x1, PAD.left, WIDTH - PAD.right);
    const sy = scaleLinear(y0, y1, HEIGHT - PAD.bottom, PAD.top);

    for (const tick of niceTicks(y0, y1, 4)) {
      const y = sy(tick);
      const grid = doc.createElementNS(SVG_NS, "line");
      grid.setAttribute("class", "grid");
      grid.setAttribute("x1", String(PAD.left));
      grid.setAttribute("x2", String(WIDTH - PAD.right));
      grid.setAttribute("y1", String(y));
      grid.setAttribute("y2", String(y));
      this.svg.appendChild(grid);
      const label = doc.createElementNS(SVG_NS, "text");
      label.setAttribute("class", "tick");
      label.setAttribute("x", String(PAD.left - 4));
      label.setAttribute("y", String(y + 3));
      label.setAttribute("text-anchor", "end");
      label.textContent = formatTick(tick);
      this.svg.appendChild(label);
    }
    for (const tick of niceTicks(x0, x1, 6)) {
      const label = doc.createElementNS(SVG_NS, "text");
      label.setAttribute("class", "tick");
      label.setAttribute("x", String(sx(tick)));
      label.setAttribute("y", String(HEIGHT - 6));
      label.setAttribute("text-anchor", "middle");
      label.textContent = String(tick);
      this.svg.appendChild(label);
    }

    for (const marker of markers) {
      if (marker.step < x0 || marker.step > x1) continue;
      const x = sx(marker.step);
      const line = doc.createElementNS(SVG_NS, "line");
      line.setAttribute("class", "marker");
      line.setAttribute("data-step", String(marker.step));
      line.setAttribute("x1", String(x));
      line.setAttribute("x2", String(x));
      line.setAttribute("y1", String(PAD.top));
      line.setAttribute("y2", String(HEIGHT - PAD.bottom));
      this.svg.appendChild(line);
      const text = doc.createElementNS(SVG_NS, "text");
      text.setAttribute("class", "marker-label");
      text.setAttribute("x", String(x + 3));
      text.setAttribute("y", String(PAD.top + 8));
      text.textContent = marker.label;
      this.svg.appendChild(text);
    }

    for (const s of series) {
      if (s.points.length === 0) continue;
      const path = s.points
        .map((p) => `${round1(sx(p.step))},${round1(sy(p.value))}`)
        .join(" ");
      const line = doc.createElementNS(SVG_NS, "polyline");
      line.setAttribute("class", "series-line");
      line.setAttribute("data-label", s.label);
      line.setAttribute("points", path);
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", s.color);
      line.setAttribute("stroke-width", "1.5");
      this.svg.appendChild(line);
    }

    const legend = doc.createElementNS(SVG_NS, "text");
    legend.setAttribute("class", "legend");
    legend.setAttribute("x", String(PAD.left + 4));
    legend.setAttribute("y", String(PAD.top + 8));
    legend.textContent = series.map((s) => s.label).join("  ");
    this.svg.appendChild(legend);
  }

  element(): SVGSVGElement {
    return this.svg;
  }
}

function round1(v: number): number {
  return Math.round(v * 10) / 10;
}
