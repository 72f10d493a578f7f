import { describe, expect, it } from "vitest";

import { LineChart, formatTick, niceTicks, scaleLinear } from "../src/charts.js";

describe("scaleLinear", () => {
  it("maps the domain ends onto the range ends", () => {
    const s = scaleLinear(0, 100, 0, 460);
    expect(s(0)).toBe(0);
    expect(s(100)).toBe(460);
    expect(s(50)).toBe(230);
  });

  it("inverted ranges flip the axis (SVG y grows downward)", () => {
    const s = scaleLinear(0, 10, 180, 0);
    expect(s(0)).toBe(180);
    expect(s(10)).toBe(0);
  });

  it("degenerate domain pins to the range middle", () => {
    const s = scaleLinear(5, 5, 0, 100);
    expect(s(5)).toBe(50);
    expect(s(123)).toBe(50);
  });
});

describe("niceTicks", () => {
  it("uses the 1/2/5 ladder", () => {
    expect(niceTicks(0, 100, 5)).toEqual([0, 20, 40, 60, 80, 100]);
    expect(niceTicks(0, 7, 5)).toEqual([0, 2, 4, 6]);
  });

  it("handles a flat series", () => {
    expect(niceTicks(42, 42)).toEqual([42]);
  });

  it("stays within bounds", () => {
    for (const tick of niceTicks(13, 977, 4)) {
      expect(tick).toBeGreaterThanOrEqual(13);
      expect(tick).toBeLessThanOrEqual(977);
    }
  });
});

describe("formatTick", () => {
  it("abbreviates big magnitudes", () => {
    expect(formatTick(0)).toBe("0");
    expect(formatTick(950)).toBe("950");
    expect(formatTick(25_000)).toBe("25k");
    expect(formatTick(3_200_000)).toBe("3.2M");
    expect(formatTick(-2_000_000_000)).toBe("-2B");
  });
});

describe("LineChart", () => {
  function chart() {
    const host = document.createElement("div");
    return { host, chart: new LineChart(host, "test metric") };
  }

  it("renders one polyline per series with the given stroke", () => {
    const { host, chart: c } = chart();
    c.render([
      { label: "a", color: "#111111", points: [{ step: 0, value: 0 }, { step: 1, value: 5 }] },
      { label: "b", color: "#222222", points: [{ step: 0, value: 5 }, { step: 1, value: 0 }] },
    ]);
    const lines = host.querySelectorAll("polyline.series-line");
    expect(lines).toHaveLength(2);
    expect(lines[0]?.getAttribute("stroke")).toBe("#111111");
    expect(lines[0]?.getAttribute("data-label")).toBe("a");
    expect(lines[0]?.getAttribute("points")).toMatch(/^\d+(\.\d+)?,\d+(\.\d+)?( |$)/);
  });

  it("draws vertical markers at their steps, labeled", () => {
    const { host, chart: c } = chart();
    c.render(
      [{ label: "a", color: "#111", points: [{ step: 0, value: 1 }, { step: 10, value: 2 }] }],
      [{ step: 5, label: "base_rate=500" }],
    );
    const marker = host.querySelector("line.marker");
    expect(marker).not.toBeNull();
    expect(marker?.getAttribute("data-step")).toBe("5");
    // dead center of a 0..10 domain
    expect(marker?.getAttribute("x1")).toBe(marker?.getAttribute("x2"));
    expect(host.querySelector("text.marker-label")?.textContent).toBe("base_rate=500");
  });

  it("skips markers outside the plotted window", () => {
    const { host, chart: c } = chart();
    c.render(
      [{ label: "a", color: "#111", points: [{ step: 0, value: 1 }, { step: 10, value: 2 }] }],
      [{ step: 99, label: "late" }],
    );
    expect(host.querySelector("line.marker")).toBeNull();
  });

  it("clears previous content on re-render", () => {
    const { host, chart: c } = chart();
    const series = [{ label: "a", color: "#111", points: [{ step: 0, value: 1 }, { step: 2, value: 3 }] }];
    c.render(series);
    c.render(series);
    expect(host.querySelectorAll("polyline.series-line")).toHaveLength(1);
  });

  it("renders nothing for empty data without crashing", () => {
    const { host, chart: c } = chart();
    c.render([]);
    expect(host.querySelector("polyline")).toBeNull();
  });
});
