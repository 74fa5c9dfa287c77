import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { renderResults, validateResponse } from "../src/render.js";
import { PredictResponse } from "../src/types.js";

const FIXTURES = join(__dirname, "fixtures");

function golden(): PredictResponse {
  return JSON.parse(
    readFileSync(join(FIXTURES, "golden_predict_response.json"), "utf-8")
  );
}

function oneDestination(): PredictResponse {
  const resp = golden();
  resp.destinations = resp.destinations.slice(0, 1);
  return resp;
}

describe("renderResults", () => {
  it("matches the committed golden snapshot", () => {
    const snapshot = JSON.parse(
      readFileSync(join(FIXTURES, "golden_view_model.json"), "utf-8")
    );
    expect(renderResults(golden())).toEqual(snapshot);
  });

  it("pre-selects the first destination", () => {
    const view = renderResults(golden());
    expect(view.selectedIndex).toBe(0);
    expect(view.destinations.length).toBeGreaterThan(1);
  });

  it("renders a single destination auto-selected", () => {
    const view = renderResults(oneDestination());
    expect(view.destinations).toHaveLength(1);
    expect(view.selectedIndex).toBe(0);
    expect(view.destinations[0]!.polyline.length).toBeGreaterThanOrEqual(2);
  });

  it("scales probabilities to percentage bars", () => {
    const resp = oneDestination();
    resp.destinations[0]!.mode_probabilities = {
      transit: 0.6,
      drive: 0.3,
      walk: 0.1,
    };
    const bars = renderResults(resp).destinations[0]!.bars;
    expect(bars).toEqual([
      { mode: "transit", percent: 60 },
      { mode: "drive", percent: 30 },
      { mode: "walk", percent: 10 },
    ]);
  });

  it("keeps bars summing to 100% within rounding", () => {
    for (const d of renderResults(golden()).destinations) {
      const total = d.bars.reduce((acc, b) => acc + b.percent, 0);
      expect(Math.abs(total - 100)).toBeLessThanOrEqual(0.2);
    }
  });

  it("keeps destinations in response order", () => {
    const resp = golden();
    const view = renderResults(resp);
    expect(view.destinations.map((d) => d.zoneId)).toEqual(
      resp.destinations.map((d) => d.zone_id)
    );
  });

  it("displays only response-derived numbers", () => {
    const resp = golden();
    const view = renderResults(resp);
    expect(view.tripHeadline).toContain(
      String(Math.round(resp.monthly_trips * 10) / 10)
    );
    view.destinations.forEach((d, i) => {
      expect(
        Math.abs(d.sharePercent - resp.destinations[i]!.share * 100)
      ).toBeLessThanOrEqual(0.05);
      expect(d.polyline).toEqual(resp.destinations[i]!.route.coordinates);
    });
  });

  it("refuses to render a schema-invalid response", () => {
    const broken = golden() as unknown as Record<string, unknown>;
    delete broken.monthly_trips;
    expect(() => renderResults(broken as unknown as PredictResponse)).toThrow(
      /schema-invalid/
    );
  });

  it("names the offending field when validation fails", () => {
    const resp = golden() as unknown as { destinations: { route?: unknown }[] };
    delete resp.destinations[0]!.route;
    expect(validateResponse(resp)).toMatch(/LineString/);
  });
});
