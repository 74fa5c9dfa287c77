import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it, vi } from "vitest";

import { renderResults, selectDestination } from "../src/render.js";
import { PredictResponse } from "../src/types.js";

function goldenView() {
  const resp: PredictResponse = JSON.parse(
    readFileSync(
      join(__dirname, "fixtures", "golden_predict_response.json"),
      "utf-8"
    )
  );
  return renderResults(resp);
}

describe("selectDestination", () => {
  it("is idempotent on the current selection", () => {
    const view = goldenView();
    expect(selectDestination(view, 0)).toBe(view);
  });

  it("moves the selection without touching the data", () => {
    const view = goldenView();
    const moved = selectDestination(view, 2);
    expect(moved.selectedIndex).toBe(2);
    expect(moved.destinations).toEqual(view.destinations);
    expect(moved.tripHeadline).toBe(view.tripHeadline);
  });

  it("ignores out-of-range indices with a warning", () => {
    const view = goldenView();
    const warn = vi.fn();
    expect(selectDestination(view, view.destinations.length, warn)).toBe(view);
    expect(selectDestination(view, -1, warn)).toBe(view);
    expect(selectDestination(view, 1.5, warn)).toBe(view);
    expect(warn).toHaveBeenCalledTimes(3);
  });

  it("cycling through every index returns to the initial state", () => {
    const initial = goldenView();
    let view = initial;
    for (let i = 1; i < view.destinations.length; i++) {
      view = selectDestination(view, i);
    }
    view = selectDestination(view, 0);
    expect(view).toEqual(initial);
  });
});
