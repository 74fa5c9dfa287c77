import {
  Destination,
  PredictResponse,
  ResultViewModel,
} from "./types.js";

/** Schema guard: every displayed number must come from a response field,
 * so a malformed response yields an error, never a partial render. */
export function validateResponse(resp: unknown): string | null {
  if (typeof resp !== "object" || resp === null) return "response is not an object";
  const r = resp as Record<string, unknown>;
  if (typeof r.monthly_trips !== "number" || r.monthly_trips < 0) {
    return "monthly_trips missing or negative";
  }
  if (!Array.isArray(r.destinations)) return "destinations missing";
  for (const d of r.destinations as unknown[]) {
    const dest = d as Record<string, unknown>;
    if (typeof dest.zone_id !== "string") return "destination without zone_id";
    if (typeof dest.share !== "number") return "destination without share";
    if (typeof dest.travel_seconds !== "number") {
      return "destination without travel_seconds";
    }
    const route = dest.route as Record<string, unknown> | undefined;
    if (!route || route.type !== "LineString" || !Array.isArray(route.coordinates)) {
      return "destination route is not a LineString";
    }
    const probs = dest.mode_probabilities as Record<string, unknown> | undefined;
    if (!probs || Object.values(probs).some((p) => typeof p !== "number")) {
      return "destination without mode probabilities";
    }
  }
  if (typeof r.model_versions !== "object" || r.model_versions === null) {
    return "model_versions missing";
  }
  return null;
}

function destinationView(d: Destination) {
  return {
    zoneId: d.zone_id,
    sharePercent: Math.round(d.share * 1000) / 10,
    travelMinutes: Math.round(d.travel_seconds / 6) / 10,
    polyline: d.route.coordinates,
    bars: Object.entries(d.mode_probabilities).map(([mode, p]) => ({
      mode,
      percent: Math.round(p * 1000) / 10,
    })),
  };
}

/** Pure response-to-view mapping: destinations in response order, the
 * first one pre-selected. */
export function renderResults(resp: PredictResponse): ResultViewModel {
  const problem = validateResponse(resp);
  if (problem !== null) {
    throw new Error(`schema-invalid response: ${problem}`);
  }
  return {
    tripHeadline: `${Math.round(resp.monthly_trips * 10) / 10} trips per month`,
    destinations: resp.destinations.map(destinationView),
    selectedIndex: resp.destinations.length > 0 ? 0 : -1,
    modelVersions: resp.model_versions,
  };
}

/** Move the selection; out-of-range indices leave the view unchanged. */
export function selectDestination(
  view: ResultViewModel,
  index: number,
  warn: (msg: string) => void = console.warn
): ResultViewModel {
  if (!Number.isInteger(index) || index < 0 || index >= view.destinations.length) {
    warn(`destination index ${index} out of range, ignoring`);
    return view;
  }
  if (index === view.selectedIndex) return view;
  return { ...view, selectedIndex: index };
}
