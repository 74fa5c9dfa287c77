/** Wire types mirroring the JSON schemas in ../schemas/. */

export const FEATURE_ORDER = [
  "household_car_share",
  "individual_senior",
  "household_income_high",
  "individual_employed",
  "individual_college",
] as const;

export type FeatureName = (typeof FEATURE_ORDER)[number];

export interface PredictRequest {
  profile: number[];
  origin_zone: string;
  top_k: number;
}

export interface RouteGeometry {
  type: "LineString";
  coordinates: [number, number][];
}

export interface Destination {
  zone_id: string;
  share: number;
  route: RouteGeometry;
  travel_seconds: number;
  mode_probabilities: Record<string, number>;
}

export interface PredictResponse {
  monthly_trips: number;
  destinations: Destination[];
  model_versions: Record<string, string>;
}

export interface ZoneInfo {
  zone_id: string;
  lat: number;
  lon: number;
  name: string;
}

export interface ZonesResponse {
  zones: ZoneInfo[];
}

/** Form state behind the five demographic toggles plus origin selection. */
export interface ProfileFormState {
  toggles: Record<FeatureName, boolean>;
  originZone: string | null;
  topK: number;
}

export function emptyForm(): ProfileFormState {
  const toggles = {} as Record<FeatureName, boolean>;
  for (const name of FEATURE_ORDER) toggles[name] = false;
  return { toggles, originZone: null, topK: 5 };
}

export interface ModeBar {
  mode: string;
  percent: number;
}

export interface DestinationView {
  zoneId: string;
  sharePercent: number;
  travelMinutes: number;
  polyline: [number, number][];
  bars: ModeBar[];
}

export interface ResultViewModel {
  tripHeadline: string;
  destinations: DestinationView[];
  selectedIndex: number;
  modelVersions: Record<string, string>;
}
