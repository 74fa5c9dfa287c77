import { ApiClient } from "./api.js";
import { renderResults, selectDestination } from "./render.js";
import { buildRequest } from "./request.js";
import {
  FEATURE_ORDER,
  ProfileFormState,
  ResultViewModel,
  emptyForm,
} from "./types.js";

const LABELS: Record<string, string> = {
  household_car_share: "Household owns a car",
  individual_senior: "Senior",
  household_income_high: "High household income",
  individual_employed: "Employed",
  individual_college: "College educated",
};

const api = new ApiClient(
  (window as unknown as { PLANNER_API_BASE?: string }).PLANNER_API_BASE ?? ""
);
let form: ProfileFormState = emptyForm();
let view: ResultViewModel | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function drawForm() {
  const box = el<HTMLDivElement>("toggles");
  box.innerHTML = "";
  for (const name of FEATURE_ORDER) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "checkbox";
    input.checked = form.toggles[name];
    input.addEventListener("change", () => {
      form.toggles[name] = input.checked;
    });
    label.append(input, ` ${LABELS[name] ?? name}`);
    box.append(label, document.createElement("br"));
  }
}

function drawRoute(polyline: [number, number][]) {
  const svg = el<HTMLElement>("map");
  if (polyline.length < 2) {
    svg.innerHTML = "";
    return;
  }
  const lons = polyline.map((p) => p[0]);
  const lats = polyline.map((p) => p[1]);
  const toX = (lon: number) =>
    ((lon - Math.min(...lons)) / (Math.max(...lons) - Math.min(...lons) || 1)) * 280 + 10;
  const toY = (lat: number) =>
    290 - ((lat - Math.min(...lats)) / (Math.max(...lats) - Math.min(...lats) || 1)) * 280;
  const points = polyline.map(([lon, lat]) => `${toX(lon)},${toY(lat)}`).join(" ");
  svg.innerHTML = `<polyline points="${points}" fill="none" stroke="#1a6" stroke-width="3"/>`;
}

function drawResults() {
  const panel = el<HTMLDivElement>("results");
  if (!view) {
    panel.textContent = "";
    return;
  }
  const v = view;
  panel.innerHTML = `<h2>${v.tripHeadline}</h2>`;
  const list = document.createElement("ol");
  v.destinations.forEach((d, i) => {
    const item = document.createElement("li");
    const bars = d.bars
      .map((b) => `${b.mode} ${b.percent.toFixed(1)}%`)
      .join(" / ");
    item.textContent = `${d.zoneId} (${d.sharePercent.toFixed(1)}% of trips, ${d.travelMinutes.toFixed(1)} min) ${bars}`;
    if (i === v.selectedIndex) item.style.fontWeight = "bold";
    item.addEventListener("click", () => {
      view = selectDestination(v, i);
      drawResults();
    });
    list.append(item);
  });
  panel.append(list);
  const selected = v.destinations[v.selectedIndex];
  if (selected) drawRoute(selected.polyline);
}

async function boot() {
  drawForm();
  const zones = await api.zones();
  const select = el<HTMLSelectElement>("zone");
  for (const z of zones.zones) {
    const opt = document.createElement("option");
    opt.value = z.zone_id;
    opt.textContent = `${z.zone_id} (${z.name})`;
    select.append(opt);
  }
  select.addEventListener("change", () => {
    form.originZone = select.value || null;
  });

  el<HTMLButtonElement>("predict").addEventListener("click", async () => {
    const built = buildRequest(form);
    const message = el<HTMLDivElement>("message");
    if (!built.ok) {
      message.textContent = Object.values(built.errors).join("; ");
      return;
    }
    message.textContent = "";
    const resp = await api.predict(built.body);
    if (resp === null) return; // superseded
    view = renderResults(resp);
    drawResults();
  });
}

boot().catch((err) => {
  el<HTMLDivElement>("message").textContent = String(err);
});
