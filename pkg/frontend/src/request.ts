import { FEATURE_ORDER, PredictRequest, ProfileFormState } from "./types.js";

export interface ValidationErrors {
  [field: string]: string;
}

export type BuildResult =
  | { ok: true; body: PredictRequest }
  | { ok: false; errors: ValidationErrors };

/** Serialize the form into a predict request body.
 *
 * Toggles become a 0/1 feature vector in the declared feature order; no
 * request is produced while any field is invalid.
 */
export function buildRequest(form: ProfileFormState): BuildResult {
  const errors: ValidationErrors = {};
  if (form.originZone === null || form.originZone === "") {
    errors.origin_zone = "select an origin zone first";
  }
  if (!Number.isInteger(form.topK) || form.topK < 1) {
    errors.top_k = "top_k must be a positive integer";
  }
  for (const name of FEATURE_ORDER) {
    if (typeof form.toggles[name] !== "boolean") {
      errors.profile = `missing toggle ${name}`;
    }
  }
  if (Object.keys(errors).length > 0) {
    return { ok: false, errors };
  }
  return {
    ok: true,
    body: {
      profile: FEATURE_ORDER.map((name) => (form.toggles[name] ? 1 : 0)),
      origin_zone: form.originZone as string,
      top_k: form.topK,
    },
  };
}

/** Inverse of buildRequest, used by the round-trip property test. */
export function formFromRequest(body: PredictRequest): ProfileFormState {
  const toggles = {} as ProfileFormState["toggles"];
  FEATURE_ORDER.forEach((name, i) => {
    toggles[name] = body.profile[i] === 1;
  });
  return { toggles, originZone: body.origin_zone, topK: body.top_k };
}
