/** Diffusion parameter schema: validation mirroring the service rules and
 * TOML export/import in exactly the batch pipeline's preset format. */

export interface DiffusionParams {
  kappa: number;
  presmooth_sigma: number;
  presmooth_kernel: number;
  orient_sigma: number;
  orient_kernel: number;
  tau: number;
  steps: number;
  snapshots: number[];
}

export const TAU_MAX = 0.25;

/** Key order of the preset file schema; floats keep a decimal point so the
 * TOML types match what the pipeline writes. */
const KEY_ORDER: (keyof DiffusionParams)[] = [
  "kappa",
  "presmooth_sigma",
  "presmooth_kernel",
  "orient_sigma",
  "orient_kernel",
  "tau",
  "steps",
  "snapshots",
];

const FLOAT_KEYS = new Set(["kappa", "presmooth_sigma", "orient_sigma", "tau"]);

export type FieldErrors = Partial<Record<keyof DiffusionParams, string>>;

export function validateParams(p: DiffusionParams): FieldErrors {
  const errors: FieldErrors = {};
  if (!(p.kappa > 0)) errors.kappa = "kappa must be positive";
  if (!(p.presmooth_sigma > 0)) errors.presmooth_sigma = "sigma must be positive";
  if (!(p.orient_sigma > 0)) errors.orient_sigma = "sigma must be positive";
  for (const key of ["presmooth_kernel", "orient_kernel"] as const) {
    const size = p[key];
    if (!Number.isInteger(size) || size < 3 || size % 2 === 0) {
      errors[key] = "kernel size must be an odd integer >= 3";
    }
  }
  if (!(p.tau > 0 && p.tau <= TAU_MAX)) errors.tau = `tau must be in (0, ${TAU_MAX}]`;
  if (!Number.isInteger(p.steps) || p.steps < 0) errors.steps = "steps must be a non-negative integer";
  if (p.snapshots.some((s) => !Number.isInteger(s) || s < 0 || s > p.steps)) {
    errors.snapshots = "snapshot indices must lie in [0, steps]";
  }
  return errors;
}

export function isValid(p: DiffusionParams): boolean {
  return Object.keys(validateParams(p)).length === 0;
}

/** Shortest round-trip decimal; the service parses it back to the same
 * IEEE-754 double, so exported values survive bit-exact. */
function formatScalar(value: number, float: boolean): string {
  let text = String(value);
  if (float && !/[.e]/i.test(text)) text += ".0";
  return text;
}

export function toToml(p: DiffusionParams): string {
  const lines = KEY_ORDER.map((key) => {
    if (key === "snapshots") {
      return `snapshots = [${p.snapshots.map((s) => String(s)).join(", ")}]`;
    }
    return `${key} = ${formatScalar(p[key] as number, FLOAT_KEYS.has(key))}`;
  });
  return lines.join("\n") + "\n";
}

/** Minimal flat-TOML reader for preset files (scalars and integer arrays). */
export function parseToml(text: string): DiffusionParams {
  const raw: Record<string, number | number[]> = {};
  for (const [lineno, line] of text.split("\n").entries()) {
    const stripped = line.trim();
    if (!stripped || stripped.startsWith("#")) continue;
    const eq = stripped.indexOf("=");
    if (eq < 0) throw new Error(`line ${lineno + 1}: expected 'key = value'`);
    const key = stripped.slice(0, eq).trim();
    const value = stripped.slice(eq + 1).trim();
    if (value.startsWith("[")) {
      if (!value.endsWith("]")) throw new Error(`line ${lineno + 1}: unterminated array`);
      const inner = value.slice(1, -1).trim();
      raw[key] = inner ? inner.split(",").map((v) => parseNumber(v.trim())) : [];
    } else {
      raw[key] = parseNumber(value);
    }
  }
  return fromRecord(raw);
}

function parseNumber(text: string): number {
  const value = Number(text);
  if (!Number.isFinite(value) || text === "") throw new Error(`not a number: ${text}`);
  return value;
}

export function fromRecord(raw: Record<string, unknown>): DiffusionParams {
  const p: DiffusionParams = {
    kappa: asNumber(raw, "kappa"),
    presmooth_sigma: asNumber(raw, "presmooth_sigma"),
    presmooth_kernel: asNumber(raw, "presmooth_kernel"),
    orient_sigma: asNumber(raw, "orient_sigma", asNumber(raw, "presmooth_sigma")),
    orient_kernel: asNumber(raw, "orient_kernel", asNumber(raw, "presmooth_kernel")),
    tau: asNumber(raw, "tau", 0.2),
    steps: asNumber(raw, "steps", 0),
    snapshots: Array.isArray(raw.snapshots) ? (raw.snapshots as number[]).slice() : [],
  };
  const errors = validateParams(p);
  const firstError = Object.values(errors)[0];
  if (firstError) throw new Error(firstError);
  return p;
}

function asNumber(raw: Record<string, unknown>, key: string, fallback?: number): number {
  const value = raw[key];
  if (value === undefined) {
    if (fallback === undefined) throw new Error(`missing parameter: ${key}`);
    return fallback;
  }
  if (typeof value !== "number") throw new Error(`${key} must be a number`);
  return value;
}
