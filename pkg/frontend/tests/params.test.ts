import { describe, expect, it } from "vitest";

import {
  DiffusionParams,
  fromRecord,
  isValid,
  parseToml,
  toToml,
  validateParams,
} from "../src/params.js";

const P_STRONG: DiffusionParams = {
  kappa: 0.1,
  presmooth_sigma: 3.0,
  presmooth_kernel: 9,
  orient_sigma: 3.0,
  orient_kernel: 9,
  tau: 0.2,
  steps: 5792,
  snapshots: [],
};

describe("validateParams", () => {
  it("accepts the built-in preset values", () => {
    expect(validateParams(P_STRONG)).toEqual({});
    expect(isValid(P_STRONG)).toBe(true);
  });

  it("rejects tau above the stability bound with a field-level error", () => {
    const errors = validateParams({ ...P_STRONG, tau: 0.3 });
    expect(errors.tau).toMatch(/0.25/);
  });

  it("rejects non-positive kappa and sigma", () => {
    expect(validateParams({ ...P_STRONG, kappa: 0 }).kappa).toBeTruthy();
    expect(validateParams({ ...P_STRONG, presmooth_sigma: -1 }).presmooth_sigma).toBeTruthy();
  });

  it("rejects even or tiny kernels", () => {
    expect(validateParams({ ...P_STRONG, presmooth_kernel: 8 }).presmooth_kernel).toBeTruthy();
    expect(validateParams({ ...P_STRONG, orient_kernel: 1 }).orient_kernel).toBeTruthy();
  });

  it("rejects snapshots beyond steps", () => {
    expect(validateParams({ ...P_STRONG, steps: 10, snapshots: [11] }).snapshots).toBeTruthy();
  });
});

describe("toToml", () => {
  it("emits exactly the pipeline preset schema, in order", () => {
    const keys = toToml(P_STRONG)
      .trim()
      .split("\n")
      .map((line) => line.split(" = ")[0]);
    expect(keys).toEqual([
      "kappa",
      "presmooth_sigma",
      "presmooth_kernel",
      "orient_sigma",
      "orient_kernel",
      "tau",
      "steps",
      "snapshots",
    ]);
  });

  it("keeps float-typed keys as TOML floats", () => {
    const text = toToml(P_STRONG);
    expect(text).toContain("presmooth_sigma = 3.0");
    expect(text).toContain("orient_sigma = 3.0");
    expect(text).toContain("kappa = 0.1");
    expect(text).toContain("presmooth_kernel = 9\n");
    expect(text).toContain("steps = 5792");
  });

  it("round-trips through parseToml losslessly", () => {
    const original: DiffusionParams = {
      ...P_STRONG,
      kappa: 1 / 15,
      presmooth_sigma: Math.sqrt(5),
      steps: 1024,
      snapshots: [256, 1024],
    };
    const back = parseToml(toToml(original));
    expect(back).toEqual(original);
    // bit-exact doubles, not just approximately equal
    expect(back.kappa).toBe(original.kappa);
    expect(back.presmooth_sigma).toBe(original.presmooth_sigma);
  });

  it("modified steps survive export", () => {
    const text = toToml({ ...P_STRONG, steps: 1024 });
    expect(text).toContain("steps = 1024");
  });
});

describe("fromRecord", () => {
  it("parses a service preset payload", () => {
    const p = fromRecord({
      kappa: 0.1,
      presmooth_sigma: 3.0,
      presmooth_kernel: 9,
      orient_sigma: 3.0,
      orient_kernel: 9,
      tau: 0.2,
      steps: 5792,
      snapshots: [],
    });
    expect(p).toEqual(P_STRONG);
  });

  it("defaults orientation kernel to the pre-smoothing one", () => {
    const p = fromRecord({ kappa: 0.1, presmooth_sigma: 2.0, presmooth_kernel: 5 });
    expect(p.orient_sigma).toBe(2.0);
    expect(p.orient_kernel).toBe(5);
  });

  it("throws on missing or invalid parameters", () => {
    expect(() => fromRecord({ kappa: 0.1 })).toThrow(/missing/);
    expect(() =>
      fromRecord({ kappa: -1, presmooth_sigma: 1, presmooth_kernel: 3 }),
    ).toThrow(/kappa/);
  });
});
