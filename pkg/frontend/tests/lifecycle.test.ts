import { afterAll, describe, expect, it } from "vitest";

import {
  AlreadyRunningError,
  coreVersion,
  GP,
  InvalidConfigError,
  NotRunningError,
  shutdown,
  startRuntime,
  stopRuntime,
  version,
} from "../src/index.js";

afterAll(() => shutdown());

describe("versions", () => {
  it("exposes semver strings for the bindings and the core", () => {
    expect(version).toMatch(/^\d+\.\d+\.\d+$/);
    expect(coreVersion()).toMatch(/^\d+\.\d+\.\d+$/);
  });
});

describe("runtime lifecycle", () => {
  it("starts and stops cleanly", () => {
    startRuntime(2);
    stopRuntime();
  });

  it("raises AlreadyRunningError when started twice", () => {
    startRuntime(2);
    try {
      expect(() => startRuntime(2)).toThrow(AlreadyRunningError);
    } finally {
      stopRuntime();
    }
  });

  it("raises NotRunningError when stopped without a start", () => {
    expect(() => stopRuntime()).toThrow(NotRunningError);
  });

  it("raises NotRunningError for predict before start", () => {
    const gp = new GP({ z: [[0], [1]], y: [0, 0] });
    expect(() => gp.predict([[0.5]])).toThrow(NotRunningError);
    gp.dispose();
  });
});

describe("boundary validation", () => {
  it("rejects non-finite training targets with a typed error", () => {
    expect(() => new GP({ z: [[0], [1]], y: [0, Number.NaN] })).toThrow(InvalidConfigError);
  });

  it("rejects mismatched target length before crossing the bridge", () => {
    expect(() => new GP({ z: [[0], [1]], y: [0, 0, 0] })).toThrow(/2 rows of z but 3 targets/);
  });
});

describe("basic predictions", () => {
  it("returns a zero mean of test-set length when all targets are zero", () => {
    startRuntime(2);
    try {
      const gp = new GP({ z: [[0], [1], [2], [3]], y: [0, 0, 0, 0] });
      const mean = gp.predict([[0.5], [1.5], [2.5]]);
      expect(Array.from(mean)).toEqual([0, 0, 0]);
      gp.dispose();
    } finally {
      stopRuntime();
    }
  });

  it("optimize lowers the loss and logLikelihood rises", () => {
    startRuntime(2);
    try {
      const z: number[][] = [];
      const y: number[] = [];
      for (let i = 0; i < 32; i++) {
        z.push([i / 8]);
        y.push(Math.sin(i / 8));
      }
      const gp = new GP({ z, y }, { tilesPerDim: 4 });
      const before = gp.logLikelihood();
      const losses = gp.optimize({ iterations: 8 });
      expect(losses).toHaveLength(8);
      expect(losses[7]).toBeLessThan(losses[0]);
      expect(gp.logLikelihood()).toBeGreaterThan(before);
      gp.dispose();
    } finally {
      stopRuntime();
    }
  });
});
