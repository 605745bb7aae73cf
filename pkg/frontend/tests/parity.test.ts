import { execFileSync } from "node:child_process";
import { fileURLToPath } from "node:url";

import { afterAll, describe, expect, it } from "vitest";

import { encodeFloat64, type EncodedArray } from "../src/codec.js";
import { GP, shutdown, startRuntime, stopRuntime } from "../src/index.js";
import { mulberry32, smoothTargets, uniformMatrix } from "./helpers/data.js";

const PYTHON = process.env.TASKGP_PYTHON ?? "python3";
const NATIVE_PREDICT = fileURLToPath(new URL("./helpers/native_predict.py", import.meta.url));

afterAll(() => shutdown());

interface NativeReply {
  readonly mean: EncodedArray;
  readonly log_likelihood: number;
}

describe("dual-path parity", () => {
  it("bound predict is bit-identical to a direct core run on a fixed N=64 instance", () => {
    const n = 64;
    const m = 16;
    const d = 4;
    const rand = mulberry32(0xc0ffee);
    const z = uniformMatrix(rand, n, d);
    const y = smoothTargets(rand, z, n, d);
    const zt = uniformMatrix(rand, m, d);
    const settings = {
      lengthscale: 0.9,
      noise_variance: 0.12,
      vertical_scale: 1.3,
      tiles: 4,
      workers: 2,
    };

    // Core path: a separate Python process calling the library directly.
    const request = JSON.stringify({
      z: encodeFloat64(z, [n, d]),
      y: encodeFloat64(y, [n]),
      zt: encodeFloat64(zt, [m, d]),
      ...settings,
    });
    const native = JSON.parse(
      execFileSync(PYTHON, [NATIVE_PREDICT], { input: request, encoding: "utf8" }),
    ) as NativeReply;

    // Bound path: same bits through the bridge.
    startRuntime(settings.workers);
    let mean: Float64Array;
    let logLikelihood: number;
    try {
      const gp = new GP(
        { z, y, rows: n, cols: d },
        {
          lengthscale: settings.lengthscale,
          verticalScale: settings.vertical_scale,
          noiseVariance: settings.noise_variance,
          tilesPerDim: settings.tiles,
        },
      );
      mean = gp.predict(zt);
      logLikelihood = gp.logLikelihood();
      gp.dispose();
    } finally {
      stopRuntime();
    }

    expect(mean).toHaveLength(m);
    // Base64 of the raw float64 buffers: equality here is bit equality.
    expect(encodeFloat64(mean, [m]).__f64__).toBe(native.mean.__f64__);
    expect(logLikelihood).toBe(native.log_likelihood);
  });
});
