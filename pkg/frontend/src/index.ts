/** Synchronous TypeScript bindings for the taskgp Gaussian-process library.
 *
 * Every call is executed by the core's task runtime in a long-lived Python
 * child process; float64 buffers cross the boundary bit-for-bit, so bound
 * results are identical to in-Python results on the same inputs.
 *
 * ```ts
 * startRuntime(4);
 * const gp = new GP({ z, y }, { tilesPerDim: 4 });
 * const { mean, variance } = gp.predictVar(testZ);
 * stopRuntime();
 * ```
 */

import { bridge, closeBridge } from "./bridge.js";
import { decodeFloat64, encodeFloat64, type EncodedArray, toMatrix, toVector } from "./codec.js";
import { DimensionMismatchError } from "./errors.js";

export * from "./errors.js";
export { closeBridge } from "./bridge.js";

export const version = "0.1.0";

/** Version string of the core Python library behind the bridge. */
export function coreVersion(): string {
  return (bridge().call("version") as { version: string }).version;
}

/** Mirror of the core's Adam settings; omitted fields use the core defaults
 * (learningRate 0.1, beta1 0.9, beta2 0.999, epsilon 1e-8, iterations 100).
 */
export interface AdamConfig {
  readonly learningRate?: number;
  readonly beta1?: number;
  readonly beta2?: number;
  readonly epsilon?: number;
  readonly iterations?: number;
}

export interface KernelOptions {
  readonly lengthscale?: number;
  readonly verticalScale?: number;
  readonly noiseVariance?: number;
  /** Which of (lengthscale, verticalScale, noiseVariance) optimize() moves. */
  readonly trainable?: readonly [boolean, boolean, boolean];
  readonly tilesPerDim?: number;
}

export interface TrainingData {
  /** Row-major n x d regressor matrix: Float64Array (with rows/cols) or number[][]. */
  readonly z: Float64Array | readonly (readonly number[])[];
  readonly y: Float64Array | readonly number[];
  readonly rows?: number;
  readonly cols?: number;
}

export interface Matrix {
  readonly data: Float64Array;
  readonly rows: number;
  readonly cols: number;
}

/** Start the core task runtime (workerCount omitted: TASKGP_WORKERS or CPU count). */
export function startRuntime(workerCount?: number): void {
  bridge().call("start_runtime", { workers: workerCount ?? null });
}

/** Stop the core runtime, blocking until every submitted task has drained. */
export function stopRuntime(): void {
  bridge().call("stop_runtime");
}

/** A Gaussian-process model held by the core; calls are synchronous and
 * must be serialized by the caller (one in flight per process).
 */
export class GP {
  #handle: number;
  #regressors: number;

  constructor(train: TrainingData, options: KernelOptions = {}) {
    const z = toMatrix(train.z, train.rows, train.cols);
    const y = toVector(train.y);
    if (y.length !== z.rows) {
      throw new DimensionMismatchError(`${z.rows} rows of z but ${y.length} targets`);
    }
    this.#regressors = z.cols;
    const result = bridge().call("create_gp", {
      z: encodeFloat64(z.data, [z.rows, z.cols]),
      y: encodeFloat64(y, [y.length]),
      lengthscale: options.lengthscale ?? 1.0,
      vertical_scale: options.verticalScale ?? 1.0,
      noise_variance: options.noiseVariance ?? 0.1,
      trainable: options.trainable ?? [true, true, true],
      tiles_per_dim: options.tilesPerDim ?? 1,
    }) as { handle: number };
    this.#handle = result.handle;
  }

  #testParams(test: Float64Array | readonly (readonly number[])[], rows?: number): { handle: number; z: EncodedArray } {
    let z: { data: Float64Array; rows: number; cols: number };
    if (test instanceof Float64Array) {
      const inferred = rows ?? test.length / this.#regressors;
      if (!Number.isInteger(inferred)) {
        throw new DimensionMismatchError(
          `flat test array of length ${test.length} is not a multiple of ${this.#regressors} regressors`,
        );
      }
      z = toMatrix(test, inferred, this.#regressors);
    } else {
      z = toMatrix(test);
    }
    if (z.cols !== this.#regressors) {
      throw new DimensionMismatchError(`test points have ${z.cols} columns, train has ${this.#regressors}`);
    }
    return { handle: this.#handle, z: encodeFloat64(z.data, [z.rows, z.cols]) };
  }

  /** Posterior mean at the given test points. */
  predict(test: Float64Array | readonly (readonly number[])[], rows?: number): Float64Array {
    const reply = bridge().call("predict", this.#testParams(test, rows)) as { mean: EncodedArray };
    return decodeFloat64(reply.mean).data;
  }

  /** Posterior mean and full covariance matrix. */
  predictWithFullCov(
    test: Float64Array | readonly (readonly number[])[],
    rows?: number,
  ): { mean: Float64Array; covariance: Matrix } {
    const reply = bridge().call("predict_full_cov", this.#testParams(test, rows)) as {
      mean: EncodedArray;
      covariance: EncodedArray;
    };
    const cov = decodeFloat64(reply.covariance);
    return {
      mean: decodeFloat64(reply.mean).data,
      covariance: { data: cov.data, rows: cov.shape[0], cols: cov.shape[1] },
    };
  }

  /** Posterior mean and per-point variances (no cross-covariances). */
  predictVar(
    test: Float64Array | readonly (readonly number[])[],
    rows?: number,
  ): { mean: Float64Array; variance: Float64Array } {
    const reply = bridge().call("predict_var", this.#testParams(test, rows)) as {
      mean: EncodedArray;
      variance: EncodedArray;
    };
    return {
      mean: decodeFloat64(reply.mean).data,
      variance: decodeFloat64(reply.variance).data,
    };
  }

  /** Log marginal likelihood of the training data under current parameters. */
  logLikelihood(): number {
    return (bridge().call("log_likelihood", { handle: this.#handle }) as { value: number }).value;
  }

  /** Run Adam on the trainable kernel parameters; returns per-iteration losses. */
  optimize(config?: AdamConfig): number[] {
    const params: Record<string, unknown> = { handle: this.#handle };
    if (config !== undefined) {
      params.config = {
        ...(config.learningRate !== undefined && { learning_rate: config.learningRate }),
        ...(config.beta1 !== undefined && { beta1: config.beta1 }),
        ...(config.beta2 !== undefined && { beta2: config.beta2 }),
        ...(config.epsilon !== undefined && { epsilon: config.epsilon }),
        ...(config.iterations !== undefined && { iterations: config.iterations }),
      };
    }
    return (bridge().call("optimize", params) as { losses: number[] }).losses;
  }

  /** Release the core-side model. Further calls on this GP will fail. */
  dispose(): void {
    bridge().call("free_gp", { handle: this.#handle });
    this.#handle = -1;
  }
}

/** Shut down the bridge process entirely (implies nothing about the runtime:
 * stop it first for a clean drain; otherwise the core's exit hook drains).
 */
export function shutdown(): void {
  closeBridge();
}
