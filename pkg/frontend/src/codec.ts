/** Base64 float64 codec shared with the Python side of the bridge.
 *
 * Buffers are raw little-endian IEEE 754 doubles, so a value that crosses
 * the boundary and comes back is the same 64 bits — no decimal round trip.
 */

import { Buffer } from "node:buffer";
import { endianness } from "node:os";

import { DimensionMismatchError } from "./errors.js";

if (endianness() !== "LE") {
  throw new Error("taskgp bridge codec assumes a little-endian host");
}

export interface EncodedArray {
  readonly __f64__: string;
  readonly shape: readonly number[];
}

export function encodeFloat64(values: Float64Array, shape: readonly number[]): EncodedArray {
  const count = shape.reduce((a, b) => a * b, 1);
  if (count !== values.length) {
    throw new RangeError(`shape [${shape}] does not match length ${values.length}`);
  }
  const bytes = Buffer.from(values.buffer, values.byteOffset, values.byteLength);
  return { __f64__: bytes.toString("base64"), shape: [...shape] };
}

export function decodeFloat64(encoded: EncodedArray): { data: Float64Array; shape: readonly number[] } {
  const bytes = Buffer.from(encoded.__f64__, "base64");
  // Copy into a fresh ArrayBuffer: pooled Buffers need not be 8-byte aligned.
  const aligned = new ArrayBuffer(bytes.byteLength);
  new Uint8Array(aligned).set(bytes);
  return { data: new Float64Array(aligned), shape: encoded.shape };
}

let warnedAboutCopies = false;

/** Coerce row-major matrix input to a flat Float64Array plus dimensions.
 *
 * Float64Array input is used as-is; plain arrays are converted once, with a
 * one-time warning, mirroring how the core treats wrong-dtype inputs.
 */
export function toMatrix(
  input: Float64Array | readonly (readonly number[])[],
  rows?: number,
  cols?: number,
): { data: Float64Array; rows: number; cols: number } {
  if (input instanceof Float64Array) {
    if (rows === undefined || cols === undefined) {
      throw new DimensionMismatchError("Float64Array matrix input needs explicit rows and cols");
    }
    if (rows * cols !== input.length) {
      throw new DimensionMismatchError(`${rows}x${cols} does not match length ${input.length}`);
    }
    return { data: input, rows, cols };
  }
  warnOnce();
  const r = input.length;
  const c = r > 0 ? input[0].length : 0;
  const data = new Float64Array(r * c);
  for (let i = 0; i < r; i++) {
    if (input[i].length !== c) {
      throw new DimensionMismatchError(`row ${i} has ${input[i].length} entries, expected ${c}`);
    }
    data.set(input[i], i * c);
  }
  return { data, rows: r, cols: c };
}

export function toVector(input: Float64Array | readonly number[]): Float64Array {
  if (input instanceof Float64Array) return input;
  warnOnce();
  return Float64Array.from(input);
}

function warnOnce(): void {
  if (!warnedAboutCopies) {
    warnedAboutCopies = true;
    process.emitWarning(
      "taskgp: plain-array input is copied to Float64Array; pass Float64Array to avoid the copy",
    );
  }
}

