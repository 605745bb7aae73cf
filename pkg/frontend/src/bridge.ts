/** Synchronous transport to the Python core.
 *
 * A worker thread owns a long-lived `python3 taskgp_bridge.py` child and
 * relays line-delimited JSON. The calling thread posts a request through a
 * MessageChannel, parks in Atomics.wait, and drains the reply with
 * receiveMessageOnPort — a blocking call API on top of an async transport,
 * with the Python process paid for once, not per call.
 *
 * Hazard, by design: while a call is in flight the calling thread is
 * blocked, so this API must be driven from one thread at a time. Other
 * worker threads in the host process are unaffected.
 */

import { MessageChannel, type MessagePort, receiveMessageOnPort, Worker } from "node:worker_threads";

import { BridgeError, errorFromBridge } from "./errors.js";

interface BridgeFailure {
  readonly type: string;
  readonly message: string;
}

interface BridgeResponse {
  readonly id: number;
  readonly ok: boolean;
  readonly result?: unknown;
  readonly error?: BridgeFailure;
}

const CALL_TIMEOUT_MS = Number(process.env.TASKGP_BRIDGE_TIMEOUT_MS ?? 10 * 60 * 1000);

class Bridge {
  #worker: Worker;
  #port: MessagePort;
  #flag: Int32Array;
  #nextId = 1;
  #closed = false;

  constructor() {
    const channel = new MessageChannel();
    const signal = new SharedArrayBuffer(4);
    this.#port = channel.port1;
    this.#flag = new Int32Array(signal);
    this.#worker = new Worker(new URL("../worker/bridge-worker.mjs", import.meta.url), {
      workerData: {
        port: channel.port2,
        signal,
        python: process.env.TASKGP_PYTHON ?? "python3",
        bridgeScript: new URL("../bridge/taskgp_bridge.py", import.meta.url).pathname,
      },
      transferList: [channel.port2],
    });
    // Neither the worker nor its port may keep the host process alive once
    // the main thread is done; the Python side drains via its own exit hook.
    this.#worker.unref();
  }

  call(method: string, params: Record<string, unknown> = {}, timeoutMs: number = CALL_TIMEOUT_MS): unknown {
    if (this.#closed) {
      throw new BridgeError("bridge has been shut down");
    }
    const id = this.#nextId++;
    Atomics.store(this.#flag, 0, 0);
    this.#port.postMessage({ id, method, params });
    const outcome = Atomics.wait(this.#flag, 0, 0, timeoutMs);
    if (outcome === "timed-out") {
      this.#closed = true;
      void this.#worker.terminate();
      throw new BridgeError(`${method} timed out after ${timeoutMs} ms`);
    }
    const received = receiveMessageOnPort(this.#port);
    if (received === undefined) {
      throw new BridgeError(`no reply for ${method}`);
    }
    const response = received.message as BridgeResponse;
    if (response.id !== id) {
      throw new BridgeError(`reply id ${response.id} does not match request ${id}`);
    }
    if (!response.ok) {
      const failure = response.error ?? { type: "InternalError", message: "unknown" };
      if (failure.type === "BridgeClosed") {
        this.#closed = true;
        throw new BridgeError(failure.message);
      }
      throw errorFromBridge(failure.type, failure.message);
    }
    return response.result;
  }

  close(timeoutMs = 2000): void {
    if (this.#closed) return;
    try {
      // Bounded wait: if the worker is already gone we still terminate below.
      this.call("__terminate__", {}, timeoutMs);
    } catch (err) {
      if (!(err instanceof BridgeError)) throw err;
    }
    this.#closed = true;
    void this.#worker.terminate();
  }
}

let active: Bridge | undefined;

/** The process-wide bridge, spawned on first use. */
export function bridge(): Bridge {
  if (active === undefined) {
    active = new Bridge();
  }
  return active;
}

/** Tear down the Python child and its worker thread.
 *
 * Best-effort: the child gets stdin EOF, drains any running task graph via
 * the core's exit hook, and exits. The next API call spawns a fresh bridge.
 * If the host process dies without this (or without stop), the child sees
 * EOF and drains anyway; only a hard kill of the whole tree skips the drain.
 */
export function closeBridge(): void {
  if (active !== undefined) {
    const current = active;
    active = undefined;
    current.close();
  }
}

process.once("exit", () => {
  try {
    closeBridge();
  } catch {
    // exiting anyway; the child's own exit path handles the drain
  }
});
