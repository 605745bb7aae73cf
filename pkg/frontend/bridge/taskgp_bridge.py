"""Line-delimited JSON server exposing the public taskgp API over stdio.

One request object per stdin line, one response object per stdout line.
Float64 arrays travel as base64-encoded little-endian buffers so values
survive the hop bit-for-bit; nothing is ever printed to stdout except
responses. Uses only the package's public surface.
"""

import base64
import json
import sys

import numpy as np

import taskgp


def encode_array(arr):
    arr = np.ascontiguousarray(arr, dtype="<f8")
    return {
        "__f64__": base64.b64encode(arr.tobytes()).decode("ascii"),
        "shape": list(arr.shape),
    }


def decode_array(obj):
    flat = np.frombuffer(base64.b64decode(obj["__f64__"]), dtype="<f8")
    return flat.reshape(obj["shape"]).copy()


class Server:
    def __init__(self):
        self._models = {}
        self._next_handle = 1

    def _model(self, params):
        handle = params["handle"]
        if handle not in self._models:
            raise taskgp.errors.InvalidConfig(f"unknown GP handle {handle}")
        return self._models[handle]

    @staticmethod
    def _test_set(params):
        z = decode_array(params["z"])
        return taskgp.Dataset(z=z, y=np.zeros(z.shape[0]))

    def do_version(self, params):
        return {"version": taskgp.__version__}

    def do_ping(self, params):
        return {}

    def do_start_runtime(self, params):
        workers = params.get("workers")
        config = taskgp.RuntimeConfig(worker_count=workers) if workers else None
        taskgp.start_runtime(config)
        return {}

    def do_stop_runtime(self, params):
        taskgp.stop_runtime()
        return {}

    def do_create_gp(self, params):
        kernel = taskgp.KernelParams(
            lengthscale=params.get("lengthscale", 1.0),
            vertical_scale=params.get("vertical_scale", 1.0),
            noise_variance=params.get("noise_variance", 0.1),
            trainable=tuple(params.get("trainable", (True, True, True))),
        )
        train = taskgp.Dataset(
            z=decode_array(params["z"]), y=decode_array(params["y"])
        )
        model = taskgp.GPModel(
            train, kernel, tiles_per_dim=params.get("tiles_per_dim", 1)
        )
        handle = self._next_handle
        self._next_handle += 1
        self._models[handle] = model
        return {"handle": handle}

    def do_free_gp(self, params):
        self._models.pop(params["handle"], None)
        return {}

    def do_predict(self, params):
        result = self._model(params).predict(self._test_set(params))
        return {"mean": encode_array(result.mean)}

    def do_predict_full_cov(self, params):
        result = self._model(params).predict_with_full_cov(self._test_set(params))
        return {
            "mean": encode_array(result.mean),
            "covariance": encode_array(result.full_covariance),
        }

    def do_predict_var(self, params):
        result = self._model(params).predict_variance(self._test_set(params))
        return {
            "mean": encode_array(result.mean),
            "variance": encode_array(result.variance),
        }

    def do_log_likelihood(self, params):
        return {"value": self._model(params).log_likelihood()}

    def do_optimize(self, params):
        config = params.get("config")
        opt = taskgp.AdamConfig(**config) if config else None
        losses = self._model(params).optimize(opt)
        return {"losses": [float(v) for v in losses]}

    def handle(self, request):
        method = request.get("method", "")
        handler = getattr(self, f"do_{method}", None)
        if handler is None:
            raise taskgp.errors.InvalidConfig(f"unknown method {method!r}")
        return handler(request.get("params", {}))


def main():
    if sys.byteorder != "little":  # pragma: no cover - codec assumes LE hosts
        raise SystemExit("taskgp bridge requires a little-endian host")
    server = Server()
    out = sys.stdout
    for line in sys.stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        rid = request.get("id")
        if request.get("method") == "shutdown":
            out.write(json.dumps({"id": rid, "ok": True, "result": {}}) + "\n")
            out.flush()
            break
        try:
            response = {"id": rid, "ok": True, "result": server.handle(request)}
        except taskgp.errors.TaskGPError as exc:
            response = {
                "id": rid,
                "ok": False,
                "error": {"type": type(exc).__name__, "message": str(exc)},
            }
        except Exception as exc:  # noqa: BLE001 - survive any request
            response = {
                "id": rid,
                "ok": False,
                "error": {"type": "InternalError", "message": repr(exc)},
            }
        out.write(json.dumps(response) + "\n")
        out.flush()
    # EOF without shutdown: fall through and let taskgp's atexit hook drain.


if __name__ == "__main__":
    main()
