/** Typed errors mirroring the core library's exception taxonomy. */

export class TaskGPError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Runtime started while already running. */
export class AlreadyRunningError extends TaskGPError {}

/** Runtime-dependent call issued while no runtime is running. */
export class NotRunningError extends TaskGPError {}

/** Covariance matrix was not positive definite (bad data or parameters). */
export class NotPositiveDefiniteError extends TaskGPError {}

/** Triangular solve hit a zero diagonal. */
export class SingularTriangularError extends TaskGPError {}

/** Array shapes disagree at an API boundary. */
export class DimensionMismatchError extends TaskGPError {}

/** Tile grid does not divide the matrix it partitions. */
export class TilingError extends TaskGPError {}

/** Invalid parameter or configuration value. */
export class InvalidConfigError extends TaskGPError {}

/** An internal numerical cross-check failed in the core library. */
export class NumericalConsistencyError extends TaskGPError {}

/** Simulated trajectory left the representable range. */
export class DivergenceError extends TaskGPError {}

/** Malformed text input (CSV and friends). */
export class ParseError extends TaskGPError {}

/** The bridge transport itself failed (child died, protocol error, ...). */
export class BridgeError extends TaskGPError {}

const BY_CORE_NAME: Record<string, new (message: string) => TaskGPError> = {
  AlreadyRunning: AlreadyRunningError,
  NotRunning: NotRunningError,
  NotPositiveDefinite: NotPositiveDefiniteError,
  SingularTriangular: SingularTriangularError,
  DimensionMismatch: DimensionMismatchError,
  TilingError: TilingError,
  InvalidConfig: InvalidConfigError,
  NumericalConsistencyError: NumericalConsistencyError,
  DivergenceError: DivergenceError,
  ParseError: ParseError,
};

/** Rehydrate a core exception (by its Python class name) as a typed error. */
export function errorFromBridge(type: string, message: string): TaskGPError {
  const cls = BY_CORE_NAME[type];
  if (cls !== undefined) return new cls(message);
  return new BridgeError(`${type}: ${message}`);
}
