/** Typed client errors: every non-2xx response maps to exactly one of these. */

export class PipechainError extends Error {}

/** 401 or 403: credentials rejected or role insufficient. */
export class AuthError extends PipechainError {
  constructor(
    message: string,
    readonly status: number,
    readonly errorKind: string,
  ) {
    super(message);
    this.name = "AuthError";
  }
}

/** 422: the contract engine rejected the submission; message is the server's. */
export class ContractError extends PipechainError {
  constructor(
    message: string,
    readonly status = 422,
  ) {
    super(message);
    this.name = "ContractError";
  }
}

/** 404 (and 416 for reading indexes). */
export class NotFoundError extends PipechainError {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "NotFoundError";
  }
}

/** Any other HTTP error response (400, 409, 5xx); never retried. */
export class ApiError extends PipechainError {
  constructor(
    message: string,
    readonly status: number,
    readonly errorKind: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Connection-level failure that survived every retry attempt. */
export class TransportError extends PipechainError {
  constructor(
    message: string,
    readonly attempts: number,
    readonly cause?: unknown,
  ) {
    super(message);
    this.name = "TransportError";
  }
}

/** Server reply did not match the documented response schema. */
export class SchemaError extends PipechainError {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}
