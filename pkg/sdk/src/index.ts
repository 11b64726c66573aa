export { PipechainClient } from "./client.js";
export type {
  ClientConfig,
  ContractView,
  ReadingView,
  RetryPolicy,
  TransactionStatus,
} from "./client.js";
export {
  ApiError,
  AuthError,
  ContractError,
  NotFoundError,
  PipechainError,
  SchemaError,
  TransportError,
} from "./errors.js";
export { scaleValue, descaleValue } from "./scaling.js";
export {
  decodeBinaryReceipt,
  loadReceipt,
  receiptFromJson,
  verifyReceipt,
  verifyReceiptOffline,
} from "./receipts.js";
export type { Receipt, ReceiptHeader } from "./receipts.js";
export { backoffMs } from "./backoff.js";
