/**
 * Gateway client: authenticated submission and reads over the documented
 * REST interface. One in-flight request per client instance; retries
 * apply only to connection-level failures, never to HTTP error replies.
 */

import { KeyObject } from "node:crypto";

import { backoffMs, sleep } from "./backoff.js";
import { encodeString, u64 } from "./encoding.js";
import { privateKeyFromSeed, sha256, signEd25519 } from "./crypto.js";
import {
  ApiError,
  AuthError,
  ContractError,
  NotFoundError,
  SchemaError,
  TransportError,
} from "./errors.js";
import { verifyReceiptOffline } from "./receipts.js";
import { descaleValue, scaleValue } from "./scaling.js";

export interface RetryPolicy {
  maxAttempts: number;
  backoffBaseMs: number;
}

export interface ClientConfig {
  baseUri: string;
  ledger: string;
  principalId: string;
  /** exactly one of the two credential kinds must be set */
  signingKeySeedHex?: string;
  bearerToken?: string;
  timeoutSeconds?: number;
  retry?: RetryPolicy;
}

export interface ReadingView {
  parameter: string;
  /** exact decimal string, valueScaled / 1000 */
  value: string;
  valueScaled: number;
  unit: string;
  sourceTimestamp: number;
  ledgerTimestamp: number;
}

export interface ContractView {
  contractId: string;
  sensorPrincipalId: string;
  state: string;
  readings: ReadingView[];
}

export interface TransactionStatus {
  transactionId: string;
  state: "Pending" | "Committed" | "Rejected";
  entry?: Record<string, unknown>;
}

interface HttpReply {
  status: number;
  body: string;
}

export class PipechainClient {
  private readonly signingKey: KeyObject | null;
  private readonly retry: RetryPolicy;
  private readonly timeoutMs: number;
  private lastNonce = 0;

  constructor(private readonly config: ClientConfig) {
    const kinds = Number(Boolean(config.signingKeySeedHex)) + Number(Boolean(config.bearerToken));
    if (kinds !== 1) {
      throw new Error("exactly one of signingKeySeedHex / bearerToken must be set");
    }
    this.retry = config.retry ?? { maxAttempts: 3, backoffBaseMs: 100 };
    if (this.retry.maxAttempts < 1) throw new Error("retry.maxAttempts must be >= 1");
    this.timeoutMs = 1000 * (config.timeoutSeconds ?? 10);
    this.signingKey = config.signingKeySeedHex
      ? privateKeyFromSeed(config.signingKeySeedHex)
      : null;
  }

  // -- public operations ---------------------------------------------------

  /** Scale, sign, submit; resolves to the (provisional) transaction id. */
  async submitReading(
    contractId: string,
    parameter: string,
    value: number | string,
    unit: string,
    sourceTimestamp: number,
  ): Promise<string> {
    const body = {
      contractId,
      action: "addReading",
      parameter,
      valueScaled: scaleValue(value),
      unit,
      sourceTimestamp,
    };
    const reply = await this.request(
      "POST",
      `/ledgers/${this.config.ledger}/transactions`,
      JSON.stringify(body),
    );
    const parsed = this.parseObject(reply);
    if (typeof parsed.transactionId !== "string") {
      throw new SchemaError("response lacks transactionId");
    }
    return parsed.transactionId;
  }

  /** All committed readings of a contract, values descaled exactly. */
  async getReadings(contractId: string): Promise<ReadingView[]> {
    return (await this.getContract(contractId)).readings;
  }

  async getContract(contractId: string): Promise<ContractView> {
    const reply = await this.request(
      "GET",
      `/ledgers/${this.config.ledger}/contracts/${contractId}/readings`,
    );
    const parsed = this.parseObject(reply);
    if (!Array.isArray(parsed.readings)) throw new SchemaError("response lacks readings");
    const readings = parsed.readings.map((row) => {
      const record = row as Record<string, unknown>;
      if (
        typeof record.parameter !== "string" ||
        typeof record.valueScaled !== "number" ||
        typeof record.unit !== "string" ||
        typeof record.sourceTimestamp !== "number" ||
        typeof record.ledgerTimestamp !== "number"
      ) {
        throw new SchemaError("malformed reading row");
      }
      return {
        parameter: record.parameter,
        value: descaleValue(record.valueScaled),
        valueScaled: record.valueScaled,
        unit: record.unit,
        sourceTimestamp: record.sourceTimestamp,
        ledgerTimestamp: record.ledgerTimestamp,
      };
    });
    return {
      contractId: String(parsed.contractId ?? contractId),
      sensorPrincipalId: String(parsed.sensorPrincipalId ?? ""),
      state: String(parsed.state ?? ""),
      readings,
    };
  }

  async getTransaction(transactionId: string): Promise<TransactionStatus> {
    const reply = await this.request(
      "GET",
      `/ledgers/${this.config.ledger}/transactions/${transactionId}`,
    );
    const parsed = this.parseObject(reply);
    if (typeof parsed.transactionId !== "string" || typeof parsed.state !== "string") {
      throw new SchemaError("malformed transaction status");
    }
    return parsed as unknown as TransactionStatus;
  }

  /** Poll until the transaction commits; returns its final `<height>.<leaf>` id. */
  async waitForCommit(transactionId: string, timeoutMs = 10_000): Promise<string> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.getTransaction(transactionId);
      if (status.state === "Committed") return status.transactionId;
      if (status.state === "Rejected") {
        throw new ContractError(`transaction ${transactionId} was rejected`);
      }
      if (Date.now() >= deadline) {
        throw new TransportError(`transaction ${transactionId} still pending`, 0);
      }
      await sleep(50);
    }
  }

  /** Raw receipt wire bytes (JSON form with hex digests). */
  async getReceipt(transactionId: string): Promise<Buffer> {
    const reply = await this.request(
      "GET",
      `/ledgers/${this.config.ledger}/transactions/${transactionId}/receipt`,
    );
    return Buffer.from(reply.body, "utf-8");
  }

  /** Offline verification; no network. Malformed input returns false. */
  verifyReceiptOffline(receipt: Buffer | string, leaderPublicKeyHex: string): boolean {
    return verifyReceiptOffline(receipt, leaderPublicKeyHex);
  }

  // -- transport ------------------------------------------------------------

  private parseObject(reply: HttpReply): Record<string, unknown> {
    let parsed: unknown;
    try {
      parsed = JSON.parse(reply.body);
    } catch {
      throw new SchemaError("response body is not JSON");
    }
    if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
      throw new SchemaError("response body is not a JSON object");
    }
    return parsed as Record<string, unknown>;
  }

  private headers(method: string, pathWithQuery: string, body: Buffer): Record<string, string> {
    const base: Record<string, string> = { "content-type": "application/json" };
    if (this.signingKey === null) {
      base.authorization = `Bearer ${this.config.bearerToken}`;
      return base;
    }
    this.lastNonce = Math.max(this.lastNonce + 1, Date.now());
    const preimage = Buffer.concat([
      encodeString(method.toUpperCase()),
      encodeString(pathWithQuery),
      sha256(body),
      u64(this.lastNonce),
    ]);
    base["x-pipechain-principal"] = this.config.principalId;
    base["x-pipechain-nonce"] = String(this.lastNonce);
    base["x-pipechain-signature"] = signEd25519(this.signingKey, preimage).toString("hex");
    return base;
  }

  private async request(method: string, path: string, body = ""): Promise<HttpReply> {
    const raw = Buffer.from(body, "utf-8");
    const url = `${this.config.baseUri}${path}`;
    let lastFailure: unknown = null;
    for (let attempt = 0; attempt < this.retry.maxAttempts; attempt += 1) {
      if (attempt > 0) await sleep(backoffMs(attempt - 1, this.retry.backoffBaseMs));
      // the signature covers the nonce, so every attempt is freshly signed
      const headers = this.headers(method, path, raw);
      let response: Response;
      try {
        response = await fetch(url, {
          method,
          headers,
          body: method === "GET" || method === "DELETE" ? undefined : new Uint8Array(raw),
          signal: AbortSignal.timeout(this.timeoutMs),
        });
      } catch (failure) {
        lastFailure = failure;
        continue; // transport-level failure: retry
      }
      const text = await response.text();
      if (response.ok) return { status: response.status, body: text };
      throw this.toError(response.status, text); // HTTP errors never retry
    }
    throw new TransportError(
      `${method} ${url} failed after ${this.retry.maxAttempts} attempts`,
      this.retry.maxAttempts,
      lastFailure,
    );
  }

  private toError(status: number, body: string): Error {
    let errorKind = "Unknown";
    let message = body;
    try {
      const parsed = JSON.parse(body) as Record<string, unknown>;
      if (typeof parsed.error === "string") errorKind = parsed.error;
      if (typeof parsed.message === "string") message = parsed.message;
    } catch {
      // non-JSON error body; keep raw text
    }
    if (status === 401 || status === 403) return new AuthError(message, status, errorKind);
    if (status === 422) return new ContractError(message, status);
    if (status === 404 || status === 416) return new NotFoundError(message, status);
    return new ApiError(message, status, errorKind);
  }
}
