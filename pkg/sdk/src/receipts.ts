/**
 * Offline receipt verification: recompute the Merkle root from the entry
 * hash along the audit path, compare with the header's root, then check
 * the leader's Ed25519 signature over the header preimage. No network,
 * no ledger access; malformed input verifies false, never throws.
 *
 * Accepts both wire forms: the canonical binary receipt and the
 * gateway's JSON form with hex digests.
 */

import { Reader, u32, u64 } from "./encoding.js";
import {
  DIGEST_SIZE,
  DOMAIN_HEADER,
  DOMAIN_LEAF,
  SIGNATURE_SIZE,
  nodeHash,
  sha256,
  verifyEd25519,
} from "./crypto.js";

export const SIDE_LEFT = 0;
export const SIDE_RIGHT = 1;

export interface ReceiptHeader {
  height: bigint;
  prevHash: Buffer;
  merkleRoot: Buffer;
  timestamp: bigint;
  entryCount: number;
  stateDigest: Buffer;
  leaderSignature: Buffer;
}

export interface Receipt {
  entryHash: Buffer;
  leafIndex: number;
  auditPath: Array<{ sibling: Buffer; side: number }>;
  header: ReceiptHeader;
}

const RECEIPT_VERSION = 1;
const HEADER_SIZE = 180;

export function decodeBinaryReceipt(data: Buffer): Receipt {
  const reader = new Reader(data);
  const version = reader.u8();
  if (version !== RECEIPT_VERSION) throw new Error(`unsupported receipt version ${version}`);
  const entryHash = reader.take(DIGEST_SIZE);
  const leafIndex = reader.u32();
  const pathLength = reader.u32();
  const auditPath = [];
  for (let i = 0; i < pathLength; i += 1) {
    const side = reader.u8();
    if (side !== SIDE_LEFT && side !== SIDE_RIGHT) throw new Error(`bad path side ${side}`);
    auditPath.push({ side, sibling: reader.take(DIGEST_SIZE) });
  }
  const header = decodeHeader(reader.take(HEADER_SIZE));
  reader.expectEof();
  return { entryHash, leafIndex, auditPath, header };
}

function decodeHeader(raw: Buffer): ReceiptHeader {
  const reader = new Reader(raw);
  return {
    height: reader.u64(),
    prevHash: reader.take(DIGEST_SIZE),
    merkleRoot: reader.take(DIGEST_SIZE),
    timestamp: reader.u64(),
    entryCount: reader.u32(),
    stateDigest: reader.take(DIGEST_SIZE),
    leaderSignature: reader.take(SIGNATURE_SIZE),
  };
}

function hexBytes(value: unknown, size: number): Buffer {
  if (typeof value !== "string" || !/^[0-9a-f]*$/.test(value)) throw new Error("bad hex field");
  const raw = Buffer.from(value, "hex");
  if (raw.length !== size) throw new Error(`expected ${size} bytes of hex`);
  return raw;
}

function nonNegativeInt(value: unknown): number {
  if (typeof value !== "number" || !Number.isSafeInteger(value) || value < 0) {
    throw new Error("expected a non-negative integer");
  }
  return value;
}

export function receiptFromJson(parsed: unknown): Receipt {
  if (typeof parsed !== "object" || parsed === null) throw new Error("not an object");
  const body = parsed as Record<string, unknown>;
  const headerRaw = body.header as Record<string, unknown>;
  if (typeof headerRaw !== "object" || headerRaw === null) throw new Error("missing header");
  const pathRaw = body.auditPath;
  if (!Array.isArray(pathRaw)) throw new Error("missing auditPath");
  const auditPath = pathRaw.map((node) => {
    const row = node as Record<string, unknown>;
    const side = row.side === "left" ? SIDE_LEFT : row.side === "right" ? SIDE_RIGHT : null;
    if (side === null) throw new Error("bad path side");
    return { side, sibling: hexBytes(row.sibling, DIGEST_SIZE) };
  });
  return {
    entryHash: hexBytes(body.entryHash, DIGEST_SIZE),
    leafIndex: nonNegativeInt(body.leafIndex),
    auditPath,
    header: {
      height: BigInt(nonNegativeInt(headerRaw.height)),
      prevHash: hexBytes(headerRaw.prevHash, DIGEST_SIZE),
      merkleRoot: hexBytes(headerRaw.merkleRoot, DIGEST_SIZE),
      timestamp: BigInt(nonNegativeInt(headerRaw.timestamp)),
      entryCount: nonNegativeInt(headerRaw.entryCount),
      stateDigest: hexBytes(headerRaw.stateDigest, DIGEST_SIZE),
      leaderSignature: hexBytes(headerRaw.leaderSignature, SIGNATURE_SIZE),
    },
  };
}

export function loadReceipt(data: Buffer | string): Receipt {
  if (typeof data === "string") {
    return receiptFromJson(JSON.parse(data));
  }
  const trimmed = data.toString("latin1").trimStart();
  if (trimmed.startsWith("{")) {
    return receiptFromJson(JSON.parse(data.toString("utf-8")));
  }
  return decodeBinaryReceipt(data);
}

export function headerPreimage(header: ReceiptHeader): Buffer {
  return Buffer.concat([
    u64(header.height),
    header.prevHash,
    header.merkleRoot,
    u64(header.timestamp),
    u32(header.entryCount),
    header.stateDigest,
  ]);
}

export function headerHash(header: ReceiptHeader): Buffer {
  return sha256(
    Buffer.from([DOMAIN_HEADER]),
    headerPreimage(header),
    header.leaderSignature,
  );
}

export function leafHash(canonicalEntry: Buffer): Buffer {
  return sha256(Buffer.from([DOMAIN_LEAF]), canonicalEntry);
}

export function verifyReceipt(receipt: Receipt, leaderPublicKey: Buffer): boolean {
  let digest = receipt.entryHash;
  for (const { sibling, side } of receipt.auditPath) {
    digest = side === SIDE_LEFT ? nodeHash(sibling, digest) : nodeHash(digest, sibling);
  }
  if (!digest.equals(receipt.header.merkleRoot)) return false;
  return verifyEd25519(
    leaderPublicKey,
    receipt.header.leaderSignature,
    headerPreimage(receipt.header),
  );
}

/**
 * Verdict for untrusted receipt bytes against the trusted leader key.
 * Must agree with the server-side auditor on every fixture.
 */
export function verifyReceiptOffline(
  data: Buffer | string,
  leaderPublicKeyHex: string,
): boolean {
  try {
    const receipt = loadReceipt(data);
    const key = Buffer.from(leaderPublicKeyHex, "hex");
    if (key.length !== DIGEST_SIZE) return false;
    return verifyReceipt(receipt, key);
  } catch {
    return false;
  }
}
