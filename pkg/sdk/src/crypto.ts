/**
 * Hashing and Ed25519 via node:crypto. Raw 32-byte keys are wrapped in
 * the fixed DER prefixes node's key objects expect.
 */

import { createHash, createPrivateKey, createPublicKey, sign, verify, KeyObject } from "node:crypto";

export const DIGEST_SIZE = 32;
export const SIGNATURE_SIZE = 64;

// SHA-256 domain separation bytes shared with the ledger format
export const DOMAIN_LEAF = 0x00;
export const DOMAIN_NODE = 0x01;
export const DOMAIN_HEADER = 0x02;

const PKCS8_ED25519_PREFIX = Buffer.from("302e020100300506032b657004220420", "hex");
const SPKI_ED25519_PREFIX = Buffer.from("302a300506032b6570032100", "hex");

export function sha256(...chunks: Buffer[]): Buffer {
  const hash = createHash("sha256");
  for (const chunk of chunks) hash.update(chunk);
  return hash.digest();
}

export function nodeHash(left: Buffer, right: Buffer): Buffer {
  return sha256(Buffer.from([DOMAIN_NODE]), left, right);
}

export function privateKeyFromSeed(seedHex: string): KeyObject {
  const seed = Buffer.from(seedHex, "hex");
  if (seed.length !== 32) throw new Error("Ed25519 seed must be 32 bytes of hex");
  return createPrivateKey({
    key: Buffer.concat([PKCS8_ED25519_PREFIX, seed]),
    format: "der",
    type: "pkcs8",
  });
}

export function publicKeyFromRaw(raw: Buffer): KeyObject {
  if (raw.length !== 32) throw new Error("Ed25519 public key must be 32 bytes");
  return createPublicKey({
    key: Buffer.concat([SPKI_ED25519_PREFIX, raw]),
    format: "der",
    type: "spki",
  });
}

export function signEd25519(key: KeyObject, message: Buffer): Buffer {
  return sign(null, message, key);
}

export function verifyEd25519(publicKeyRaw: Buffer, signature: Buffer, message: Buffer): boolean {
  if (publicKeyRaw.length !== 32 || signature.length !== SIGNATURE_SIZE) return false;
  try {
    return verify(null, message, publicKeyFromRaw(publicKeyRaw), signature);
  } catch {
    return false;
  }
}
