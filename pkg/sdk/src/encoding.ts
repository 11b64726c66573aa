/**
 * The ledger's canonical binary encoding, as far as the client needs it:
 * big-endian fixed-width integers, u32-length-prefixed UTF-8 strings.
 */

export function u32(value: number): Buffer {
  const out = Buffer.alloc(4);
  out.writeUInt32BE(value >>> 0);
  return out;
}

export function u64(value: number | bigint): Buffer {
  const out = Buffer.alloc(8);
  out.writeBigUInt64BE(BigInt(value));
  return out;
}

export function encodeString(text: string): Buffer {
  const raw = Buffer.from(text, "utf-8");
  return Buffer.concat([u32(raw.length), raw]);
}

/** Strict sequential reader; any truncation or trailing byte is an error. */
export class Reader {
  private pos = 0;

  constructor(private readonly data: Buffer) {}

  get remaining(): number {
    return this.data.length - this.pos;
  }

  take(n: number): Buffer {
    if (n < 0 || this.remaining < n) {
      throw new Error(`truncated input: need ${n} bytes at ${this.pos}`);
    }
    const out = this.data.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  u8(): number {
    return this.take(1)[0];
  }

  u32(): number {
    return this.take(4).readUInt32BE();
  }

  u64(): bigint {
    return this.take(8).readBigUInt64BE();
  }

  expectEof(): void {
    if (this.remaining !== 0) {
      throw new Error(`${this.remaining} trailing bytes after structure`);
    }
  }
}
