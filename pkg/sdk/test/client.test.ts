import { createServer, type IncomingMessage, type Server, type ServerResponse } from "node:http";
import { AddressInfo } from "node:net";

import { afterEach, describe, expect, it } from "vitest";

import { PipechainClient } from "../src/client.js";
import { backoffMs } from "../src/backoff.js";
import { AuthError, ContractError, NotFoundError, SchemaError, TransportError } from "../src/errors.js";

type Handler = (req: IncomingMessage, res: ServerResponse, body: Buffer) => void;

let server: Server | null = null;

async function serve(handler: Handler): Promise<string> {
  server = createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => handler(req, res, Buffer.concat(chunks)));
  });
  await new Promise<void>((resolve) => server!.listen(0, "127.0.0.1", resolve));
  const { port } = server!.address() as AddressInfo;
  return `http://127.0.0.1:${port}`;
}

afterEach(async () => {
  if (server) {
    await new Promise((resolve) => server!.close(resolve));
    server = null;
  }
});

function client(baseUri: string, overrides: Partial<ConstructorParameters<typeof PipechainClient>[0]> = {}) {
  return new PipechainClient({
    baseUri,
    ledger: "dews",
    principalId: "sensor-A",
    bearerToken: "tok",
    retry: { maxAttempts: 3, backoffBaseMs: 1 },
    timeoutSeconds: 2,
    ...overrides,
  });
}

describe("config validation", () => {
  it("requires exactly one credential kind", () => {
    expect(() => client("http://x", { bearerToken: undefined })).toThrow();
    expect(
      () => client("http://x", { signingKeySeedHex: "11".repeat(32) }),
    ).toThrow();
  });

  it("requires at least one attempt", () => {
    expect(() => client("http://x", { retry: { maxAttempts: 0, backoffBaseMs: 1 } })).toThrow();
  });
});

describe("typed errors", () => {
  it("maps 401 to AuthError with the server's error kind", async () => {
    const base = await serve((_req, res) => {
      res.writeHead(401).end(JSON.stringify({ error: "ReplayedNonce", message: "nope" }));
    });
    const failure = await client(base).submitReading("c1", "temperature", "1.0", "C", 1).catch((e) => e);
    expect(failure).toBeInstanceOf(AuthError);
    expect(failure.errorKind).toBe("ReplayedNonce");
  });

  it("surfaces the contract guard message verbatim on 422", async () => {
    const base = await serve((_req, res) => {
      res.writeHead(422).end(
        JSON.stringify({
          error: "ContractRejected",
          message: "Only sensor can add temperature readings",
        }),
      );
    });
    const failure = await client(base).submitReading("c1", "temperature", "1.0", "C", 1).catch((e) => e);
    expect(failure).toBeInstanceOf(ContractError);
    expect(failure.message).toBe("Only sensor can add temperature readings");
  });

  it("maps 404 to NotFoundError", async () => {
    const base = await serve((_req, res) => {
      res.writeHead(404).end(JSON.stringify({ error: "NotFound", message: "no contract" }));
    });
    const failure = await client(base).getReadings("missing").catch((e) => e);
    expect(failure).toBeInstanceOf(NotFoundError);
  });

  it("validates the response schema", async () => {
    const base = await serve((_req, res) => {
      res.writeHead(200).end(JSON.stringify({ unexpected: true }));
    });
    const failure = await client(base).getReadings("c1").catch((e) => e);
    expect(failure).toBeInstanceOf(SchemaError);
  });
});

describe("retry behavior", () => {
  it("does not retry on 4xx", async () => {
    let hits = 0;
    const base = await serve((_req, res) => {
      hits += 1;
      res.writeHead(400).end(JSON.stringify({ error: "MalformedBody", message: "bad" }));
    });
    await client(base).submitReading("c1", "temperature", "1.0", "C", 1).catch(() => undefined);
    expect(hits).toBe(1);
  });

  it("retries transport failures then raises TransportError", async () => {
    const failure = await client("http://127.0.0.1:1", {
      retry: { maxAttempts: 3, backoffBaseMs: 1 },
    })
      .submitReading("c1", "temperature", "1.0", "C", 1)
      .catch((e) => e);
    expect(failure).toBeInstanceOf(TransportError);
    expect(failure.attempts).toBe(3);
  });

  it("succeeds after a transient connection failure", async () => {
    // occupy a port, close it, then bring a real server up on it between attempts
    const probe = createServer(() => undefined);
    await new Promise<void>((resolve) => probe.listen(0, "127.0.0.1", resolve));
    const { port } = probe.address() as AddressInfo;
    await new Promise((resolve) => probe.close(resolve));

    const delayed = client(`http://127.0.0.1:${port}`, {
      retry: { maxAttempts: 5, backoffBaseMs: 50 },
    });
    const pending = delayed.getTransaction("t1");
    setTimeout(() => {
      server = createServer((_req, res) => {
        res.writeHead(200).end(JSON.stringify({ transactionId: "t1", state: "Pending" }));
      });
      server.listen(port, "127.0.0.1");
    }, 60);
    const status = await pending;
    expect(status.state).toBe("Pending");
  });

  it("uses a deterministic capped backoff sequence", () => {
    expect([0, 1, 2, 3, 10].map((a) => backoffMs(a, 100))).toEqual([100, 200, 400, 800, 30_000]);
  });
});

describe("request signing", () => {
  it("sends detached signature headers with increasing nonces", async () => {
    const seen: Array<Record<string, string>> = [];
    const base = await serve((req, res) => {
      seen.push({
        principal: String(req.headers["x-pipechain-principal"]),
        nonce: String(req.headers["x-pipechain-nonce"]),
        signature: String(req.headers["x-pipechain-signature"]),
      });
      res.writeHead(200).end(JSON.stringify({ transactionId: "t1", state: "Pending" }));
    });
    const signed = client(base, {
      bearerToken: undefined,
      signingKeySeedHex: "ab".repeat(32),
    });
    await signed.submitReading("c1", "temperature", "20.5", "C", 7);
    await signed.submitReading("c1", "temperature", "21.5", "C", 8);
    expect(seen).toHaveLength(2);
    expect(seen[0].principal).toBe("sensor-A");
    expect(seen[0].signature).toMatch(/^[0-9a-f]{128}$/);
    expect(BigInt(seen[1].nonce)).toBeGreaterThan(BigInt(seen[0].nonce));
  });
});
