/**
 * Integration against a live gateway: the testbed script starts the real
 * server (single-node cluster, one registered sensor contract) and this
 * suite drives it purely over HTTP, exactly as a production client would.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { PipechainClient } from "../src/client.js";
import { AuthError, ContractError, NotFoundError } from "../src/errors.js";

const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..");
const PORT = 8719;

interface Testbed {
  baseUri: string;
  ledger: string;
  contractId: string;
  adminToken: string;
  readerToken: string;
  sensorPrincipalId: string;
  sensorSeedHex: string;
  outsiderPrincipalId: string;
  outsiderSeedHex: string;
  leaderPublicKeyHex: string;
}

let gateway: ChildProcess | null = null;
let testbed: Testbed;

async function waitForGateway(baseUri: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      await fetch(baseUri + "/ledgers/probe");
      return; // any HTTP response (401) means the server is up
    } catch {
      if (Date.now() > deadline) throw new Error("gateway did not come up");
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
}

beforeAll(async () => {
  const out = mkdtempSync(join(tmpdir(), "pipechain-sdk-it-"));
  gateway = spawn(
    "python3",
    [join(REPO_ROOT, "scripts", "serve_sdk_testbed.py"), "--port", String(PORT), "--out", out],
    { cwd: REPO_ROOT, stdio: ["ignore", "inherit", "inherit"] },
  );
  await waitForGateway(`http://127.0.0.1:${PORT}`);
  testbed = JSON.parse(readFileSync(join(out, "testbed.json"), "utf-8"));
}, 60_000);

afterAll(() => {
  gateway?.kill("SIGKILL");
});

function sensorClient(): PipechainClient {
  return new PipechainClient({
    baseUri: testbed.baseUri,
    ledger: testbed.ledger,
    principalId: testbed.sensorPrincipalId,
    signingKeySeedHex: testbed.sensorSeedHex,
  });
}

function readerClient(): PipechainClient {
  return new PipechainClient({
    baseUri: testbed.baseUri,
    ledger: testbed.ledger,
    principalId: "testbed-reader",
    bearerToken: testbed.readerToken,
  });
}

describe("live gateway round trips", () => {
  it("submits a reading, commits, and reads the exact value back", async () => {
    const sensor = sensorClient();
    const txId = await sensor.submitReading(
      testbed.contractId,
      "temperature",
      "25.31",
      "C",
      1_677_651_200,
    );
    expect(txId).toBeTruthy();
    const finalId = await sensor.waitForCommit(txId);
    expect(finalId).toMatch(/^\d+\.\d+$/);

    const readings = await readerClient().getReadings(testbed.contractId);
    const last = readings[readings.length - 1];
    expect(last.valueScaled).toBe(25310);
    expect(last.value).toBe("25.310");
    expect(Number(last.value)).toBe(25.31); // exactly equal to the input
    expect(last.unit).toBe("C");
    expect(last.sourceTimestamp).toBe(1_677_651_200);
  }, 30_000);

  it("round-trips awkward decimal values exactly", async () => {
    const sensor = sensorClient();
    const inputs = ["0.001", "-40.005", "99.999", "7"];
    const before = (await readerClient().getReadings(testbed.contractId)).length;
    for (const value of inputs) {
      const txId = await sensor.submitReading(
        testbed.contractId, "temperature", value, "C", 1_700_000_000,
      );
      await sensor.waitForCommit(txId);
    }
    const readings = await readerClient().getReadings(testbed.contractId);
    const got = readings.slice(before).map((r) => r.value);
    expect(got).toEqual(["0.001", "-40.005", "99.999", "7.000"]);
    // numeric equality with the submitted inputs, bit for bit via scaling
    got.forEach((value, i) => expect(Number(value)).toBe(Number(inputs[i])));
  }, 30_000);

  it("surfaces the exact contract-guard message for a non-sensor principal", async () => {
    const outsider = new PipechainClient({
      baseUri: testbed.baseUri,
      ledger: testbed.ledger,
      principalId: testbed.outsiderPrincipalId,
      signingKeySeedHex: testbed.outsiderSeedHex,
    });
    const failure = await outsider
      .submitReading(testbed.contractId, "temperature", "1.0", "C", 1)
      .catch((e) => e);
    expect(failure).toBeInstanceOf(ContractError);
    expect(failure.message).toBe("Only sensor can add temperature readings");
  }, 30_000);

  it("fetches a receipt that verifies offline and rejects when tampered", async () => {
    const sensor = sensorClient();
    const txId = await sensor.submitReading(
      testbed.contractId, "temperature", "21.125", "C", 1_700_000_100,
    );
    const finalId = await sensor.waitForCommit(txId);
    const receipt = await readerClient().getReceipt(finalId);

    expect(sensor.verifyReceiptOffline(receipt, testbed.leaderPublicKeyHex)).toBe(true);
    expect(sensor.verifyReceiptOffline(receipt, "00".repeat(32))).toBe(false);

    const body = JSON.parse(receipt.toString("utf-8"));
    body.header.timestamp += 1;
    expect(
      sensor.verifyReceiptOffline(JSON.stringify(body), testbed.leaderPublicKeyHex),
    ).toBe(false);
  }, 30_000);

  it("maps auth and lookup failures to typed errors", async () => {
    const badToken = new PipechainClient({
      baseUri: testbed.baseUri,
      ledger: testbed.ledger,
      principalId: "whoever",
      bearerToken: "not-a-real-token",
    });
    await expect(badToken.getReadings(testbed.contractId)).rejects.toBeInstanceOf(AuthError);

    await expect(readerClient().getReadings("no-such-contract")).rejects.toBeInstanceOf(
      NotFoundError,
    );

    // readers may not append
    const readerAppend = await readerClient()
      .submitReading(testbed.contractId, "temperature", "1.0", "C", 1)
      .catch((e) => e);
    expect(readerAppend).toBeInstanceOf(AuthError);
    expect(readerAppend.status).toBe(403);
  }, 30_000);

  it("keeps an empty contract empty", async () => {
    const admin = new PipechainClient({
      baseUri: testbed.baseUri,
      ledger: testbed.ledger,
      principalId: "testbed-admin",
      bearerToken: testbed.adminToken,
    });
    // admin registers a fresh contract nobody writes to
    const response = await fetch(
      `${testbed.baseUri}/ledgers/${testbed.ledger}/transactions`,
      {
        method: "POST",
        headers: {
          authorization: `Bearer ${testbed.adminToken}`,
          "content-type": "application/json",
        },
        body: JSON.stringify({
          contractId: "empty-contract",
          action: "registerSensor",
          sensorPrincipalId: "sensor-nobody",
        }),
      },
    );
    expect(response.status).toBe(200);
    const { transactionId } = (await response.json()) as { transactionId: string };
    await admin.waitForCommit(transactionId);
    expect(await admin.getReadings("empty-contract")).toEqual([]);
  }, 30_000);
});
