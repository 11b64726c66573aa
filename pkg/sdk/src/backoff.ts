/** Deterministic exponential backoff for transport-level retries. */

export function backoffMs(attempt: number, baseMs: number): number {
  // attempt 0 -> base, then doubling, capped at 30s
  return Math.min(baseMs * 2 ** attempt, 30_000);
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
