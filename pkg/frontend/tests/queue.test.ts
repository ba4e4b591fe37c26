import { describe, expect, it } from "vitest";

import { RetryQueue } from "../src/queue.js";

describe("RetryQueue", () => {
  it("flushes queued items oldest-first", async () => {
    const queue = new RetryQueue<number>();
    queue.push(1);
    queue.push(2);
    queue.push(3);
    const sent: number[] = [];
    const delivered = await queue.flush(async (n) => {
      sent.push(n);
    });
    expect(delivered).toBe(3);
    expect(sent).toEqual([1, 2, 3]);
    expect(queue.pending).toBe(0);
  });

  it("stops at the first failure and keeps the rest", async () => {
    const queue = new RetryQueue<number>();
    queue.push(1);
    queue.push(2);
    let calls = 0;
    const delivered = await queue.flush(async (n) => {
      calls += 1;
      if (n === 2) throw new Error("still offline");
    });
    expect(delivered).toBe(1);
    expect(calls).toBe(2);
    expect(queue.snapshot()).toEqual([2]);
  });

  it("retries the same item on the next flush", async () => {
    const queue = new RetryQueue<string>();
    queue.push("a");
    await queue.flush(async () => {
      throw new Error("down");
    });
    expect(queue.pending).toBe(1);
    const sent: string[] = [];
    await queue.flush(async (item) => {
      sent.push(item);
    });
    expect(sent).toEqual(["a"]);
    expect(queue.pending).toBe(0);
  });
});
