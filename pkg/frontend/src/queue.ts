/** In-memory retry queue for decisions that failed to reach the server.
 *
 * Failed submissions stay queued in arrival order and are retried before any
 * newer decision, so the server always sees an annotator's decisions in the
 * order they were made.
 */

export class RetryQueue<T> {
  private items: T[] = [];

  get pending(): number {
    return this.items.length;
  }

  push(item: T): void {
    this.items.push(item);
  }

  snapshot(): readonly T[] {
    return [...this.items];
  }

  /** Send queued items oldest-first; stops at the first failure. */
  async flush(send: (item: T) => Promise<void>): Promise<number> {
    let delivered = 0;
    while (this.items.length > 0) {
      try {
        await send(this.items[0]);
      } catch {
        break;
      }
      this.items.shift();
      delivered += 1;
    }
    return delivered;
  }
}
