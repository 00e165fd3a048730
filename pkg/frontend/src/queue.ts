/** At-least-once judgment delivery with local last-wins deduplication.
 *
 * A failed POST keeps the record queued for the next flush; the server's
 * last-wins policy per (task_id, assessor) makes retries effectively
 * exactly-once.  A re-judgment of a still-queued task replaces the queued
 * record, so stale labels are never delivered after newer ones.
 */

import { JudgmentBody } from "./api.js";

export class RetryQueue {
  private pending: JudgmentBody[] = [];
  private flushing = false;

  constructor(private readonly post: (body: JudgmentBody) => Promise<void>) {}

  get size(): number {
    return this.pending.length;
  }

  /** Queue a judgment and immediately attempt delivery of everything. */
  enqueue(body: JudgmentBody): Promise<boolean> {
    const existing = this.pending.findIndex(
      (p) => p.task_id === body.task_id && p.assessor === body.assessor,
    );
    if (existing >= 0) {
      this.pending[existing] = body;
    } else {
      this.pending.push(body);
    }
    return this.flush();
  }

  /** Deliver queued judgments in order; stop at the first failure.
   * Returns true when the queue drained completely. */
  async flush(): Promise<boolean> {
    if (this.flushing) {
      return this.pending.length === 0;
    }
    this.flushing = true;
    try {
      while (this.pending.length > 0) {
        try {
          await this.post(this.pending[0]);
        } catch {
          return false;
        }
        this.pending.shift();
      }
      return true;
    } finally {
      this.flushing = false;
    }
  }
}
