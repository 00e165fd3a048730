/** Session state machine: current task, per-task timer, live progress. */

import { ApiClient, Label, Progress, SampleSpec, Task } from "./api.js";
import { RetryQueue } from "./queue.js";

export interface Clock {
  now(): number;
}

export interface SessionState {
  sessionId: string | null;
  task: Task | null;
  done: boolean;
  progress: Progress | null;
  /** Judgments accepted locally but not yet confirmed by the server. */
  pendingDeliveries: number;
}

type Listener = (state: SessionState) => void;

export class SessionController {
  private readonly clock: Clock;
  private readonly queue: RetryQueue;
  private readonly listeners: Listener[] = [];
  private taskStartedAt = 0;
  private state: SessionState = {
    sessionId: null,
    task: null,
    done: false,
    progress: null,
    pendingDeliveries: 0,
  };

  constructor(
    private readonly api: ApiClient,
    private readonly assessor: string,
    options?: { clock?: Clock },
  ) {
    this.clock = options?.clock ?? Date;
    this.queue = new RetryQueue((body) => this.api.submitJudgment(body));
  }

  getState(): SessionState {
    return { ...this.state, pendingDeliveries: this.queue.size };
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    this.state.pendingDeliveries = this.queue.size;
    for (const listener of this.listeners) {
      listener(this.getState());
    }
  }

  async start(spec: SampleSpec): Promise<void> {
    const sessionId = await this.api.createSession(spec);
    await this.attach(sessionId);
  }

  async attach(sessionId: string): Promise<void> {
    this.state.sessionId = sessionId;
    this.state.done = false;
    await this.refreshProgress();
    await this.advance();
  }

  /** Milliseconds spent on the task currently shown. */
  elapsedMs(): number {
    return Math.max(0, Math.round(this.clock.now() - this.taskStartedAt));
  }

  /** Judge the current task and move to the next one.
   *
   * The judgment is queued before any network I/O, so a failed POST is
   * retried on the next action rather than lost. */
  async judge(label: Label): Promise<void> {
    const task = this.state.task;
    if (!task || task.done || !task.task_id || !task.doc_id) {
      return;
    }
    await this.queue.enqueue({
      task_id: task.task_id,
      doc_id: task.doc_id,
      assessor: this.assessor,
      label,
      elapsed_ms: this.elapsedMs(),
    });
    await this.advance();
    await this.refreshProgress();
  }

  /** Re-attempt delivery of any queued judgments (e.g. after reconnect). */
  retryPending(): Promise<boolean> {
    return this.queue.flush().then((drained) => {
      this.emit();
      return drained;
    });
  }

  private async advance(): Promise<void> {
    if (!this.state.sessionId) {
      return;
    }
    const task = await this.api.nextTask(this.state.sessionId, this.assessor);
    this.state.task = task;
    this.state.done = task.done;
    this.taskStartedAt = this.clock.now();
    this.emit();
  }

  private async refreshProgress(): Promise<void> {
    if (!this.state.sessionId) {
      return;
    }
    try {
      const progress = await this.api.progress(this.state.sessionId);
      const previous = this.state.progress;
      if (previous && progress.judged < previous.judged) {
        // Progress is monotone on the server; a lower count means we raced
        // a stale read, so keep the newer local view.
        return;
      }
      this.state.progress = progress;
    } finally {
      this.emit();
    }
  }
}
