// Latest-wins command coalescing capped at a fixed send rate, with monotone
// client sequence numbers so the server never sees reordering.

export interface Sender<T> {
  (payload: T, seq: number): void;
}

export class RateLimiter<T> {
  private readonly minIntervalMs: number;
  private lastSent = -Infinity;
  private pending: T | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0;
  sent = 0;
  coalesced = 0;

  constructor(
    private readonly send: Sender<T>,
    maxPerSecond = 60,
    private readonly now: () => number = () => performance.now(),
    private readonly schedule: (fn: () => void, ms: number) => ReturnType<typeof setTimeout> = (
      fn,
      ms,
    ) => setTimeout(fn, ms),
  ) {
    this.minIntervalMs = 1000 / maxPerSecond;
  }

  /** Queue a payload; it is sent immediately if the rate budget allows,
   * otherwise it replaces any pending payload (latest wins). */
  push(payload: T): void {
    const t = this.now();
    if (t - this.lastSent >= this.minIntervalMs && this.timer === null) {
      this.emit(payload, t);
      return;
    }
    if (this.pending !== null) this.coalesced += 1;
    this.pending = payload;
    if (this.timer === null) {
      const wait = Math.max(0, this.minIntervalMs - (t - this.lastSent));
      this.timer = this.schedule(() => this.flush(), wait);
    }
  }

  flush(): void {
    this.timer = null;
    if (this.pending === null) return;
    const payload = this.pending;
    this.pending = null;
    this.emit(payload, this.now());
  }

  private emit(payload: T, t: number): void {
    this.lastSent = t;
    this.seq += 1;
    this.sent += 1;
    this.send(payload, this.seq);
  }

  get nextSeq(): number {
    return this.seq + 1;
  }
}
