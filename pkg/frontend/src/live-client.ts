/**
 * Debounced probe submission with a stale-response guard.
 *
 * Every editor keystroke calls sourceChanged(); after debounceMs of quiet the
 * newest buffer state is POSTed. Responses can complete out of order (the
 * server also coalesces, but the network adds its own reordering), so each
 * submission takes a revision number and only the latest revision's outcome is
 * delivered.
 */

import type { ProbeResult } from "./types.js";

export type ProbeTransport = (source: string, language: string) => Promise<ProbeResult>;

export interface LiveClientOptions {
  post: ProbeTransport;
  onResult: (result: ProbeResult) => void;
  onError?: (error: unknown) => void;
  /** Quiet time before a pending edit is submitted; defaults to 300. */
  debounceMs?: number;
}

const DEFAULT_DEBOUNCE_MS = 300;

export class LiveClient {
  private readonly post: ProbeTransport;
  private readonly onResult: (result: ProbeResult) => void;
  private readonly onError: (error: unknown) => void;
  private readonly debounceMs: number;

  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: { source: string; language: string } | null = null;
  private revision = 0;
  private disposed = false;

  constructor(options: LiveClientOptions) {
    this.post = options.post;
    this.onResult = options.onResult;
    this.onError = options.onError ?? (() => undefined);
    this.debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS;
  }

  /** Record an edit; (re)start the quiet-period timer. */
  sourceChanged(source: string, language: string): void {
    if (this.disposed) {
      return;
    }
    this.pending = { source, language };
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => this.flush(), this.debounceMs);
  }

  /** Submit the pending edit immediately (e.g. on an explicit run action). */
  flush(): void {
    if (this.disposed || this.pending === null) {
      return;
    }
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    const { source, language } = this.pending;
    this.pending = null;
    const mine = ++this.revision;
    this.post(source, language).then(
      (result) => {
        if (!this.disposed && mine === this.revision) {
          this.onResult(result);
        }
      },
      (error) => {
        if (!this.disposed && mine === this.revision) {
          this.onError(error);
        }
      },
    );
  }

  dispose(): void {
    this.disposed = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = null;
  }
}
