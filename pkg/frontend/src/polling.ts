/** Preview lifecycle: debounced restarts and the status polling loop.
 *
 * Every restart cancels the previous job before creating the next one, so
 * the service never runs two previews for one session. Slider scrubbing is
 * debounced (default 300 ms) because each restart costs a full job.
 */

import { ServiceClient } from "./api.js";
import { isValid } from "./params.js";
import type { SessionEvent, TunerSession } from "./session.js";
import { isTerminal } from "./session.js";

export interface ControllerOptions {
  debounceMs?: number;
  pollMs?: number;
}

export class PreviewController {
  private debounceMs: number;
  private pollMs: number;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;
  private generation = 0;

  constructor(
    private client: ServiceClient,
    private getSession: () => TunerSession,
    private dispatch: (event: SessionEvent) => void,
    private getImage: () => Blob | null,
    options: ControllerOptions = {},
  ) {
    this.debounceMs = options.debounceMs ?? 300;
    this.pollMs = options.pollMs ?? 250;
  }

  /** Called on every slider release / field edit. */
  scheduleRestart(): void {
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.restart();
    }, this.debounceMs);
  }

  /** Cancel the active job (if any) and start a preview for the draft. */
  async restart(): Promise<void> {
    const session = this.getSession();
    const image = this.getImage();
    if (!image) {
      this.dispatch({ type: "preview-rejected", message: "load an image first" });
      return;
    }
    if (!isValid(session.draft)) return; // field errors already shown inline

    const generation = ++this.generation;
    this.stopPolling();

    const previous = session.activeJobId;
    if (previous !== null) {
      try {
        await this.client.cancelJob(previous);
      } catch {
        // job may already be gone; the new preview supersedes it either way
      }
    }

    try {
      const created = await this.client.createJob(image, session.draft, session.stride);
      if (generation !== this.generation) return; // superseded while in flight
      this.dispatch({ type: "preview-started", jobId: created.job_id });
      this.poll(created.job_id, generation);
    } catch (error) {
      if (generation !== this.generation) return;
      const message = error instanceof Error ? error.message : String(error);
      this.dispatch({ type: "preview-rejected", message });
    }
  }

  private poll(jobId: string, generation: number): void {
    this.pollTimer = setTimeout(() => {
      void (async () => {
        if (generation !== this.generation) return;
        try {
          const status = await this.client.getStatus(jobId);
          if (generation !== this.generation) return;
          this.dispatch({
            type: "status-received",
            jobId,
            state: status.state,
            frames: status.frames,
            error: status.error,
          });
          if (!isTerminal(status.state)) this.poll(jobId, generation);
        } catch (error) {
          if (generation !== this.generation) return;
          const message = error instanceof Error ? error.message : String(error);
          this.dispatch({ type: "preview-rejected", message });
        }
      })();
    }, this.pollMs);
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearTimeout(this.pollTimer);
      this.pollTimer = null;
    }
  }

  dispose(): void {
    this.generation++;
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    this.stopPolling();
  }
}
