/** Typed client for the preview service HTTP API. */

import type { DiffusionParams } from "./params.js";
import { fromRecord } from "./params.js";

export type JobState = "queued" | "running" | "done" | "cancelled" | "failed";

export interface JobStatus {
  job_id: string;
  state: JobState;
  steps: number;
  current_step: number;
  frames: number[];
  error: string | null;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(response.status, detail);
}

export class ServiceClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async getPresets(): Promise<Record<string, DiffusionParams>> {
    const response = await fetch(this.url("/presets"));
    await raiseForStatus(response);
    const body = (await response.json()) as Record<string, Record<string, unknown>>;
    return Object.fromEntries(
      Object.entries(body).map(([name, raw]) => [name, fromRecord(raw)]),
    );
  }

  async createJob(
    image: Blob,
    params: DiffusionParams,
    stride: number,
  ): Promise<{ job_id: string; state: JobState }> {
    const form = new FormData();
    form.append("image", image, "crop.png");
    form.append("params", JSON.stringify(params));
    form.append("stride", String(stride));
    const response = await fetch(this.url("/jobs"), { method: "POST", body: form });
    await raiseForStatus(response);
    return response.json();
  }

  async getStatus(jobId: string): Promise<JobStatus> {
    const response = await fetch(this.url(`/jobs/${jobId}`));
    await raiseForStatus(response);
    return response.json();
  }

  frameUrl(jobId: string, step: number): string {
    return this.url(`/jobs/${jobId}/frames/${step}`);
  }

  async fetchFrame(jobId: string, step: number): Promise<Blob> {
    const response = await fetch(this.frameUrl(jobId, step));
    await raiseForStatus(response);
    return response.blob();
  }

  async cancelJob(jobId: string): Promise<JobStatus> {
    const response = await fetch(this.url(`/jobs/${jobId}/cancel`), { method: "POST" });
    await raiseForStatus(response);
    return response.json();
  }
}
