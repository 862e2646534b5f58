/** Tuner session state and its reducer.
 *
 * All state transitions go through reduce(), which enforces the session
 * invariants: at most one active job, a pinned comparison that never changes
 * after pinning (re-pinning replaces it wholesale), a frame timeline that
 * only grows and resets when a new preview starts, and rejection of status
 * updates from stale jobs so a parameter change can never show old frames.
 */

import type { JobState } from "./api.js";
import type { DiffusionParams, FieldErrors } from "./params.js";
import { validateParams } from "./params.js";

export interface PinnedComparison {
  params: DiffusionParams;
  step: number;
  jobId: string;
}

export interface TunerSession {
  imageName: string | null;
  draft: DiffusionParams;
  stride: number;
  errors: FieldErrors;
  activeJobId: string | null;
  jobState: JobState | null;
  frames: number[];
  latestStep: number | null;
  pinned: PinnedComparison | null;
  message: string | null;
}

export const DEFAULT_DRAFT: DiffusionParams = {
  kappa: 0.1,
  presmooth_sigma: 3.0,
  presmooth_kernel: 9,
  orient_sigma: 3.0,
  orient_kernel: 9,
  tau: 0.2,
  steps: 1024,
  snapshots: [],
};

export function initialSession(): TunerSession {
  return {
    imageName: null,
    draft: { ...DEFAULT_DRAFT, snapshots: [] },
    stride: 64,
    errors: {},
    activeJobId: null,
    jobState: null,
    frames: [],
    latestStep: null,
    pinned: null,
    message: null,
  };
}

export type SessionEvent =
  | { type: "image-loaded"; name: string }
  | { type: "params-replaced"; params: DiffusionParams }
  | { type: "param-changed"; field: keyof DiffusionParams; value: number }
  | { type: "stride-changed"; value: number }
  | { type: "preview-started"; jobId: string }
  | { type: "preview-rejected"; message: string }
  | {
      type: "status-received";
      jobId: string;
      state: JobState;
      frames: number[];
      error: string | null;
    }
  | { type: "pin-requested" };

const TERMINAL: JobState[] = ["done", "cancelled", "failed"];

export function isTerminal(state: JobState | null): boolean {
  return state !== null && TERMINAL.includes(state);
}

export function canPin(session: TunerSession): boolean {
  return session.activeJobId !== null && session.frames.length > 0;
}

export function reduce(session: TunerSession, event: SessionEvent): TunerSession {
  switch (event.type) {
    case "image-loaded":
      // new crop invalidates the running preview and the timeline
      return {
        ...session,
        imageName: event.name,
        activeJobId: null,
        jobState: null,
        frames: [],
        latestStep: null,
        message: null,
      };

    case "params-replaced": {
      const draft = { ...event.params, snapshots: [...event.params.snapshots] };
      return { ...session, draft, errors: validateParams(draft) };
    }

    case "param-changed": {
      const draft = { ...session.draft, [event.field]: event.value };
      return { ...session, draft, errors: validateParams(draft) };
    }

    case "stride-changed":
      return { ...session, stride: Math.max(1, Math.floor(event.value)) };

    case "preview-started":
      // replaces any previous job; the controller has already cancelled it
      return {
        ...session,
        activeJobId: event.jobId,
        jobState: "queued",
        frames: [],
        latestStep: null,
        message: null,
      };

    case "preview-rejected":
      return { ...session, message: event.message };

    case "status-received": {
      if (event.jobId !== session.activeJobId) return session; // stale job
      const frames = mergeFrames(session.frames, event.frames);
      return {
        ...session,
        jobState: event.state,
        frames,
        latestStep: frames.length ? frames[frames.length - 1]! : null,
        message: event.error,
      };
    }

    case "pin-requested": {
      if (!canPin(session)) return session;
      const step = session.frames[session.frames.length - 1]!;
      return {
        ...session,
        pinned: {
          params: { ...session.draft, snapshots: [...session.draft.snapshots] },
          step,
          jobId: session.activeJobId!,
        },
      };
    }
  }
}

/** Timeline only ever grows; the service reports full frame lists. */
function mergeFrames(current: number[], incoming: number[]): number[] {
  const merged = new Set(current);
  for (const step of incoming) merged.add(step);
  return [...merged].sort((a, b) => a - b);
}
