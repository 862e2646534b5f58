/** DOM wiring for the tuner page. All session logic lives in session.ts and
 * polling.ts; this file only moves values between controls and state. */

import { ServiceClient } from "./api.js";
import type { DiffusionParams } from "./params.js";
import { toToml, validateParams } from "./params.js";
import { PreviewController } from "./polling.js";
import type { SessionEvent, TunerSession } from "./session.js";
import { canPin, initialSession, reduce } from "./session.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let session: TunerSession = initialSession();
let imageBlob: Blob | null = null;
let client = new ServiceClient(($("service-url") as HTMLInputElement).value);
let controller = makeController();

function makeController(): PreviewController {
  return new PreviewController(
    client,
    () => session,
    dispatch,
    () => imageBlob,
  );
}

const PARAM_INPUTS: { field: keyof DiffusionParams; id: string; integer: boolean }[] = [
  { field: "kappa", id: "kappa", integer: false },
  { field: "presmooth_sigma", id: "presmooth-sigma", integer: false },
  { field: "presmooth_kernel", id: "presmooth-kernel", integer: true },
  { field: "orient_sigma", id: "orient-sigma", integer: false },
  { field: "orient_kernel", id: "orient-kernel", integer: true },
  { field: "tau", id: "tau", integer: false },
  { field: "steps", id: "steps", integer: true },
];

function dispatch(event: SessionEvent): void {
  session = reduce(session, event);
  render(event);
}

function render(event: SessionEvent): void {
  // field errors
  const errors = session.errors;
  for (const { field, id } of PARAM_INPUTS) {
    const note = $(`${id}-error`);
    note.textContent = errors[field] ?? "";
  }
  $("status").textContent = session.activeJobId
    ? `job ${session.activeJobId}: ${session.jobState ?? "?"} ` +
      `(frames: ${session.frames.length}, latest step ${session.latestStep ?? "-"})`
    : "no active job";
  $("message").textContent = session.message ?? "";

  ($("pin") as HTMLButtonElement).disabled = !canPin(session);

  if (event.type === "status-received" && session.latestStep !== null) {
    const img = $("preview") as HTMLImageElement;
    img.src = client.frameUrl(session.activeJobId!, session.latestStep);
    $("preview-caption").textContent = `preview @ step ${session.latestStep}`;
  }
  if (event.type === "preview-started") {
    ($("preview") as HTMLImageElement).removeAttribute("src");
    $("preview-caption").textContent = "preview";
  }
  if (event.type === "pin-requested" && session.pinned) {
    const img = $("pinned") as HTMLImageElement;
    img.src = client.frameUrl(session.pinned.jobId, session.pinned.step);
    $("pinned-caption").textContent =
      `pinned @ step ${session.pinned.step} ` +
      `(kappa ${session.pinned.params.kappa}, steps ${session.pinned.params.steps})`;
  }
  if (event.type === "params-replaced") {
    syncInputsFromDraft();
  }
}

function syncInputsFromDraft(): void {
  for (const { field, id } of PARAM_INPUTS) {
    ($(id) as HTMLInputElement).value = String(session.draft[field]);
  }
  ($("stride") as HTMLInputElement).value = String(session.stride);
}

function wireControls(): void {
  for (const { field, id, integer } of PARAM_INPUTS) {
    const input = $(id) as HTMLInputElement;
    input.addEventListener("change", () => {
      const value = integer ? parseInt(input.value, 10) : parseFloat(input.value);
      dispatch({ type: "param-changed", field, value });
      if (Object.keys(validateParams(session.draft)).length === 0) {
        controller.scheduleRestart();
      }
    });
  }
  ($("stride") as HTMLInputElement).addEventListener("change", (e) => {
    dispatch({ type: "stride-changed", value: parseInt((e.target as HTMLInputElement).value, 10) });
  });

  ($("file") as HTMLInputElement).addEventListener("change", (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (!file) return;
    imageBlob = file;
    ($("original") as HTMLImageElement).src = URL.createObjectURL(file);
    dispatch({ type: "image-loaded", name: file.name });
    controller.scheduleRestart();
  });

  $("start").addEventListener("click", () => void controller.restart());
  $("pin").addEventListener("click", () => dispatch({ type: "pin-requested" }));

  $("export").addEventListener("click", () => {
    const blob = new Blob([toToml(session.draft)], { type: "application/toml" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "preset.toml";
    link.click();
    URL.revokeObjectURL(link.href);
  });

  ($("service-url") as HTMLInputElement).addEventListener("change", (e) => {
    controller.dispose();
    client = new ServiceClient((e.target as HTMLInputElement).value);
    controller = makeController();
  });

  for (const name of ["P_strong", "P_mild"]) {
    $(`preset-${name}`).addEventListener("click", () => {
      void (async () => {
        try {
          const presets = await client.getPresets();
          const preset = presets[name];
          if (preset) {
            dispatch({ type: "params-replaced", params: preset });
            controller.scheduleRestart();
          }
        } catch (error) {
          dispatch({
            type: "preview-rejected",
            message: error instanceof Error ? error.message : String(error),
          });
        }
      })();
    });
  }

  // synchronized zoom over the triptych
  const zoom = $("zoom") as HTMLInputElement;
  zoom.addEventListener("input", () => {
    const scale = Number(zoom.value);
    for (const id of ["original", "preview", "pinned"]) {
      ($(id) as HTMLImageElement).style.transform = `scale(${scale})`;
    }
  });
}

wireControls();
syncInputsFromDraft();
