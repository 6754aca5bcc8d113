/**
 * Minimal browser shell: timeline scrubber, keyframe controls, preview
 * image.  All logic lives in the framework-free model layer (timeline.ts,
 * client.ts); this file only wires DOM events to it.
 */
import { PreviewClient, fetchTransport } from "./client.js";
import { Timeline } from "./timeline.js";
import { MODES, PreviewMode } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export async function mount(baseUrl: string): Promise<Timeline> {
  const timeline = await Timeline.connect(
    new PreviewClient(fetchTransport(baseUrl)),
  );

  const scrubber = el<HTMLInputElement>("scrubber");
  const image = el<HTMLImageElement>("preview");
  const modeSelect = el<HTMLSelectElement>("mode");
  const commit = el<HTMLButtonElement>("commit");
  const status = el<HTMLElement>("status");

  scrubber.min = "0";
  scrubber.max = String(timeline.model.numFrames - 1);
  for (const mode of MODES) {
    const opt = document.createElement("option");
    opt.value = mode;
    opt.textContent = mode;
    modeSelect.appendChild(opt);
  }
  modeSelect.value = timeline.model.previewMode;

  function show(bytes: Uint8Array, revision: number): void {
    const blob = new Blob([bytes as BlobPart], { type: "image/png" });
    const url = URL.createObjectURL(blob);
    const old = image.src;
    image.src = url;
    if (old.startsWith("blob:")) URL.revokeObjectURL(old);
    status.textContent = `frame ${timeline.model.selectedFrame} @ revision ${revision}`;
  }

  scrubber.addEventListener("input", () => {
    void timeline
      .scrubTo(Number(scrubber.value))
      .then((f) => show(f.bytes, f.revision))
      .catch((e) => (status.textContent = String(e)));
  });

  modeSelect.addEventListener("change", () => {
    timeline.setPreviewMode(modeSelect.value as PreviewMode);
    void timeline
      .scrubTo(timeline.model.selectedFrame)
      .then((f) => show(f.bytes, f.revision))
      .catch((e) => (status.textContent = String(e)));
  });

  commit.addEventListener("click", () => {
    void timeline
      .commitAndPreview()
      .then((f) => show(f.bytes, f.revision))
      .catch((e) => (status.textContent = String(e)));
  });

  const first = await timeline.scrubTo(0);
  show(first.bytes, first.revision);
  return timeline;
}
