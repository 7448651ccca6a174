/** Snapshot-slider arithmetic, kept separate from the DOM. */

import type { Recording } from "./types.js";
import { visibleAt } from "./probe-view.js";

/** Highest valid slider position: the index of the last snapshot. */
export function sliderMax(recording: Recording | null): number {
  if (!recording || recording.snapshots.length === 0) {
    return 0;
  }
  return recording.snapshots.length - 1;
}

export function clampPosition(recording: Recording | null, position: number): number {
  if (!Number.isFinite(position)) {
    return 0;
  }
  return Math.min(Math.max(Math.trunc(position), 0), sliderMax(recording));
}

/** Human label for the slider readout, e.g. "step 4 / 18 — line 6". */
export function positionLabel(recording: Recording | null, position: number): string {
  if (!recording || recording.snapshots.length === 0) {
    return "no snapshots";
  }
  const index = clampPosition(recording, position);
  const snapshot = visibleAt(recording, index);
  const location = snapshot ? ` — line ${snapshot.line}` : "";
  return `step ${index} / ${sliderMax(recording)}${location}`;
}
