/**
 * Pure view-model builders for the probe pane.
 *
 * A recording arrives as snapshots plus per-variable histories; the pane wants
 * the transpose: for each source line, which variables were written there and
 * through which values they went. Scrubbing re-derives the histories from a
 * snapshot prefix so the columns grow as the slider advances.
 */

import type { History, HistoryEntry, Recording, Snapshot } from "./types.js";

/** One variable's value sequence attributed to a single source line. */
export interface ProbeCell {
  name: string;
  values: string[];
  /** The values joined for display, e.g. "3 | 5 | 6". */
  text: string;
}

export interface ProbeRow {
  line: number;
  cells: ProbeCell[];
}

const SEPARATOR = " | ";

function cell(name: string, values: string[]): ProbeCell {
  return { name, values, text: values.join(SEPARATOR) };
}

/**
 * Group history entries by source line, preserving variable order.
 *
 * A variable that is written on several lines (say, initialised on one and
 * updated inside a loop on another) contributes one cell per line.
 */
export function rowsFromHistories(histories: History[]): ProbeRow[] {
  const byLine = new Map<number, ProbeCell[]>();
  for (const history of histories) {
    const perLine = new Map<number, string[]>();
    for (const entry of history.entries) {
      const bucket = perLine.get(entry.line);
      if (bucket) {
        bucket.push(entry.value);
      } else {
        perLine.set(entry.line, [entry.value]);
      }
    }
    for (const [line, values] of perLine) {
      const cells = byLine.get(line);
      if (cells) {
        cells.push(cell(history.name, values));
      } else {
        byLine.set(line, [cell(history.name, values)]);
      }
    }
  }
  return [...byLine.entries()]
    .map(([line, cells]) => ({ line, cells }))
    .sort((a, b) => a.line - b.line);
}

export function buildProbeRows(recording: Recording): ProbeRow[] {
  return rowsFromHistories(recording.histories);
}

/** The frame state at slider position `position` (clamped), or null if empty. */
export function visibleAt(recording: Recording, position: number): Snapshot | null {
  const count = recording.snapshots.length;
  if (count === 0) {
    return null;
  }
  const index = Math.min(Math.max(position, 0), count - 1);
  return recording.snapshots[index] ?? null;
}

/**
 * Re-derive variable histories from the snapshot prefix [0, position].
 *
 * Matches the server's derivation: a value observed in snapshot k is
 * attributed to the line of snapshot k-1 (the statement that executed to
 * produce it); snapshot 0 values sit on their own line; runs of equal values
 * collapse to one entry. Position 0 therefore shows exactly the variables
 * bound on entry — the function's parameters.
 */
export function historiesUpTo(recording: Recording, position: number): History[] {
  if (position < 0) {
    return [];
  }
  const last = Math.min(position, recording.snapshots.length - 1);
  const order: string[] = [];
  const series = new Map<string, HistoryEntry[]>();
  for (let k = 0; k <= last; k++) {
    const snapshot = recording.snapshots[k];
    const previous = k === 0 ? snapshot : recording.snapshots[k - 1];
    if (!snapshot || !previous) {
      break;
    }
    for (const variable of snapshot.variables) {
      let entries = series.get(variable.name);
      if (!entries) {
        entries = [];
        series.set(variable.name, entries);
        order.push(variable.name);
      }
      const latest = entries[entries.length - 1];
      if (!latest || latest.value !== variable.value) {
        entries.push({ value: variable.value, line: previous.line });
      }
    }
  }
  return order.map((name) => ({ name, entries: series.get(name) ?? [] }));
}

/** Probe rows as they should look with the slider at `position`. */
export function rowsAt(recording: Recording, position: number): ProbeRow[] {
  return rowsFromHistories(historiesUpTo(recording, position));
}
