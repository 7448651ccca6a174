import { describe, expect, it } from "vitest";

import {
  buildProbeRows,
  historiesUpTo,
  rowsAt,
  visibleAt,
} from "../src/probe-view.js";
import type { ProbeResult, Recording } from "../src/types.js";
import fixtureJson from "../fixtures/binary-search-result.json";

// A real engine response for a binary search over ['a'..'f'] probed with the
// missing key 'g': 19 snapshots, returns "-1".
const fixture = fixtureJson as ProbeResult;
const recording = fixture.recording as Recording;

const EMPTY: Recording = { status: "completed", return: null, snapshots: [], histories: [] };

describe("buildProbeRows", () => {
  const rows = buildProbeRows(recording);

  it("renders the update row for low on the line that assigns it", () => {
    const row = rows.find((r) => r.cells.some((c) => c.name === "low" && c.values.length > 1));
    expect(row).toBeDefined();
    expect(row!.line).toBe(10); // low = mid + 1
    const cell = row!.cells.find((c) => c.name === "low")!;
    expect(cell.text).toBe("3 | 5 | 6");
  });

  it("keeps the initial binding of low on its declaration line", () => {
    const declaration = rows.find((r) => r.line === 2)!;
    const low = declaration.cells.find((c) => c.name === "low")!;
    expect(low.text).toBe("0");
  });

  it("gives every probed variable its per-line value sequence", () => {
    const byLineAndName = new Map(
      rows.flatMap((r) => r.cells.map((c) => [`${r.line}:${c.name}`, c.text] as const)),
    );
    expect(byLineAndName.get("6:mid")).toBe("2 | 4 | 5");
    expect(byLineAndName.get("7:value")).toBe("'c' | 'e' | 'f'");
    expect(byLineAndName.get("3:high")).toBe("5");
  });

  it("sorts rows by line", () => {
    const lines = rows.map((r) => r.line);
    expect(lines).toEqual([...lines].sort((a, b) => a - b));
  });

  it("is empty for an empty recording", () => {
    expect(buildProbeRows(EMPTY)).toEqual([]);
  });
});

describe("historiesUpTo", () => {
  it("shows only the bound parameters at position 0", () => {
    const histories = historiesUpTo(recording, 0);
    expect(histories.map((h) => h.name)).toEqual(["values", "key"]);
    for (const history of histories) {
      expect(history.entries).toHaveLength(1);
    }
    const rows = rowsAt(recording, 0);
    expect(rows).toHaveLength(1);
    expect(rows[0]!.cells.map((c) => c.name)).toEqual(["values", "key"]);
  });

  it("reproduces the server's full histories at the last position", () => {
    const full = historiesUpTo(recording, recording.snapshots.length - 1);
    expect(full).toEqual(recording.histories);
  });

  it("grows monotonically while scrubbing forward", () => {
    let previousTotal = 0;
    for (let t = 0; t < recording.snapshots.length; t++) {
      const total = historiesUpTo(recording, t)
        .reduce((sum, h) => sum + h.entries.length, 0);
      expect(total).toBeGreaterThanOrEqual(previousTotal);
      previousTotal = total;
    }
  });

  it("clamps past the end and is empty before the start", () => {
    expect(historiesUpTo(recording, 10_000)).toEqual(recording.histories);
    expect(historiesUpTo(recording, -1)).toEqual([]);
  });
});

describe("visibleAt", () => {
  it("returns the snapshot at the clamped position", () => {
    expect(visibleAt(recording, 0)).toBe(recording.snapshots[0]);
    expect(visibleAt(recording, -5)).toBe(recording.snapshots[0]);
    expect(visibleAt(recording, 10_000)).toBe(recording.snapshots[recording.snapshots.length - 1]);
  });

  it("is null for an empty recording", () => {
    expect(visibleAt(EMPTY, 0)).toBeNull();
  });
});
