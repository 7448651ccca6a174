/**
 * Shapes of the probe API payloads.
 *
 * These mirror the JSON the server emits on POST /probe, GET
 * /recordings/latest, and the /live WebSocket — the only contract this client
 * depends on.
 */

export interface Variable {
  name: string;
  value: string;
}

export interface Snapshot {
  line: number;
  column: number;
  height: number;
  variables: Variable[];
}

export interface HistoryEntry {
  value: string;
  /** The line whose execution produced this value. */
  line: number;
}

export interface History {
  name: string;
  entries: HistoryEntry[];
}

export type RecordingStatus = "completed" | "interrupted" | "failed";

export interface Recording {
  status: RecordingStatus;
  return: string | null;
  snapshots: Snapshot[];
  histories: History[];
  failure?: string;
}

export interface AnnotationSpan {
  line: number;
  start_column: number;
  end_column: number;
}

export interface ProbeInfo {
  function: string;
  args: string[];
  annotation: AnnotationSpan;
}

export type ProbeOutcome =
  | "recording"
  | "annotation_error"
  | "compile_error"
  | "engine_error";

export interface ProbeResult {
  outcome: ProbeOutcome;
  language: string;
  probe?: ProbeInfo;
  recording?: Recording;
  error?: string;
}

export interface BackendRow {
  language: string;
  display_name: string;
  comment_marker: string;
  source_extension: string;
  available: boolean;
  reason?: string;
}
