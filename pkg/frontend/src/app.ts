/**
 * Browser entry point: wires the editor, the probe pane, and the slider to
 * the HTTP/WebSocket API. All data shaping lives in the pure modules; this
 * file only moves strings between the network and the DOM.
 */

import { LiveClient } from "./live-client.js";
import { rowsAt, visibleAt } from "./probe-view.js";
import type { ProbeRow } from "./probe-view.js";
import { clampPosition, positionLabel, sliderMax } from "./slider.js";
import type { BackendRow, ProbeResult, Recording } from "./types.js";

const STARTER_SOURCE = `// @binary_search(['a','b','c','d','e','f'], 'g')
binary_search(values, key) {
    ...
}
`;

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing #${id}`);
  }
  return found as T;
}

const editor = element<HTMLTextAreaElement>("editor");
const languageSelect = element<HTMLSelectElement>("language");
const statusLine = element<HTMLElement>("status");
const pane = element<HTMLElement>("pane");
const slider = element<HTMLInputElement>("slider");
const sliderReadout = element<HTMLElement>("slider-readout");

let lastResult: ProbeResult | null = null;
let position = 0;
let socket: WebSocket | null = null;
let reconnectTimer: number | null = null;

async function postProbe(source: string, language: string): Promise<ProbeResult> {
  const response = await fetch("/probe", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ source, language }),
  });
  if (!response.ok) {
    throw new Error(`probe failed: HTTP ${response.status}`);
  }
  return (await response.json()) as ProbeResult;
}

const client = new LiveClient({
  post: postProbe,
  onResult: showResult,
  onError: (error) => setStatus(`request failed: ${String(error)}`, true),
});

function setStatus(text: string, isError = false): void {
  statusLine.textContent = text;
  statusLine.classList.toggle("error", isError);
}

function describe(result: ProbeResult): string {
  const recording = result.recording;
  if (result.outcome !== "recording" || !recording) {
    return `${result.outcome}: ${result.error ?? "unknown error"}`;
  }
  const probe = result.probe ? `${result.probe.function}(${result.probe.args.join(", ")})` : "probe";
  const returned = recording.return === null ? "" : ` → ${recording.return}`;
  return `${probe}: ${recording.status}, ${recording.snapshots.length} snapshots${returned}`;
}

function renderPane(recording: Recording | null): void {
  const lines = editor.value.split("\n");
  const rows: ProbeRow[] = recording ? rowsAt(recording, position) : [];
  const byLine = new Map(rows.map((row) => [row.line, row.cells]));
  const current = recording ? visibleAt(recording, position) : null;

  pane.replaceChildren();
  lines.forEach((text, index) => {
    const line = index + 1;
    const rowElement = document.createElement("div");
    rowElement.className = "row" + (current && current.line === line ? " current" : "");

    const number = document.createElement("span");
    number.className = "line-number";
    number.textContent = String(line);

    const code = document.createElement("span");
    code.className = "code";
    code.textContent = text;

    const probes = document.createElement("span");
    probes.className = "probes";
    for (const cellData of byLine.get(line) ?? []) {
      const chip = document.createElement("span");
      chip.className = "probe-cell";
      chip.textContent = `${cellData.name} = ${cellData.text}`;
      probes.appendChild(chip);
    }

    rowElement.append(number, code, probes);
    pane.appendChild(rowElement);
  });
}

function renderSlider(recording: Recording | null): void {
  slider.max = String(sliderMax(recording));
  slider.value = String(position);
  sliderReadout.textContent = positionLabel(recording, position);
}

function render(): void {
  const recording = lastResult?.recording ?? null;
  renderPane(recording);
  renderSlider(recording);
}

function showResult(result: ProbeResult): void {
  const previous = lastResult?.recording ?? null;
  // keep the last good recording on screen while the source is broken
  if (result.outcome === "recording" || !previous) {
    lastResult = result.recording ? result : lastResult;
    const recording = lastResult?.recording ?? null;
    position = sliderMax(recording);
  }
  setStatus(describe(result), result.outcome !== "recording");
  render();
}

function connectSocket(language: string): void {
  if (socket) {
    socket.onclose = null;
    socket.close();
    socket = null;
  }
  if (reconnectTimer !== null) {
    clearTimeout(reconnectTimer);
    reconnectTimer = null;
  }
  const scheme = location.protocol === "https:" ? "wss:" : "ws:";
  const ws = new WebSocket(`${scheme}//${location.host}/live?language=${encodeURIComponent(language)}`);
  socket = ws;
  ws.onmessage = (message) => {
    const payload = JSON.parse(String(message.data)) as ProbeResult & { error?: string };
    if ("outcome" in payload) {
      showResult(payload);
    }
  };
  ws.onclose = () => {
    if (socket === ws) {
      reconnectTimer = window.setTimeout(() => connectSocket(languageSelect.value), 1000);
    }
  };
}

async function loadBackends(): Promise<void> {
  const response = await fetch("/backends");
  const rows = (await response.json()) as BackendRow[];
  languageSelect.replaceChildren();
  for (const row of rows) {
    const option = document.createElement("option");
    option.value = row.language;
    option.textContent = row.available
      ? row.display_name
      : `${row.display_name} (unavailable)`;
    option.disabled = !row.available;
    languageSelect.appendChild(option);
  }
  const first = rows.find((row) => row.available);
  if (first) {
    languageSelect.value = first.language;
  }
}

async function loadLatest(language: string): Promise<void> {
  const response = await fetch(`/recordings/latest?language=${encodeURIComponent(language)}`);
  if (response.ok) {
    showResult((await response.json()) as ProbeResult);
  }
}

function switchLanguage(): void {
  const language = languageSelect.value;
  connectSocket(language);
  void loadLatest(language);
  client.sourceChanged(editor.value, language);
}

editor.addEventListener("input", () => {
  client.sourceChanged(editor.value, languageSelect.value);
  render();
});
languageSelect.addEventListener("change", switchLanguage);
slider.addEventListener("input", () => {
  position = clampPosition(lastResult?.recording ?? null, Number(slider.value));
  render();
});

async function main(): Promise<void> {
  editor.value = STARTER_SOURCE;
  setStatus("connecting…");
  try {
    await loadBackends();
  } catch (error) {
    setStatus(`cannot reach the probe server: ${String(error)}`, true);
    return;
  }
  switchLanguage();
}

void main();
