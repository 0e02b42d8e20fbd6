// Single-page wiring: one open session tab with chat, graph, controls, and
// file browser panels, all fed by one EventStream per session.

import { ApiClient, ApiError } from "./api.js";
import { EventStream } from "./events.js";
import {
  renderAtomTable,
  renderEvents,
  renderGraph,
  renderListing,
  renderSessionOption,
} from "./render.js";
import type { EventKind, TraceEvent } from "./types.js";
import { parseXyz, projectAtoms } from "./xyz.js";

const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let currentSession: string | null = null;
let stream: EventStream | null = null;
let allEvents: TraceEvent[] = [];
let agentFilter = "";

function toast(text: string): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = text;
  box.classList.add("show");
  setTimeout(() => box.classList.remove("show"), 4000);
}

async function refreshSessions(): Promise<void> {
  const sessions = await api.listSessions();
  const select = el<HTMLSelectElement>("session-select");
  const previous = select.value;
  select.innerHTML = sessions.map(renderSessionOption).join("");
  if (previous && sessions.some((s) => s.id === previous)) select.value = previous;
}

function visibleEvents(): TraceEvent[] {
  return agentFilter ? allEvents.filter((e) => e.agent === agentFilter) : allEvents;
}

function repaintEvents(): void {
  const log = el<HTMLDivElement>("event-log");
  log.innerHTML = renderEvents(visibleEvents());
  log.scrollTop = log.scrollHeight;
}

async function repaintGraph(): Promise<void> {
  if (!currentSession) return;
  const graph = await api.graph(currentSession);
  const head = allEvents.length ? allEvents[allEvents.length - 1].seq : 0;
  el<HTMLDivElement>("graph-panel").innerHTML = renderGraph(graph, head);
  el<HTMLSpanElement>("state-badge").textContent = graph.state;
}

async function repaintFilterOptions(): Promise<void> {
  if (!currentSession) return;
  const graph = await api.graph(currentSession);
  const select = el<HTMLSelectElement>("agent-filter");
  const agents = graph.nodes.map((n) => n.id);
  select.innerHTML =
    `<option value="">all agents</option>` +
    agents.map((a) => `<option value="${a}">${a}</option>`).join("");
}

async function openSession(id: string): Promise<void> {
  stream?.stop();
  currentSession = id;
  allEvents = [];
  repaintEvents();
  await repaintFilterOptions();
  el<HTMLAnchorElement>("export-link").href = api.notebookUrl(id);

  stream = new EventStream(api, id);
  stream.subscribe((events) => {
    allEvents = allEvents.concat(events);
    repaintEvents();
    void repaintGraph();
  });
  void stream.run().catch((err) => toast(`event stream stopped: ${err}`));
  await browseTo(".");
  await repaintGraph();
}

async function browseTo(path: string): Promise<void> {
  if (!currentSession) return;
  try {
    const payload = await api.files(currentSession, path);
    const panel = el<HTMLDivElement>("file-panel");
    el<HTMLSpanElement>("file-path").textContent = payload.path;
    if (payload.kind === "dir") {
      panel.innerHTML = renderListing(payload.path, payload.entries);
      for (const link of panel.querySelectorAll<HTMLAnchorElement>("a[data-path]")) {
        link.addEventListener("click", (event) => {
          event.preventDefault();
          void browseTo(link.dataset.path ?? ".");
        });
      }
      el<HTMLDivElement>("structure-panel").innerHTML = "";
    } else if (payload.path.endsWith(".xyz")) {
      const parsed = parseXyz(payload.content);
      panel.innerHTML = renderAtomTable(parsed);
      drawStructure(parsed);
    } else {
      panel.innerHTML = `<pre>${payload.content
        .replaceAll("&", "&amp;")
        .replaceAll("<", "&lt;")}</pre>`;
      el<HTMLDivElement>("structure-panel").innerHTML = "";
    }
  } catch (err) {
    toast(err instanceof ApiError ? `file browser: ${err.detail}` : String(err));
  }
}

function drawStructure(parsed: ReturnType<typeof parseXyz>): void {
  const host = el<HTMLDivElement>("structure-panel");
  host.innerHTML = `<canvas id="structure-canvas" width="320" height="320"></canvas>`;
  const canvas = el<HTMLCanvasElement>("structure-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const ball of projectAtoms(parsed.atoms, canvas.width)) {
    ctx.beginPath();
    ctx.arc(ball.x, ball.y, ball.r, 0, Math.PI * 2);
    ctx.fillStyle = ball.color;
    ctx.fill();
    ctx.strokeStyle = "#222";
    ctx.stroke();
  }
}

function wire(): void {
  el<HTMLFormElement>("new-session-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const task = el<HTMLInputElement>("task-input").value.trim();
    if (!task) return;
    void api
      .createSession(task)
      .then(async (session) => {
        await refreshSessions();
        el<HTMLSelectElement>("session-select").value = session.id;
        await openSession(session.id);
      })
      .catch((err) => toast(String(err)));
  });

  el<HTMLSelectElement>("session-select").addEventListener("change", (event) => {
    const id = (event.target as HTMLSelectElement).value;
    if (id) void openSession(id);
  });

  el<HTMLFormElement>("message-form").addEventListener("submit", (event) => {
    event.preventDefault();
    if (!currentSession) return;
    const agent = el<HTMLSelectElement>("message-agent").value;
    const text = el<HTMLInputElement>("message-text").value;
    void api
      .postMessage(currentSession, agent, text)
      .then(() => {
        el<HTMLInputElement>("message-text").value = "";
      })
      .catch((err) => toast(String(err)));
  });

  el<HTMLSelectElement>("agent-filter").addEventListener("change", (event) => {
    agentFilter = (event.target as HTMLSelectElement).value;
    repaintEvents();
  });

  el<HTMLButtonElement>("pause-btn").addEventListener("click", () => {
    if (currentSession)
      void api
        .pause(currentSession)
        .then(repaintGraph)
        .catch((err) => toast(String(err)));
  });
  el<HTMLButtonElement>("resume-btn").addEventListener("click", () => {
    if (currentSession)
      void api
        .resume(currentSession)
        .then(repaintGraph)
        .catch((err) => toast(String(err)));
  });

  el<HTMLFormElement>("breakpoint-form").addEventListener("submit", (event) => {
    event.preventDefault();
    if (!currentSession) return;
    const agent = el<HTMLInputElement>("breakpoint-agent").value.trim();
    const kind = el<HTMLSelectElement>("breakpoint-kind").value as EventKind;
    void api
      .addBreakpoint(currentSession, agent, kind)
      .then(() => toast(`breakpoint set on (${agent}, ${kind})`))
      .catch((err) => toast(String(err)));
  });
  el<HTMLButtonElement>("clear-breakpoints-btn").addEventListener("click", () => {
    if (currentSession) void api.clearBreakpoints(currentSession);
  });

  // populate the message-agent select alongside the filter options
  const observer = new MutationObserver(() => {
    const filter = el<HTMLSelectElement>("agent-filter");
    const target = el<HTMLSelectElement>("message-agent");
    const options = [...filter.options].filter((o) => o.value !== "");
    target.innerHTML = options.map((o) => `<option>${o.value}</option>`).join("");
  });
  observer.observe(el("agent-filter"), { childList: true });

  void refreshSessions();
  setInterval(() => void refreshSessions(), 5000);
}

document.addEventListener("DOMContentLoaded", wire);
