// HTML/SVG renderers: pure string producers so the panels are testable
// without a DOM. main.ts owns element wiring.
function esc(text) {
    return text
        .replaceAll("&", "&amp;")
        .replaceAll("<", "&lt;")
        .replaceAll(">", "&gt;")
        .replaceAll('"', "&quot;");
}
export function kindBadge(kind) {
    return `<span class="badge badge-${kind}">${kind}</span>`;
}
export function renderEventRow(event) {
    return (`<div class="event" data-seq="${event.seq}">` +
        `<span class="seq">#${event.seq}</span>` +
        kindBadge(event.kind) +
        `<span class="agent">${esc(event.agent)}</span>` +
        `<span class="title">${esc(event.title)}</span>` +
        `<div class="summary">${esc(event.summary)}</div>` +
        `</div>`);
}
export function renderEvents(events) {
    return events.map(renderEventRow).join("\n");
}
export function renderSessionOption(session) {
    return `<option value="${session.id}">${session.id} [${session.state}] ${esc(session.task.slice(0, 48))}</option>`;
}
/** A node counts as active when its latest event sits within the most
 * recent window of the trace; one poll interval is enough to light it up. */
export function isActiveNode(node, headSeq, window = 3) {
    return node.last_event !== null && headSeq - node.last_event.seq < window;
}
export function renderGraph(graph, headSeq) {
    const columns = new Map();
    for (const node of graph.nodes) {
        const col = columns.get(node.depth) ?? [];
        col.push(node.id);
        columns.set(node.depth, col);
    }
    const colWidth = 210;
    const rowHeight = 64;
    const depths = [...columns.keys()].sort((a, b) => a - b);
    const position = new Map();
    for (const depth of depths) {
        const ids = columns.get(depth);
        ids.forEach((id, row) => {
            position.set(id, { x: 30 + depth * colWidth, y: 28 + row * rowHeight });
        });
    }
    const height = Math.max(...[...position.values()].map((p) => p.y)) + 56;
    const width = 30 + (Math.max(...depths) + 1) * colWidth;
    const edges = graph.edges
        .map((edge) => {
        const a = position.get(edge.from);
        const b = position.get(edge.to);
        return `<line x1="${a.x + 150}" y1="${a.y + 16}" x2="${b.x}" y2="${b.y + 16}" class="edge"/>`;
    })
        .join("");
    const nodes = graph.nodes
        .map((node) => {
        const p = position.get(node.id);
        const active = isActiveNode(node, headSeq);
        const cls = active ? "node active" : "node";
        const badge = node.last_event ? kindBadge(node.last_event.kind) : "";
        return (`<g transform="translate(${p.x},${p.y})" class="${cls}" data-agent="${node.id}">` +
            `<rect width="150" height="32" rx="6"/>` +
            `<text x="8" y="20">${esc(node.id)}</text>` +
            `<foreignObject x="6" y="32" width="140" height="20">${badge}</foreignObject>` +
            `</g>`);
    })
        .join("");
    return `<svg viewBox="0 0 ${width} ${height}" width="100%" class="graph">${edges}${nodes}</svg>`;
}
export function renderListing(path, entries) {
    const up = path === "." || path === ""
        ? ""
        : `<tr><td colspan="3"><a href="#" data-path="${esc(parentOf(path))}">..</a></td></tr>`;
    const rows = entries
        .map((entry) => {
        const target = path === "." || path === "" ? entry.name : `${path}/${entry.name}`;
        const label = entry.kind === "dir" ? `${entry.name}/` : entry.name;
        return (`<tr><td><a href="#" data-path="${esc(target)}">${esc(label)}</a></td>` +
            `<td>${entry.kind}</td><td>${entry.kind === "file" ? entry.size : ""}</td></tr>`);
    })
        .join("");
    return `<table class="listing"><tr><th>name</th><th>kind</th><th>size</th></tr>${up}${rows}</table>`;
}
export function parentOf(path) {
    const idx = path.lastIndexOf("/");
    return idx === -1 ? "." : path.slice(0, idx);
}
export function renderAtomTable(parsed) {
    const rows = parsed.atoms
        .map((a, i) => `<tr><td>${i}</td><td>${esc(a.el)}</td>` +
        `<td>${a.x.toFixed(4)}</td><td>${a.y.toFixed(4)}</td><td>${a.z.toFixed(4)}</td></tr>`)
        .join("");
    return (`<p class="xyz-head">${parsed.count} atoms &mdash; ${esc(parsed.comment)}</p>` +
        `<table class="atoms"><tr><th>#</th><th>el</th><th>x</th><th>y</th><th>z</th></tr>${rows}</table>`);
}
