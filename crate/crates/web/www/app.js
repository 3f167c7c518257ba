import init, { segment, encode_sentence, search } from "./pkg/voicepipe_web.js";

const $ = (id) => document.getElementById(id);

function fill(table, head, rows) {
  table.replaceChildren();
  const tr = table.insertRow();
  for (const h of head) {
    const th = document.createElement("th");
    th.textContent = h;
    tr.appendChild(th);
  }
  for (const row of rows) {
    const r = table.insertRow();
    for (const cell of row) r.insertCell().textContent = cell;
  }
}

function fail(table, err) {
  table.replaceChildren();
  const cell = table.insertRow().insertCell();
  cell.className = "err";
  cell.textContent = String(err.message ?? err);
}

function runSegment() {
  const out = JSON.parse(segment($("seg-text").value, Number($("seg-size").value) || 1));
  $("seg-chunks").replaceChildren(
    ...out.chunks.map((c) => {
      const span = document.createElement("span");
      span.className = "chunk";
      span.textContent = c;
      return span;
    }),
  );
  fill(
    $("seg-out"),
    ["#", "released after chunk", "sentence"],
    out.sentences.map((s) => [
      s.index,
      s.chunk === out.chunks.length ? "end (flush)" : s.chunk,
      s.text,
    ]),
  );
}

function runFrame() {
  try {
    const view = JSON.parse(
      encode_sentence(
        Number($("frame-index").value),
        $("frame-text").value,
        Number($("frame-at").value),
      ),
    );
    fill($("frame-out"), ["field", "offset", "bytes"], view.fields.map((f) => [f.name, f.offset, f.hex]));
    $("frame-hex").textContent = `${view.len} bytes: ${view.hex}`;
  } catch (e) {
    fail($("frame-out"), e);
    $("frame-hex").textContent = "";
  }
}

function runSearch() {
  try {
    const hits = JSON.parse(
      search($("search-corpus").value, $("search-query").value, Number($("search-k").value) || 1, 256),
    );
    fill($("search-out"), ["rank", "doc", "score"], hits.map((h, i) => [i + 1, h.doc_id, h.score.toFixed(4)]));
  } catch (e) {
    fail($("search-out"), e);
  }
}

await init();
for (const id of ["seg-text", "seg-size"]) $(id).addEventListener("input", runSegment);
for (const id of ["frame-index", "frame-at", "frame-text"]) $(id).addEventListener("input", runFrame);
for (const id of ["search-corpus", "search-query", "search-k"]) $(id).addEventListener("input", runSearch);
runSegment();
runFrame();
runSearch();
