/** DOM wiring for the chat and annotation views. All logic lives in the
 * pure modules; this file only renders state and forwards events. */
import { ApiClient, ApiError, arxivAbsUrl } from "./api.js";
import { citationIds, escapeHtml, renderMarkdown } from "./markdown.js";
import { addPending, canSubmit, editPayload, editorValid, initialAnnotationState, initialChatState, receiveError, receiveResponse, setSettings, settleReview, startRequest, } from "./state.js";
const api = new ApiClient("");
const root = document.getElementById("app");
let chatState = initialChatState();
let annoState = initialAnnotationState();
let view = "chat";
function el(html) {
    const template = document.createElement("template");
    template.innerHTML = html.trim();
    return template.content.firstElementChild;
}
function render() {
    root.replaceChildren(el(`
      <nav>
        <button id="tab-chat" class="${view === "chat" ? "active" : ""}">Chat</button>
        <button id="tab-annotate" class="${view === "annotate" ? "active" : ""}">Annotate</button>
      </nav>`), view === "chat" ? renderChat() : renderAnnotate());
    document.getElementById("tab-chat").onclick = () => {
        view = "chat";
        render();
    };
    document.getElementById("tab-annotate").onclick = () => {
        view = "annotate";
        render();
    };
}
// ---------------------------------------------------------------------------
// chat view
function renderChat() {
    const s = chatState;
    const disabled = s.inFlight ? "disabled" : "";
    const panel = el(`
    <section class="chat">
      <div class="controls">
        <label>metric
          <select id="metric" ${disabled}>
            <option value="cosine" ${s.settings.metric === "cosine" ? "selected" : ""}>cosine</option>
            <option value="mmr" ${s.settings.metric === "mmr" ? "selected" : ""}>mmr</option>
          </select>
        </label>
        <label>k <input id="k" type="number" min="1" value="${s.settings.k}" ${disabled}></label>
        <label class="${s.settings.metric === "mmr" ? "" : "hidden"}">lambda
          <input id="lambda" type="number" min="0" max="1" step="0.05"
                 value="${s.settings.mmrLambda}" ${disabled}>
        </label>
      </div>
      <div id="history"></div>
      ${s.error ? `<div class="error">${escapeHtml(s.error)}</div>` : ""}
      <form id="ask">
        <input id="question" placeholder="Ask about the corpus" value="${escapeHtml(s.draft)}" ${disabled}>
        <button type="submit" ${disabled}>Ask</button>
      </form>
    </section>`);
    const history = panel.querySelector("#history");
    for (const turn of s.history) {
        const chips = citationIds(turn.response.markdown)
            .map((id) => `<a class="chip" href="${arxivAbsUrl(id)}" target="_blank" rel="noopener">${id}</a>`)
            .join("");
        history.appendChild(el(`
        <article class="turn">
          <div class="question">${escapeHtml(turn.question)}</div>
          <div class="answer">${renderMarkdown(turn.response.markdown)}</div>
          <div class="meta">
            ${chips}
            <a class="trace-link" href="#" data-trace="${turn.response.trace_id}">
              trace ${turn.response.trace_id}</a>
          </div>
        </article>`));
    }
    for (const link of panel.querySelectorAll(".trace-link")) {
        link.onclick = async (event) => {
            event.preventDefault();
            await showTrace(link.dataset.trace);
        };
    }
    panel.querySelector("#metric").onchange = (event) => {
        chatState = setSettings(chatState, {
            metric: event.target.value,
        });
        render();
    };
    panel.querySelector("#k").onchange = (event) => {
        chatState = setSettings(chatState, {
            k: Number(event.target.value),
        });
        render();
    };
    const lambda = panel.querySelector("#lambda");
    if (lambda) {
        lambda.onchange = (event) => {
            chatState = setSettings(chatState, {
                mmrLambda: Number(event.target.value),
            });
            render();
        };
    }
    panel.querySelector("#question").oninput = (event) => {
        chatState = { ...chatState, draft: event.target.value };
    };
    panel.querySelector("#ask").onsubmit = async (event) => {
        event.preventDefault();
        if (!canSubmit(chatState))
            return; // empty question: no request leaves
        const question = chatState.draft.trim();
        chatState = startRequest(chatState);
        render();
        try {
            const response = await api.chat(question, chatState.settings);
            chatState = receiveResponse(chatState, question, response);
        }
        catch (error) {
            const message = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
            chatState = receiveError(chatState, message);
        }
        render();
    };
    return panel;
}
async function showTrace(traceId) {
    let body;
    try {
        const trace = await api.trace(traceId);
        const rows = trace.steps
            .map((step) => `
        <tr><td>${escapeHtml(step.name)}</td><td>${escapeHtml(step.status)}</td>
        <td>${(step.ended_at - step.started_at).toFixed(3)}s</td>
        <td><code>${escapeHtml(step.output.preview.slice(0, 80))}</code></td></tr>`)
            .join("");
        body = `
      <h2>Trace ${escapeHtml(trace.trace_id)}</h2>
      <p>${escapeHtml(trace.question)}</p>
      <table><tr><th>step</th><th>status</th><th>wall</th><th>output</th></tr>${rows}</table>`;
    }
    catch (error) {
        const message = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
        body = `<h2>Trace ${escapeHtml(traceId)}</h2><p class="error">${escapeHtml(message)}</p>`;
    }
    const overlay = el(`<div class="overlay"><div class="modal">${body}<button id="close">close</button></div></div>`);
    overlay.querySelector("#close").onclick = () => overlay.remove();
    document.body.appendChild(overlay);
}
// ---------------------------------------------------------------------------
// annotation view
function renderAnnotate() {
    const s = annoState;
    const panel = el(`
    <section class="annotate">
      <div class="controls">
        <label>dataset <input id="dataset" value="${escapeHtml(s.datasetId)}"></label>
        <label>document
          <input id="doc" value="${escapeHtml(s.docRef)}" title="doc_id or 'random'">
        </label>
        <button id="random">random unexplored</button>
        <label>questions <input id="n" type="number" min="1" value="${s.nQuestions}"></label>
        <label>claims <input id="claims" type="number" min="1" value="${s.claimsPerQuestion}"></label>
        <button id="generate" ${s.busy ? "disabled" : ""}>Generate</button>
        <span class="counter">accepted: ${s.acceptedCount}</span>
      </div>
      ${s.error ? `<div class="error">${escapeHtml(s.error)}</div>` : ""}
      <div id="pending"></div>
    </section>`);
    const pendingBox = panel.querySelector("#pending");
    for (const item of s.pending)
        pendingBox.appendChild(renderPendingCard(item));
    panel.querySelector("#dataset").onchange = (e) => {
        annoState = { ...annoState, datasetId: e.target.value };
    };
    panel.querySelector("#doc").onchange = (e) => {
        annoState = { ...annoState, docRef: e.target.value };
    };
    panel.querySelector("#random").onclick = () => {
        annoState = { ...annoState, docRef: "random" };
        render();
    };
    panel.querySelector("#n").onchange = (e) => {
        annoState = { ...annoState, nQuestions: Number(e.target.value) };
    };
    panel.querySelector("#claims").onchange = (e) => {
        annoState = {
            ...annoState,
            claimsPerQuestion: Number(e.target.value),
        };
    };
    panel.querySelector("#generate").onclick = async () => {
        annoState = { ...annoState, busy: true, error: null };
        render();
        try {
            const out = await api.generate(annoState.datasetId, annoState.docRef, annoState.nQuestions, annoState.claimsPerQuestion);
            annoState = { ...addPending(annoState, out.generated), busy: false };
        }
        catch (error) {
            const message = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
            annoState = { ...annoState, busy: false, error: message };
        }
        render();
    };
    return panel;
}
function renderPendingCard(item) {
    const editor = annoState.editors[item.qa_id];
    const valid = editorValid(editor, item.num_claims);
    const card = el(`
    <article class="card" data-qa="${item.qa_id}">
      <header><code>${item.qa_id}</code> (${item.num_claims} claims)</header>
      <label>question <textarea class="q">${escapeHtml(editor.question)}</textarea></label>
      <div class="claims"></div>
      <label>full answer <textarea class="fa">${escapeHtml(editor.fullAnswer)}</textarea></label>
      ${valid ? "" : `<div class="error inline">claims and answers must agree with the declared claim count</div>`}
      <footer>
        <button class="accept">accept</button>
        <button class="save" ${valid ? "" : "disabled"}>save edit</button>
        <button class="reject">reject</button>
        <button class="drop-claim">drop last claim</button>
      </footer>
    </article>`);
    const claimsBox = card.querySelector(".claims");
    editor.claims.forEach((claim, index) => {
        const row = el(`
      <div class="claim-row">
        <input class="claim" value="${escapeHtml(claim)}" data-i="${index}">
        <input class="answer" value="${escapeHtml(editor.claimAnswers[index] ?? "")}" data-i="${index}">
      </div>`);
        claimsBox.appendChild(row);
    });
    card.querySelectorAll(".claim").forEach((input) => {
        input.onchange = () => {
            editor.claims[Number(input.dataset.i)] = input.value;
            render();
        };
    });
    card.querySelectorAll(".answer").forEach((input) => {
        input.onchange = () => {
            editor.claimAnswers[Number(input.dataset.i)] = input.value;
            render();
        };
    });
    card.querySelector(".q").onchange = (e) => {
        editor.question = e.target.value;
        render();
    };
    card.querySelector(".fa").onchange = (e) => {
        editor.fullAnswer = e.target.value;
        render();
    };
    // deliberately produces a claim-count mismatch so the guard is visible
    card.querySelector(".drop-claim").onclick = () => {
        editor.claims.pop();
        render();
    };
    const act = async (action) => {
        const { next, revert } = settleReview(annoState, item.qa_id, action);
        annoState = next;
        render();
        try {
            await api.review(annoState.datasetId, item.qa_id, action, action === "edit" ? editPayload(editor) : undefined);
        }
        catch (error) {
            const message = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
            annoState = { ...revert(annoState), error: message };
        }
        render();
    };
    card.querySelector(".accept").onclick = () => act("accept");
    card.querySelector(".save").onclick = () => act("edit");
    card.querySelector(".reject").onclick = () => act("reject");
    return card;
}
render();
