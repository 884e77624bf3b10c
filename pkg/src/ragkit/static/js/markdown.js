/**
 * Minimal GitHub-flavored markdown renderer restricted to the subset the
 * backend's validator accepts: fenced code blocks, headings, lists, inline
 * code, bracket-paren links, and bare [arxiv-id] citation markers (rendered
 * as chips). Everything is HTML-escaped before any markup is introduced.
 */
const ARXIV_ID = String.raw `(?:\d{4}\.\d{4,5}(?:v\d+)?|[a-z][a-z-]*(?:\.[A-Z]{2})?\/\d{7})`;
const CITATION_RE = new RegExp(String.raw `(?<!\\)\[(${ARXIV_ID})\](?!\()`, "g");
const LINK_RE = /(?<!\\)\[([^\]\n]*)\]\(([^)\n]*)\)/g;
export function escapeHtml(text) {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}
/** Inline citation ids outside code fences, deduplicated in order of first
 * appearance. Mirrors the backend's extraction rule. */
export function citationIds(markdown) {
    const seen = [];
    let inFence = false;
    for (const line of markdown.split("\n")) {
        if (line.trimStart().startsWith("```")) {
            inFence = !inFence;
            continue;
        }
        if (inFence)
            continue;
        for (const match of line.matchAll(CITATION_RE)) {
            if (!seen.includes(match[1]))
                seen.push(match[1]);
        }
    }
    return seen;
}
function renderInline(text) {
    let out = escapeHtml(text);
    // code spans first so nothing inside them is further rewritten
    out = out.replace(/`([^`]*)`/g, (_m, code) => `<code>${code}</code>`);
    out = out.replace(LINK_RE, (_m, label, url) => `<a href="${url}" target="_blank" rel="noopener">${label}</a>`);
    out = out.replace(CITATION_RE, (_m, id) => `<span class="citation-chip" data-arxiv-id="${id}">${id}</span>`);
    out = out.replace(/\*\*([^*]+)\*\*/g, "<strong>$1</strong>");
    return out;
}
export function renderMarkdown(markdown) {
    const html = [];
    const lines = markdown.split("\n");
    let i = 0;
    let paragraph = [];
    let list = [];
    const flushParagraph = () => {
        if (paragraph.length) {
            html.push(`<p>${paragraph.map(renderInline).join("<br>")}</p>`);
            paragraph = [];
        }
    };
    const flushList = () => {
        if (list.length) {
            html.push(`<ul>${list.map((li) => `<li>${renderInline(li)}</li>`).join("")}</ul>`);
            list = [];
        }
    };
    while (i < lines.length) {
        const line = lines[i];
        if (line.trimStart().startsWith("```")) {
            flushParagraph();
            flushList();
            const code = [];
            i += 1;
            while (i < lines.length && !lines[i].trimStart().startsWith("```")) {
                code.push(lines[i]);
                i += 1;
            }
            i += 1; // closing fence (validator guarantees it exists)
            html.push(`<pre><code>${escapeHtml(code.join("\n"))}</code></pre>`);
            continue;
        }
        const heading = /^(#{1,6})\s+(.*)$/.exec(line);
        if (heading) {
            flushParagraph();
            flushList();
            const level = heading[1].length;
            html.push(`<h${level}>${renderInline(heading[2])}</h${level}>`);
            i += 1;
            continue;
        }
        if (/^\s*-\s+/.test(line)) {
            flushParagraph();
            list.push(line.replace(/^\s*-\s+/, ""));
            i += 1;
            continue;
        }
        if (line.trim() === "") {
            flushParagraph();
            flushList();
            i += 1;
            continue;
        }
        flushList();
        paragraph.push(line);
        i += 1;
    }
    flushParagraph();
    flushList();
    return html.join("\n");
}
