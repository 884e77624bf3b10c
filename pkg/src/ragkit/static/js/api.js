/**
 * Typed client for the ragkit HTTP service. All state shown in the UI is a
 * projection of these responses; nothing is authoritative client-side.
 */
export const DEFAULT_SETTINGS = {
    metric: "cosine",
    k: 20,
    mmrLambda: 0.5,
};
/**
 * The service separates the similarity metric from the search mode; the UI
 * selector folds them into one control the way the chat view presents it.
 */
export function buildChatRequestBody(question, settings) {
    const mmr = settings.metric === "mmr";
    const retrieval_config = {
        metric: "cosine",
        mode: mmr ? "mmr" : "plain_topk",
        k: settings.k,
    };
    if (mmr) {
        retrieval_config.mmr_lambda = settings.mmrLambda;
        retrieval_config.fetch_k = settings.k * 4;
    }
    return { question, retrieval_config };
}
export function arxivAbsUrl(arxivId) {
    return `https://arxiv.org/abs/${arxivId}`;
}
export class ApiError extends Error {
    constructor(status, code, message, violations = []) {
        super(message);
        this.status = status;
        this.code = code;
        this.violations = violations;
    }
}
export class ApiClient {
    constructor(baseUrl = "", fetchFn = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async request(path, init) {
        const resp = await this.fetchFn(this.baseUrl + path, init);
        const text = await resp.text();
        if (!resp.ok) {
            let code = `http_${resp.status}`;
            let message = text;
            let violations = [];
            try {
                const body = JSON.parse(text);
                code = body.code ?? code;
                message = body.message ?? message;
                violations = body.violations ?? [];
            }
            catch {
                /* not a structured error body */
            }
            throw new ApiError(resp.status, code, message, violations);
        }
        return JSON.parse(text);
    }
    post(path, body) {
        return this.request(path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
    }
    chat(question, settings) {
        return this.post("/chat", buildChatRequestBody(question, settings));
    }
    trace(traceId) {
        return this.request(`/traces/${traceId}`);
    }
    documents() {
        return this.request(`/documents`);
    }
    dataset(datasetId) {
        return this.request(`/datasets/${datasetId}`);
    }
    generate(datasetId, docRef, nQuestions, claimsPerQuestion) {
        return this.post(`/datasets/${datasetId}/generate`, {
            doc_ref: docRef,
            n_questions: nQuestions,
            claims_per_question: claimsPerQuestion,
        });
    }
    review(datasetId, qaId, action, payload, force = false) {
        return this.post(`/datasets/${datasetId}/items/${qaId}/review`, {
            action,
            annotator: "web",
            payload: payload ?? null,
            force,
        });
    }
    async exportDataset(datasetId) {
        const resp = await this.fetchFn(`${this.baseUrl}/datasets/${datasetId}/export`);
        if (!resp.ok) {
            throw new ApiError(resp.status, `http_${resp.status}`, await resp.text());
        }
        return resp.text();
    }
}
