/**
 * Typed client for the ragkit HTTP service. All state shown in the UI is a
 * projection of these responses; nothing is authoritative client-side.
 */

export interface ChatResponse {
  markdown: string;
  citations: string[];
  trace_id: string;
  used_retrieval: boolean;
}

export interface TraceStep {
  name: string;
  status: string;
  started_at: number;
  ended_at: number;
  input: { sha256: string; preview: string; chars: number };
  output: { sha256: string; preview: string; chars: number };
}

export interface TraceRecord {
  trace_id: string;
  question: string;
  steps: TraceStep[];
  retrieval_config: Record<string, unknown>;
  llm_config: Record<string, unknown>;
  created_at: number;
  notes: Record<string, string>;
}

export interface QAItem {
  qa_id: string;
  question: string;
  num_claims: number;
  claims: string[];
  claim_answers: string[];
  full_answer: string;
  source_arxiv_id: string;
  status: string;
  annotator: string;
}

export interface DatasetView {
  dataset_id: string;
  name: string;
  version: number;
  items: QAItem[];
}

export interface DocumentInfo {
  doc_id: string;
  arxiv_id: string;
  primary_category: string;
  kind: string;
}

/** Retrieval settings exposed in the chat view controls. */
export interface RetrievalSettings {
  metric: "cosine" | "mmr";
  k: number;
  mmrLambda: number;
}

export const DEFAULT_SETTINGS: RetrievalSettings = {
  metric: "cosine",
  k: 20,
  mmrLambda: 0.5,
};

/**
 * The service separates the similarity metric from the search mode; the UI
 * selector folds them into one control the way the chat view presents it.
 */
export function buildChatRequestBody(
  question: string,
  settings: RetrievalSettings,
): { question: string; retrieval_config: Record<string, unknown> } {
  const mmr = settings.metric === "mmr";
  const retrieval_config: Record<string, unknown> = {
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

export function arxivAbsUrl(arxivId: string): string {
  return `https://arxiv.org/abs/${arxivId}`;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public violations: string[] = [],
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    if (!resp.ok) {
      let code = `http_${resp.status}`;
      let message = text;
      let violations: string[] = [];
      try {
        const body = JSON.parse(text);
        code = body.code ?? code;
        message = body.message ?? message;
        violations = body.violations ?? [];
      } catch {
        /* not a structured error body */
      }
      throw new ApiError(resp.status, code, message, violations);
    }
    return JSON.parse(text) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  chat(question: string, settings: RetrievalSettings): Promise<ChatResponse> {
    return this.post<ChatResponse>("/chat", buildChatRequestBody(question, settings));
  }

  trace(traceId: string): Promise<TraceRecord> {
    return this.request<TraceRecord>(`/traces/${traceId}`);
  }

  documents(): Promise<{ documents: DocumentInfo[] }> {
    return this.request(`/documents`);
  }

  dataset(datasetId: string): Promise<DatasetView> {
    return this.request(`/datasets/${datasetId}`);
  }

  generate(
    datasetId: string,
    docRef: string,
    nQuestions: number,
    claimsPerQuestion: number,
  ): Promise<{ generated: QAItem[] }> {
    return this.post(`/datasets/${datasetId}/generate`, {
      doc_ref: docRef,
      n_questions: nQuestions,
      claims_per_question: claimsPerQuestion,
    });
  }

  review(
    datasetId: string,
    qaId: string,
    action: "accept" | "edit" | "reject",
    payload?: Partial<QAItem>,
    force = false,
  ): Promise<{ item: QAItem }> {
    return this.post(`/datasets/${datasetId}/items/${qaId}/review`, {
      action,
      annotator: "web",
      payload: payload ?? null,
      force,
    });
  }

  async exportDataset(datasetId: string): Promise<string> {
    const resp = await this.fetchFn(`${this.baseUrl}/datasets/${datasetId}/export`);
    if (!resp.ok) {
      throw new ApiError(resp.status, `http_${resp.status}`, await resp.text());
    }
    return resp.text();
  }
}
