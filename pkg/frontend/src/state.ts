/**
 * View state and pure reducers for the two workflows. The DOM layer only
 * calls these and re-renders; reloading reconstructs everything from GET
 * endpoints, so no state here is authoritative.
 */

import type { ChatResponse, QAItem, RetrievalSettings } from "./api.js";
import { DEFAULT_SETTINGS } from "./api.js";

export interface ChatTurn {
  question: string;
  response: ChatResponse;
}

export interface ChatViewState {
  draft: string;
  settings: RetrievalSettings;
  inFlight: boolean;
  history: ChatTurn[];
  error: string | null;
}

export function initialChatState(): ChatViewState {
  return {
    draft: "",
    settings: { ...DEFAULT_SETTINGS },
    inFlight: false,
    history: [],
    error: null,
  };
}

/** Empty questions never leave the client; k is clamped to >= 1. */
export function canSubmit(state: ChatViewState): boolean {
  return !state.inFlight && state.draft.trim().length > 0 && state.settings.k >= 1;
}

export function startRequest(state: ChatViewState): ChatViewState {
  return { ...state, inFlight: true, error: null };
}

export function receiveResponse(
  state: ChatViewState,
  question: string,
  response: ChatResponse,
): ChatViewState {
  return {
    ...state,
    inFlight: false,
    draft: "",
    history: [...state.history, { question, response }],
  };
}

export function receiveError(state: ChatViewState, message: string): ChatViewState {
  return { ...state, inFlight: false, error: message };
}

export function setSettings(
  state: ChatViewState,
  patch: Partial<RetrievalSettings>,
): ChatViewState {
  const settings = { ...state.settings, ...patch };
  if (settings.k < 1) settings.k = 1;
  if (settings.mmrLambda < 0) settings.mmrLambda = 0;
  if (settings.mmrLambda > 1) settings.mmrLambda = 1;
  return { ...state, settings };
}

// ---------------------------------------------------------------------------
// annotation workflow

export interface EditorState {
  question: string;
  claims: string[];
  claimAnswers: string[];
  fullAnswer: string;
}

export interface AnnotationViewState {
  datasetId: string;
  docRef: string; // doc_id or "random"
  nQuestions: number;
  claimsPerQuestion: number;
  pending: QAItem[];
  editors: Record<string, EditorState>;
  acceptedCount: number;
  busy: boolean;
  error: string | null;
}

export function initialAnnotationState(datasetId = "bench"): AnnotationViewState {
  return {
    datasetId,
    docRef: "random",
    nQuestions: 1,
    claimsPerQuestion: 3,
    pending: [],
    editors: {},
    acceptedCount: 0,
    busy: false,
    error: null,
  };
}

export function editorFromItem(item: QAItem): EditorState {
  return {
    question: item.question,
    claims: [...item.claims],
    claimAnswers: [...item.claim_answers],
    fullAnswer: item.full_answer,
  };
}

/** The edit form can only submit when claims and answers agree in length,
 * nothing is empty, and the count matches the item's declared num_claims. */
export function editorValid(editor: EditorState, numClaims: number): boolean {
  return (
    editor.claims.length === numClaims &&
    editor.claimAnswers.length === numClaims &&
    editor.claims.every((c) => c.trim().length > 0) &&
    editor.claimAnswers.every((a) => a.trim().length > 0) &&
    editor.question.trim().length > 0 &&
    editor.fullAnswer.trim().length > 0
  );
}

export function addPending(
  state: AnnotationViewState,
  items: QAItem[],
): AnnotationViewState {
  const editors = { ...state.editors };
  for (const item of items) editors[item.qa_id] = editorFromItem(item);
  return { ...state, pending: [...state.pending, ...items], editors };
}

/** Optimistically remove a reviewed item; revert() restores it on failure. */
export function settleReview(
  state: AnnotationViewState,
  qaId: string,
  action: "accept" | "edit" | "reject",
): { next: AnnotationViewState; revert: (s: AnnotationViewState) => AnnotationViewState } {
  const item = state.pending.find((p) => p.qa_id === qaId);
  const next: AnnotationViewState = {
    ...state,
    pending: state.pending.filter((p) => p.qa_id !== qaId),
    acceptedCount:
      action === "reject" ? state.acceptedCount : state.acceptedCount + 1,
  };
  const revert = (s: AnnotationViewState): AnnotationViewState =>
    item
      ? {
          ...s,
          pending: [...s.pending, item],
          acceptedCount:
            action === "reject" ? s.acceptedCount : s.acceptedCount - 1,
        }
      : s;
  return { next, revert };
}

export function editPayload(editor: EditorState): Partial<QAItem> {
  return {
    question: editor.question,
    claims: editor.claims,
    claim_answers: editor.claimAnswers,
    full_answer: editor.fullAnswer,
  };
}
