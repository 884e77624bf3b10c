/**
 * View state and pure reducers for the two workflows. The DOM layer only
 * calls these and re-renders; reloading reconstructs everything from GET
 * endpoints, so no state here is authoritative.
 */
import { DEFAULT_SETTINGS } from "./api.js";
export function initialChatState() {
    return {
        draft: "",
        settings: { ...DEFAULT_SETTINGS },
        inFlight: false,
        history: [],
        error: null,
    };
}
/** Empty questions never leave the client; k is clamped to >= 1. */
export function canSubmit(state) {
    return !state.inFlight && state.draft.trim().length > 0 && state.settings.k >= 1;
}
export function startRequest(state) {
    return { ...state, inFlight: true, error: null };
}
export function receiveResponse(state, question, response) {
    return {
        ...state,
        inFlight: false,
        draft: "",
        history: [...state.history, { question, response }],
    };
}
export function receiveError(state, message) {
    return { ...state, inFlight: false, error: message };
}
export function setSettings(state, patch) {
    const settings = { ...state.settings, ...patch };
    if (settings.k < 1)
        settings.k = 1;
    if (settings.mmrLambda < 0)
        settings.mmrLambda = 0;
    if (settings.mmrLambda > 1)
        settings.mmrLambda = 1;
    return { ...state, settings };
}
export function initialAnnotationState(datasetId = "bench") {
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
export function editorFromItem(item) {
    return {
        question: item.question,
        claims: [...item.claims],
        claimAnswers: [...item.claim_answers],
        fullAnswer: item.full_answer,
    };
}
/** The edit form can only submit when claims and answers agree in length,
 * nothing is empty, and the count matches the item's declared num_claims. */
export function editorValid(editor, numClaims) {
    return (editor.claims.length === numClaims &&
        editor.claimAnswers.length === numClaims &&
        editor.claims.every((c) => c.trim().length > 0) &&
        editor.claimAnswers.every((a) => a.trim().length > 0) &&
        editor.question.trim().length > 0 &&
        editor.fullAnswer.trim().length > 0);
}
export function addPending(state, items) {
    const editors = { ...state.editors };
    for (const item of items)
        editors[item.qa_id] = editorFromItem(item);
    return { ...state, pending: [...state.pending, ...items], editors };
}
/** Optimistically remove a reviewed item; revert() restores it on failure. */
export function settleReview(state, qaId, action) {
    const item = state.pending.find((p) => p.qa_id === qaId);
    const next = {
        ...state,
        pending: state.pending.filter((p) => p.qa_id !== qaId),
        acceptedCount: action === "reject" ? state.acceptedCount : state.acceptedCount + 1,
    };
    const revert = (s) => item
        ? {
            ...s,
            pending: [...s.pending, item],
            acceptedCount: action === "reject" ? s.acceptedCount : s.acceptedCount - 1,
        }
        : s;
    return { next, revert };
}
export function editPayload(editor) {
    return {
        question: editor.question,
        claims: editor.claims,
        claim_answers: editor.claimAnswers,
        full_answer: editor.fullAnswer,
    };
}
