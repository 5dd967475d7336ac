// Client-side session state: a plain mirror of the server's session,
// updated only from API responses. The round number always equals the
// count of submitted answers.

import type { AnswerResponse, CreateResponse, TranscriptResponse } from "./api.js";

export interface Message {
    role: "user" | "system";
    text: string;
}

export interface UiSessionState {
    sessionId: string | null;
    messages: Message[];
    options: string[];
    recommendations: string[];
    round: number;
    terminal: boolean;
    inFlight: boolean;
    error: string | null;
    draft: string;
}

export function initialState(): UiSessionState {
    return {
        sessionId: null,
        messages: [],
        options: [],
        recommendations: [],
        round: 0,
        terminal: false,
        inFlight: false,
        error: null,
        draft: "",
    };
}

export function applyCreated(
    state: UiSessionState,
    query: string,
    response: CreateResponse,
): UiSessionState {
    return {
        ...state,
        sessionId: response.session_id,
        messages: [
            ...state.messages,
            { role: "user", text: query },
            { role: "system", text: response.question },
        ],
        options: response.options,
        round: response.round,
        terminal: false,
        inFlight: false,
        error: null,
        draft: "",
    };
}

export function applyAnswer(
    state: UiSessionState,
    answer: string,
    response: AnswerResponse,
): UiSessionState {
    const messages: Message[] = [...state.messages, { role: "user", text: answer }];
    if (response.next) {
        messages.push({ role: "system", text: response.next.question });
    }
    return {
        ...state,
        messages,
        options: response.next ? response.next.options : [],
        recommendations: response.recommendations,
        round: state.round + 1,
        terminal: response.next === null,
        inFlight: false,
        error: null,
        draft: "",
    };
}

export function applyError(state: UiSessionState, error: unknown, draft: string): UiSessionState {
    return {
        ...state,
        inFlight: false,
        error: error instanceof Error ? error.message : String(error),
        draft,
    };
}

// The message sequence the server's transcript implies, used to check that
// the chat view never reorders anything.
export function transcriptMessages(transcript: TranscriptResponse): Message[] {
    const messages: Message[] = [{ role: "user", text: transcript.query }];
    for (const round of transcript.rounds) {
        messages.push({ role: "system", text: round.question });
        if (round.answer !== null) {
            messages.push({ role: "user", text: round.answer });
        }
    }
    return messages;
}
