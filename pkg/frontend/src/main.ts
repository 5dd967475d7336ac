// Browser bootstrap: owns the singleton state, forwards user gestures to
// the API client, and re-renders after every state change. One request
// per session may be in flight at a time; submits are disabled meanwhile.

import { ApiClient } from "./api.js";
import {
    applyAnswer,
    applyCreated,
    applyError,
    initialState,
    type UiSessionState,
} from "./state.js";
import { renderRound } from "./view.js";

const client = new ApiClient("");
let state: UiSessionState = initialState();

function redraw(): void {
    const app = document.getElementById("app");
    if (app) {
        app.innerHTML = renderRound(state);
    }
}

async function startSession(query: string): Promise<void> {
    if (!query.trim() || state.inFlight) {
        return;
    }
    state = { ...state, inFlight: true, error: null };
    redraw();
    try {
        state = applyCreated(state, query, await client.createSession(query));
    } catch (error) {
        state = applyError(state, error, "");
    }
    redraw();
}

async function submit(answer: string): Promise<void> {
    const sessionId = state.sessionId;
    if (!answer.trim() || state.inFlight || state.terminal || !sessionId) {
        return;
    }
    state = { ...state, inFlight: true, error: null };
    redraw();
    try {
        state = applyAnswer(state, answer, await client.submitAnswer(sessionId, answer));
    } catch (error) {
        state = applyError(state, error, answer);
    }
    redraw();
}

async function endSession(): Promise<void> {
    if (!state.sessionId || state.inFlight) {
        return;
    }
    try {
        await client.endSession(state.sessionId);
        state = { ...state, terminal: true, options: [] };
    } catch (error) {
        state = applyError(state, error, state.draft);
    }
    redraw();
}

function currentAnswerText(): string {
    const input = document.getElementById("answer-input") as HTMLInputElement | null;
    return input ? input.value : "";
}

document.addEventListener("DOMContentLoaded", () => {
    const startButton = document.getElementById("start-session");
    const queryInput = document.getElementById("query-input") as HTMLInputElement | null;
    startButton?.addEventListener("click", () => {
        if (queryInput) {
            void startSession(queryInput.value);
        }
    });
    queryInput?.addEventListener("keydown", (event) => {
        if (event.key === "Enter") {
            void startSession(queryInput.value);
        }
    });

    const app = document.getElementById("app");
    app?.addEventListener("click", (event) => {
        const target = event.target as HTMLElement;
        if (target.matches("button.chip")) {
            void submit(target.dataset.option ?? "");
        } else if (target.id === "send-answer") {
            void submit(currentAnswerText());
        } else if (target.id === "end-session") {
            void endSession();
        }
    });
    app?.addEventListener("keydown", (event) => {
        const keyboard = event as KeyboardEvent;
        const target = event.target as HTMLElement;
        if (keyboard.key === "Enter" && target.id === "answer-input") {
            void submit(currentAnswerText());
        }
    });
    redraw();
});
