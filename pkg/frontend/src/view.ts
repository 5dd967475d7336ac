// HTML rendering as pure string functions so the view is testable
// without a browser. main.ts injects the result and wires events.

import type { UiSessionState } from "./state.js";

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

export function renderMessages(state: UiSessionState): string {
    const bubbles = state.messages
        .map((m) => `<div class="msg ${m.role}">${escapeHtml(m.text)}</div>`)
        .join("");
    return `<div class="messages">${bubbles}</div>`;
}

export function renderOptions(state: UiSessionState): string {
    if (state.terminal || state.options.length === 0) {
        return `<div class="options"></div>`;
    }
    const disabled = state.inFlight ? " disabled" : "";
    const chips = state.options
        .map(
            (option) =>
                `<button class="chip" data-option="${escapeHtml(option)}"${disabled}>` +
                `${escapeHtml(option)}</button>`,
        )
        .join("");
    return `<div class="options">${chips}</div>`;
}

export function renderRecommendations(state: UiSessionState): string {
    if (state.recommendations.length === 0) {
        return `<div class="recommendations empty">No recommendations yet.</div>`;
    }
    const items = state.recommendations
        .map((api, index) => {
            const rankClass = index === 0 ? "rec rank-1" : "rec";
            const badge = index === 0 ? `<span class="badge">best</span>` : "";
            return `<li class="${rankClass}">${escapeHtml(api)}${badge}</li>`;
        })
        .join("");
    return `<div class="recommendations"><h2>Recommended APIs (round ${state.round})</h2>` +
        `<ol>${items}</ol></div>`;
}

export function renderComposer(state: UiSessionState): string {
    const disabled = state.inFlight || state.terminal ? " disabled" : "";
    const stopButton = state.sessionId && !state.terminal
        ? `<button id="end-session"${state.inFlight ? " disabled" : ""}>End session</button>`
        : "";
    return (
        `<div class="composer">` +
        `<input id="answer-input" type="text" placeholder="Type your own answer" ` +
        `value="${escapeHtml(state.draft)}"${disabled}>` +
        `<button id="send-answer"${disabled}>Send</button>${stopButton}</div>`
    );
}

export function renderRound(state: UiSessionState): string {
    const error = state.error
        ? `<div class="error">${escapeHtml(state.error)}</div>`
        : "";
    const summary = state.terminal
        ? `<div class="summary">Session ended after ${state.round} round(s).</div>`
        : "";
    return (
        renderMessages(state) +
        renderOptions(state) +
        renderRecommendations(state) +
        error +
        summary +
        renderComposer(state)
    );
}
