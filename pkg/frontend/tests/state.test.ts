import { describe, expect, it } from "vitest";

import type { AnswerResponse, CreateResponse, TranscriptResponse } from "../src/api.js";
import {
    applyAnswer,
    applyCreated,
    applyError,
    initialState,
    transcriptMessages,
} from "../src/state.js";

const created: CreateResponse = {
    session_id: "s1",
    round: 0,
    aspect: "type",
    question: "What type of generator is being used?",
    options: ["a", "b", "c", "d", "e"],
};

const answered: AnswerResponse = {
    extended_query: "extended",
    recommendations: ["java.util.Random.nextDouble", "java.util.Random.doubles"],
    next: { aspect: "purpose", question: "Which values?", options: ["x", "y"] },
};

describe("state reducers", () => {
    it("starts with an empty session", () => {
        const state = initialState();
        expect(state.sessionId).toBeNull();
        expect(state.messages).toEqual([]);
        expect(state.round).toBe(0);
        expect(state.terminal).toBe(false);
    });

    it("records the query and first question on create", () => {
        const state = applyCreated(initialState(), "my query", created);
        expect(state.sessionId).toBe("s1");
        expect(state.messages).toEqual([
            { role: "user", text: "my query" },
            { role: "system", text: created.question },
        ]);
        expect(state.options).toEqual(created.options);
        expect(state.round).toBe(0);
    });

    it("round equals the count of submitted answers", () => {
        let state = applyCreated(initialState(), "q", created);
        state = applyAnswer(state, "first answer", answered);
        expect(state.round).toBe(1);
        state = applyAnswer(state, "second answer", { ...answered, next: null });
        expect(state.round).toBe(2);
    });

    it("appends user answer then next question in order", () => {
        let state = applyCreated(initialState(), "q", created);
        state = applyAnswer(state, "my answer", answered);
        const texts = state.messages.map((m) => m.text);
        expect(texts).toEqual(["q", created.question, "my answer", "Which values?"]);
        expect(state.options).toEqual(["x", "y"]);
        expect(state.recommendations[0]).toBe("java.util.Random.nextDouble");
    });

    it("terminal when no next round is offered", () => {
        let state = applyCreated(initialState(), "q", created);
        state = applyAnswer(state, "a", { ...answered, next: null });
        expect(state.terminal).toBe(true);
        expect(state.options).toEqual([]);
    });

    it("keeps the typed draft on error", () => {
        const state = applyError(initialState(), new Error("HTTP 502 (scripted-miss): out"), "typed text");
        expect(state.error).toContain("scripted-miss");
        expect(state.draft).toBe("typed text");
        expect(state.inFlight).toBe(false);
    });
});

describe("transcript projection", () => {
    it("mirrors server ordering", () => {
        const transcript: TranscriptResponse = {
            session_id: "s1",
            query: "q",
            variant: "full",
            round_count: 2,
            rounds: [
                { round: 1, aspect: "type", question: "q1?", options: [], answer: "a1",
                  extended_query: "e1", recommendations: ["x.y.z"] },
                { round: 2, aspect: "purpose", question: "q2?", options: [], answer: "a2",
                  extended_query: "e2", recommendations: ["x.y.z"] },
            ],
        };
        expect(transcriptMessages(transcript).map((m) => m.text)).toEqual([
            "q", "q1?", "a1", "q2?", "a2",
        ]);
    });

    it("includes a pending question without an answer", () => {
        const transcript: TranscriptResponse = {
            session_id: "s1",
            query: "q",
            variant: "full",
            round_count: 0,
            rounds: [
                { round: 1, aspect: "type", question: "q1?", options: [], answer: null,
                  extended_query: null, recommendations: null },
            ],
        };
        expect(transcriptMessages(transcript).map((m) => m.text)).toEqual(["q", "q1?"]);
    });
});
