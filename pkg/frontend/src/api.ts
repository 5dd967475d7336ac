// Thin typed client for the /v1 session API. No business logic here:
// every value is passed through exactly as the server sent it.

export interface RoundPayload {
    aspect: string;
    question: string;
    options: string[];
}

export interface CreateResponse extends RoundPayload {
    session_id: string;
    round: number;
}

export interface AnswerResponse {
    extended_query: string;
    recommendations: string[];
    next: RoundPayload | null;
}

export interface TranscriptRound {
    round: number;
    aspect: string;
    question: string;
    options: string[];
    answer: string | null;
    extended_query: string | null;
    recommendations: string[] | null;
}

export interface TranscriptResponse {
    session_id: string;
    query: string;
    variant: string;
    round_count: number;
    rounds: TranscriptRound[];
}

export class ApiError extends Error {
    constructor(
        public status: number,
        public kind: string,
        public detail: string,
    ) {
        super(`HTTP ${status} (${kind}): ${detail}`);
    }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
    const response = await fetch(url, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
        throw new ApiError(
            response.status,
            typeof body.error === "string" ? body.error : "unknown",
            typeof body.detail === "string" ? body.detail : response.statusText,
        );
    }
    return body as T;
}

export class ApiClient {
    constructor(private base: string = "") {}

    createSession(query: string, variant: string = "full"): Promise<CreateResponse> {
        return request(`${this.base}/v1/sessions`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ query, variant }),
        });
    }

    submitAnswer(sessionId: string, answer: string, stop = false): Promise<AnswerResponse> {
        return request(`${this.base}/v1/sessions/${sessionId}/answers`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ answer, stop }),
        });
    }

    getTranscript(sessionId: string): Promise<TranscriptResponse> {
        return request(`${this.base}/v1/sessions/${sessionId}/transcript`);
    }

    endSession(sessionId: string): Promise<TranscriptResponse> {
        return request(`${this.base}/v1/sessions/${sessionId}`, { method: "DELETE" });
    }
}
