// Typed client for the review service REST API.

export type Verdict = "YES" | "NO" | "UNKNOWN";
export type ItemStatus = "PENDING" | "CLAIMED" | "LABELED" | "ESCALATED" | "RESOLVED";
export type Decision = "SOE" | "NON_SOE" | "UNKNOWN";

export interface ReviewItem {
    table_id: string;
    rendered_json_view: string;
    rendered_text_view: string;
    llm_verdicts: [Verdict, Verdict];
    status: ItemStatus;
    claim: { annotator_id: string; expiry: number } | null;
    resolution: { label: boolean; source: string; timestamp: number } | null;
    enqueue_seq: number;
}

export interface Stats {
    PENDING: number;
    CLAIMED: number;
    LABELED: number;
    ESCALATED: number;
    RESOLVED: number;
    TOTAL: number;
}

export class ApiError extends Error {
    constructor(
        public readonly status: number,
        public readonly code: string,
        message: string,
    ) {
        super(message);
    }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
    const res = await fetch(url, init);
    if (!res.ok) {
        let code = "HTTP_" + res.status;
        let message = res.statusText;
        try {
            const body = await res.json();
            // service errors carry {code, message}; validation errors carry {detail}
            if (body.code) {
                code = body.code;
                message = body.message ?? message;
            } else if (body.detail) {
                message = JSON.stringify(body.detail);
            }
        } catch {
            // non-JSON error body, keep the status text
        }
        throw new ApiError(res.status, code, message);
    }
    return res.json() as Promise<T>;
}

function post<T>(url: string, body: unknown): Promise<T> {
    return request<T>(url, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
    });
}

export class ReviewApi {
    constructor(private readonly baseUrl: string) {}

    queue(status?: ItemStatus): Promise<ReviewItem[]> {
        const url = status
            ? `${this.baseUrl}/queue?status=${status}`
            : `${this.baseUrl}/queue`;
        return request<{ items: ReviewItem[] }>(url).then(r => r.items);
    }

    stats(): Promise<Stats> {
        return request<Stats>(`${this.baseUrl}/stats`);
    }

    item(tableId: string): Promise<ReviewItem> {
        return request<ReviewItem>(`${this.baseUrl}/items/${encodeURIComponent(tableId)}`);
    }

    claim(tableId: string, annotatorId: string): Promise<ReviewItem> {
        return post<ReviewItem>(`${this.baseUrl}/items/${encodeURIComponent(tableId)}/claim`, {
            annotator_id: annotatorId,
        });
    }

    label(tableId: string, annotatorId: string, decision: Decision): Promise<ReviewItem> {
        return post<ReviewItem>(`${this.baseUrl}/items/${encodeURIComponent(tableId)}/label`, {
            annotator_id: annotatorId,
            decision,
        });
    }

    resolve(tableId: string, expertId: string, decision: Decision): Promise<ReviewItem> {
        return post<ReviewItem>(`${this.baseUrl}/items/${encodeURIComponent(tableId)}/resolve`, {
            expert_id: expertId,
            decision,
        });
    }

    exportLabels(): Promise<Record<string, boolean>> {
        return request<{ labels: Record<string, boolean> }>(
            `${this.baseUrl}/export/human-labels`,
        ).then(r => r.labels);
    }
}
