// Review queue UI: poll the service, claim one item at a time, show both
// table views side by side, submit a decision, repeat. Expert mode lists
// escalated items for resolution. All state transitions go through the API;
// nothing is decided client-side.

import { ApiError, Decision, ReviewApi, ReviewItem, Stats } from "./api.js";
import { gridCellCount, parseJsonView, renderGrid } from "./grid.js";

export interface AppConfig {
    baseUrl?: string;
    annotatorId?: string;
    pollMs?: number;
}

const CLAIM_ATTEMPTS = 5;

function escapeHtml(s: string): string {
    return s
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

export class ReviewApp {
    readonly api: ReviewApi;
    annotatorId: string;
    expertMode = false;
    current: ReviewItem | null = null;
    claimLost = false;
    stats: Stats | null = null;
    escalated: ReviewItem[] = [];
    notice = "";
    private root!: HTMLElement;
    private timer: ReturnType<typeof setInterval> | null = null;
    private readonly pollMs: number;
    private keyHandler: ((ev: KeyboardEvent) => void) | null = null;

    constructor(config: AppConfig = {}) {
        this.api = new ReviewApi(config.baseUrl ?? "");
        this.annotatorId = config.annotatorId ?? "";
        this.pollMs = config.pollMs ?? 3000;
    }

    mount(root: HTMLElement): void {
        this.root = root;
        root.innerHTML = `
            <header>
                <h1>Review queue</h1>
                <label>Annotator
                    <input id="annotator-id" type="text" value="${escapeHtml(this.annotatorId)}" />
                </label>
                <label><input id="expert-mode" type="checkbox" /> Expert mode</label>
                <span id="stats-line"></span>
            </header>
            <div id="notice"></div>
            <div id="work-area">
                <button id="claim-next">Claim next item</button>
                <div id="item-panel"></div>
            </div>
            <div id="expert-panel" hidden></div>
        `;
        const idInput = root.querySelector<HTMLInputElement>("#annotator-id")!;
        idInput.addEventListener("change", () => {
            this.annotatorId = idInput.value.trim();
        });
        root.querySelector<HTMLInputElement>("#expert-mode")!.addEventListener("change", ev => {
            this.expertMode = (ev.target as HTMLInputElement).checked;
            this.root.querySelector<HTMLElement>("#expert-panel")!.hidden = !this.expertMode;
            this.refresh();
        });
        root.querySelector<HTMLButtonElement>("#claim-next")!.addEventListener("click", () => {
            this.claimNext();
        });
        this.keyHandler = ev => this.onKey(ev);
        root.ownerDocument.addEventListener("keydown", this.keyHandler);
        this.renderItem();
        this.refresh();
        this.timer = setInterval(() => this.refresh(), this.pollMs);
    }

    unmount(): void {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
        if (this.keyHandler !== null) {
            this.root.ownerDocument.removeEventListener("keydown", this.keyHandler);
            this.keyHandler = null;
        }
    }

    // one poll cycle; also detects a lease lost while the item was on screen
    async refresh(): Promise<void> {
        try {
            this.stats = await this.api.stats();
            if (this.expertMode) {
                this.escalated = await this.api.queue("ESCALATED");
                this.renderExpertPanel();
            }
            if (this.current && !this.claimLost) {
                const fresh = await this.api.item(this.current.table_id);
                const held =
                    fresh.status === "CLAIMED" &&
                    fresh.claim !== null &&
                    fresh.claim.annotator_id === this.annotatorId;
                if (!held) {
                    this.claimLost = true;
                    this.renderItem();
                }
            }
            this.renderStats();
        } catch (err) {
            this.showNotice(`service unreachable: ${(err as Error).message}`);
        }
    }

    async claimNext(): Promise<ReviewItem | null> {
        if (this.current && !this.claimLost) return this.current;
        if (!this.annotatorId) {
            this.showNotice("set an annotator id first");
            return null;
        }
        const pending = await this.api.queue("PENDING");
        // oldest first; another annotator may win the race, try a few
        const candidates = pending
            .sort((a, b) => a.enqueue_seq - b.enqueue_seq)
            .slice(0, CLAIM_ATTEMPTS);
        for (const cand of candidates) {
            try {
                this.current = await this.api.claim(cand.table_id, this.annotatorId);
                this.claimLost = false;
                this.showNotice("");
                this.renderItem();
                return this.current;
            } catch (err) {
                if (err instanceof ApiError && err.code === "ALREADY_CLAIMED") continue;
                this.showNotice((err as Error).message);
                return null;
            }
        }
        this.showNotice("queue is empty");
        this.renderItem();
        return null;
    }

    async decide(decision: Decision): Promise<void> {
        if (!this.current || this.claimLost) return;
        const tableId = this.current.table_id;
        try {
            await this.api.label(tableId, this.annotatorId, decision);
            this.current = null;
            this.showNotice(
                decision === "UNKNOWN"
                    ? `${tableId} sent to the expert queue`
                    : `${tableId} labeled`,
            );
            this.renderItem();
            await this.refresh();
        } catch (err) {
            if (err instanceof ApiError && err.code === "NOT_CLAIM_HOLDER") {
                // lease expired under us; never silently drop the decision
                this.claimLost = true;
                this.renderItem();
            } else {
                this.showNotice((err as Error).message);
            }
        }
    }

    async reclaim(): Promise<void> {
        if (!this.current) return;
        const tableId = this.current.table_id;
        try {
            this.current = await this.api.claim(tableId, this.annotatorId);
            this.claimLost = false;
            this.showNotice("claim renewed, decision not yet submitted");
            this.renderItem();
        } catch (err) {
            if (err instanceof ApiError && err.code === "ALREADY_CLAIMED") {
                this.showNotice(`${tableId} was taken by another annotator`);
                this.current = null;
                this.claimLost = false;
                this.renderItem();
            } else {
                this.showNotice((err as Error).message);
            }
        }
    }

    async resolveEscalated(tableId: string, decision: Decision): Promise<void> {
        try {
            await this.api.resolve(tableId, this.annotatorId, decision);
            this.showNotice(`${tableId} resolved`);
            await this.refresh();
        } catch (err) {
            this.showNotice((err as Error).message);
        }
    }

    private onKey(ev: KeyboardEvent): void {
        if ((ev.target as HTMLElement | null)?.tagName === "INPUT") return;
        if (!this.current || this.claimLost) return;
        if (ev.key === "1") this.decide("SOE");
        else if (ev.key === "2") this.decide("NON_SOE");
        else if (ev.key === "3") this.decide("UNKNOWN");
    }

    private showNotice(text: string): void {
        this.notice = text;
        const el = this.root.querySelector<HTMLElement>("#notice");
        if (el) el.textContent = text;
    }

    private renderStats(): void {
        const el = this.root.querySelector<HTMLElement>("#stats-line");
        if (!el || !this.stats) return;
        const s = this.stats;
        el.textContent =
            `pending ${s.PENDING} / claimed ${s.CLAIMED} / labeled ${s.LABELED}` +
            ` / escalated ${s.ESCALATED} / resolved ${s.RESOLVED} of ${s.TOTAL}`;
    }

    private renderItem(): void {
        const panel = this.root.querySelector<HTMLElement>("#item-panel")!;
        const claimBtn = this.root.querySelector<HTMLButtonElement>("#claim-next")!;
        claimBtn.disabled = this.current !== null && !this.claimLost;
        panel.innerHTML = "";
        if (!this.current) return;

        const item = this.current;
        const doc = this.root.ownerDocument;
        const head = doc.createElement("div");
        head.className = "item-head";
        head.innerHTML = `
            <h2>${escapeHtml(item.table_id)}</h2>
            <span class="verdict">model says: JSON view ${escapeHtml(item.llm_verdicts[0])},
                text view ${escapeHtml(item.llm_verdicts[1])}</span>
        `;
        panel.appendChild(head);

        if (this.claimLost) {
            const warn = doc.createElement("div");
            warn.className = "claim-lost";
            warn.innerHTML = `
                <p>Your claim on this item expired or was taken over.
                   The decision was not submitted.</p>
                <button id="reclaim">Reclaim</button>
            `;
            warn.querySelector<HTMLButtonElement>("#reclaim")!.addEventListener("click", () => {
                this.reclaim();
            });
            panel.appendChild(warn);
        }

        const views = doc.createElement("div");
        views.className = "views";
        const left = doc.createElement("div");
        left.className = "view json-view";
        left.appendChild(renderGrid(doc, parseJsonView(item.rendered_json_view)));
        const right = doc.createElement("div");
        right.className = "view text-view";
        const pre = doc.createElement("pre");
        pre.textContent = item.rendered_text_view;
        right.appendChild(pre);
        views.appendChild(left);
        views.appendChild(right);
        panel.appendChild(views);

        const actions = doc.createElement("div");
        actions.className = "actions";
        const mk = (id: string, text: string, decision: Decision) => {
            const b = doc.createElement("button");
            b.id = id;
            b.textContent = text;
            b.disabled = this.claimLost;
            b.addEventListener("click", () => this.decide(decision));
            actions.appendChild(b);
        };
        mk("decide-soe", "SoE (1)", "SOE");
        mk("decide-non-soe", "Non-SoE (2)", "NON_SOE");
        mk("decide-unknown", "Don't know (3)", "UNKNOWN");
        panel.appendChild(actions);
    }

    private renderExpertPanel(): void {
        const panel = this.root.querySelector<HTMLElement>("#expert-panel")!;
        panel.innerHTML = "<h2>Escalated items</h2>";
        if (this.escalated.length === 0) {
            panel.innerHTML += "<p>nothing escalated</p>";
            return;
        }
        const doc = this.root.ownerDocument;
        for (const item of this.escalated) {
            const row = doc.createElement("div");
            row.className = "escalated-item";
            row.dataset.tableId = item.table_id;
            const head = doc.createElement("div");
            head.innerHTML = `<h3>${escapeHtml(item.table_id)}</h3>`;
            row.appendChild(head);
            row.appendChild(renderGrid(doc, parseJsonView(item.rendered_json_view)));
            const pre = doc.createElement("pre");
            pre.textContent = item.rendered_text_view;
            row.appendChild(pre);
            const soe = doc.createElement("button");
            soe.className = "resolve-soe";
            soe.textContent = "Resolve SoE";
            soe.addEventListener("click", () => this.resolveEscalated(item.table_id, "SOE"));
            const non = doc.createElement("button");
            non.className = "resolve-non-soe";
            non.textContent = "Resolve Non-SoE";
            non.addEventListener("click", () => this.resolveEscalated(item.table_id, "NON_SOE"));
            row.appendChild(soe);
            row.appendChild(non);
            panel.appendChild(row);
        }
    }
}

export function cellCountMatches(item: ReviewItem, root: HTMLElement): boolean {
    const want = gridCellCount(parseJsonView(item.rendered_json_view));
    const got = root.querySelectorAll("#item-panel td.cell").length;
    return want === got;
}
