// @vitest-environment jsdom
// UI behavior against a live service with a 2 second claim lease: action
// buttons only offer what the API would accept, keyboard shortcuts submit,
// and an expired lease surfaces a reclaim prompt instead of silently
// double-labeling.

import { ChildProcess } from "node:child_process";
import { afterAll, beforeAll, expect, test } from "vitest";

import { ReviewApp } from "../src/app.js";
import {
    freePort, runCli, sleep, startService, stopService, tempDir, waitFor, waitHealthy,
} from "./harness.js";

let base: string;
let proc: ChildProcess;

beforeAll(async () => {
    const runDir = tempDir("ui-beh-run-");
    const reviewDir = tempDir("ui-beh-review-");
    let res = await runCli(["simulate", "--out-dir", runDir, "--n-protocols", "3",
        "--accuracy", "0.8", "--corpus-seed", "11", "--noise-seed", "22"]);
    expect(res.code).toBe(0);
    res = await runCli(["filter", "--out-dir", runDir]);
    expect(res.code).toBe(0);

    const port = await freePort();
    base = `http://127.0.0.1:${port}`;
    proc = startService({
        dataDir: reviewDir, port, experts: "exp-2", enqueueFrom: runDir, claimTtl: 2,
    });
    await waitHealthy(base);
}, 60000);

afterAll(async () => {
    if (proc) await stopService(proc);
});

function mountApp(annotatorId: string): { app: ReviewApp; root: HTMLElement } {
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById("app")!;
    const app = new ReviewApp({ baseUrl: base, annotatorId, pollMs: 600000 });
    app.mount(root);
    return { app, root };
}

test("decision buttons exist only while a claim is held", async () => {
    const { app, root } = mountApp("ann-2");
    await app.refresh();
    expect(root.querySelector("#decide-soe")).toBeNull();
    expect(root.querySelector<HTMLButtonElement>("#claim-next")!.disabled).toBe(false);

    await app.claimNext();
    expect(app.current).not.toBeNull();
    expect(root.querySelector<HTMLButtonElement>("#decide-soe")!.disabled).toBe(false);
    expect(root.querySelector<HTMLButtonElement>("#claim-next")!.disabled).toBe(true);

    // release it so later tests see a clean queue
    await app.decide("NON_SOE");
    expect(app.current).toBeNull();
    expect(root.querySelector("#decide-soe")).toBeNull();
    app.unmount();
});

test("empty annotator id never reaches the service", async () => {
    const { app } = mountApp("");
    const got = await app.claimNext();
    expect(got).toBeNull();
    expect(app.notice).toContain("annotator id");
    app.unmount();
});

test("keyboard shortcut submits the decision", async () => {
    const { app } = mountApp("ann-2");
    await app.refresh();
    const labeledBefore = app.stats!.LABELED;
    await app.claimNext();
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "1" }));
    await waitFor(() => app.current === null);
    await app.refresh();
    expect(app.stats!.LABELED).toBe(labeledBefore + 1);
    app.unmount();
});

test("expired lease shows a reclaim prompt, decision is not silently lost", async () => {
    const { app, root } = mountApp("ann-2");
    await app.refresh();
    const labeledBefore = app.stats!.LABELED;
    await app.claimNext();
    const tableId = app.current!.table_id;

    // lease is 2s; sit past it, then let the next poll notice
    await sleep(2400);
    await app.refresh();
    expect(app.claimLost).toBe(true);
    expect(root.querySelector("#reclaim")).not.toBeNull();
    expect(root.querySelector<HTMLButtonElement>("#decide-soe")!.disabled).toBe(true);

    // a decision in this state must not reach the service
    await app.decide("SOE");
    await app.refresh();
    expect(app.stats!.LABELED).toBe(labeledBefore);

    // reclaim renews the lease on the same item, then the decision lands
    root.querySelector<HTMLButtonElement>("#reclaim")!.click();
    await waitFor(() => !app.claimLost);
    expect(app.current!.table_id).toBe(tableId);
    await app.decide("SOE");
    await app.refresh();
    expect(app.stats!.LABELED).toBe(labeledBefore + 1);
    app.unmount();
}, 15000);

test("expert resolution is refused for non-experts and works for experts", async () => {
    const { app } = mountApp("ann-2");
    await app.refresh();
    const resolvedBefore = app.stats!.RESOLVED;
    await app.claimNext();
    const tableId = app.current!.table_id;
    await app.decide("UNKNOWN");
    await app.refresh();
    expect(app.stats!.ESCALATED).toBeGreaterThan(0);

    // same person flips on expert mode without the role: the service refuses
    await app.resolveEscalated(tableId, "SOE");
    expect(app.notice).toContain("expert");
    await app.refresh();
    expect(app.stats!.RESOLVED).toBe(resolvedBefore);
    app.unmount();

    const expert = mountApp("exp-2");
    expert.root.querySelector<HTMLInputElement>("#expert-mode")!.click();
    await waitFor(() => expert.app.escalated.some(i => i.table_id === tableId));
    const row = expert.root.querySelector<HTMLElement>(
        `.escalated-item[data-table-id="${tableId}"]`);
    row!.querySelector<HTMLButtonElement>(".resolve-non-soe")!.click();
    await waitFor(() => !expert.app.escalated.some(i => i.table_id === tableId));
    await expert.app.refresh();
    expect(expert.app.stats!.RESOLVED).toBe(resolvedBefore + 1);
    expert.app.unmount();
}, 15000);
