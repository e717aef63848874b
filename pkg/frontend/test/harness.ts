// Shared plumbing for tests that need the real review service: spawn the
// python CLI, wait for the port, tear down.

import { ChildProcess, execFile, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface CliResult {
    code: number;
    stdout: string;
    stderr: string;
}

export function runCli(args: string[]): Promise<CliResult> {
    return new Promise(resolve => {
        execFile("python3", ["-m", "soepipe.cli", ...args], (err, stdout, stderr) => {
            const code = err && typeof (err as any).code === "number" ? (err as any).code : 0;
            resolve({ code, stdout, stderr });
        });
    });
}

export function tempDir(prefix: string): string {
    return mkdtempSync(join(tmpdir(), prefix));
}

export function freePort(): Promise<number> {
    return new Promise((resolve, reject) => {
        const srv = createServer();
        srv.listen(0, "127.0.0.1", () => {
            const addr = srv.address();
            if (addr === null || typeof addr === "string") {
                reject(new Error("no port assigned"));
                return;
            }
            const port = addr.port;
            srv.close(() => resolve(port));
        });
    });
}

export interface ServiceOptions {
    dataDir: string;
    port: number;
    experts?: string;
    enqueueFrom?: string;
    claimTtl?: number;
}

export function startService(opts: ServiceOptions): ChildProcess {
    const args = ["-m", "soepipe.cli", "serve",
        "--data-dir", opts.dataDir, "--port", String(opts.port)];
    if (opts.experts) args.push("--experts", opts.experts);
    if (opts.enqueueFrom) args.push("--enqueue-from", opts.enqueueFrom);
    if (opts.claimTtl !== undefined) args.push("--claim-ttl", String(opts.claimTtl));
    return spawn("python3", args, { stdio: ["ignore", "pipe", "pipe"] });
}

export async function waitHealthy(baseUrl: string, timeoutMs = 15000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    let lastErr: unknown = null;
    while (Date.now() < deadline) {
        try {
            const res = await fetch(`${baseUrl}/stats`);
            if (res.ok) return;
        } catch (err) {
            lastErr = err;
        }
        await sleep(150);
    }
    throw new Error(`service at ${baseUrl} did not come up: ${lastErr}`);
}

export function stopService(proc: ChildProcess): Promise<void> {
    return new Promise(resolve => {
        // a signal-killed process has exitCode null but signalCode set
        if (proc.exitCode !== null || proc.signalCode !== null) {
            resolve();
            return;
        }
        proc.once("exit", () => resolve());
        proc.kill("SIGTERM");
        // uvicorn can sit on keep-alive connections; do not wait for those
        setTimeout(() => proc.kill("SIGKILL"), 1500).unref();
    });
}

export function sleep(ms: number): Promise<void> {
    return new Promise(resolve => setTimeout(resolve, ms));
}

export async function waitFor(cond: () => boolean, timeoutMs = 5000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        if (cond()) return;
        await sleep(25);
    }
    throw new Error("condition not met in time");
}
