/** Thin typed client for the editor backend.
 *
 * All HTTP goes through an injectable fetch so tests can run without a
 * server; `eventsUrl()` derives the ws:// address for the event socket.
 */

import type {
    Diagnostic,
    FlowDoc,
    PaletteEntry,
    RunStatus,
    SaveOutcome,
} from "./types.js";

export class ApiError extends Error {
    constructor(
        message: string,
        readonly status: number,
        readonly diagnostics: Diagnostic[] = [],
    ) {
        super(message);
        this.name = "ApiError";
    }
}

export interface RunRequest {
    args?: Record<string, unknown>;
    seed?: number;
    realtime?: boolean;
    script?: Record<string, unknown>;
    frame_rate?: number;
    bridge?: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
    private readonly base: string;

    constructor(base: string, private readonly fetchImpl: FetchLike = fetch.bind(globalThis)) {
        this.base = base.replace(/\/+$/, "");
    }

    private async request(path: string, init?: RequestInit): Promise<Response> {
        return this.fetchImpl(`${this.base}${path}`, init);
    }

    private async json<T>(response: Response): Promise<T> {
        if (!response.ok) {
            const body = await response.json().catch(() => ({}));
            const message =
                typeof body?.error === "string" ? body.error : `request failed (${response.status})`;
            throw new ApiError(message, response.status, body?.diagnostics ?? []);
        }
        return (await response.json()) as T;
    }

    async listFlows(): Promise<string[]> {
        const body = await this.json<{ flows: string[] }>(await this.request("/api/flows"));
        return body.flows;
    }

    async getFlow(name: string): Promise<FlowDoc> {
        return this.json<FlowDoc>(await this.request(`/api/flows/${encodeURIComponent(name)}`));
    }

    /** Save returns the outcome for both 200 and 422 so callers always
     * see the diagnostics; other statuses throw. */
    async saveFlow(name: string, doc: FlowDoc): Promise<SaveOutcome> {
        const response = await this.request(`/api/flows/${encodeURIComponent(name)}`, {
            method: "PUT",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(doc),
        });
        if (response.ok || response.status === 422) {
            const body = (await response.json()) as SaveOutcome;
            return { ok: body.ok, diagnostics: body.diagnostics ?? [] };
        }
        throw new ApiError(`save failed (${response.status})`, response.status);
    }

    async palette(): Promise<PaletteEntry[]> {
        const body = await this.json<{ types: PaletteEntry[] }>(
            await this.request("/api/palette"),
        );
        return body.types;
    }

    async run(name: string, request: RunRequest = {}): Promise<void> {
        await this.json<unknown>(
            await this.request(`/api/run/${encodeURIComponent(name)}`, {
                method: "POST",
                headers: { "content-type": "application/json" },
                body: JSON.stringify(request),
            }),
        );
    }

    async stop(): Promise<boolean> {
        const body = await this.json<{ stopped: boolean }>(
            await this.request("/api/stop", { method: "POST" }),
        );
        return body.stopped;
    }

    async status(): Promise<RunStatus> {
        return this.json<RunStatus>(await this.request("/api/status"));
    }

    eventsUrl(): string {
        return this.base.replace(/^http/, "ws") + "/api/events";
    }
}
