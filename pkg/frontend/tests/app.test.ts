// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import type { FetchLike } from "../src/api.js";
import { EditorApp } from "../src/app.js";
import type { SocketFactory, SocketHandlers } from "../src/app.js";
import type { FlowDoc, RunEvent } from "../src/types.js";

type Route = (body: unknown) => { status: number; body: unknown };

const HELLO: FlowDoc = {
    name: "hello",
    ez: true,
    rules: "",
    activities: [
        { id: "begin", type: "Begin", name: "Begin", options: {}, x: 60, y: 60 },
        { id: "wave", type: "Speak", name: "Wave", options: { prompts: ["hi"] }, x: 260, y: 60 },
    ],
    transitions: [{ from: "begin", label: "", to: "wave" }],
};

const PALETTE = {
    types: [
        { type: "Begin", ez: true, doc: "entry point", options: [] },
        {
            type: "Speak",
            ez: true,
            doc: "say a prompt",
            options: [{ name: "prompts", kind: "prompts", required: true, default: null, description: "" }],
        },
        {
            type: "Eval",
            ez: false,
            doc: "run a script",
            options: [{ name: "script", kind: "script", required: true, default: null, description: "" }],
        },
    ],
};

class FakeServer {
    routes: Record<string, Route> = {};
    seen: { key: string; body: unknown }[] = [];

    constructor() {
        this.routes["GET /api/palette"] = () => ({ status: 200, body: PALETTE });
        this.routes["GET /api/flows"] = () => ({ status: 200, body: { flows: ["hello"] } });
        this.routes["GET /api/flows/hello"] = () => ({ status: 200, body: HELLO });
        this.routes["PUT /api/flows/hello"] = () => ({
            status: 200,
            body: { ok: true, diagnostics: [] },
        });
        this.routes["POST /api/run/hello"] = () => ({ status: 200, body: { ok: true } });
        this.routes["POST /api/stop"] = () => ({ status: 200, body: { ok: true, stopped: true } });
        this.routes["GET /api/status"] = () => ({
            status: 200,
            body: { running: false, flow: "hello", status: "completed", result: "happy", error: null, ticks: 2 },
        });
    }

    fetch: FetchLike = async (url, init) => {
        const path = String(url).replace(/^https?:\/\/[^/]+/, "");
        const key = `${init?.method ?? "GET"} ${path}`;
        const handler = this.routes[key];
        if (!handler) throw new Error(`unrouted request ${key}`);
        const body = init?.body ? JSON.parse(String(init.body)) : null;
        this.seen.push({ key, body });
        const res = handler(body);
        return { ok: res.status < 300, status: res.status, json: async () => res.body } as Response;
    };
}

class FakeSocket {
    handlers: SocketHandlers | null = null;
    url = "";
    closed = false;

    factory: SocketFactory = (url, handlers) => {
        this.url = url;
        this.handlers = handlers;
        this.closed = false;
        handlers.onOpen();
        return { close: () => (this.closed = true) };
    };

    emit(partial: Partial<RunEvent>): void {
        this.handlers?.onEvent({
            tick: 0,
            contextId: "ctx-1",
            activityId: "",
            event: "update",
            result: null,
            ...partial,
        });
    }
}

function settle(): Promise<void> {
    return new Promise((r) => setTimeout(r, 0));
}

describe("editor app in a browser document", () => {
    let server: FakeServer;
    let socket: FakeSocket;
    let app: EditorApp;
    let root: HTMLElement;

    beforeEach(async () => {
        server = new FakeServer();
        socket = new FakeSocket();
        root = document.createElement("div");
        document.body.replaceChildren(root);
        app = new EditorApp(root, new Client("http://backend:9000", server.fetch), {
            socketFactory: socket.factory,
            confirmFn: () => true,
            storage: null,
        });
        await app.init();
    });

    it("renders the palette and flow list from the server", () => {
        expect(root.querySelectorAll(".palette-item")).toHaveLength(3);
        app.tab = "files";
        app.render();
        expect(root.querySelector(".file-item")?.textContent).toBe("hello");
    });

    it("opens a flow onto the canvas with its transitions", async () => {
        await app.openFlow("hello");
        expect(root.querySelector(".flow-title")?.textContent).toBe("hello");
        expect(root.querySelectorAll(".node")).toHaveLength(2);
        expect(root.querySelectorAll("svg.edges g.edge")).toHaveLength(1);
    });

    it("highlights the active node from the event stream and keeps error styling", async () => {
        await app.openFlow("hello");
        await app.runFlow();

        const runPost = server.seen.find((s) => s.key === "POST /api/run/hello");
        expect(runPost?.body).toEqual({ seed: 0, realtime: true, frame_rate: 20, bridge: "sim" });
        expect(socket.url).toBe("ws://backend:9000/api/events");

        socket.emit({ event: "run-start", result: "hello" });
        socket.emit({ event: "start", activityId: "wave" });
        expect(root.querySelector('.node[data-id="wave"]')?.classList.contains("active")).toBe(true);

        socket.emit({ event: "throw", activityId: "wave", result: "~App.Bad" });
        socket.emit({ event: "run-end", result: "failed", tick: 2 });
        await settle();
        expect(root.querySelector('.node[data-id="wave"]')?.classList.contains("errored")).toBe(true);
        expect(root.querySelector(".run-state")?.textContent).toContain("~App.Bad");
        expect(socket.closed).toBe(true);
    });

    it("saves a dirty flow before running it", async () => {
        await app.openFlow("hello");
        app.dropActivity("Speak", 300, 200);
        expect(app.state.dirty).toBe(true);
        await app.runFlow();
        const keys = server.seen.map((s) => s.key);
        expect(keys.indexOf("PUT /api/flows/hello")).toBeLessThan(keys.indexOf("POST /api/run/hello"));
        expect(app.state.dirty).toBe(false);
    });

    it("lists diagnostics and never starts a run when the save is rejected", async () => {
        server.routes["PUT /api/flows/hello"] = () => ({
            status: 422,
            body: {
                ok: false,
                diagnostics: [{ level: "error", code: "end", where: "hello", message: "missing End" }],
            },
        });
        await app.openFlow("hello");
        app.dropActivity("Speak", 300, 200);
        await app.runFlow();
        expect(server.seen.some((s) => s.key === "POST /api/run/hello")).toBe(false);
        expect(root.querySelector(".diag")?.textContent).toContain("missing End");
        expect(root.querySelectorAll(".node.active")).toHaveLength(0);
    });

    it("surfaces a run conflict from the server in the run tab", async () => {
        server.routes["POST /api/run/hello"] = () => ({
            status: 409,
            body: { error: "a run is already active" },
        });
        await app.openFlow("hello");
        await app.runFlow();
        expect(root.querySelector(".run-message")?.textContent).toContain("already active");
        expect(socket.closed).toBe(true);
    });

    it("refuses non-EZ drops while editing an EZ document", async () => {
        await app.openFlow("hello");
        const before = root.querySelectorAll(".node").length;
        app.dropActivity("Eval", 200, 200);
        expect(root.querySelectorAll(".node")).toHaveLength(before);
        expect(root.querySelector(".inline-error")?.textContent).toMatch(/EZ/);
    });

    it("edits an option through the rendered schema field", async () => {
        await app.openFlow("hello");
        const node = root.querySelector<HTMLElement>('.node[data-id="wave"]');
        node?.dispatchEvent(new MouseEvent("mousedown", { bubbles: true }));
        const field = root.querySelector<HTMLTextAreaElement>('[data-opt="prompts"]');
        expect(field).toBeTruthy();
        field!.value = '["hello there"]';
        field!.dispatchEvent(new Event("change", { bubbles: true }));
        const doc = app.state.doc!;
        expect(doc.activities.find((a) => a.id === "wave")?.options.prompts).toEqual(["hello there"]);
        expect(app.state.dirty).toBe(true);
    });

    it("rejects bad JSON in an option field without touching the document", async () => {
        await app.openFlow("hello");
        const node = root.querySelector<HTMLElement>('.node[data-id="wave"]');
        node?.dispatchEvent(new MouseEvent("mousedown", { bubbles: true }));
        const field = root.querySelector<HTMLTextAreaElement>('[data-opt="prompts"]');
        field!.value = "[not json";
        field!.dispatchEvent(new Event("change", { bubbles: true }));
        expect(app.state.doc!.activities.find((a) => a.id === "wave")?.options.prompts).toEqual(["hi"]);
        expect(root.querySelector(".inline-error")?.textContent).toContain("JSON");
    });
});
