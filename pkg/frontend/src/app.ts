/** DOM shell around the pure state modules.
 *
 * The class owns three pieces of state (editor, run view, settings),
 * re-renders whole panels after every action, and keeps all document
 * logic in state.ts so the wiring here stays mechanical. The event
 * socket and confirm dialog are injectable for tests.
 */

import { ApiError, Client } from "./api.js";
import type { RunRequest } from "./api.js";
import * as ed from "./state.js";
import { applyEvent, failed, idleRun, runRejected } from "./run.js";
import type { RunView } from "./run.js";
import type { FlowDoc, OptionSpec, PaletteEntry, RunEvent } from "./types.js";

export interface SocketHandlers {
    onOpen: () => void;
    onEvent: (ev: RunEvent) => void;
    onClose: () => void;
}

export type SocketFactory = (url: string, handlers: SocketHandlers) => { close(): void };

export interface Settings {
    bridge: string;
    frameRate: number;
    seed: number;
    realtime: boolean;
}

export interface AppOptions {
    socketFactory?: SocketFactory;
    confirmFn?: (message: string) => boolean;
    storage?: Pick<Storage, "getItem" | "setItem"> | null;
}

const SETTINGS_KEY = "robotflow-editor-settings";
const NODE_W = 150;
const NODE_H = 46;

function browserSocketFactory(url: string, handlers: SocketHandlers) {
    const ws = new WebSocket(url);
    ws.onopen = handlers.onOpen;
    ws.onmessage = (e) => handlers.onEvent(JSON.parse(String(e.data)) as RunEvent);
    ws.onclose = handlers.onClose;
    return { close: () => ws.close() };
}

function esc(text: unknown): string {
    return String(text ?? "").replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

export class EditorApp {
    state = ed.emptyState();
    run: RunView = idleRun();
    palette: PaletteEntry[] = [];
    flows: string[] = [];
    settings: Settings = { bridge: "sim", frameRate: 20, seed: 0, realtime: true };
    tab: "palette" | "files" | "run" | "settings" = "palette";

    private socket: { close(): void } | null = null;
    private readonly socketFactory: SocketFactory;
    private readonly confirmFn: (message: string) => boolean;
    private readonly storage: Pick<Storage, "getItem" | "setItem"> | null;
    private pendingWire: string | null = null;

    constructor(
        private readonly root: HTMLElement,
        readonly client: Client,
        options: AppOptions = {},
    ) {
        this.socketFactory = options.socketFactory ?? browserSocketFactory;
        this.confirmFn =
            options.confirmFn ?? ((msg) => (typeof confirm === "function" ? confirm(msg) : true));
        this.storage = options.storage === undefined ? this.defaultStorage() : options.storage;
        this.loadSettings();
        this.buildShell();
    }

    private defaultStorage(): Pick<Storage, "getItem" | "setItem"> | null {
        try {
            return typeof localStorage === "undefined" ? null : localStorage;
        } catch {
            return null;
        }
    }

    private loadSettings(): void {
        const raw = this.storage?.getItem(SETTINGS_KEY);
        if (!raw) return;
        try {
            this.settings = { ...this.settings, ...JSON.parse(raw) };
        } catch {
            // stale settings are not worth breaking startup over
        }
    }

    private persistSettings(): void {
        this.storage?.setItem(SETTINGS_KEY, JSON.stringify(this.settings));
    }

    async init(): Promise<void> {
        [this.palette, this.flows] = await Promise.all([
            this.client.palette(),
            this.client.listFlows(),
        ]);
        this.render();
    }

    // -- actions ------------------------------------------------------------

    async openFlow(name: string): Promise<void> {
        if (this.state.dirty && !this.confirmFn("Discard unsaved changes?")) return;
        const doc = await this.client.getFlow(name);
        this.state = ed.openDocument(this.state, doc);
        this.run = idleRun();
        this.render();
    }

    createFlow(name: string, ez: boolean): void {
        if (!name) return;
        if (this.state.dirty && !this.confirmFn("Discard unsaved changes?")) return;
        this.state = ed.openDocument(this.state, ed.newFlow(name, ez));
        this.state = { ...this.state, dirty: true };
        this.render();
    }

    async save(): Promise<boolean> {
        const doc = this.state.doc;
        if (!doc) return false;
        const outcome = await this.client.saveFlow(doc.name, doc);
        this.run = { ...this.run, diagnostics: outcome.diagnostics, message: null };
        if (outcome.ok) {
            this.state = ed.markSaved(this.state);
            if (!this.flows.includes(doc.name)) {
                this.flows = [...this.flows, doc.name].sort();
            }
        } else {
            this.run = runRejected(this.run, "save rejected; fix the diagnostics", outcome.diagnostics);
            this.tab = "run";
        }
        this.render();
        return outcome.ok;
    }

    /** Save if needed, open the event socket, then start the run. A
     * rejected save lists its diagnostics in the run tab and never
     * starts, so nothing gets highlighted. */
    async runFlow(): Promise<void> {
        const doc = this.state.doc;
        if (!doc) return;
        if (this.state.dirty && !(await this.save())) return;
        await this.openSocket();
        const request: RunRequest = {
            seed: this.settings.seed,
            realtime: this.settings.realtime,
            frame_rate: this.settings.frameRate,
            bridge: this.settings.bridge,
        };
        try {
            await this.client.run(doc.name, request);
            this.run = { ...this.run, message: null };
        } catch (err) {
            const detail = err instanceof ApiError ? err.message : String(err);
            this.run = runRejected(this.run, detail, err instanceof ApiError ? err.diagnostics : []);
            this.closeSocket();
        }
        this.tab = "run";
        this.render();
    }

    async stopRun(): Promise<void> {
        await this.client.stop();
        this.render();
    }

    /** Feed one socket record through the run reducer. Public so tests
     * can drive the stream directly. */
    receive(ev: RunEvent): void {
        this.run = applyEvent(this.run, ev);
        if (ev.event === "run-end") {
            this.closeSocket();
            void this.client
                .status()
                .then((s) => {
                    this.run = { ...this.run, outcome: s.error ?? s.status };
                    this.render();
                })
                .catch(() => undefined);
        }
        this.render();
    }

    dropActivity(type: string, x: number, y: number): void {
        this.state = ed.addActivity(this.state, this.palette, type, x, y);
        this.render();
    }

    connectNodes(from: string, to: string, label = ""): void {
        this.state = ed.addTransition(this.state, from, to, label);
        this.render();
    }

    deleteSelection(): void {
        const sel = this.state.selection;
        if (!sel) return;
        this.state =
            sel.kind === "activity"
                ? ed.removeActivity(this.state, sel.id)
                : ed.removeTransition(this.state, sel.index);
        this.render();
    }

    undo(): void {
        this.state = ed.undo(this.state);
        this.render();
    }

    private openSocket(): Promise<void> {
        this.closeSocket();
        return new Promise((resolve) => {
            let settled = false;
            const done = () => {
                if (!settled) {
                    settled = true;
                    resolve();
                }
            };
            this.socket = this.socketFactory(this.client.eventsUrl(), {
                onOpen: done,
                onEvent: (ev) => this.receive(ev),
                onClose: () => undefined,
            });
            setTimeout(done, 1000);
        });
    }

    private closeSocket(): void {
        this.socket?.close();
        this.socket = null;
    }

    // -- shell --------------------------------------------------------------

    private buildShell(): void {
        this.root.innerHTML = `
          <div class="editor">
            <header class="topbar">
              <span class="brand">robotflow editor</span>
              <span class="flow-title"></span>
              <span class="spacer"></span>
              <label class="ez-toggle"><input type="checkbox" class="ez-box"> EZ</label>
              <button class="btn-undo" title="undo">&#8630;</button>
              <button class="btn-save">Save</button>
              <button class="btn-run primary" title="run">&#9654; Run</button>
              <button class="btn-stop">&#9632; Stop</button>
            </header>
            <div class="layout">
              <aside class="sidebar">
                <nav class="tabs">
                  <button data-tab="palette">Palette</button>
                  <button data-tab="files">Files</button>
                  <button data-tab="run">Run</button>
                  <button data-tab="settings">Settings</button>
                </nav>
                <section class="tab-body"></section>
              </aside>
              <main class="canvas">
                <svg class="edges"></svg>
                <div class="nodes"></div>
              </main>
              <aside class="options-panel"></aside>
            </div>
            <footer class="statusbar"><span class="inline-error"></span><span class="run-state"></span></footer>
          </div>`;
        this.wireShell();
    }

    private q<T extends HTMLElement>(selector: string): T {
        const el = this.root.querySelector<T>(selector);
        if (!el) throw new Error(`missing shell element ${selector}`);
        return el;
    }

    private wireShell(): void {
        this.q(".btn-save").addEventListener("click", () => void this.save());
        this.q(".btn-run").addEventListener("click", () => void this.runFlow());
        this.q(".btn-stop").addEventListener("click", () => void this.stopRun());
        this.q(".btn-undo").addEventListener("click", () => this.undo());
        this.q<HTMLInputElement>(".ez-box").addEventListener("change", (e) => {
            this.state = ed.setEz(this.state, (e.target as HTMLInputElement).checked);
            this.render();
        });
        this.root.querySelectorAll<HTMLButtonElement>(".tabs button").forEach((b) =>
            b.addEventListener("click", () => {
                this.tab = b.dataset.tab as typeof this.tab;
                this.render();
            }),
        );

        const canvas = this.q(".canvas");
        canvas.addEventListener("dragover", (e) => e.preventDefault());
        canvas.addEventListener("drop", (e) => {
            e.preventDefault();
            const type = (e as DragEvent).dataTransfer?.getData("text/activity-type");
            if (!type) return;
            const rect = canvas.getBoundingClientRect();
            const de = e as DragEvent;
            this.dropActivity(type, de.clientX - rect.left, de.clientY - rect.top);
        });
        canvas.addEventListener("mousedown", (e) => {
            if (e.target === canvas || (e.target as HTMLElement).classList?.contains("nodes")) {
                this.state = ed.select(this.state, null);
                this.render();
            }
        });

        this.root.addEventListener("keydown", (e) => {
            const tag = (e.target as HTMLElement).tagName;
            if (tag === "INPUT" || tag === "TEXTAREA") return;
            if (e.key === "Delete" || e.key === "Backspace") this.deleteSelection();
            if ((e.ctrlKey || e.metaKey) && e.key.toLowerCase() === "z") this.undo();
        });
    }

    // -- rendering ----------------------------------------------------------

    render(): void {
        const doc = this.state.doc;
        this.q(".flow-title").textContent = doc
            ? `${doc.name}${this.state.dirty ? " ●" : ""}`
            : "no flow open";
        this.q<HTMLInputElement>(".ez-box").checked = doc?.ez ?? false;
        this.q(".inline-error").textContent = this.state.inlineError ?? "";
        this.renderRunState();
        this.renderTabs();
        this.renderCanvas();
        this.renderOptions();
    }

    private renderRunState(): void {
        const el = this.q(".run-state");
        if (this.run.phase === "idle") {
            el.textContent = "";
            return;
        }
        const bits = [`tick ${this.run.tick}`];
        if (this.run.phase === "running") bits.push(`running ${this.run.flow ?? ""}`);
        if (this.run.outcome) bits.push(this.run.outcome);
        if (this.run.exception) bits.push(this.run.exception);
        el.textContent = bits.join("  |  ");
        el.classList.toggle("failed", failed(this.run));
    }

    private renderTabs(): void {
        this.root
            .querySelectorAll<HTMLButtonElement>(".tabs button")
            .forEach((b) => b.classList.toggle("active", b.dataset.tab === this.tab));
        const body = this.q(".tab-body");
        switch (this.tab) {
            case "palette":
                this.renderPalette(body);
                break;
            case "files":
                this.renderFiles(body);
                break;
            case "run":
                this.renderRunTab(body);
                break;
            case "settings":
                this.renderSettings(body);
                break;
        }
    }

    private renderPalette(body: HTMLElement): void {
        const entries = ed.visiblePalette(this.state, this.palette);
        body.innerHTML = entries
            .map(
                (p) => `
              <div class="palette-item" draggable="true" data-type="${esc(p.type)}" title="${esc(p.doc)}">
                <span class="palette-type">${esc(p.type)}</span>
                ${p.ez ? '<span class="ez-badge">ez</span>' : ""}
              </div>`,
            )
            .join("");
        body.querySelectorAll<HTMLElement>(".palette-item").forEach((item) => {
            item.addEventListener("dragstart", (e) => {
                (e as DragEvent).dataTransfer?.setData("text/activity-type", item.dataset.type ?? "");
            });
            item.addEventListener("dblclick", () => this.dropActivity(item.dataset.type ?? "", 240, 160));
        });
    }

    private renderFiles(body: HTMLElement): void {
        const open = this.state.doc?.name;
        body.innerHTML = `
          <div class="file-new">
            <input class="new-name" placeholder="new flow name">
            <button class="btn-new">New</button>
            <button class="btn-new-ez">New EZ</button>
          </div>
          <ul class="file-list">
            ${this.flows
                .map(
                    (f) =>
                        `<li class="file-item${f === open ? " open" : ""}" data-name="${esc(f)}">${esc(f)}</li>`,
                )
                .join("")}
          </ul>`;
        body.querySelectorAll<HTMLElement>(".file-item").forEach((li) =>
            li.addEventListener("click", () => void this.openFlow(li.dataset.name ?? "")),
        );
        const nameInput = body.querySelector<HTMLInputElement>(".new-name");
        body.querySelector(".btn-new")?.addEventListener("click", () =>
            this.createFlow(nameInput?.value.trim() ?? "", false),
        );
        body.querySelector(".btn-new-ez")?.addEventListener("click", () =>
            this.createFlow(nameInput?.value.trim() ?? "", true),
        );
    }

    private renderRunTab(body: HTMLElement): void {
        const diag = this.run.diagnostics
            .map(
                (d) =>
                    `<li class="diag diag-${esc(d.level)}"><b>${esc(d.level)}</b> ${esc(d.code)} @ ${esc(d.where)}: ${esc(d.message)}</li>`,
            )
            .join("");
        const recent = this.run.events
            .slice(-30)
            .map(
                (ev) =>
                    `<li class="ev">t${ev.tick} ${esc(ev.contextId)} ${esc(ev.activityId)} ${esc(ev.event)} ${esc(ev.result)}</li>`,
            )
            .join("");
        body.innerHTML = `
          <div class="run-controls">
            <button class="btn-run2 primary">&#9654; Run</button>
            <button class="btn-stop2">&#9632; Stop</button>
          </div>
          ${this.run.message ? `<p class="run-message">${esc(this.run.message)}</p>` : ""}
          ${this.run.exception ? `<p class="run-exception">${esc(this.run.exception)}</p>` : ""}
          ${this.run.outcome ? `<p class="run-outcome">${esc(this.run.outcome)}</p>` : ""}
          <ul class="diagnostics">${diag}</ul>
          <ul class="event-log">${recent}</ul>`;
        body.querySelector(".btn-run2")?.addEventListener("click", () => void this.runFlow());
        body.querySelector(".btn-stop2")?.addEventListener("click", () => void this.stopRun());
    }

    private renderSettings(body: HTMLElement): void {
        const s = this.settings;
        body.innerHTML = `
          <label class="setting">bridge URL
            <input class="set-bridge" value="${esc(s.bridge)}" placeholder="sim or ws://host:9090">
          </label>
          <label class="setting">frames per second
            <input class="set-fps" type="number" min="1" max="120" value="${s.frameRate}">
          </label>
          <label class="setting">seed
            <input class="set-seed" type="number" value="${s.seed}">
          </label>
          <label class="setting checkbox">
            <input class="set-realtime" type="checkbox" ${s.realtime ? "checked" : ""}> pace runs in real time
          </label>`;
        const commit = () => {
            const bridge = body.querySelector<HTMLInputElement>(".set-bridge")?.value.trim();
            const fps = Number(body.querySelector<HTMLInputElement>(".set-fps")?.value);
            const seed = Number(body.querySelector<HTMLInputElement>(".set-seed")?.value);
            const realtime = body.querySelector<HTMLInputElement>(".set-realtime")?.checked;
            this.settings = {
                bridge: bridge || "sim",
                frameRate: Number.isFinite(fps) && fps > 0 ? fps : 20,
                seed: Number.isFinite(seed) ? seed : 0,
                realtime: realtime ?? true,
            };
            this.persistSettings();
        };
        body.querySelectorAll("input").forEach((i) => i.addEventListener("change", commit));
    }

    private renderCanvas(): void {
        const nodesLayer = this.q(".nodes");
        const svg = this.root.querySelector<SVGSVGElement>("svg.edges");
        const doc = this.state.doc;
        if (!doc || !svg) {
            nodesLayer.innerHTML = "";
            if (svg) svg.innerHTML = "";
            return;
        }
        const sel = this.state.selection;
        nodesLayer.innerHTML = doc.activities
            .map((a) => {
                const classes = ["node"];
                if (sel?.kind === "activity" && sel.id === a.id) classes.push("selected");
                if (this.run.currentActivity === a.id) classes.push("active");
                if (this.run.errorActivity === a.id) classes.push("errored");
                return `
              <div class="${classes.join(" ")}" data-id="${esc(a.id)}" style="left:${a.x}px;top:${a.y}px">
                <div class="node-type">${esc(a.type)}</div>
                <div class="node-name">${esc(a.name)}</div>
                <div class="port" data-port="${esc(a.id)}" title="drag to connect"></div>
              </div>`;
            })
            .join("");
        this.renderEdges(svg, doc);
        this.wireNodes(nodesLayer);
    }

    private centerOf(doc: FlowDoc, id: string): { x: number; y: number } {
        const node = doc.activities.find((a) => a.id === id);
        return node ? { x: node.x + NODE_W / 2, y: node.y + NODE_H / 2 } : { x: 0, y: 0 };
    }

    private renderEdges(svg: SVGSVGElement, doc: FlowDoc): void {
        const sel = this.state.selection;
        const parts = doc.transitions.map((t, i) => {
            const a = this.centerOf(doc, t.from);
            const b = this.centerOf(doc, t.to);
            const midX = (a.x + b.x) / 2;
            const midY = (a.y + b.y) / 2;
            const selected = sel?.kind === "transition" && sel.index === i;
            const d = `M ${a.x} ${a.y} C ${midX} ${a.y}, ${midX} ${b.y}, ${b.x} ${b.y}`;
            return `
              <g class="edge${selected ? " selected" : ""}" data-index="${i}">
                <path class="edge-hit" d="${d}"></path>
                <path class="edge-line" d="${d}"></path>
                <text x="${midX}" y="${midY - 6}">${esc(t.label || "∅")}</text>
              </g>`;
        });
        svg.innerHTML = parts.join("");
        svg.querySelectorAll<SVGGElement>("g.edge").forEach((g) =>
            g.addEventListener("mousedown", (e) => {
                e.stopPropagation();
                this.state = ed.select(this.state, {
                    kind: "transition",
                    index: Number(g.dataset.index),
                });
                this.render();
            }),
        );
    }

    private wireNodes(layer: HTMLElement): void {
        layer.querySelectorAll<HTMLElement>(".node").forEach((el) => {
            const id = el.dataset.id ?? "";
            el.addEventListener("mousedown", (e) => {
                if ((e.target as HTMLElement).classList.contains("port")) return;
                e.stopPropagation();
                this.state = ed.select(this.state, { kind: "activity", id });
                this.render();
                this.beginNodeDrag(id, e as MouseEvent);
            });
            el.addEventListener("mouseup", () => {
                if (this.pendingWire && this.pendingWire !== id) {
                    const from = this.pendingWire;
                    this.pendingWire = null;
                    this.connectNodes(from, id);
                }
            });
            const port = el.querySelector<HTMLElement>(".port");
            port?.addEventListener("mousedown", (e) => {
                e.stopPropagation();
                this.pendingWire = id;
                const clear = () => {
                    this.pendingWire = null;
                    this.root.removeEventListener("mouseup", clear);
                };
                setTimeout(() => this.root.addEventListener("mouseup", clear), 0);
            });
        });
    }

    private beginNodeDrag(id: string, down: MouseEvent): void {
        const el = this.root.querySelector<HTMLElement>(`.node[data-id="${id}"]`);
        const node = this.state.doc?.activities.find((a) => a.id === id);
        if (!el || !node) return;
        const startX = down.clientX;
        const startY = down.clientY;
        const origX = node.x;
        const origY = node.y;
        let moved = false;
        const onMove = (e: MouseEvent) => {
            moved = true;
            el.style.left = `${origX + e.clientX - startX}px`;
            el.style.top = `${origY + e.clientY - startY}px`;
        };
        const onUp = (e: MouseEvent) => {
            this.root.removeEventListener("mousemove", onMove as EventListener);
            this.root.removeEventListener("mouseup", onUp as EventListener);
            if (moved) {
                this.state = ed.moveActivity(
                    this.state,
                    id,
                    Math.max(0, origX + e.clientX - startX),
                    Math.max(0, origY + e.clientY - startY),
                );
                this.render();
            }
        };
        this.root.addEventListener("mousemove", onMove as EventListener);
        this.root.addEventListener("mouseup", onUp as EventListener);
    }

    // -- options panel ------------------------------------------------------

    private renderOptions(): void {
        const panel = this.q(".options-panel");
        const doc = this.state.doc;
        const sel = this.state.selection;
        if (!doc) {
            panel.innerHTML = `<p class="hint">Open or create a flow from the Files tab.</p>`;
            return;
        }
        if (sel?.kind === "activity") {
            this.renderActivityOptions(panel, doc, sel.id);
        } else if (sel?.kind === "transition") {
            this.renderTransitionOptions(panel, doc, sel.index);
        } else {
            this.renderFlowOptions(panel, doc);
        }
    }

    private renderFlowOptions(panel: HTMLElement, doc: FlowDoc): void {
        panel.innerHTML = `
          <h3>${esc(doc.name)}</h3>
          <p class="hint">${doc.ez ? "EZ document" : "full document"}; ${doc.activities.length} activities</p>
          <label class="field">grammar rules
            <textarea class="rules-box" rows="8" placeholder="RULE = (a | b)">${esc(doc.rules)}</textarea>
          </label>`;
        panel.querySelector<HTMLTextAreaElement>(".rules-box")?.addEventListener("change", (e) => {
            this.state = ed.setRules(this.state, (e.target as HTMLTextAreaElement).value);
            this.render();
        });
    }

    private renderTransitionOptions(panel: HTMLElement, doc: FlowDoc, index: number): void {
        const edge = doc.transitions[index];
        if (!edge) {
            panel.innerHTML = "";
            return;
        }
        panel.innerHTML = `
          <h3>transition</h3>
          <p class="hint">${esc(edge.from)} &#8594; ${esc(edge.to)}</p>
          <label class="field">label (empty = else)
            <input class="label-box" value="${esc(edge.label)}">
          </label>
          <button class="btn-delete">Delete transition</button>`;
        panel.querySelector<HTMLInputElement>(".label-box")?.addEventListener("change", (e) => {
            this.state = ed.updateTransitionLabel(
                this.state,
                index,
                (e.target as HTMLInputElement).value,
            );
            this.render();
        });
        panel.querySelector(".btn-delete")?.addEventListener("click", () => this.deleteSelection());
    }

    private fieldFor(spec: OptionSpec, value: unknown): string {
        const name = esc(spec.name);
        const current = value ?? spec.default ?? "";
        switch (spec.kind) {
            case "boolean":
                return `<input data-opt="${name}" data-kind="boolean" type="checkbox" ${current ? "checked" : ""}>`;
            case "number":
                return `<input data-opt="${name}" data-kind="number" type="number" value="${esc(current)}">`;
            case "script":
                return `<textarea data-opt="${name}" data-kind="script" rows="3">${esc(current)}</textarea>`;
            case "object":
            case "list":
            case "prompts":
                return `<textarea data-opt="${name}" data-kind="json" rows="4">${esc(
                    value === undefined ? "" : JSON.stringify(value, null, 1),
                )}</textarea>`;
            default:
                return `<input data-opt="${name}" data-kind="string" value="${esc(current)}">`;
        }
    }

    private renderActivityOptions(panel: HTMLElement, doc: FlowDoc, id: string): void {
        const node = doc.activities.find((a) => a.id === id);
        if (!node) {
            panel.innerHTML = "";
            return;
        }
        const entry = this.palette.find((p) => p.type === node.type);
        const fields = (entry?.options ?? [])
            .map(
                (spec) => `
              <label class="field" title="${esc(spec.description)}">
                ${esc(spec.name)}${spec.required ? " *" : ""}
                ${this.fieldFor(spec, node.options[spec.name])}
              </label>`,
            )
            .join("");
        panel.innerHTML = `
          <h3>${esc(node.type)}</h3>
          <p class="hint">${esc(entry?.doc ?? "")}</p>
          <label class="field">id <input class="id-box" value="${esc(node.id)}" disabled></label>
          <label class="field">name <input class="name-box" value="${esc(node.name)}"></label>
          ${fields}
          <button class="btn-delete">Delete activity</button>`;
        panel.querySelector<HTMLInputElement>(".name-box")?.addEventListener("change", (e) => {
            this.state = ed.renameActivity(this.state, id, (e.target as HTMLInputElement).value);
            this.render();
        });
        panel.querySelector(".btn-delete")?.addEventListener("click", () => this.deleteSelection());
        panel.querySelectorAll<HTMLElement>("[data-opt]").forEach((input) =>
            input.addEventListener("change", () => this.commitOption(id, input)),
        );
    }

    private commitOption(id: string, input: HTMLElement): void {
        const option = input.dataset.opt ?? "";
        const kind = input.dataset.kind;
        let value: unknown;
        if (kind === "boolean") {
            value = (input as HTMLInputElement).checked;
        } else if (kind === "number") {
            const raw = (input as HTMLInputElement).value;
            value = raw === "" ? null : Number(raw);
        } else if (kind === "json") {
            const raw = (input as HTMLTextAreaElement).value.trim();
            if (raw === "") {
                value = null;
            } else {
                try {
                    value = JSON.parse(raw);
                } catch {
                    this.state = { ...this.state, inlineError: `option ${option}: not valid JSON` };
                    this.render();
                    return;
                }
            }
        } else {
            value = (input as HTMLInputElement | HTMLTextAreaElement).value;
        }
        this.state = ed.updateOption(this.state, id, option, value);
        this.render();
    }
}
