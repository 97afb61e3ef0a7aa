/** Browser entry point: pick the API base and mount the editor. */

import { Client } from "./api.js";
import { EditorApp } from "./app.js";

function apiBase(): string {
    const fromQuery = new URLSearchParams(window.location.search).get("api");
    if (fromQuery) return fromQuery;
    const stored = localStorage.getItem("robotflow-editor-api");
    if (stored) return stored;
    return `${window.location.protocol}//${window.location.host}`;
}

window.addEventListener("DOMContentLoaded", () => {
    const mount = document.getElementById("app");
    if (!mount) throw new Error("missing #app mount point");
    const base = apiBase();
    localStorage.setItem("robotflow-editor-api", base);
    const app = new EditorApp(mount, new Client(base));
    app.init().catch((err) => {
        mount.innerHTML = `<p class="boot-error">Could not reach the flow server at ${base}: ${err}</p>`;
    });
});
