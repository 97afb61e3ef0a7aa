/** Pure editing operations on the open flow document.
 *
 * Every function returns a new state; the DOM layer renders whatever it
 * gets back. Mutations push the previous document onto a linear undo
 * stack and set the dirty flag; `inlineError` carries rejected-gesture
 * messages (duplicate labels, EZ-mode violations) for the UI to show
 * without throwing.
 */

import type { ActivityNode, FlowDoc, PaletteEntry, TransitionEdge } from "./types.js";

export type Selection =
    | { kind: "activity"; id: string }
    | { kind: "transition"; index: number }
    | null;

export type Mode = "ez" | "full";

export interface EditorState {
    doc: FlowDoc | null;
    selection: Selection;
    dirty: boolean;
    mode: Mode;
    inlineError: string | null;
    undoStack: FlowDoc[];
}

const UNDO_LIMIT = 100;

export function emptyState(): EditorState {
    return {
        doc: null,
        selection: null,
        dirty: false,
        mode: "full",
        inlineError: null,
        undoStack: [],
    };
}

export function newFlow(name: string, ez = false): FlowDoc {
    return {
        name,
        ez,
        rules: "",
        activities: [
            { id: "begin", type: "Begin", name: "begin", options: {}, x: 80, y: 80 },
        ],
        transitions: [],
    };
}

function cloneDoc(doc: FlowDoc): FlowDoc {
    return JSON.parse(JSON.stringify(doc)) as FlowDoc;
}

/** Opening a document resets selection and history; EZ documents start
 * in EZ mode. */
export function openDocument(state: EditorState, doc: FlowDoc): EditorState {
    return {
        ...state,
        doc: cloneDoc(doc),
        selection: null,
        dirty: false,
        mode: doc.ez ? "ez" : "full",
        inlineError: null,
        undoStack: [],
    };
}

function withMutation(state: EditorState, doc: FlowDoc): EditorState {
    const previous = state.doc ? [...state.undoStack, state.doc] : state.undoStack;
    return {
        ...state,
        doc,
        dirty: true,
        inlineError: null,
        undoStack: previous.slice(-UNDO_LIMIT),
    };
}

function rejected(state: EditorState, message: string): EditorState {
    return { ...state, inlineError: message };
}

export function freshId(doc: FlowDoc, type: string): string {
    const base = type.toLowerCase().replace(/[^a-z0-9]+/g, "_");
    const taken = new Set(doc.activities.map((a) => a.id));
    let n = 1;
    while (taken.has(`${base}_${n}`)) n += 1;
    return `${base}_${n}`;
}

function paletteEntry(palette: PaletteEntry[], type: string): PaletteEntry | undefined {
    return palette.find((p) => p.type === type);
}

/** Drop from the palette onto the canvas. EZ mode refuses non-EZ types;
 * the caller simply never invokes this for drops outside the canvas. */
export function addActivity(
    state: EditorState,
    palette: PaletteEntry[],
    type: string,
    x: number,
    y: number,
): EditorState {
    if (!state.doc) return rejected(state, "no flow open");
    const entry = paletteEntry(palette, type);
    if (!entry) return rejected(state, `unknown activity type ${type}`);
    if (state.mode === "ez" && !entry.ez) {
        return rejected(state, `${type} is not available in EZ mode`);
    }
    const doc = cloneDoc(state.doc);
    const id = freshId(doc, type);
    const options: Record<string, unknown> = {};
    for (const spec of entry.options) {
        if (spec.default !== null && spec.default !== undefined) {
            options[spec.name] = spec.default;
        }
    }
    const node: ActivityNode = { id, type, name: id, options, x, y };
    doc.activities.push(node);
    const next = withMutation(state, doc);
    return { ...next, selection: { kind: "activity", id } };
}

export function moveActivity(state: EditorState, id: string, x: number, y: number): EditorState {
    if (!state.doc) return state;
    const doc = cloneDoc(state.doc);
    const node = doc.activities.find((a) => a.id === id);
    if (!node) return state;
    node.x = x;
    node.y = y;
    return withMutation(state, doc);
}

export function renameActivity(state: EditorState, id: string, name: string): EditorState {
    if (!state.doc) return state;
    const doc = cloneDoc(state.doc);
    const node = doc.activities.find((a) => a.id === id);
    if (!node) return state;
    node.name = name;
    return withMutation(state, doc);
}

/** Set one option; null removes the key so schema defaults apply. */
export function updateOption(
    state: EditorState,
    id: string,
    option: string,
    value: unknown,
): EditorState {
    if (!state.doc) return state;
    const doc = cloneDoc(state.doc);
    const node = doc.activities.find((a) => a.id === id);
    if (!node) return state;
    if (value === null || value === undefined || value === "") {
        delete node.options[option];
    } else {
        node.options[option] = value;
    }
    return withMutation(state, doc);
}

/** Removing an activity drops every transition touching it. */
export function removeActivity(state: EditorState, id: string): EditorState {
    if (!state.doc) return state;
    const doc = cloneDoc(state.doc);
    doc.activities = doc.activities.filter((a) => a.id !== id);
    doc.transitions = doc.transitions.filter((t) => t.from !== id && t.to !== id);
    const next = withMutation(state, doc);
    return { ...next, selection: null };
}

function duplicateLabel(doc: FlowDoc, from: string, label: string, skip = -1): boolean {
    return doc.transitions.some(
        (t, i) => i !== skip && t.from === from && t.label === label,
    );
}

export function addTransition(
    state: EditorState,
    from: string,
    to: string,
    label = "",
): EditorState {
    if (!state.doc) return rejected(state, "no flow open");
    const doc = state.doc;
    const ids = new Set(doc.activities.map((a) => a.id));
    if (!ids.has(from) || !ids.has(to)) {
        return rejected(state, "both ends of a transition must exist");
    }
    if (duplicateLabel(doc, from, label)) {
        const shown = label === "" ? "the unnamed transition" : `label "${label}"`;
        return rejected(state, `${from} already has ${shown}`);
    }
    const copy = cloneDoc(doc);
    const edge: TransitionEdge = { from, label, to };
    copy.transitions.push(edge);
    const next = withMutation(state, copy);
    return { ...next, selection: { kind: "transition", index: copy.transitions.length - 1 } };
}

export function updateTransitionLabel(
    state: EditorState,
    index: number,
    label: string,
): EditorState {
    if (!state.doc || !state.doc.transitions[index]) return state;
    const edge = state.doc.transitions[index];
    if (duplicateLabel(state.doc, edge.from, label, index)) {
        return rejected(state, `${edge.from} already has label "${label}"`);
    }
    const doc = cloneDoc(state.doc);
    doc.transitions[index].label = label;
    return withMutation(state, doc);
}

export function removeTransition(state: EditorState, index: number): EditorState {
    if (!state.doc || !state.doc.transitions[index]) return state;
    const doc = cloneDoc(state.doc);
    doc.transitions.splice(index, 1);
    const next = withMutation(state, doc);
    return { ...next, selection: null };
}

export function setRules(state: EditorState, rules: string): EditorState {
    if (!state.doc) return state;
    const doc = cloneDoc(state.doc);
    doc.rules = rules;
    return withMutation(state, doc);
}

/** Flip the document between the EZ and full dialects; the editing mode
 * follows the flag. */
export function setEz(state: EditorState, ez: boolean): EditorState {
    if (!state.doc) return state;
    const doc = cloneDoc(state.doc);
    doc.ez = ez;
    const next = withMutation(state, doc);
    return { ...next, mode: ez ? "ez" : "full" };
}

export function select(state: EditorState, selection: Selection): EditorState {
    return { ...state, selection, inlineError: null };
}

export function markSaved(state: EditorState): EditorState {
    return { ...state, dirty: false };
}

export function undo(state: EditorState): EditorState {
    const stack = state.undoStack;
    if (stack.length === 0) return state;
    const doc = stack[stack.length - 1];
    return {
        ...state,
        doc,
        selection: null,
        dirty: true,
        inlineError: null,
        undoStack: stack.slice(0, -1),
    };
}

/** Palette entries visible in the current mode. */
export function visiblePalette(state: EditorState, palette: PaletteEntry[]): PaletteEntry[] {
    if (state.mode !== "ez") return palette;
    return palette.filter((p) => p.ez);
}
