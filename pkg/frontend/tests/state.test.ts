import { describe, expect, it } from "vitest";

import * as ed from "../src/state.js";
import type { PaletteEntry } from "../src/types.js";

const PALETTE: PaletteEntry[] = [
    { type: "Begin", ez: true, doc: "entry point", options: [] },
    {
        type: "Speak",
        ez: true,
        doc: "say a prompt",
        options: [
            { name: "prompts", kind: "prompts", required: true, default: null, description: "" },
            { name: "allow_interrupt", kind: "boolean", required: false, default: false, description: "" },
        ],
    },
    {
        type: "Eval",
        ez: false,
        doc: "run a script",
        options: [{ name: "script", kind: "script", required: true, default: null, description: "" }],
    },
];

function openEmpty(name = "demo", ez = false): ed.EditorState {
    return ed.openDocument(ed.emptyState(), ed.newFlow(name, ez));
}

describe("documents", () => {
    it("newFlow seeds a begin node", () => {
        const doc = ed.newFlow("demo");
        expect(doc.name).toBe("demo");
        expect(doc.activities).toHaveLength(1);
        expect(doc.activities[0].type).toBe("Begin");
        expect(doc.transitions).toEqual([]);
    });

    it("openDocument picks the mode from the document", () => {
        expect(openEmpty("a", false).mode).toBe("full");
        expect(openEmpty("b", true).mode).toBe("ez");
    });
});

describe("adding activities", () => {
    it("prefills options from the palette defaults and selects the node", () => {
        const st = ed.addActivity(openEmpty(), PALETTE, "Speak", 200, 120);
        const node = st.doc!.activities.find((a) => a.type === "Speak")!;
        expect(node.options).toEqual({ allow_interrupt: false });
        expect(node.x).toBe(200);
        expect(st.selection).toEqual({ kind: "activity", id: node.id });
        expect(st.dirty).toBe(true);
    });

    it("generates fresh ids for repeated types", () => {
        let st = openEmpty();
        st = ed.addActivity(st, PALETTE, "Speak", 0, 0);
        st = ed.addActivity(st, PALETTE, "Speak", 0, 0);
        const ids = st.doc!.activities.map((a) => a.id);
        expect(new Set(ids).size).toBe(ids.length);
    });

    it("refuses non-EZ types while the document is in EZ mode", () => {
        const st = ed.addActivity(openEmpty("e", true), PALETTE, "Eval", 0, 0);
        expect(st.doc!.activities).toHaveLength(1);
        expect(st.inlineError).toMatch(/EZ/);
    });

    it("refuses unknown types", () => {
        const st = ed.addActivity(openEmpty(), PALETTE, "Nope", 0, 0);
        expect(st.doc!.activities).toHaveLength(1);
        expect(st.inlineError).toBeTruthy();
    });

    it("filters the visible palette in EZ mode", () => {
        const ezTypes = ed.visiblePalette(openEmpty("e", true), PALETTE).map((p) => p.type);
        expect(ezTypes).toEqual(["Begin", "Speak"]);
        const fullTypes = ed.visiblePalette(openEmpty(), PALETTE).map((p) => p.type);
        expect(fullTypes).toHaveLength(3);
    });
});

describe("transitions", () => {
    function twoNodes(): ed.EditorState {
        let st = openEmpty();
        st = ed.addActivity(st, PALETTE, "Speak", 100, 0);
        st = ed.addActivity(st, PALETTE, "Eval", 200, 0);
        return st;
    }

    it("adds an unnamed transition and selects it", () => {
        let st = twoNodes();
        const [a, b] = st.doc!.activities.slice(1).map((n) => n.id);
        st = ed.addTransition(st, a, b);
        expect(st.doc!.transitions).toEqual([{ from: a, label: "", to: b }]);
        expect(st.selection).toEqual({ kind: "transition", index: 0 });
    });

    it("rejects a duplicate (from, label) pair with an inline error", () => {
        let st = twoNodes();
        const [a, b] = st.doc!.activities.slice(1).map((n) => n.id);
        st = ed.addTransition(st, a, b, "yes");
        st = ed.addTransition(st, a, b, "yes");
        expect(st.doc!.transitions).toHaveLength(1);
        expect(st.inlineError).toContain('"yes"');

        st = ed.addTransition(st, a, b);
        st = ed.addTransition(st, a, b);
        expect(st.doc!.transitions).toHaveLength(2);
        expect(st.inlineError).toMatch(/unnamed/);
    });

    it("rejects relabeling onto an existing (from, label)", () => {
        let st = twoNodes();
        const [a, b] = st.doc!.activities.slice(1).map((n) => n.id);
        st = ed.addTransition(st, a, b, "yes");
        st = ed.addTransition(st, a, b, "no");
        st = ed.updateTransitionLabel(st, 1, "yes");
        expect(st.doc!.transitions[1].label).toBe("no");
        expect(st.inlineError).toContain('"yes"');
    });

    it("removing an activity cascades its transitions", () => {
        let st = twoNodes();
        const [a, b] = st.doc!.activities.slice(1).map((n) => n.id);
        st = ed.addTransition(st, a, b, "x");
        st = ed.removeActivity(st, b);
        expect(st.doc!.transitions).toEqual([]);
        expect(st.doc!.activities.map((n) => n.id)).not.toContain(b);
    });
});

describe("options and naming", () => {
    it("updates and deletes option values", () => {
        let st = ed.addActivity(openEmpty(), PALETTE, "Eval", 0, 0);
        const id = st.doc!.activities[1].id;
        st = ed.updateOption(st, id, "script", "result = 1");
        expect(st.doc!.activities[1].options.script).toBe("result = 1");
        st = ed.updateOption(st, id, "script", null);
        expect("script" in st.doc!.activities[1].options).toBe(false);
    });

    it("renames without touching the id", () => {
        let st = ed.addActivity(openEmpty(), PALETTE, "Speak", 0, 0);
        const id = st.doc!.activities[1].id;
        st = ed.renameActivity(st, id, "Greeting");
        expect(st.doc!.activities[1].name).toBe("Greeting");
        expect(st.doc!.activities[1].id).toBe(id);
    });
});

describe("undo and dirtiness", () => {
    it("undo restores the previous document and keeps the file dirty", () => {
        let st = openEmpty();
        st = ed.markSaved(st);
        expect(st.dirty).toBe(false);
        st = ed.addActivity(st, PALETTE, "Speak", 10, 10);
        expect(st.dirty).toBe(true);
        st = ed.undo(st);
        expect(st.doc!.activities).toHaveLength(1);
        expect(st.dirty).toBe(true);
    });

    it("undo on an empty stack is a no-op", () => {
        const st = openEmpty();
        expect(ed.undo(st).doc).toEqual(st.doc);
    });

    it("stacks several levels", () => {
        let st = openEmpty();
        st = ed.addActivity(st, PALETTE, "Speak", 0, 0);
        st = ed.addActivity(st, PALETTE, "Eval", 0, 0);
        st = ed.undo(st);
        st = ed.undo(st);
        expect(st.doc!.activities).toHaveLength(1);
    });

    it("mutations do not alias the undo snapshot", () => {
        let st = openEmpty();
        st = ed.addActivity(st, PALETTE, "Speak", 0, 0);
        const id = st.doc!.activities[1].id;
        st = ed.moveActivity(st, id, 400, 400);
        const snapshot = st.undoStack[st.undoStack.length - 1];
        expect(snapshot.activities[1].x).not.toBe(400);
    });
});
