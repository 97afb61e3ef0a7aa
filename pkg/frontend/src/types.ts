/** Wire shapes shared with the editor backend. */

export interface ActivityNode {
    id: string;
    type: string;
    name: string;
    options: Record<string, unknown>;
    x: number;
    y: number;
}

export interface TransitionEdge {
    from: string;
    label: string;
    to: string;
}

export interface FlowDoc {
    name: string;
    ez: boolean;
    rules: string;
    activities: ActivityNode[];
    transitions: TransitionEdge[];
}

export interface OptionSpec {
    name: string;
    kind: "string" | "script" | "number" | "boolean" | "object" | "list" | "prompts";
    required: boolean;
    default: unknown;
    description: string;
}

export interface PaletteEntry {
    type: string;
    ez: boolean;
    doc: string;
    options: OptionSpec[];
}

export interface Diagnostic {
    level: string;
    code: string;
    where: string;
    message: string;
}

/** One record from the event socket; lifecycle frames reuse the same
 * shape with event "run-start" / "run-end" and empty ids. */
export interface RunEvent {
    tick: number;
    contextId: string;
    activityId: string;
    event: string;
    result: string | null;
}

export interface RunStatus {
    running: boolean;
    flow: string | null;
    status: string;
    result: unknown;
    error: string | null;
    ticks: number;
}

export interface SaveOutcome {
    ok: boolean;
    diagnostics: Diagnostic[];
}
