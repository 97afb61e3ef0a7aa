/** Run-tab state: folds the event socket stream into what the canvas
 * and run panel display.
 *
 * `currentActivity` is the live highlight; a throw switches the failing
 * activity to the error style and records the exception name, both kept
 * on screen after the run ends.
 */

import type { Diagnostic, RunEvent } from "./types.js";

export type RunPhase = "idle" | "running" | "done";

export interface RunView {
    phase: RunPhase;
    flow: string | null;
    tick: number;
    currentActivity: string | null;
    errorActivity: string | null;
    exception: string | null;
    outcome: string | null;
    events: RunEvent[];
    diagnostics: Diagnostic[];
    message: string | null;
}

const EVENT_LIMIT = 500;

export function idleRun(): RunView {
    return {
        phase: "idle",
        flow: null,
        tick: 0,
        currentActivity: null,
        errorActivity: null,
        exception: null,
        outcome: null,
        events: [],
        diagnostics: [],
        message: null,
    };
}

/** Validation failures and start errors (409 conflicts and the like)
 * surface in the run tab without touching any highlight. */
export function runRejected(
    run: RunView,
    message: string,
    diagnostics: Diagnostic[] = [],
): RunView {
    return { ...run, message, diagnostics };
}

export function applyEvent(run: RunView, ev: RunEvent): RunView {
    const events = [...run.events, ev].slice(-EVENT_LIMIT);
    switch (ev.event) {
        case "run-start":
            return {
                ...idleRun(),
                phase: "running",
                flow: ev.result || run.flow,
                tick: ev.tick,
                events: [ev],
            };
        case "run-end":
            return {
                ...run,
                phase: "done",
                tick: ev.tick,
                currentActivity: null,
                outcome: ev.result,
                events,
            };
        case "start":
            return { ...run, tick: ev.tick, currentActivity: ev.activityId, events };
        case "throw":
            return {
                ...run,
                tick: ev.tick,
                errorActivity: ev.activityId,
                exception: ev.result,
                events,
            };
        default:
            // update / complete just advance the clock
            return { ...run, tick: ev.tick, events };
    }
}

export function failed(run: RunView): boolean {
    return run.phase === "done" && run.outcome !== null && run.outcome !== "completed";
}
