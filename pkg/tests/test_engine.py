"""Engine behavior: chaining, timing, frames, dispatch, and determinism."""

import pytest

from robotflow.engine import (
    Execution,
    format_trace_event,
    resolve_transition,
    run_flow,
    suffix_candidates,
)
from robotflow.errors import (
    ENGINE_LOAD_ERROR,
    ENGINE_LOOP_LIMIT,
    ENGINE_NO_TRANSITION,
    EVAL_ERROR,
    FlowSchemaError,
)
from robotflow.model import stringify_result
from util_flows import build


def run(flow, **kw):
    return run_flow(flow, **kw)


def trace_of(flow, **kw):
    lines = []
    result = run_flow(flow, trace=lambda ev: lines.append(format_trace_event(ev)), **kw)
    return result, lines


def linear(name="line", middle=()):
    """Begin -> middle types -> End."""
    acts = [("b", "Begin")]
    trans = []
    prev = "b"
    for i, (atype, opts) in enumerate(middle):
        aid = f"m{i}"
        acts.append((aid, atype, opts))
        trans.append((prev, "", aid))
        prev = aid
    acts.append(("e", "End", {"result": "done"}))
    trans.append((prev, "", "e"))
    return build(name, acts, trans)


class TestResolveTransition:
    # The frozen decision table for result-to-transition matching.
    FLOW = build(
        "t",
        [("a", "NOP"), ("x", "NOP"), ("y", "NOP"), ("z", "NOP")],
        [("a", "yes", "x"), ("a", "", "y"), ("a", "no", "z")],
    )

    def test_exact_label_wins(self):
        assert resolve_transition(self.FLOW, "a", "yes").target == "x"
        assert resolve_transition(self.FLOW, "a", "no").target == "z"

    def test_unnamed_is_the_else_branch(self):
        assert resolve_transition(self.FLOW, "a", "maybe").target == "y"

    def test_empty_result_takes_unnamed(self):
        assert resolve_transition(self.FLOW, "a", "").target == "y"

    def test_no_match_without_unnamed(self):
        flow = build("t2", [("a", "NOP"), ("x", "NOP")], [("a", "yes", "x")])
        assert resolve_transition(flow, "a", "no") is None

    def test_no_outgoing_at_all(self):
        flow = build("t3", [("a", "NOP")])
        assert resolve_transition(flow, "a", "") is None

    def test_first_matching_in_file_order(self):
        # Duplicate labels are a validation error, but resolution itself
        # must still be deterministic: first in file order.
        flow = build(
            "t4",
            [("a", "NOP"), ("x", "NOP"), ("y", "NOP")],
            [("a", "go", "x"), ("a", "go", "y")],
        )
        assert resolve_transition(flow, "a", "go").target == "x"


class TestSuffixCandidates:
    @pytest.mark.parametrize(
        "name,expected",
        [
            ("~A.B.C", ["~A.B.C", "~A.B", "~A", "~"]),
            ("~A", ["~A", "~"]),
            ("~", ["~"]),
            (
                "~Human.InteractionError.noInput",
                ["~Human.InteractionError.noInput", "~Human.InteractionError", "~Human", "~"],
            ),
        ],
    )
    def test_table(self, name, expected):
        assert suffix_candidates(name) == expected

    def test_requires_tilde(self):
        with pytest.raises(ValueError):
            suffix_candidates("A.B")


class TestBasicRuns:
    def test_begin_end_completes_at_tick_zero(self):
        result, lines = trace_of(linear())
        assert result.status == "completed"
        assert result.result == "done"
        assert result.ticks == 0
        assert lines == [
            "tick=0 ctx=ctx0 act=b event=complete result=",
            "tick=0 ctx=ctx0 act=e event=complete result=done",
        ]

    def test_chain_of_nops_same_tick(self):
        flow = linear(middle=[("NOP", {})] * 50)
        result = run(flow)
        assert result.status == "completed"
        assert result.ticks == 0

    def test_end_result_expr(self):
        flow = build(
            "f",
            [("b", "Begin"), ("e", "End", {"result_expr": "2 + 3"})],
            [("b", "", "e")],
        )
        assert run(flow).result == 5

    def test_eval_branches_on_result(self):
        def flow(script):
            return build(
                "f",
                [
                    ("b", "Begin"),
                    ("q", "Eval", {"script": script}),
                    ("t", "End", {"result": "was-true"}),
                    ("f_", "End", {"result": "was-false"}),
                ],
                [("b", "", "q"), ("q", "true", "t"), ("q", "false", "f_")],
            )

        assert run(flow("1 < 2")).result == "was-true"
        assert run(flow("1 > 2")).result == "was-false"

    def test_args_seed_root_notepad(self):
        flow = build(
            "f",
            [("b", "Begin"), ("e", "End", {"result_expr": "n * 2"})],
            [("b", "", "e")],
        )
        assert run(flow, args={"n": 21}).result == 42

    def test_invalid_flow_rejected_before_running(self):
        flow = build("f", [("b", "Begin")], [("b", "", "ghost")])
        with pytest.raises(FlowSchemaError):
            Execution(flow)

    def test_missing_transition_fails_execution(self):
        flow = build("f", [("b", "Begin"), ("n", "NOP")], [("b", "", "n")])
        result = run(flow)
        assert result.status == "failed"
        assert result.error == ENGINE_NO_TRANSITION

    def test_stop(self):
        flow = build(
            "f",
            [("b", "Begin"), ("t", "Timeout", {"ms": 10_000}), ("e", "End")],
            [("b", "", "t"), ("t", "", "e")],
        )
        exe = Execution(flow)
        exe.start()
        exe.step()
        assert exe.status == "running"
        exe.stop()
        assert exe.status == "stopped"

    def test_max_ticks(self):
        flow = build(
            "f",
            [("b", "Begin"), ("t", "Timeout", {"ms": 10_000_000}), ("e", "End")],
            [("b", "", "t"), ("t", "", "e")],
        )
        result = run(flow, max_ticks=10)
        assert result.status == "max-ticks"
        assert result.ticks == 10


class TestTimeoutTiming:
    def _flow(self, ms):
        return build(
            "f",
            [("b", "Begin"), ("t", "Timeout", {"ms": ms}), ("e", "End", {"result": "done"})],
            [("b", "", "t"), ("t", "", "e")],
        )

    def test_100ms_at_20fps_is_two_ticks(self):
        assert run(self._flow(100), frame_rate=20).ticks == 2

    def test_100ms_at_10fps_is_one_tick(self):
        assert run(self._flow(100), frame_rate=10).ticks == 1

    def test_zero_is_zero_duration(self):
        assert run(self._flow(0)).ticks == 0

    def test_one_frame_exactly(self):
        assert run(self._flow(50), frame_rate=20).ticks == 1

    def test_just_over_one_frame(self):
        assert run(self._flow(51), frame_rate=20).ticks == 2

    def test_trace_shows_start_update_complete(self):
        _, lines = trace_of(self._flow(100), frame_rate=20)
        assert lines == [
            "tick=0 ctx=ctx0 act=b event=complete result=",
            "tick=0 ctx=ctx0 act=t event=start result=",
            "tick=1 ctx=ctx0 act=t event=update result=",
            "tick=2 ctx=ctx0 act=t event=complete result=",
            "tick=2 ctx=ctx0 act=e event=complete result=done",
        ]


class TestChainBudget:
    def _self_loop(self):
        return build(
            "loop",
            [("b", "Begin"), ("n", "NOP"), ("e", "End")],
            [("b", "", "n"), ("n", "", "n"), ("n", "~Flow.Engine.loopLimit", "e")],
        )

    def test_self_loop_hits_loop_limit_handler(self):
        result = run(self._self_loop())
        assert result.status == "completed"
        # The handler gets a fresh budget on the following tick.
        assert result.ticks == 1

    def test_unhandled_loop_limit_fails(self):
        flow = build(
            "loop",
            [("b", "Begin"), ("n", "NOP")],
            [("b", "", "n"), ("n", "", "n")],
        )
        result = run(flow)
        assert result.status == "failed"
        assert result.error == ENGINE_LOOP_LIMIT

    def test_long_linear_chain_spreads_over_ticks(self):
        flow = linear(middle=[("NOP", {})] * 2500)
        result = run(flow)
        assert result.status == "completed"
        # 2502 starts at 1000 per tick: finishes on tick 2.
        assert result.ticks == 2

    def test_forced_single_step_mode(self):
        flow = linear(middle=[("NOP", {})] * 3)
        result = run(flow, chain_limit=1)
        assert result.status == "completed"
        # Begin at tick 0, one node per tick after: End lands on tick 4.
        assert result.ticks == 4

    def test_two_state_oscillation_detected_as_loop(self):
        flow = build(
            "pingpong",
            [("b", "Begin"), ("p", "NOP"), ("q", "NOP")],
            [("b", "", "p"), ("p", "", "q"), ("q", "", "p")],
        )
        result = run(flow)
        assert result.status == "failed"
        assert result.error == ENGINE_LOOP_LIMIT


class TestSubFlows:
    def _double(self):
        return build(
            "double",
            [("b", "Begin"), ("e", "End", {"result_expr": "n * 2"})],
            [("b", "", "e")],
        )

    def test_child_result_in_parent_notepad(self):
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"flow": "double", "args": {"n": 4}}),
                ("e", "End", {"result_expr": "result + 1"}),
            ],
            [("b", "", "call"), ("call", "", "e")],
        )
        result = run(main, flows={"double": self._double()})
        assert result.status == "completed"
        assert result.result == 9

    def test_path_option_is_a_flow_alias(self):
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"path": "double", "args": {"n": 4}}),
                ("e", "End", {"result_expr": "result"}),
            ],
            [("b", "", "call"), ("call", "", "e")],
        )
        result = run(main, flows={"double": self._double()})
        assert result.status == "completed"
        assert result.result == 8

    def test_subflow_result_drives_transitions(self):
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"flow": "double", "args": {"n": 4}}),
                ("eight", "End", {"result": "got-8"}),
                ("other", "End", {"result": "got-other"}),
            ],
            [("b", "", "call"), ("call", "8", "eight"), ("call", "", "other")],
        )
        assert run(main, flows={"double": self._double()}).result == "got-8"

    def test_custom_result_key(self):
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"flow": "double", "args": {"n": 3}, "result": "doubled"}),
                ("e", "End", {"result_expr": "doubled"}),
            ],
            [("b", "", "call"), ("call", "", "e")],
        )
        assert run(main, flows={"double": self._double()}).result == 6

    def test_fresh_notepad_per_invocation(self):
        # The child writes a scratch key; the parent must never see it, and
        # the second call must not see the first call's scratch state.
        child = build(
            "child",
            [
                ("b", "Begin"),
                ("chk", "Eval", {"script": "notepad.scratch == null"}),
                ("mark", "Set-Variable", {"name": "scratch", "value": "x"}),
                ("good", "End", {"result": "fresh"}),
                ("bad", "End", {"result": "stale"}),
            ],
            [("b", "", "chk"), ("chk", "true", "mark"), ("chk", "false", "bad"), ("mark", "", "good")],
        )
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("c1", "SubFlow", {"flow": "child"}),
                ("c2", "SubFlow", {"flow": "child"}),
                ("chk", "Eval", {"script": "notepad.scratch == null"}),
                ("e", "End", {"result_expr": "result"}),
                ("leak", "End", {"result": "leaked"}),
            ],
            [
                ("b", "", "c1"),
                ("c1", "", "c2"),
                ("c2", "", "chk"),
                ("chk", "true", "e"),
                ("chk", "false", "leak"),
            ],
        )
        result = run(main, flows={"child": child})
        assert result.result == "fresh"

    def test_missing_subflow_is_dispatchable(self):
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"flow": "ghost"}),
                ("e", "End", {"result": "caught"}),
            ],
            [("b", "", "call"), ("call", "~Flow.Engine.loadError", "e")],
        )
        assert run(main, flows={}).result == "caught"

    def test_missing_subflow_unhandled_fails(self):
        main = build(
            "main",
            [("b", "Begin"), ("call", "SubFlow", {"flow": "ghost"}), ("e", "End")],
            [("b", "", "call"), ("call", "", "e")],
        )
        result = run(main, flows={})
        assert result.status == "failed"
        assert result.error == ENGINE_LOAD_ERROR

    def test_blackboard_shared_notepads_private(self):
        child = build(
            "child",
            [
                ("b", "Begin"),
                ("w", "Set-Variable", {"scope": "blackboard", "name": "shared", "value": "yes"}),
                ("e", "End"),
            ],
            [("b", "", "w"), ("w", "", "e")],
        )
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"flow": "child"}),
                ("e", "End", {"result_expr": "blackboard.shared"}),
            ],
            [("b", "", "call"), ("call", "", "e")],
        )
        assert run(main, flows={"child": child}).result == "yes"


def factorial_flow():
    return build(
        "factorial",
        [
            ("b", "Begin"),
            ("base", "Eval", {"script": "n <= 0"}),
            ("one", "End", {"result_expr": "1"}),
            ("rec", "SubFlow", {"flow": "factorial", "args_expr": "{'n': n - 1}"}),
            ("mult", "End", {"result_expr": "n * result"}),
        ],
        [
            ("b", "", "base"),
            ("base", "true", "one"),
            ("base", "false", "rec"),
            ("rec", "", "mult"),
        ],
    )


class TestRecursion:
    @pytest.mark.parametrize("n,expected", [(0, 1), (1, 1), (2, 2), (3, 6), (5, 120), (6, 720)])
    def test_factorial_values(self, n, expected):
        result = run(factorial_flow(), args={"n": n})
        assert result.status == "completed"
        assert result.result == expected

    @pytest.mark.parametrize("n", [0, 1, 4, 6])
    def test_one_context_per_invocation(self, n):
        exe = Execution(factorial_flow())
        exe.start({"n": n})
        outcome = exe.run()
        assert outcome.status == "completed"
        assert len(exe.contexts) == n + 1
        # Each context is a frame with its own private notepad object.
        pads = [id(c.notepad) for c in exe.contexts]
        assert len(set(pads)) == n + 1


class TestParallel:
    def test_two_entries_two_contexts(self):
        flow = build(
            "par",
            [
                ("b1", "Begin"),
                ("b2", "Parallel-Begin"),
                ("t1", "Timeout", {"ms": 50}),
                ("t2", "Timeout", {"ms": 100}),
                ("e1", "End", {"result": "first"}),
                ("e2", "End", {"result": "second"}),
            ],
            [("b1", "", "t1"), ("t1", "", "e1"), ("b2", "", "t2"), ("t2", "", "e2")],
        )
        exe = Execution(flow)
        exe.start()
        outcome = exe.run()
        assert outcome.status == "completed"
        assert len(exe.contexts) == 2
        # The later-finishing track supplies the execution result.
        assert outcome.result == "second"

    def test_interrupt_cancels_other_tracks(self):
        flow = build(
            "par",
            [
                ("b1", "Begin"),
                ("b2", "Parallel-Begin"),
                ("stopper", "Interrupt"),
                ("e1", "End", {"result": "winner"}),
                ("t2", "Timeout", {"ms": 100_000}),
                ("e2", "End", {"result": "never"}),
            ],
            [("b1", "", "stopper"), ("stopper", "", "e1"), ("b2", "", "t2"), ("t2", "", "e2")],
        )
        result = run(flow)
        assert result.status == "completed"
        assert result.ticks == 0
        assert result.result == "winner"

    def test_contexts_advance_in_creation_order(self):
        flow = build(
            "par",
            [
                ("b1", "Begin"),
                ("b2", "Parallel-Begin"),
                ("t1", "Timeout", {"ms": 50}),
                ("t2", "Timeout", {"ms": 50}),
                ("e1", "End", {"result": "a"}),
                ("e2", "End", {"result": "b"}),
            ],
            [("b1", "", "t1"), ("t1", "", "e1"), ("b2", "", "t2"), ("t2", "", "e2")],
        )
        _, lines = trace_of(flow)
        # Both timeouts fire on tick 1; ctx0's whole slot runs before ctx1's.
        ctx_sequence = [line.split()[1] for line in lines if line.startswith("tick=1 ")]
        assert ctx_sequence == ["ctx=ctx0", "ctx=ctx0", "ctx=ctx1", "ctx=ctx1"]


class TestDispatch:
    def test_throw_caught_by_exact_transition(self):
        flow = build(
            "f",
            [
                ("b", "Begin"),
                ("t", "Throw", {"name": "Care.missed"}),
                ("h", "End", {"result": "handled"}),
            ],
            [("b", "", "t"), ("t", "~Care.missed", "h")],
        )
        assert run(flow).result == "handled"

    def test_throw_caught_by_prefix_transition(self):
        flow = build(
            "f",
            [
                ("b", "Begin"),
                ("t", "Throw", {"name": "Care.missed.badly"}),
                ("h", "End", {"result": "handled"}),
            ],
            [("b", "", "t"), ("t", "~Care", "h")],
        )
        assert run(flow).result == "handled"

    def test_tilde_catches_anything(self):
        flow = build(
            "f",
            [("b", "Begin"), ("t", "Throw", {"name": "X.Y"}), ("h", "End", {"result": "handled"})],
            [("b", "", "t"), ("t", "~", "h")],
        )
        assert run(flow).result == "handled"

    def test_catch_activity_by_display_name(self):
        flow = build(
            "f",
            [
                ("b", "Begin"),
                ("t", "Throw", {"name": "Care.missed"}),
                ("c", "Catch", {}, "~Care.missed"),
                ("h", "End", {"result_expr": "exception"}),
            ],
            [("b", "", "t"), ("c", "", "h")],
        )
        # notepad.exception carries the full thrown name.
        assert run(flow).result == "~Care.missed"

    def test_transition_preferred_over_catch_for_same_candidate(self):
        flow = build(
            "f",
            [
                ("b", "Begin"),
                ("t", "Throw", {"name": "Care.missed"}),
                ("c", "Catch", {}, "~Care.missed"),
                ("via_tr", "End", {"result": "transition"}),
                ("via_c", "End", {"result": "catch"}),
            ],
            [("b", "", "t"), ("t", "~Care.missed", "via_tr"), ("c", "", "via_c")],
        )
        assert run(flow).result == "transition"

    def test_specific_catch_beats_general_transition(self):
        # Candidate-major order: the full name is tried on both mechanisms
        # before any prefix is considered.
        flow = build(
            "f",
            [
                ("b", "Begin"),
                ("t", "Throw", {"name": "Care.missed"}),
                ("c", "Catch", {}, "~Care.missed"),
                ("general", "End", {"result": "general"}),
                ("specific", "End", {"result": "specific"}),
            ],
            [("b", "", "t"), ("t", "~Care", "general"), ("c", "", "specific")],
        )
        assert run(flow).result == "specific"

    def test_unhandled_fails_with_name(self):
        flow = build(
            "f",
            [("b", "Begin"), ("t", "Throw", {"name": "Oops.deep"}), ("e", "End")],
            [("b", "", "t"), ("t", "", "e")],
        )
        result = run(flow)
        assert result.status == "failed"
        assert result.error == "~Oops.deep"

    def test_eval_error_is_catchable(self):
        flow = build(
            "f",
            [
                ("b", "Begin"),
                ("bad", "Eval", {"script": "1 / 0"}),
                ("h", "End", {"result": "caught"}),
            ],
            [("b", "", "bad"), ("bad", "~Flow.Eval.error", "h")],
        )
        assert run(flow).result == "caught"
        flow2 = build(
            "f",
            [("b", "Begin"), ("bad", "Eval", {"script": "unknown_name"}), ("e", "End")],
            [("b", "", "bad"), ("bad", "", "e")],
        )
        assert run(flow2).error == EVAL_ERROR

    def test_uncaught_in_child_pops_to_subflow_transition(self):
        child = build(
            "child",
            [("b", "Begin"), ("t", "Throw", {"name": "Deep.problem"}), ("e", "End")],
            [("b", "", "t"), ("t", "", "e")],
        )
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"flow": "child"}),
                ("h", "End", {"result_expr": "exception"}),
            ],
            [("b", "", "call"), ("call", "~Deep", "h")],
        )
        assert run(main, flows={"child": child}).result == "~Deep.problem"

    def test_child_handler_wins_over_parent(self):
        child = build(
            "child",
            [
                ("b", "Begin"),
                ("t", "Throw", {"name": "Deep.problem"}),
                ("e", "End", {"result": "child-handled"}),
            ],
            [("b", "", "t"), ("t", "~Deep.problem", "e")],
        )
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"flow": "child"}),
                ("done", "End", {"result_expr": "result"}),
                ("h", "End", {"result": "parent-handled"}),
            ],
            [("b", "", "call"), ("call", "", "done"), ("call", "~Deep", "h")],
        )
        assert run(main, flows={"child": child}).result == "child-handled"

    def test_two_level_pop_to_grandparent_catch(self):
        leaf = build(
            "leaf",
            [("b", "Begin"), ("t", "Throw", {"name": "Very.deep.issue"}), ("e", "End")],
            [("b", "", "t"), ("t", "", "e")],
        )
        mid = build(
            "mid",
            [("b", "Begin"), ("call", "SubFlow", {"flow": "leaf"}), ("e", "End")],
            [("b", "", "call"), ("call", "", "e")],
        )
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"flow": "mid"}),
                ("c", "Catch", {}, "~Very"),
                ("h", "End", {"result_expr": "exception"}),
                ("never", "End", {"result": "no"}),
            ],
            [("b", "", "call"), ("call", "", "never"), ("c", "", "h")],
        )
        assert run(main, flows={"leaf": leaf, "mid": mid}).result == "~Very.deep.issue"

    def test_handler_frame_notepad_gets_exception(self):
        child = build(
            "child",
            [("b", "Begin"), ("t", "Throw", {"name": "Deep.problem", "message": "hi"}), ("e", "End")],
            [("b", "", "t"), ("t", "", "e")],
        )
        main = build(
            "main",
            [
                ("b", "Begin"),
                ("call", "SubFlow", {"flow": "child"}),
                ("h", "End", {"result_expr": "exception"}),
            ],
            [("b", "", "call"), ("call", "~", "h")],
        )
        assert run(main, flows={"child": child}).result == "~Deep.problem"


class TestDeterminism:
    def _flow(self):
        return build(
            "dice",
            [
                ("b", "Begin"),
                ("r", "Random", {"choices": ["red", "green", "blue"]}),
                ("red", "End", {"result": "red"}),
                ("green", "End", {"result": "green"}),
                ("blue", "End", {"result": "blue"}),
            ],
            [("b", "", "r"), ("r", "red", "red"), ("r", "green", "green"), ("r", "blue", "blue")],
        )

    def test_same_seed_same_trace(self):
        runs = []
        for _ in range(3):
            _, lines = trace_of(self._flow(), seed=7)
            runs.append("\n".join(lines))
        assert runs[0] == runs[1] == runs[2]

    def test_seed_changes_choice_eventually(self):
        results = {run(self._flow(), seed=s).result for s in range(20)}
        assert len(results) > 1

    def test_log_and_async_eval(self):
        flow = build(
            "f",
            [
                ("b", "Begin"),
                ("a", "Eval-Async", {"script": "6 * 7", "key": "later"}),
                ("chk1", "Eval", {"script": "blackboard.later == null"}),
                ("w", "Timeout", {"ms": 50}),
                ("l", "Log", {"message_expr": "f'value {blackboard.later}'"}),
                ("e", "End", {"result_expr": "blackboard.later"}),
                ("bad", "End", {"result": "too-early"}),
            ],
            [
                ("b", "", "a"),
                ("a", "", "chk1"),
                ("chk1", "true", "w"),
                ("chk1", "false", "bad"),
                ("w", "", "l"),
                ("l", "", "e"),
            ],
        )
        exe = Execution(flow)
        exe.start()
        outcome = exe.run()
        assert outcome.result == 42
        assert exe.logs == [(1, "value 42")]


class TestResultStringsInTraces:
    def test_numeric_and_bool_results_format_canonically(self):
        flow = build(
            "f",
            [
                ("b", "Begin"),
                ("q", "Eval", {"script": "2 + 2"}),
                ("e", "End", {"result_expr": "true"}),
            ],
            [("b", "", "q"), ("q", "4", "e")],
        )
        result, lines = trace_of(flow)
        assert result.status == "completed"
        assert "tick=0 ctx=ctx0 act=q event=complete result=4" in lines
        assert "tick=0 ctx=ctx0 act=e event=complete result=true" in lines
        assert stringify_result(result.result) == "true"
