"""Bundled synthetic benchmark: twelve small instances with injected bugs,
gold patches, fail-to-pass and pass-to-pass tests, plus a scripted backend
script per instance.

Archetypes are chosen so each agent is provably necessary for a known subset:

- easy:    the planned coder diff is correct on the first try
- debug:   the coder's first patch is wrong; the debugger repairs it after
           seeing real execution output
- brittle: the coder is right but the generated test is wrong, so execution
           fails; only the reviewing critic can rescue the run
- newfile: the fix is a brand-new module (creation diff)
- never:   scripted to never repair; must fail after the full retry budget

The expected resolution of every instance under every ablation is part of the
case definition, so tests can assert exact per-instance behavior, not just
aggregate ordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..diffs import make_unified_diff, render_unified_diff

CONFIG_LABELS = ("full", "no_critic", "no_debugger", "no_tester", "no_planner")

JUNK_CODE = "def broken():\n    pass\n"


@dataclass(frozen=True)
class SyntheticCase:
    name: str
    archetype: str
    module: str
    buggy: Optional[str]  # None for new-file instances
    fixed: str
    wrong: Optional[str]  # the coder's first (incorrect) attempt, if any
    function: str
    call: str  # expression exercising the fixed behavior
    expected_value: str
    stable_call: str  # expression stable across buggy and fixed
    stable_value: str
    expected: Dict[str, bool]  # resolution per config label
    brittle_expected: Optional[str] = None  # wrong expectation for brittle tests

    @property
    def slug(self) -> str:
        return self.name.replace("-", "_")

    @property
    def f2p_test_file(self) -> str:
        return f"test_f2p_{self.slug}.py"

    @property
    def p2p_test_file(self) -> str:
        return f"test_p2p_{self.slug}.py"

    @property
    def marker(self) -> str:
        return f"# fixed-{self.name}"

    def f2p_test(self) -> str:
        stem = self.module[:-3]
        return (
            f"from {stem} import {self.function}\n\n"
            f"def test_fixed_behavior():\n    assert {self.call} == {self.expected_value}\n"
        )

    def p2p_test(self) -> str:
        if self.buggy is None:
            return "def test_stable_behavior():\n    assert isinstance(1, int)\n"
        stem = self.module[:-3]
        return (
            f"from {stem} import {self.function}\n\n"
            f"def test_stable_behavior():\n    assert {self.stable_call} == {self.stable_value}\n"
        )

    def generated_test(self) -> str:
        """What the scripted tester emits inside the pipeline."""
        stem = self.module[:-3]
        expectation = self.brittle_expected or self.expected_value
        return (
            f"from {stem} import {self.function}\n\n"
            f"def test_{self.function}():\n    assert {self.call} == {expectation}\n"
        )

    def gold_patch(self) -> str:
        return render_unified_diff(make_unified_diff(self.buggy or "", self.fixed, self.module))

    def plan_json(self) -> str:
        return json.dumps(
            {
                "explanation": f"fix {self.function} ({self.name})",
                "steps": [
                    {
                        "agent": "coder",
                        "description": f"Fix {self.function} in {self.module} ({self.name})",
                        "file": self.module,
                    },
                    {"agent": "tester", "description": f"Verify {self.name}", "file": None},
                    {"agent": "critic", "description": f"Review {self.name}", "file": None},
                ],
            }
        )

    def script(self) -> List[dict]:
        """Scripted backend rules for this instance, shared by every ablation."""
        rules: List[dict] = [
            {"role": "planner", "response": self.plan_json()},
        ]
        first_output = self.wrong if self.wrong is not None else self.fixed
        coder_response = (
            render_unified_diff(make_unified_diff(self.buggy, first_output, self.module))
            if self.buggy is not None
            else first_output
        )
        rules.append(
            {"role": "coder", "contains": f"({self.name})", "response": coder_response}
        )
        # The fallback coder step (planner ablated) lacks the plan marker and
        # lands here, producing an artifact that cannot resolve the instance.
        rules.append({"role": "coder", "response": JUNK_CODE})
        rules.append({"role": "tester", "response": self.generated_test()})

        if self.archetype == "debug":
            rules.append({"role": "debugger", "max_uses": 1, "response": self.fixed})
        elif self.archetype == "never":
            # Distinct, still-wrong repairs (marker-free) so every retry burns.
            for i in range(1, 4):
                rules.append(
                    {
                        "role": "debugger",
                        "max_uses": 1,
                        "response": (self.wrong or JUNK_CODE).replace(
                            "return ", f"return {i} + "
                        ),
                    }
                )
        elif self.archetype == "brittle":
            # The code is right and the test is wrong; the debugger has
            # nothing to fix and stalls on an identical artifact.
            rules.append({"role": "debugger", "response": self.fixed})
        # Catch-all: identical junk, so a stray debug attempt stagnates fast.
        rules.append({"role": "debugger", "response": JUNK_CODE})

        rules.append({"role": "critic", "contains": "pass=True", "response": "PASS\nexecution verified"})
        rules.append(
            {"role": "critic", "contains": self.marker, "response": "PASS\nartifact matches the required fix"}
        )
        rules.append({"role": "critic", "response": "FAIL\nno passing evidence"})
        return rules


def _simple_case(
    name: str,
    archetype: str,
    expected: Dict[str, bool],
    op_buggy: str,
    op_fixed: str,
    wrong_op: Optional[str] = None,
    brittle_expected: Optional[str] = None,
) -> SyntheticCase:
    function = f"combine_{name.replace('-', '_')}"
    module = f"mod_{name.replace('-', '_')}.py"
    marker = f"# fixed-{name}"
    buggy = f"def {function}(a, b):\n    return {op_buggy}\n"
    fixed = f"def {function}(a, b):\n    return {op_fixed}  {marker}\n"
    wrong = None
    if wrong_op is not None:
        wrong = f"def {function}(a, b):\n    return {wrong_op}\n"
    return SyntheticCase(
        name=name,
        archetype=archetype,
        module=module,
        buggy=buggy,
        fixed=fixed,
        wrong=wrong,
        function=function,
        call=f"{function}(7, 3)",
        expected_value="10",
        # Zero args give the same value under every buggy variant in use, so
        # the pass-to-pass test genuinely passes before and after the fix.
        stable_call=f"{function}(0, 0)",
        stable_value="0",
        expected=expected,
        brittle_expected=brittle_expected,
    )


def _newfile_case(name: str, expected: Dict[str, bool]) -> SyntheticCase:
    function = f"make_{name.replace('-', '_')}"
    module = f"util_{name.replace('-', '_')}.py"
    marker = f"# fixed-{name}"
    fixed = f"def {function}(a, b):\n    return a + b  {marker}\n"
    return SyntheticCase(
        name=name,
        archetype="newfile",
        module=module,
        buggy=None,
        fixed=fixed,
        wrong=None,
        function=function,
        call=f"{function}(7, 3)",
        expected_value="10",
        stable_call="1",
        stable_value="1",
        expected=expected,
    )


EASY_EXPECTED = {"full": True, "no_critic": True, "no_debugger": True, "no_tester": True, "no_planner": False}
DEBUG_EXPECTED = {"full": True, "no_critic": True, "no_debugger": False, "no_tester": False, "no_planner": False}
BRITTLE_EXPECTED = {"full": True, "no_critic": False, "no_debugger": True, "no_tester": True, "no_planner": False}
NEWFILE_EXPECTED = {"full": True, "no_critic": True, "no_debugger": True, "no_tester": True, "no_planner": False}
NEVER_EXPECTED = {label: False for label in CONFIG_LABELS}


def synthetic_cases() -> List[SyntheticCase]:
    return [
        _simple_case("easy-1", "easy", EASY_EXPECTED, "a - b", "a + b"),
        _simple_case("easy-2", "easy", EASY_EXPECTED, "a * b", "a + b"),
        _simple_case("easy-3", "easy", EASY_EXPECTED, "b - a", "a + b"),
        _simple_case("debug-1", "debug", DEBUG_EXPECTED, "a - b", "a + b", wrong_op="a * b"),
        _simple_case("debug-2", "debug", DEBUG_EXPECTED, "a * b", "a + b", wrong_op="a - b"),
        _simple_case("debug-3", "debug", DEBUG_EXPECTED, "b - a", "a + b", wrong_op="0"),
        _simple_case(
            "brittle-1", "brittle", BRITTLE_EXPECTED, "a - b", "a + b", brittle_expected="11"
        ),
        _simple_case(
            "brittle-2", "brittle", BRITTLE_EXPECTED, "a * b", "a + b", brittle_expected="99"
        ),
        _newfile_case("new-1", NEWFILE_EXPECTED),
        _newfile_case("new-2", NEWFILE_EXPECTED),
        _simple_case("never-1", "never", NEVER_EXPECTED, "a - b", "a + b", wrong_op="a * b"),
        _simple_case("never-2", "never", NEVER_EXPECTED, "a * b", "a + b", wrong_op="b - a"),
    ]


def repairable(case: SyntheticCase) -> bool:
    return case.archetype != "never"


def materialize_suite(root: Path) -> Tuple[Path, Path]:
    """Write repos, suite.jsonl and per-instance scripts under `root`.
    Returns (suite_path, scripts_dir).
    """
    root = Path(root)
    repos = root / "repos"
    scripts = root / "scripts"
    repos.mkdir(parents=True, exist_ok=True)
    scripts.mkdir(parents=True, exist_ok=True)

    lines = []
    for case in synthetic_cases():
        repo_dir = repos / case.name
        repo_dir.mkdir(parents=True, exist_ok=True)
        if case.buggy is not None:
            (repo_dir / case.module).write_text(case.buggy, encoding="utf-8")
        (repo_dir / case.f2p_test_file).write_text(case.f2p_test(), encoding="utf-8")
        (repo_dir / case.p2p_test_file).write_text(case.p2p_test(), encoding="utf-8")
        (scripts / f"{case.name}.json").write_text(
            json.dumps(case.script(), indent=2), encoding="utf-8"
        )
        lines.append(
            json.dumps(
                {
                    "instance_id": case.name,
                    "repo_source": str(repo_dir),
                    "base_commit": "WORKTREE",
                    "problem_statement": (
                        f"{case.function} misbehaves; {case.call} must equal "
                        f"{case.expected_value} without breaking existing behavior."
                        if case.buggy is not None
                        else f"Create {case.module} providing {case.function} so that "
                        f"{case.call} equals {case.expected_value}."
                    ),
                    "fail_to_pass": [f"{case.f2p_test_file}::test_fixed_behavior"],
                    "pass_to_pass": [f"{case.p2p_test_file}::test_stable_behavior"],
                    "gold_patch": case.gold_patch(),
                    "image": "python:3.10-slim",
                    "install_command": "",
                }
            )
        )
    suite_path = root / "suite.jsonl"
    suite_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return suite_path, scripts
