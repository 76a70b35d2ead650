from __future__ import annotations

import pytest

from patchwright.core import ArtifactKind, CodeArtifact, ExecutionOutcome, PathError
from patchwright.core import TestSuite as Suite
from patchwright.sandbox import (
    ContainerExecutor,
    DockerClient,
    ImageError,
    ResourceLimits,
    RuntimeUnavailable,
    SubprocessExecutor,
    build_archive,
    execute,
    extract_archive,
    pass_predicate,
    stream_pass,
)

from fake_docker import FakeDockerDaemon, FakeDockerServer

FAST = ResourceLimits(timeout_seconds=10.0)


class TestBuildArchive:
    def test_empty_archive(self):
        assert extract_archive(build_archive([])) == {}

    def test_single_file(self):
        archive = build_archive([("main.py", "x")])
        assert extract_archive(archive) == {"main.py": "x"}

    def test_many_files_round_trip(self):
        import random

        rng = random.Random(8)
        files = [
            (f"dir{i % 5}/file{i}.py", "".join(chr(rng.randint(32, 126)) for _ in range(200)))
            for i in range(50)
        ]
        assert extract_archive(build_archive(files)) == dict(files)

    def test_escape_rejected(self):
        with pytest.raises(PathError):
            build_archive([("../breakout", "x")])
        with pytest.raises(PathError):
            build_archive([("/abs", "x")])

    def test_duplicate_rejected(self):
        with pytest.raises(PathError):
            build_archive([("a", "1"), ("a", "2")])


def outcome(stdout="", stderr="", exit_status=0, timed_out=False):
    return ExecutionOutcome(
        stdout=stdout, stderr=stderr, exit_status=exit_status, timed_out=timed_out
    )


class TestPassPredicate:
    def test_clean_pass(self):
        assert pass_predicate(outcome(stdout="3 passed")) is True

    def test_failed_token(self):
        assert pass_predicate(outcome(stdout="1 FAILED")) is False

    def test_stderr_nonempty(self):
        assert pass_predicate(outcome(stderr="Traceback...")) is False

    def test_nonzero_exit(self):
        assert pass_predicate(outcome(exit_status=2)) is False

    def test_timeout(self):
        assert pass_predicate(outcome(exit_status=124, timed_out=True)) is False

    def test_token_boundaries(self):
        # Identifier-embedded tokens must not trip the rule.
        assert pass_predicate(outcome(stdout="error_rate=0.5 ERRORS_TOTAL=0")) is True
        assert pass_predicate(outcome(stdout="collection ERRORS found")) is True
        assert pass_predicate(outcome(stdout="setup ERROR here")) is False
        # Substring mode is stricter.
        assert stream_pass("collection ERRORS found", "", token_match=False) is False

    def test_case_sensitivity(self):
        assert pass_predicate(outcome(stdout="no failed tests, no errors")) is True

    def test_appending_failure_token_flips(self):
        base = outcome(stdout="all good")
        assert pass_predicate(base) is True
        flipped = outcome(stdout=base.stdout + " FAILED")
        assert pass_predicate(flipped) is False

    def test_truth_table(self):
        # (stdout, stderr, exit, timed_out) -> expected
        cases = [
            (("3 passed", "", 0, False), True),
            (("", "", 0, False), True),
            (("1 FAILED", "", 0, False), False),
            (("setup ERROR", "", 0, False), False),
            (("ok", "warn", 0, False), False),
            (("ok", "", 1, False), False),
            (("ok", "", 124, True), False),
            (("FAILED", "boom", 1, False), False),
            (("FAILED", "", 1, False), False),
            (("ERROR", "x", 0, False), False),
            (("fine", "", 0, False), True),
            (("passed FAILED passed", "", 0, False), False),
            (("", "e", 1, False), False),
            (("", "", 2, False), False),
            (("ERROR FAILED", "e", 3, False), False),
            (("clean run", "", 0, False), True),
        ]
        for (o, e, code, t), expected in cases:
            assert pass_predicate(outcome(o, e, code, t)) is expected, (o, e, code, t)


PASSING_CODE = CodeArtifact(
    kind=ArtifactKind.NEW_FILE, path="calc.py", content="def add(a, b):\n    return a + b\n"
)
PASSING_TESTS = Suite(
    path="test_calc.py",
    content="from calc import add\n\ndef test_add():\n    assert add(2, 2) == 4\n",
)
FAILING_TESTS = Suite(
    path="test_calc.py",
    content="from calc import add\n\ndef test_add():\n    assert add(2, 2) == 5\n",
)


class TestSubprocessExecutor:
    def test_passing_program(self):
        executor = SubprocessExecutor(isolate_network=False)
        result = execute(PASSING_CODE, PASSING_TESTS, FAST, executor)
        assert result.exit_status == 0
        assert "passed" in result.stdout
        assert pass_predicate(result) is True

    def test_failing_program(self):
        executor = SubprocessExecutor(isolate_network=False)
        result = execute(PASSING_CODE, FAILING_TESTS, FAST, executor)
        assert result.exit_status != 0
        assert pass_predicate(result) is False

    def test_timeout_enforced(self):
        executor = SubprocessExecutor(isolate_network=False)
        limits = ResourceLimits(timeout_seconds=1.0)
        result = executor.run(
            {"sleeper.py": "import time\ntime.sleep(60)\n"},
            ["python3", "sleeper.py"],
            limits,
        )
        assert result.timed_out is True
        assert result.exit_status != 0
        assert result.wall_time_ms < 5000

    def test_memory_cap(self):
        executor = SubprocessExecutor(isolate_network=False)
        result = executor.run(
            {"hog.py": "data = bytearray(1024 * 1024 * 1024)\nprint('allocated')\n"},
            ["python3", "hog.py"],
            FAST,
        )
        assert result.oom_killed or result.exit_status != 0
        assert "allocated" not in result.stdout

    def test_network_flagging_without_isolation(self):
        executor = SubprocessExecutor(isolate_network=False)
        result = executor.run({"noop.py": "print('hi')\n"}, ["python3", "noop.py"], FAST)
        assert result.isolation == "none"
        assert "network" in result.limits_unenforced

    def test_network_isolation_when_available(self):
        executor = SubprocessExecutor(isolate_network=True)
        if not executor.network_isolated:
            pytest.skip("host does not allow network namespaces")
        probe = (
            "import socket\n"
            "s = socket.socket()\n"
            "s.settimeout(3)\n"
            "try:\n"
            "    s.connect(('1.1.1.1', 80))\n"
            "    print('CONNECTED')\n"
            "except OSError as e:\n"
            "    print('blocked:', type(e).__name__)\n"
        )
        result = executor.run({"probe.py": probe}, ["python3", "probe.py"], FAST)
        assert result.isolation == "netns"
        assert "CONNECTED" not in result.stdout

    def test_stream_capture_is_byte_faithful(self):
        executor = SubprocessExecutor(isolate_network=False)
        program = (
            "import sys\n"
            "sys.stdout.write('out\\u00e9\\n\\ttab')\n"
            "sys.stderr.write('err-stream')\n"
        )
        result = executor.run({"p.py": program}, ["python3", "p.py"], FAST)
        assert result.stdout == "out\u00e9\n\ttab"
        assert result.stderr == "err-stream"


class TestContainerExecutor:
    def test_happy_path_and_teardown(self):
        daemon = FakeDockerDaemon()
        with FakeDockerServer(daemon) as server:
            client = DockerClient(base_url=server.base_url)
            executor = ContainerExecutor(client, image="python:3.10-slim")
            result = execute(PASSING_CODE, PASSING_TESTS, FAST, executor)
            assert result.exit_status == 0
            assert "passed" in result.stdout
            # Exactly one container, created with the right knobs, removed.
            (container,) = daemon.containers.values()
            host = container.create_body["HostConfig"]
            assert host["Memory"] == FAST.memory_bytes
            assert host["NanoCpus"] == int(FAST.cpu_quota * 1e9)
            assert host["PidsLimit"] == FAST.pid_cap
            assert host["NetworkMode"] == "none"
            assert container.create_body["NetworkDisabled"] is True
            assert container.removed is True
            assert executor.census() == []

    def test_archive_contains_payload(self):
        daemon = FakeDockerDaemon()
        with FakeDockerServer(daemon) as server:
            executor = ContainerExecutor(DockerClient(base_url=server.base_url))
            execute(PASSING_CODE, PASSING_TESTS, FAST, executor)
            (container,) = daemon.containers.values()
            files = extract_archive(container.archive)
            assert files["calc.py"] == PASSING_CODE.content
            assert files["test_calc.py"] == PASSING_TESTS.content

    def test_timeout_kills_and_removes(self):
        daemon = FakeDockerDaemon()
        daemon.script = lambda body, archive: {"wait_delay": 30.0, "stdout": b"partial"}
        with FakeDockerServer(daemon) as server:
            executor = ContainerExecutor(DockerClient(base_url=server.base_url))
            limits = ResourceLimits(timeout_seconds=0.5)
            result = executor.run({"a.py": "x"}, ["python", "a.py"], limits)
            assert result.timed_out is True
            assert result.exit_status != 0
            (container,) = daemon.containers.values()
            assert container.killed is True
            assert container.removed is True

    def test_failure_in_logs_still_removes(self):
        daemon = FakeDockerDaemon()
        daemon.script = lambda body, archive: {
            "exit_code": 1,
            "stdout": b"1 FAILED",
            "stderr": b"AssertionError",
        }
        with FakeDockerServer(daemon) as server:
            executor = ContainerExecutor(DockerClient(base_url=server.base_url))
            result = executor.run({"a.py": "x"}, ["python", "a.py"], FAST)
            assert pass_predicate(result) is False
            assert result.stderr == "AssertionError"
            assert executor.census() == []

    def test_oom_reported(self):
        daemon = FakeDockerDaemon()
        daemon.script = lambda body, archive: {"exit_code": 137, "oom": True}
        with FakeDockerServer(daemon) as server:
            executor = ContainerExecutor(DockerClient(base_url=server.base_url))
            result = executor.run({"a.py": "x"}, ["python", "a.py"], FAST)
            assert result.oom_killed is True

    def test_missing_image(self):
        with FakeDockerServer() as server:
            executor = ContainerExecutor(
                DockerClient(base_url=server.base_url), image="missing:latest"
            )
            with pytest.raises(ImageError):
                executor.run({"a.py": "x"}, ["python", "a.py"], FAST)

    def test_runtime_unreachable(self):
        client = DockerClient(base_url="http://127.0.0.1:1")
        with pytest.raises(RuntimeUnavailable):
            client.ping()

    def test_removal_happens_even_if_start_fails(self):
        daemon = FakeDockerDaemon()
        with FakeDockerServer(daemon) as server:
            client = DockerClient(base_url=server.base_url)
            executor = ContainerExecutor(client)

            original_start = DockerClient.start

            def broken_start(self, cid):
                raise RuntimeUnavailable("injected start failure")

            DockerClient.start = broken_start
            try:
                with pytest.raises(RuntimeUnavailable):
                    executor.run({"a.py": "x"}, ["python", "a.py"], FAST)
            finally:
                DockerClient.start = original_start
            (container,) = daemon.containers.values()
            assert container.removed is True
            assert executor.census() == []
