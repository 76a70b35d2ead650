from __future__ import annotations

import json

import httpx
import pytest

from patchwright.agents import BackendError, ModelParams, RemoteBackend
from patchwright.retrieval import ProviderError, RemoteEmbeddingProvider


def chat_client(handler):
    return httpx.Client(transport=httpx.MockTransport(handler), base_url="https://llm.test")


class TestRemoteBackend:
    def test_sends_params_and_returns_usage(self, monkeypatch):
        monkeypatch.setenv("PATCHWRIGHT_API_KEY", "sekrit")
        captured = {}

        def handler(request):
            captured["body"] = json.loads(request.content)
            captured["auth"] = request.headers.get("Authorization")
            return httpx.Response(
                200,
                json={
                    "choices": [{"message": {"content": "the completion"}}],
                    "usage": {"prompt_tokens": 11, "completion_tokens": 7},
                },
            )

        backend = RemoteBackend("https://llm.test/v1", "test-model", client=chat_client(handler))
        params = ModelParams(temperature=0.0, seed=42, max_output_tokens=128)
        text, usage = backend.complete("system prompt", "user input", params, role="coder")
        assert text == "the completion"
        assert (usage.input_tokens, usage.output_tokens) == (11, 7)
        assert captured["auth"] == "Bearer sekrit"
        assert captured["body"]["temperature"] == 0.0
        assert captured["body"]["seed"] == 42
        assert captured["body"]["max_tokens"] == 128
        assert captured["body"]["messages"][0]["role"] == "system"

    def test_http_error_is_backend_error(self):
        def handler(request):
            return httpx.Response(500, text="upstream down")

        backend = RemoteBackend("https://llm.test/v1", "m", client=chat_client(handler))
        with pytest.raises(BackendError):
            backend.complete("s", "u", ModelParams())

    def test_malformed_payload_is_backend_error(self):
        def handler(request):
            return httpx.Response(200, json={"unexpected": True})

        backend = RemoteBackend("https://llm.test/v1", "m", client=chat_client(handler))
        with pytest.raises(BackendError):
            backend.complete("s", "u", ModelParams())


class TestRemoteEmbeddingProvider:
    def test_normalizes_response_vector(self):
        def handler(request):
            return httpx.Response(200, json={"data": [{"embedding": [3.0, 4.0]}]})

        provider = RemoteEmbeddingProvider(
            "https://emb.test/v1", "emb-model", dimension=2, client=chat_client(handler)
        )
        vec = provider.embed("text")
        assert vec.values == pytest.approx((0.6, 0.8))

    def test_wrong_dimension_is_provider_error(self):
        def handler(request):
            return httpx.Response(200, json={"data": [{"embedding": [1.0, 0.0, 0.0]}]})

        provider = RemoteEmbeddingProvider(
            "https://emb.test/v1", "m", dimension=2, client=chat_client(handler)
        )
        with pytest.raises(ProviderError):
            provider.embed("text")

    def test_connection_failure_is_provider_error(self):
        def handler(request):
            raise httpx.ConnectError("refused")

        provider = RemoteEmbeddingProvider(
            "https://emb.test/v1", "m", dimension=2, client=chat_client(handler)
        )
        with pytest.raises(ProviderError):
            provider.embed("text")


class TestEvalDeadline:
    def test_instance_wall_clock_breach_is_infra(self, tmp_path):
        from patchwright.eval_harness import BenchmarkInstance, FailureClass, evaluate_patch
        from patchwright.sandbox import ResourceLimits, SubprocessExecutor

        repo = tmp_path / "repo"
        repo.mkdir()
        (repo / "mod.py").write_text("x = 1\n")
        (repo / "test_slow.py").write_text(
            "import time\n\ndef test_slow():\n    time.sleep(5)\n"
        )
        instance = BenchmarkInstance(
            instance_id="slow",
            repo_source=str(repo),
            base_commit="WORKTREE",
            problem_statement="slow instance",
            fail_to_pass=("test_slow.py::test_slow",) * 1,
            pass_to_pass=("test_slow.py::test_slow",),
        )
        patch = "--- a/mod.py\n+++ b/mod.py\n@@ -1,1 +1,1 @@\n-x = 1\n+x = 2\n"
        record = evaluate_patch(
            instance,
            patch,
            SubprocessExecutor(isolate_network=False),
            limits=ResourceLimits(timeout_seconds=20.0),
            eval_timeout_seconds=3.0,
        )
        assert record.failure_class is FailureClass.INFRA
        assert "wall time" in record.detail
