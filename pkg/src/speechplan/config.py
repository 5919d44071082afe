"""Service configuration, sourced from environment variables."""

from __future__ import annotations

import os

from pydantic import BaseModel, ConfigDict


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    llm_endpoint: str | None = None
    llm_model: str = "gpt-4o-mini"
    llm_api_key: str | None = None
    llm_timeout_s: float = 120.0

    classifier_endpoint: str | None = None
    asr_endpoint: str | None = None

    data_dir: str = "./data"
    bind_addr: str = "127.0.0.1:8000"
    max_rounds: int = 2
    mock_seed: int = 0

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "Settings":
        env = dict(os.environ if env is None else env)
        kwargs: dict = {}
        if env.get("LLM_ENDPOINT"):
            kwargs["llm_endpoint"] = env["LLM_ENDPOINT"]
        if env.get("LLM_MODEL"):
            kwargs["llm_model"] = env["LLM_MODEL"]
        if env.get("LLM_API_KEY"):
            kwargs["llm_api_key"] = env["LLM_API_KEY"]
        if env.get("LLM_TIMEOUT_S"):
            kwargs["llm_timeout_s"] = float(env["LLM_TIMEOUT_S"])
        if env.get("CLASSIFIER_ENDPOINT"):
            kwargs["classifier_endpoint"] = env["CLASSIFIER_ENDPOINT"]
        if env.get("ASR_ENDPOINT"):
            kwargs["asr_endpoint"] = env["ASR_ENDPOINT"]
        if env.get("DATA_DIR"):
            kwargs["data_dir"] = env["DATA_DIR"]
        if env.get("BIND_ADDR"):
            kwargs["bind_addr"] = env["BIND_ADDR"]
        if env.get("MAX_ROUNDS"):
            kwargs["max_rounds"] = int(env["MAX_ROUNDS"])
        return cls(**kwargs)
