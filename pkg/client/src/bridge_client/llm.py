"""Stub for a language-model-backed policy.

This marks the seam where a hosted model would slot into the client: build a
prompt from the decide message's observation and task, call the model, and
map its reply onto one of the legal action kinds. No model integration is
provided; instantiating the policy works, but asking it to decide raises.
"""

from __future__ import annotations


class LLMPolicy:
    """Placeholder policy that would delegate each tick to a language model.

    Parameters mirror what a real integration would need: a model identifier
    and a system prompt. `decide` is intentionally unimplemented.
    """

    def __init__(self, model: str, system_prompt: str = ""):
        self.model = model
        self.system_prompt = system_prompt

    def build_prompt(self, msg: dict) -> str:
        """Render a decide message into the user prompt a model would see."""
        task = msg.get("task") or {}
        obs = msg.get("observation", {})
        return (
            f"Task: {task.get('instruction', 'explore')}\n"
            f"Pose: {obs.get('pose')}\n"
            f"Visible objects: {obs.get('visible_objects')}\n"
            f"Legal actions: {msg.get('legal_actions')}\n"
            "Answer with exactly one action kind."
        )

    def decide(self, msg: dict) -> str:
        raise NotImplementedError(
            "model-backed decisions are not implemented; "
            "use the frontier explorer instead")
