"""Python bindings for the tripgym environment.

The native module does the work; this layer converts JSON text to Python
values and back.
"""

import json

from . import _tripgym as _native
from ._tripgym import TripgymError

__all__ = [
    "Environment",
    "ScriptedAgent",
    "TripgymError",
    "generate_dataset",
    "load_dataset",
    "report",
    "score_log",
    "system_prompt",
    "tool_schema",
]


def _text(value):
    return value if isinstance(value, str) else json.dumps(value)


class Environment:
    """Gym-style wrapper over one scenario: `reset()` then `step()` until done."""

    def __init__(self, scenario, config=None):
        self._env = _native.Environment(_text(scenario), None if config is None else _text(config))

    def reset(self):
        return self._env.reset()

    def step(self, choice, content, thought=""):
        observation, reward, done, info = self._env.step(choice, content, thought)
        return observation, reward, done, json.loads(info)

    @property
    def observation(self):
        return self._env.observation

    @property
    def system_prompt(self):
        return self._env.system_prompt

    @property
    def done(self):
        return self._env.done

    @property
    def config(self):
        return json.loads(self._env.config_json)

    def log_jsonl(self):
        return self._env.log_jsonl()


class ScriptedAgent:
    """A built-in scripted agent; `act(transcript)` returns the next call."""

    def __init__(self, name, scenario, seed=0, mode="single"):
        self._agent = _native.ScriptedAgent(name, _text(scenario), seed, mode)

    def act(self, transcript):
        return json.loads(self._agent.act(json.dumps(transcript)))


def tool_schema():
    return json.loads(_native.tool_schema_json())


def system_prompt(mode="single"):
    return _native.system_prompt(mode)


def generate_dataset(plan, seed=0, wrong=None, noise=None):
    return json.loads(_native.generate_dataset_json(plan, seed, wrong, noise))


def load_dataset(path):
    return json.loads(_native.load_dataset_json(str(path)))


def score_log(log_jsonl, mode=None):
    return _native.score_log(log_jsonl, mode)


def report(logs, group_by="tier"):
    return json.loads(_native.report_json(list(logs), group_by))
