"""Language-model advisor: invocation trigger, prompt generation, response extraction and retries.

Three interchangeable backends answer a prompt with raw text: a deterministic scripted
potential-field planner, a chat-completions HTTP client, and a record/replay fixture.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .world import Rect, dist_point_rect, inside_any

TRIGGER_CLASSES = ("OU", "BZ", "NFZ", "RZ")
MAX_ATTEMPTS = 10


# -- configuration ----------------------------------------------------------------------
@dataclass(frozen=True)
class TriggerConfig:
    threshold_m: float = 15.0
    classes: tuple[str, ...] = TRIGGER_CLASSES

    def __post_init__(self):
        if not self.threshold_m > 0:
            raise ValueError("trigger threshold must be positive")


@dataclass(frozen=True)
class PromptFlags:
    """Which reasoning guidelines appear in the prompt. Stability is never ablated."""

    safety: bool = True
    compliance: bool = True
    data_efficiency: bool = True
    energy_efficiency: bool = True


ABLATIONS = {
    "complete": PromptFlags(),
    "without_safety": PromptFlags(safety=False),
    "without_compliance": PromptFlags(compliance=False),
    "without_data_efficiency": PromptFlags(data_efficiency=False),
    "without_energy_efficiency": PromptFlags(energy_efficiency=False),
}


@dataclass(frozen=True)
class EndpointConfig:
    url: str = ""
    model: str = "deepseek-reasoner"
    api_key_env: str = "UAVTRAJ_ADVISOR_API_KEY"
    timeout_s: float = 30.0
    temperature: float = 0.0


@dataclass(frozen=True)
class AdvisorConfig:
    kind: str = "scripted"  # scripted | remote | replay | none
    trigger: TriggerConfig = TriggerConfig()
    prompt: PromptFlags = PromptFlags()
    max_attempts: int = MAX_ATTEMPTS
    shared_cap: bool = True
    v_cruise: float = 7.0
    k_rep: float = 10.0
    return_margin: float = 1.2
    endpoint: EndpointConfig = EndpointConfig()
    replay_path: str = ""


# -- errors -----------------------------------------------------------------------------
class AdvisorError(Exception):
    kind = "advisor"


class ParseFailure(AdvisorError):
    kind = "parse"


class SpeedBoundExceeded(AdvisorError):
    kind = "speed"


class AdvisorTimeout(AdvisorError):
    kind = "timeout"


class TransportError(AdvisorError):
    kind = "transport"


class TerminateEpisode(Exception):
    """The advisor produced no usable action within the attempt cap."""

    def __init__(self, attempts: int, failures: Sequence[str]):
        super().__init__(f"advisor gave no valid action after {attempts} attempts: {list(failures)}")
        self.attempts = attempts
        self.failures = list(failures)


class AdvisorUnavailable(TerminateEpisode):
    """Every attempt failed at the transport level; the run should abort and be resumed later."""


# -- context ------------------------------------------------------------------------------
@dataclass(frozen=True)
class VisibleOu:
    position: tuple[float, float]
    velocity: tuple[float, float]
    distance: float


@dataclass(frozen=True)
class PromptContext:
    """What the advisor may see: the agent's observation content plus zone geometry."""

    area: tuple[float, float]
    position: tuple[float, float]
    velocity: tuple[float, float]
    ges: tuple[tuple[float, float, float], ...]  # x, y, remaining data
    nfz: tuple[Rect, ...]
    bz: tuple[Rect, ...]
    rz: tuple[Rect, ...]
    landing: Rect
    ous: tuple[VisibleOu, ...]
    v_max: float = 10.0
    v_limit: float = 5.0
    t_fly: float = 1.0
    energy_remaining: float = 1e6
    energy_min: float = 0.0
    flags: PromptFlags = PromptFlags()


def context_from_env(env, flags: PromptFlags = PromptFlags()) -> PromptContext:
    sc = env.scenario
    ous = tuple(VisibleOu(tuple(map(float, p)), tuple(map(float, v)), float(d))
                for _, p, v, d in env.visible_ous())
    ges = tuple((float(g.spec.position[0]), float(g.spec.position[1]), float(g.remaining_data))
                for g in env.ges)
    return PromptContext(
        area=(sc.area.X, sc.area.Y), position=tuple(env.position), velocity=tuple(env.velocity),
        ges=ges, nfz=tuple(sc.nfz), bz=tuple(sc.bz), rz=tuple(sc.rz), landing=sc.landing, ous=ous,
        v_max=env.v_max, v_limit=env.v_limit, t_fly=env.clock.t_fly,
        energy_remaining=env.energy_remaining, energy_min=env.energy_min(), flags=flags,
    )


def nearest_obstacle(ctx: PromptContext, classes: Sequence[str] = TRIGGER_CLASSES) -> float:
    """Horizontal distance to the closest obstacle of the enabled classes (inf when none)."""
    best = math.inf
    if "OU" in classes:
        for ou in ctx.ous:
            best = min(best, ou.distance)
    for name, zones in (("BZ", ctx.bz), ("NFZ", ctx.nfz), ("RZ", ctx.rz)):
        if name in classes:
            for r in zones:
                best = min(best, dist_point_rect(ctx.position, r))
    return best


def should_invoke(ctx: PromptContext, trig: TriggerConfig) -> bool:
    return nearest_obstacle(ctx, trig.classes) <= trig.threshold_m


# -- prompt -----------------------------------------------------------------------------
def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _rect_text(r: Rect) -> str:
    return f"[x={_fmt(r.x)}, y={_fmt(r.y)}, width={_fmt(r.l)}, height={_fmt(r.w)}]"


def guideline_items(ctx: PromptContext) -> list[str]:
    f = ctx.flags
    items = []
    if f.safety:
        items.append("Safety first: choose (vx, vy) so that the next position keeps clear of "
                     "buildings, NFZ boundaries and every visible OU.")
    if f.compliance:
        items.append(f"Compliance: stay out of NFZs, and while inside an RZ keep |v| <= "
                     f"{_fmt(ctx.v_limit)} m/s.")
    if f.data_efficiency:
        items.append("Data efficiency: head for GEs that still hold data.")
    if f.energy_efficiency:
        items.append("Energy efficiency: when two choices are equally good, take the smaller |v|.")
    items.append("Stability: when choices are equivalent, keep the current heading.")
    return items


def build_prompt(ctx: PromptContext) -> str:
    X, Y = ctx.area
    vm = ctx.v_max
    a = [
        f"(a) Task and observation. You control a Data Collection UAV (DCU) flying over a "
        f"{X:g}x{Y:g} m low-altitude area. Avoiding collisions comes first. Regulatory "
        f"compliance comes second: never enter an NFZ, and inside an RZ do not exceed the "
        f"{ctx.v_limit:g} m/s speed limit. All GEs with their remaining data and all static "
        f"zones are known; other UAVs (OUs) are seen only inside the perception radius. "
        f"Choose the next continuous velocity (vx, vy) for the DCU.",
        f"DCU position: ({_fmt(ctx.position[0])}, {_fmt(ctx.position[1])}) m; "
        f"velocity: ({_fmt(ctx.velocity[0])}, {_fmt(ctx.velocity[1])}) m/s; "
        f"remaining energy: {ctx.energy_remaining:.1f} J (return to landing needs about "
        f"{ctx.energy_min:.1f} J).",
        "GEs (x, y, remaining data): " + ("; ".join(
            f"({_fmt(x)}, {_fmt(y)}, {_fmt(d)})" for x, y, d in ctx.ges) or "none") + ".",
        "Buildings: " + ("; ".join(_rect_text(r) for r in ctx.bz) or "none") + ".",
        "NFZs: " + ("; ".join(_rect_text(r) for r in ctx.nfz) or "none") + ".",
        "RZs: " + ("; ".join(_rect_text(r) for r in ctx.rz) or "none") + ".",
        f"Landing area: {_rect_text(ctx.landing)}.",
        "Visible OUs (position, velocity): " + ("; ".join(
            f"(({_fmt(o.position[0])}, {_fmt(o.position[1])}), "
            f"({_fmt(o.velocity[0])}, {_fmt(o.velocity[1])}))" for o in ctx.ous) or "none") + ".",
    ]
    items = guideline_items(ctx)
    b = ["(b) Reason step by step with these guidelines:"]
    b += [f"{i}) {text}" for i, text in enumerate(items, 1)]
    c = [
        f"(c) Output. The action is a continuous velocity (vx, vy) with each component in "
        f"[{-vm:g}, {vm:g}] m/s and |v| = sqrt(vx^2 + vy^2) <= {vm:g}; +x is east, +y is north.",
        "Reply with one strict JSON object and nothing else, for example:",
        '{"vx":3.0,"vy":-1.5,"Confidence":0.8,"Reasoning":"short justification"}',
    ]
    return "\n".join(a) + "\n\n" + "\n".join(b) + "\n\n" + "\n".join(c) + "\n"


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


# -- extraction -------------------------------------------------------------------------
@dataclass(frozen=True)
class AdvisorResponse:
    vx: float
    vy: float
    confidence: float = 0.5
    reasoning: str = ""


def _first_object(raw: str) -> Optional[dict]:
    dec = json.JSONDecoder()
    i = raw.find("{")
    while i != -1:
        try:
            obj, _ = dec.raw_decode(raw, i)
        except json.JSONDecodeError:
            obj = None
        if isinstance(obj, dict):
            return obj
        i = raw.find("{", i + 1)
    return None


def _number(obj: dict, key: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ParseFailure(f"field {key!r} is not a finite number: {v!r}")
    return float(v)


def extract(raw: str, v_max: float) -> AdvisorResponse:
    obj = _first_object(raw or "")
    if obj is None:
        raise ParseFailure("no JSON object in response")
    for key in ("vx", "vy"):
        if key not in obj:
            raise ParseFailure(f"response lacks {key!r}")
    vx, vy = _number(obj, "vx"), _number(obj, "vy")
    conf = _number(obj, "Confidence") if "Confidence" in obj else 0.5
    reasoning = obj.get("Reasoning", "")
    if not isinstance(reasoning, str):
        reasoning = json.dumps(reasoning)
    if math.hypot(vx, vy) > v_max:
        raise SpeedBoundExceeded(f"|v| = {math.hypot(vx, vy):.4f} exceeds {v_max}")
    return AdvisorResponse(vx, vy, min(max(conf, 0.0), 1.0), reasoning)


# -- backends ---------------------------------------------------------------------------
class Advisor(Protocol):
    def query(self, prompt: str, ctx: PromptContext) -> str: ...


@dataclass
class Advice:
    action: tuple[float, float]
    attempts: int
    response: AdvisorResponse
    failures: list = field(default_factory=list)


def advise(impl: Advisor, ctx: PromptContext, v_max: float, max_attempts: int = MAX_ATTEMPTS,
           shared_cap: bool = True) -> Advice:
    """Query until a valid action arrives or the attempt cap is reached.

    With ``shared_cap`` every failure counts toward one cap; otherwise parse-type and
    speed-type failures each have their own cap.
    """
    prompt = build_prompt(ctx)
    failures: list[str] = []
    counts = {"parse": 0, "speed": 0}
    attempts = 0
    while True:
        attempts += 1
        try:
            resp = extract(impl.query(prompt, ctx), v_max)
            return Advice((resp.vx, resp.vy), attempts, resp, failures)
        except AdvisorError as exc:
            failures.append(exc.kind)
            bucket = "speed" if exc.kind == "speed" else "parse"
            counts[bucket] += 1
        exhausted = attempts >= max_attempts if shared_cap else max(counts.values()) >= max_attempts
        if exhausted:
            if all(k in ("transport", "timeout") for k in failures):
                raise AdvisorUnavailable(attempts, failures)
            raise TerminateEpisode(attempts, failures)


def _unit(dx: float, dy: float) -> tuple[float, float]:
    n = math.hypot(dx, dy)
    return (dx / n, dy / n) if n > 0 else (0.0, 0.0)


def fit_speed(vx: float, vy: float, cap: float) -> tuple[float, float]:
    """Rescale onto the ``cap`` disc when outside it; the result never exceeds ``cap`` after rounding."""
    n = math.hypot(vx, vy)
    if n <= cap:
        return vx, vy
    k = cap / n
    vx, vy = vx * k, vy * k
    while math.hypot(vx, vy) > cap:
        vx, vy = math.nextafter(vx, 0.0), math.nextafter(vy, 0.0)
    return vx, vy


def _closest_point(p, r: Rect) -> tuple[float, float]:
    return (min(max(p[0], r.x), r.x2), min(max(p[1], r.y), r.y2))


class ScriptedAdvisor:
    """Goal attraction plus obstacle repulsion; ignores the prompt text and reads the context."""

    def __init__(self, v_cruise: float = 7.0, k_rep: float = 10.0, d_th: float = 15.0,
                 return_margin: float = 1.2):
        self.v_cruise = v_cruise
        self.k_rep = k_rep
        self.d_th = d_th
        self.return_margin = return_margin
        self.queries = 0

    def goal(self, ctx: PromptContext) -> tuple[float, float]:
        p = ctx.position
        low_energy = ctx.energy_remaining <= self.return_margin * ctx.energy_min
        pending = [(x, y) for x, y, d in ctx.ges if d > 0]
        if ctx.flags.data_efficiency and pending and not low_energy:
            return min(pending, key=lambda g: (math.hypot(g[0] - p[0], g[1] - p[1]), g))
        return ctx.landing.center

    def velocity(self, ctx: PromptContext) -> tuple[float, float]:
        p = ctx.position
        gx, gy = self.goal(ctx)
        cruise = ctx.v_max if not ctx.flags.energy_efficiency else self.v_cruise
        dist = math.hypot(gx - p[0], gy - p[1])
        ux, uy = _unit(gx - p[0], gy - p[1])
        speed = min(cruise, dist / ctx.t_fly)
        vx, vy = ux * speed, uy * speed
        if ctx.flags.safety:
            points = [o.position for o in ctx.ous if o.distance <= self.d_th]
            for r in (*ctx.bz, *ctx.nfz):
                if dist_point_rect(p, r) <= self.d_th:
                    points.append(r.center if r.contains(p) else _closest_point(p, r))
            for q in points:
                d = math.hypot(p[0] - q[0], p[1] - q[1])
                ax, ay = _unit(p[0] - q[0], p[1] - q[1])
                mag = self.k_rep * (self.d_th - min(d, self.d_th)) / self.d_th
                vx += ax * mag
                vy += ay * mag
        vx, vy = fit_speed(vx, vy, ctx.v_max)
        if ctx.flags.compliance and math.hypot(vx, vy) > ctx.v_limit:
            nxt = (p[0] + vx * ctx.t_fly, p[1] + vy * ctx.t_fly)
            if inside_any(p, ctx.rz) or inside_any(nxt, ctx.rz):
                vx, vy = fit_speed(vx, vy, ctx.v_limit)
        return vx, vy

    def query(self, prompt: str, ctx: PromptContext) -> str:
        self.queries += 1
        vx, vy = self.velocity(ctx)
        conf = min(max(nearest_obstacle(ctx) / self.d_th, 0.0), 1.0)
        return json.dumps({"vx": vx, "vy": vy, "Confidence": conf,
                           "Reasoning": "attraction to goal with obstacle repulsion"})


class RemoteAdvisor:
    """Chat-completions client; the API key is read from an environment variable."""

    def __init__(self, cfg: EndpointConfig, session=None):
        import requests
        if not cfg.url:
            raise ValueError("remote advisor needs an endpoint URL")
        self.cfg = cfg
        self._requests = requests
        self.session = session or requests.Session()
        self.queries = 0

    def query(self, prompt: str, ctx: PromptContext = None) -> str:
        self.queries += 1
        req = self._requests
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.cfg.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {"model": self.cfg.model, "messages": [{"role": "user", "content": prompt}],
                "temperature": self.cfg.temperature}
        try:
            resp = self.session.post(self.cfg.url, json=body, headers=headers, timeout=self.cfg.timeout_s)
        except req.Timeout as exc:
            raise AdvisorTimeout(str(exc)) from exc
        except req.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion body: {exc}") from exc


class ReplayAdvisor:
    """Serves recorded responses keyed by prompt hash, in recording order per prompt."""

    def __init__(self, path):
        self.responses: dict[str, list[str]] = {}
        self._cursor: dict[str, int] = {}
        self.queries = 0
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                self.responses.setdefault(rec["prompt_hash"], []).append(rec["response_text"])

    def query(self, prompt: str, ctx: PromptContext = None) -> str:
        self.queries += 1
        h = prompt_hash(prompt)
        seq = self.responses.get(h)
        if not seq:
            raise TransportError(f"no recorded response for prompt {h[:12]}")
        i = self._cursor.get(h, 0)
        self._cursor[h] = i + 1
        return seq[min(i, len(seq) - 1)]


class RecordingAdvisor:
    """Wraps another backend and appends every exchange to a JSONL fixture."""

    def __init__(self, inner: Advisor, path):
        self.inner = inner
        self.path = Path(path)

    @property
    def queries(self) -> int:
        return getattr(self.inner, "queries", 0)

    def query(self, prompt: str, ctx: PromptContext = None) -> str:
        text = self.inner.query(prompt, ctx)
        with self.path.open("a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({"prompt_hash": prompt_hash(prompt), "response_text": text},
                                sort_keys=True) + "\n")
        return text


def make_advisor(cfg: AdvisorConfig) -> Optional[Advisor]:
    if cfg.kind == "scripted":
        return ScriptedAdvisor(cfg.v_cruise, cfg.k_rep, cfg.trigger.threshold_m, cfg.return_margin)
    if cfg.kind == "remote":
        return RemoteAdvisor(cfg.endpoint)
    if cfg.kind == "replay":
        return ReplayAdvisor(cfg.replay_path)
    if cfg.kind == "none":
        return None
    raise ValueError(f"unknown advisor kind {cfg.kind!r}")
