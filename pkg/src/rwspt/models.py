"""The gracefully degrading production-line system NPLsys(N, K, M).

Layout of the net
-----------------
* ``p(<"W";0>)`` is the warehouse shared by all lines.  It starts with
  ``K*M`` raw items.
* Line ``j`` with ``k`` robots sits under the root pair ``("L", j)`` while
  it still has all ``K`` robots, and under ``("D<k>", j)`` once it has been
  reconfigured down to ``k`` robots.  Lines with different numbers of robots
  therefore never share a tag, which keeps the labeling symmetric.
* Robot ``i`` of a line owns ``p(<"w";0> <"R";i> <line>)`` (waiting item),
  ``p(<"a";0> <"R";i> <line>)`` (processed item) and ``p(<"f";0> <"R";i> <line>)``
  (fault flag).

Transitions of a line with ``k`` robots:

* ``ld``: takes ``k`` items from the warehouse and gives one to every robot.
  It is inhibited while any robot of the line is faulted.
* ``ln`` (one per robot): moves an item from ``w`` to ``a`` unless the robot
  is faulted.
* ``asm``: joins one processed item per robot and returns ``k`` items to
  the warehouse, closing the production cycle.

Degradation rules:

* ``fault`` marks the ``f`` place of a working robot that is not the last
  working robot of its line.
* ``reconfigure`` removes a faulted robot from a line that still has a
  working one.  Its items move to a chosen survivor, the robots are
  re-indexed ``0..k-2`` and the line is rebuilt with ``k-1`` robots.
* ``disconnect`` is the fault of the last working robot of a line.  The
  line's items return to the warehouse and the line subnet is removed.  The
  last remaining line is kept in place with every robot marked faulted, which
  is a final state.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

from .algebra import juxtapose, replicate
from .errors import ConfigError
from .multiset import EMPTY, Bag
from .net import Net, Place, System, Transition
from .rewriting import Rule, firing_rule

WAREHOUSE = Place.of(("W", 0))
INTACT = "L"
ROBOT = "R"
RATE_FIELDS = ("load", "process", "assemble", "fault", "reconfigure", "disconnect")


@dataclass(frozen=True)
class PLConfig:
    """Parameters of NPLsys(N, K, M) and its rates (events per time unit)."""

    N: int = 1
    K: int = 2
    M: int = 2
    load: float = 0.5
    process: float = 0.1
    assemble: float = 0.25
    fault: float = 0.001
    reconfigure: float = 0.01
    disconnect: float = 0.001

    def __post_init__(self):
        for name in ("N", "K", "M"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
        for name in RATE_FIELDS:
            v = getattr(self, name)
            try:
                fv = float(v)
            except (TypeError, ValueError):
                raise ConfigError(f"rate {name} must be a number, got {v!r}") from None
            if not fv > 0 or fv == float("inf"):
                raise ConfigError(f"rate {name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, fv)

    @property
    def rates(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in RATE_FIELDS}

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], base: "PLConfig | None" = None) -> "PLConfig":
        """Config from string values, e.g. ``{"N": "2", "fault": "0.002"}``."""
        base = base or cls()
        known = {f.name: f.type for f in fields(cls)}
        updates = {}
        for key, raw in values.items():
            key = key.strip()
            if key not in known:
                raise ConfigError(f"unknown parameter {key!r}")
            text = str(raw).strip()
            try:
                updates[key] = int(text) if key in ("N", "K", "M") else float(text)
            except ValueError:
                raise ConfigError(f"bad value {text!r} for {key}") from None
        return replace(base, **updates)

    @classmethod
    def from_params(cls, text: str, base: "PLConfig | None" = None) -> "PLConfig":
        """Parse ``"N=2,K=2,M=2"``."""
        pairs = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            if "=" not in item:
                raise ConfigError(f"expected key=value, got {item!r}")
            k, v = item.split("=", 1)
            pairs[k] = v
        return cls.from_mapping(pairs, base)

    @classmethod
    def from_file(cls, path: str | Path, base: "PLConfig | None" = None) -> "PLConfig":
        """Read ``key = value`` lines; ``#`` starts a comment."""
        pairs = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            pairs[k] = v
        return cls.from_mapping(pairs, base)

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())


def degraded_tag(k: int) -> str:
    return f"D{k}"


def _robot_place(kind: str, i: int) -> Place:
    return Place.of((kind, 0), (ROBOT, i))


def robot_net(cfg: PLConfig) -> Net:
    """One robot: ``[1.w, 1.a, 1.f] |-> << "ln", process >>``."""
    w, a, f = (Place.of((x, 0)) for x in "waf")
    return Net([Transition(Bag({w: 1}), Bag({a: 1}), Bag({f: 1}), "ln", cfg.process)])


def line_net(k: int, cfg: PLConfig) -> Net:
    """A line of ``k`` robots around the warehouse, not yet placed under a line pair."""
    robots = replicate(robot_net(cfg), ROBOT, k)
    ws = Bag({_robot_place("w", i): 1 for i in range(k)})
    fs = Bag({_robot_place("f", i): 1 for i in range(k)})
    as_ = Bag({_robot_place("a", i): 1 for i in range(k)})
    ld = Transition(Bag({WAREHOUSE: k}), ws, fs, "ld", cfg.load)
    asm = Transition(as_, Bag({WAREHOUSE: k}), EMPTY, "asm", cfg.assemble)
    return juxtapose(robots, Net([ld, asm]))


def placed_line(tag: str, index: int, k: int, cfg: PLConfig) -> Net:
    return line_net(k, cfg).relabel(lambda p: p if p == WAREHOUSE else p.prefixed(tag, index))


def build_nplsys(cfg: PLConfig) -> System:
    """Initial system: ``N`` intact lines of ``K`` robots, ``K*M`` items in the warehouse."""
    net = replicate(line_net(cfg.K, cfg), INTACT, cfg.N, shared={WAREHOUSE})
    return System(net, Bag({WAREHOUSE: cfg.K * cfg.M}))


# -- structure of a (possibly rewritten) system --------------------------------

LineKey = Tuple[str, int]


def _is_line_tag(tag: str) -> bool:
    return tag == INTACT or (tag.startswith("D") and tag[1:].isdigit())


_LINES: Dict[Net, Dict[LineKey, Tuple[int, ...]]] = {}


def lines_of(net: Net) -> Dict[LineKey, Tuple[int, ...]]:
    """Line root pairs mapped to their robot indices, both in place order."""
    hit = _LINES.get(net)
    if hit is None:
        acc: Dict[LineKey, set] = {}
        for p in net.places:
            root = p.root
            if len(p.label) == 3 and _is_line_tag(root[0]) and p.label[1][0] == ROBOT:
                acc.setdefault(root, set()).add(p.label[1][1])
        hit = {key: tuple(sorted(acc[key])) for key in sorted(acc, key=lambda r: (r[0], r[1]))}
        _LINES[net] = hit
    return hit


def robot_place(kind: str, line: LineKey, i: int) -> Place:
    return Place.of((kind, 0), (ROBOT, i), line)


def _working(s: System, line: LineKey, robots: Sequence[int]):
    m = s.marking
    working = [i for i in robots if m[robot_place("f", line, i)] == 0]
    faulted = [i for i in robots if m[robot_place("f", line, i)] > 0]
    return working, faulted


def _robot_of(f_place: Place) -> Tuple[LineKey, int]:
    return f_place.root, f_place.label[1][1]


def _line_items(s: System, line: LineKey, robots: Sequence[int]) -> int:
    m = s.marking
    return sum(m[robot_place("w", line, i)] + m[robot_place("a", line, i)] for i in robots)


def _without_line(s: System, line: LineKey) -> Tuple[List[Transition], Bag]:
    kept = [t for t in s.net.transitions if not any(p.root == line for p in t.places)]
    marking = s.marking.restrict(lambda p: p.root != line)
    return kept, marking


def degradation_rules(cfg: PLConfig) -> List[Rule]:
    """Firing plus the fault, reconfigure and disconnect rules."""

    def fault_matches(s: System):
        out = []
        for line, robots in lines_of(s.net).items():
            working, _ = _working(s, line, robots)
            if len(working) >= 2:
                out.extend(robot_place("f", line, i) for i in working)
        return out

    def fault_apply(s: System, f_place: Place) -> System:
        return System(s.net, s.marking + Bag({f_place: 1}))

    def disconnect_matches(s: System):
        out = []
        for line, robots in lines_of(s.net).items():
            working, _ = _working(s, line, robots)
            if len(working) == 1:
                out.append(robot_place("f", line, working[0]))
        return out

    def disconnect_apply(s: System, f_place: Place) -> System:
        line, _ = _robot_of(f_place)
        lines = lines_of(s.net)
        robots = lines[line]
        items = _line_items(s, line, robots)
        if len(lines) > 1:
            kept, marking = _without_line(s, line)
            return System(Net(kept), marking + Bag({WAREHOUSE: items}))
        marking = s.marking.restrict(lambda p: p.root != line)
        dead = Bag({robot_place("f", line, i): 1 for i in robots})
        return System(s.net, marking + dead + Bag({WAREHOUSE: items}))

    def reconfigure_matches(s: System):
        out = []
        for line, robots in lines_of(s.net).items():
            if len(robots) < 2:
                continue
            working, faulted = _working(s, line, robots)
            for fi in faulted:
                for si in working:
                    out.append((robot_place("f", line, fi), robot_place("f", line, si)))
        return out

    def reconfigure_apply(s: System, witness: Tuple[Place, Place]) -> System:
        (line, fi), (_, si) = _robot_of(witness[0]), _robot_of(witness[1])
        lines = lines_of(s.net)
        robots = lines[line]
        remaining = [i for i in robots if i != fi]
        tag = degraded_tag(len(remaining))
        used = {j for (t, j) in lines if t == tag}
        index = line[1] if line[1] not in used else min(set(range(len(used) + 1)) - used)
        new_line = (tag, index)
        m = s.marking
        tokens = {}
        for r, i in enumerate(remaining):
            for kind in "waf":
                k = m[robot_place(kind, line, i)]
                if i == si and kind != "f":
                    k += m[robot_place(kind, line, fi)]
                if k:
                    tokens[robot_place(kind, new_line, r)] = k
        kept, marking = _without_line(s, line)
        net = Net(kept + list(placed_line(tag, index, len(remaining), cfg).transitions))
        return System(net, marking + Bag(tokens))

    return [
        firing_rule(),
        Rule("fault", cfg.fault, fault_matches, fault_apply),
        Rule("reconfigure", cfg.reconfigure, reconfigure_matches, reconfigure_apply),
        Rule("disconnect", cfg.disconnect, disconnect_matches, disconnect_apply),
    ]


def items_in_system(s: System) -> int:
    """Raw items anywhere in the system (warehouse plus robots)."""
    return sum(k for p, k in s.marking.items() if p.label[0][0] in ("W", "w", "a"))


def line_count(s: System) -> int:
    return len(lines_of(s.net))


PRESETS = {"nplsys": build_nplsys}
