"""
One-move planning in a blocks world: can a single legal move produce a
stack of at least two blocks with a glass block on top?

Variants: a single graph-level network; a move network chained into a
tower network with every predicted move passed on; and the full pipeline
where only moves onto a metal or plastic block reach the tower network.
The move network sees the stacks but not the materials, so only the
constraint or the tower network can tell a move onto glass apart.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import DataError
from ..training.trainer import PlanCache
from .harness import Instance, Variant, draw_seed, model_directives, probabilities, seed_streams, train_variant
from .metrics import MetricReport, evaluate
from .spec import DatasetSpec

MATERIALS = ("metal", "plastic", "glass")
SOLID = ("metal", "plastic")
BLOCK_NAMES = "abcdefgh"
BLOCK_GAMMA = "metal/1,plastic/1,glass/1,clear/1,on/2"
# the move network sees geometry only
MOVE_GAMMA = "clear/1,on/2"
MAX_ATTEMPTS = 10_000

Move = Tuple[str, str]


@dataclass(frozen=True)
class BlocksWorld:
    world_id: str
    materials: Tuple[Tuple[str, str], ...]
    stacks: Tuple[Tuple[str, ...], ...]  # each listed bottom to top

    @property
    def material(self) -> Dict[str, str]:
        return dict(self.materials)

    @property
    def clear(self) -> List[str]:
        return sorted(stack[-1] for stack in self.stacks)

    def on(self) -> List[Tuple[str, str]]:
        return [(stack[i + 1], stack[i]) for stack in self.stacks for i in range(len(stack) - 1)]

    def moves(self) -> List[Move]:
        tops = self.clear
        return [(x, y) for x in tops for y in tops if x != y]

    def legal_moves(self) -> List[Move]:
        return [(x, y) for x, y in self.moves() if self.material[y] != "glass"]

    def after(self, move: Move) -> Tuple[Tuple[str, ...], ...]:
        x, y = move
        stacks = []
        for stack in self.stacks:
            if stack[-1] == x:
                stack = stack[:-1]
            if stack and stack[-1] == y:
                stack = stack + (x,)
            if stack:
                stacks.append(stack)
        return tuple(stacks)

    def has_tower(self, stacks: Optional[Tuple[Tuple[str, ...], ...]] = None) -> bool:
        stacks = self.stacks if stacks is None else stacks
        return any(len(s) >= 2 and self.material[s[-1]] == "glass" for s in stacks)

    @property
    def label(self) -> bool:
        """Exhaustive one-move search over the legal moves."""
        return any(self.has_tower(self.after(m)) for m in self.legal_moves())


def _partition(names: str, stacks: int, rng: np.random.Generator) -> List[Tuple[str, ...]]:
    order = [names[int(i)] for i in rng.permutation(len(names))]
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, len(names)), size=stacks - 1, replace=False))
    bounds = [0, *cuts, len(names)]
    return [tuple(order[s:e]) for s, e in zip(bounds, bounds[1:])]


def random_world(world_id: str, rng: np.random.Generator, max_blocks: int = 5, max_stacks: int = 3) -> BlocksWorld:
    """
    2..max_blocks blocks in at most ``max_stacks`` stacks. Glass only ever
    sits at the bottom of a stack or alone, so no tower stands before the move.
    """
    if max_blocks < 2 or max_blocks > len(BLOCK_NAMES):
        raise DataError(f"max_blocks must be between 2 and {len(BLOCK_NAMES)}, got {max_blocks}")
    blocks = int(rng.integers(2, max_blocks + 1))
    stacks = _partition(BLOCK_NAMES[:blocks], int(rng.integers(1, min(max_stacks, blocks) + 1)), rng)
    materials: Dict[str, str] = {}
    for stack in stacks:
        materials[stack[0]] = MATERIALS[int(rng.integers(len(MATERIALS)))]
        for block in stack[1:]:
            materials[block] = SOLID[int(rng.integers(len(SOLID)))]
    return BlocksWorld(world_id, tuple(sorted(materials.items())), tuple(stacks))


def blocked_world(world_id: str, rng: np.random.Generator, max_blocks: int = 3) -> BlocksWorld:
    """Lone glass blocks only: every move lands on glass."""
    names = BLOCK_NAMES[: int(rng.integers(2, max_blocks + 1))]
    return BlocksWorld(world_id, tuple((b, "glass") for b in names), tuple((b,) for b in names))


def balanced_worlds(
    prefix: str,
    count: int,
    rng: np.random.Generator,
    max_blocks: int = 5,
    blocked_share: float = 0.0,
) -> List[BlocksWorld]:
    """
    Alternating positive and negative worlds by rejection sampling. A
    ``blocked_share`` of the negatives are worlds without a legal move.
    """
    worlds = []
    for i in range(count):
        world_id = f"{prefix}-{i}"
        wanted = i % 2 == 0
        if not wanted and rng.random() < blocked_share:
            worlds.append(blocked_world(world_id, rng, min(3, max_blocks)))
            continue
        for _ in range(MAX_ATTEMPTS):
            world = random_world(world_id, rng, max_blocks)
            if world.label == wanted:
                worlds.append(world)
                break
        else:
            raise DataError(f"could not generate a {'positive' if wanted else 'negative'} blocks world")
    return worlds


def _facts(world: BlocksWorld) -> List[str]:
    lines = [f"{m}({b})." for b, m in world.materials]
    lines += [f"on({x},{y})." for x, y in world.on()]
    lines += [f"clear({b})." for b in world.clear]
    lines += [f"candidate({x},{y})." for x, y in world.moves()]
    return lines


def pipeline_program(world: BlocksWorld, spec: DatasetSpec, constrained: bool = True) -> str:
    lines = [model_directives(spec, "m_move", "m_tower"), *_facts(world)]
    lines.append(f"gnn(m_move,[{MOVE_GAMMA}],[X,Y])::move(X,Y) :- candidate(X,Y).")
    if constrained:
        lines += [
            "after_move(X,Y) :- move(X,Y), metal(Y).",
            "after_move(X,Y) :- move(X,Y), plastic(Y).",
        ]
    else:
        lines.append("after_move(X,Y) :- move(X,Y).")
    lines += [
        f"gnn(m_tower,[{BLOCK_GAMMA},after_move/2])::tower.",
        "valid_tower :- after_move(X,Y), tower.",
    ]
    return "\n".join(lines) + "\n"


def two_gnn_program(world: BlocksWorld, spec: DatasetSpec) -> str:
    return pipeline_program(world, spec, constrained=False)


def single_program(world: BlocksWorld, spec: DatasetSpec) -> str:
    lines = [model_directives(spec, "m_single"), *_facts(world)]
    lines.append(f"gnn(m_single,[{BLOCK_GAMMA}])::valid_tower.")
    return "\n".join(lines) + "\n"


PROGRAMS = {"pipeline": pipeline_program, "two_gnn": two_gnn_program, "single_gnn": single_program}


@dataclass
class E4Dataset:
    train: List[BlocksWorld]
    test: List[BlocksWorld]
    variants: List[Variant]


def _instance(kind: str, world: BlocksWorld, spec: DatasetSpec) -> Instance:
    inst = Instance.from_source(f"{kind}-{world.world_id}", PROGRAMS[kind](world, spec))
    inst.supervise("valid_tower", 1.0 if world.label else 0.0)
    return inst


def gen_e4(spec: DatasetSpec, rng: Optional[np.random.Generator] = None) -> E4Dataset:
    rng = rng if rng is not None else seed_streams(spec.seed, 1)[0]
    shape = {
        "max_blocks": int(spec.param("max_blocks", 5)),
        "blocked_share": float(spec.param("blocked_share", 0.0)),
    }
    train = balanced_worlds("train", spec.size["train"], rng, **shape)
    test = balanced_worlds("test", spec.size["test"], rng, **shape)
    variants = [
        Variant(kind, [_instance(kind, w, spec) for w in train], [_instance(kind, w, spec) for w in test])
        for kind in PROGRAMS
    ]
    return E4Dataset(train, test, variants)


def run(spec: DatasetSpec, run_id: str) -> tuple[MetricReport, List[Variant]]:
    data_rng, train_rng = seed_streams(spec.seed, 2)
    data = gen_e4(spec, data_rng)
    train_seed = draw_seed(train_rng)
    truth = [int(w.label) for w in data.test]
    report = MetricReport()

    for variant in data.variants:
        store, trained = train_variant(variant, spec, train_seed, run_id)
        plans = PlanCache()
        scores = [probabilities(inst, ["valid_tower"], store, plans)["valid_tower"] for inst in variant.test]
        report.update(evaluate(scores, truth), prefix=f"{variant.name}/")
        report.update({"final_loss": trained.final_loss}, prefix=f"{variant.name}/")
        if variant.name == "pipeline":
            blocked = [s for s, w in zip(scores, data.test) if not w.legal_moves()]
            report.update(
                {"constraint_violations": float(sum(s > 0.0 for s in blocked)), "blocked_instances": float(len(blocked))},
                prefix="pipeline/",
            )
    return report, data.variants
