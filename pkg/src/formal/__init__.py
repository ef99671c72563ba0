from src.formal.delta import apply_delta, compute_delta
from src.formal.grammar import (
    parse_acts,
    parse_delta,
    parse_knowledge,
    parse_state,
    serialize_acts,
    serialize_delta,
    serialize_knowledge,
    serialize_state,
)
from src.formal.types import (
    NO_RESULT,
    AgentAct,
    AgentActSet,
    BeliefDelta,
    BeliefState,
    DeltaFrame,
    DomainIntent,
    FrameOp,
    KnowledgeBlock,
    Relation,
    SlotConstraint,
)
