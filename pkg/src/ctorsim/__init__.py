"""Trial-based simulator and exact analytics for bridge blocking in
single-circuit (otor), multi-circuit (mtor), and coded multi-circuit
(ctor) onion routing."""

from .analytics import (
    ResourceLimitError,
    SweepRow,
    binomial,
    enumerate_oracle,
    p_block_lnc,
    p_block_plain,
    sweep,
)
from .censor import (
    BridgePool,
    CampaignResult,
    CensorScenario,
    ConsistencyError,
    TrialOutcome,
    derive_rng,
    derive_seed,
    interrupted_by_rule,
    run_campaign,
    run_trial,
    select_bridges,
)
from .codec import (
    CELL_SIZE,
    CodedCell,
    CodeParams,
    Generation,
    GeneratorMatrix,
    UnrecoverableGeneration,
    build_generator,
    build_random_generator,
    decode_generation,
    encode_generation,
    reassemble_message,
    split_message,
)
from .onion import (
    Circuit,
    CircuitSet,
    LayeredCell,
    OnionRouter,
    RouterKind,
    RouterRegistry,
    TransferResult,
    Variant,
    build_circuits,
    peel_layer,
    run_transfer,
    transmit,
    validate_variant_params,
    wrap_layers,
)

__version__ = "0.1.0"
