"""Distributed runtime: sharding, worker/central state transitions, the
binary wire protocol, and the simulated and socket transports."""

from .protocol import (
    HANDSHAKE_TAG,
    DecodeError,
    MessageTag,
    ProtocolMessage,
    decode_handshake,
    decode_message,
    encode_handshake,
    encode_message,
)
from .runtime import (
    CentralState,
    ProtocolError,
    Shard,
    WorkerState,
    adopt_global_state,
    central_async_apply,
    central_async_state,
    central_sync_aggregate,
    central_sync_state,
    init_worker,
    shard_dataset,
    worker_async_epoch,
    worker_sync_epoch,
)
from .engine import (
    DistributedConfig,
    DistributedResult,
    EpochSnapshot,
    run_distributed,
)

__all__ = [
    "HANDSHAKE_TAG",
    "DecodeError",
    "MessageTag",
    "ProtocolMessage",
    "decode_handshake",
    "decode_message",
    "encode_handshake",
    "encode_message",
    "CentralState",
    "ProtocolError",
    "Shard",
    "WorkerState",
    "adopt_global_state",
    "central_async_apply",
    "central_async_state",
    "central_sync_aggregate",
    "central_sync_state",
    "init_worker",
    "shard_dataset",
    "worker_async_epoch",
    "worker_sync_epoch",
    "DistributedConfig",
    "DistributedResult",
    "EpochSnapshot",
    "run_distributed",
]
