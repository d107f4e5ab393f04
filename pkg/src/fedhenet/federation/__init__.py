from .codec import (
    decode_model,
    decode_update,
    encode_model,
    encode_update,
    model_payload_bytes,
    update_payload_bytes,
)
from .envelope import (
    ENVELOPE_OVERHEAD,
    MSG_ABORT,
    MSG_MODEL,
    MSG_UPDATE,
    Envelope,
    decode_envelope,
    encode_envelope,
)
from .protocol import (
    ClientPhase,
    ClientResult,
    CoordinatorPhase,
    RoundConfig,
    RoundSummary,
    client_run,
    coordinator_run,
    model_topic,
    update_topic,
)
from .transport import LoopbackBus, LoopbackTransport, MqttTransport, make_transport, topic_matches
