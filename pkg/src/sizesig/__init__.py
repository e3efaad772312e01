"""Event fingerprinting of smart devices from encrypted traffic metadata.

Directional packet sizes (``S176`` sent by the device, ``D1108`` received)
are mined per event with Apriori into signatures, which are then matched
against traces from other environments.
"""

from .detection import (
    DnsIndicatorConfig,
    EvalCounts,
    EvalReport,
    LabeledTrace,
    Metrics,
    dns_cleaning_indicator,
    evaluate_dataset,
    evaluate_signature,
    match_signature,
    metrics_of,
)
from .filtering import FilterConfig, FilterReport, apply_filter, protocol_summary, tokenize
from .ingest import (
    DeviceProfile,
    PacketRecord,
    PacketTrace,
    ProtocolClass,
    classify_protocol,
    parse_pcap,
    read_pcap,
    read_token_csv,
    resolve_direction,
    write_token_csv,
)
from .mining import (
    AssociationRule,
    CountStats,
    Itemset,
    MiningParams,
    Signature,
    Strictness,
    Transaction,
    apriori_frequent_itemsets,
    association_rules,
    derive_less_strict_signatures,
    derive_strict_signature,
    extract_prefix,
    maximal_itemsets,
    packet_count_stats,
    support_of,
    to_transaction,
    unique_packet_scan,
)
from .model import Direction, EventClass, SizeToken, tokens

__version__ = "0.1.0"
