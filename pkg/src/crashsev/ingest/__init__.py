"""CSV parsing, cleaning, column store and train/test splitting."""

from .clean import CleaningReport, clean_dataset
from .records import (
    DEFAULT_SCHEMA,
    POI_FLAGS,
    CrashRecord,
    DropDecision,
    RawRecord,
    Schema,
    iter_csv,
    parse_record,
    to_raw,
)
from .split import SplitSpec, read_split, stratified_split, write_split
from .store import (
    PartitionInfo,
    list_partitions,
    partition_filter,
    read_partition,
    read_store,
    write_store,
)

__all__ = [
    "DEFAULT_SCHEMA",
    "POI_FLAGS",
    "CleaningReport",
    "CrashRecord",
    "DropDecision",
    "PartitionInfo",
    "RawRecord",
    "Schema",
    "SplitSpec",
    "clean_dataset",
    "iter_csv",
    "list_partitions",
    "parse_record",
    "partition_filter",
    "read_partition",
    "read_split",
    "read_store",
    "stratified_split",
    "to_raw",
    "write_split",
    "write_store",
]
