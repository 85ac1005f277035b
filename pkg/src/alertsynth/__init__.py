"""alertsynth: streaming synthesis of attack models from IDS alerts.

Alerts are parsed from Suricata-style JSON lines, encoded as categorical
actions, grouped into per-stream episodes, and summarized online into a
small evolving set of statistical attack models.
"""

from .action_space import (Action, ConfigError, MappingTables, WeightConfig,
                           bin_elapsed, load_mappings, map_ais, map_service)
from .aggregation import Aggregate, build_aggregate, make_segmenter
from .ingest import (Alert, IngestStats, MissingField, ParseError, SourceError,
                     SourceSpec, open_source, parse_alert_line)
from .stream_tracker import StreamState, StreamTracker, classify_direction
from .synthesis import (Admission, AttackModel, ModelSet, SynthConfig,
                        admission_bound, create_model, cross_entropy, decay,
                        effective_evidence, jsd, jsd_component, kl_divergence,
                        model_distance, smoothed_pmf, update_model)
from .synth_harness import (BehaviorSpec, ScoringError, generate_scenario,
                            score_recovery)
from .export_cli import Engine, RunConfig, run

__version__ = "0.1.0"

__all__ = [
    "Action", "Admission", "Aggregate", "Alert", "AttackModel", "BehaviorSpec",
    "ConfigError", "Engine", "IngestStats", "MappingTables", "MissingField",
    "ModelSet", "ParseError", "RunConfig", "ScoringError", "SourceError",
    "SourceSpec", "StreamState", "StreamTracker", "SynthConfig", "WeightConfig",
    "admission_bound", "bin_elapsed", "build_aggregate", "classify_direction",
    "create_model", "cross_entropy", "decay", "effective_evidence",
    "generate_scenario", "jsd", "jsd_component", "kl_divergence",
    "load_mappings", "make_segmenter", "map_ais", "map_service",
    "model_distance", "open_source", "parse_alert_line", "run",
    "score_recovery", "smoothed_pmf", "update_model",
]
