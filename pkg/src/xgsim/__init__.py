"""Shot-level expected goals, xG-driven Poisson season simulation and
ranking-uncertainty inference for football leagues."""

__version__ = "0.1.0"

from .features import build_design_matrix, map_distance_zone, map_granular_zone, model_spec
from .glm import GlmFit, compare_models, fit, predict
from .ingest import extract_shots, load_events, load_matches, season_summary
from .inference import agreement_metrics, outcome_probabilities
from .simulate import simulate_season, simulate_second_half, standings
from .strength import match_intensities, match_xg, team_rates

__all__ = [
    "GlmFit", "agreement_metrics", "build_design_matrix", "compare_models",
    "extract_shots", "fit", "load_events", "load_matches", "map_distance_zone",
    "map_granular_zone", "match_intensities", "match_xg", "model_spec",
    "outcome_probabilities", "predict", "season_summary", "simulate_season",
    "simulate_second_half", "standings", "team_rates",
]
