"""Counterfactual explanations for black-box classifiers as minimal knowledge-graph edits."""

from .costs import TOP_ATOM, Atom, CostModel, KindMismatchError, concept, exists, parse_overrides, role
from .explain import Explanation, ImportanceReport, collapse_to_abox_edits, counterfactual, global_importance
from .ged import GedResult, exact_ged
from .kb import (
    ExplanationDataset,
    build_abox_graph,
    build_tbox_graph,
    exemplar_component,
    exemplar_components,
    load_dataset,
    parse_dataset,
    validate_dataset,
)
from .matching import InfeasibleMatchingError, Matching, min_weight_full_match
from .rollup import ConceptSetDescription, LabelSet, roll_up
from .setdist import EditOp, EditPath, apply_edit_path, description_edit_distance, label_edit_distance
from .store import DistanceCache, PreprocessOptions, load_cache, nearest_by_class, preprocess, save_cache

__version__ = "0.1.0"
