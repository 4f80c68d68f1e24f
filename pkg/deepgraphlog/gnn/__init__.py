"""
Graph neural runtime: labelled graphs, relational message passing with a
hand-derived backward pass, 1-WL refinement and parameter snapshots.
"""
from .config import GnnConfig, Readout
from .graph import LabelledGraph
from .network import ForwardTrace, backward, encode_features, forward
from .params import LayerParams, ParamTensors, ReadoutParams, init_params, zero_params
from .snapshot import load_snapshot, save_snapshot, snapshot_from_json, snapshot_to_json
from .wl import wl1_refine, wl_equivalent

__all__ = [
    "ForwardTrace",
    "GnnConfig",
    "LabelledGraph",
    "LayerParams",
    "ParamTensors",
    "Readout",
    "ReadoutParams",
    "backward",
    "encode_features",
    "forward",
    "init_params",
    "load_snapshot",
    "save_snapshot",
    "snapshot_from_json",
    "snapshot_to_json",
    "wl1_refine",
    "wl_equivalent",
    "zero_params",
]
