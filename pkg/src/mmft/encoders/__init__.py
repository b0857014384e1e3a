"""The four parallel modality encoders (technical, text, macro, event graph)."""

from mmft.encoders.attention import causal_mask, cross_attention, multi_head_attention, sinusoid_positions
from mmft.encoders.conv import dilated_conv
from mmft.encoders.graph import (
    EventGraph,
    EventNode,
    event2vec,
    gat_attention,
    gat_layer,
    init_event,
)
from mmft.encoders.macro import encode_macro, init_macro, mf_lstm_step, recency_weight
from mmft.encoders.technical import N_FEATURES, encode_technical, init_technical
from mmft.encoders.text import NULL_TOKEN, encode_text, init_text, pad_tokens, token_id, tokenize
from mmft.encoders.wavelet import HaarBands, dwt_haar, haar_approx, idwt_haar

__all__ = [
    "EventGraph", "EventNode", "HaarBands", "N_FEATURES", "NULL_TOKEN", "causal_mask",
    "cross_attention", "dilated_conv", "dwt_haar", "encode_macro", "encode_technical",
    "encode_text", "event2vec", "gat_attention", "gat_layer", "haar_approx", "idwt_haar",
    "init_event", "init_macro", "init_technical", "init_text", "mf_lstm_step",
    "multi_head_attention", "pad_tokens", "recency_weight", "sinusoid_positions",
    "token_id", "tokenize",
]
