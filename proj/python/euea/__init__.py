# Copyright 2026 The EUEA Harness Authors
# SPDX-License-Identifier: Apache-2.0
"""Python access to the harness core."""

from ._euea import (
    Error,
    build_dataset,
    evaluate_suite,
    expert_trajectory,
    generate_episode,
    initial_frame,
    iou,
    jaccard,
    normalized_std,
    parse_response,
    render_answer,
    reward_text,
    run_episode,
    sequence_order_score,
)

__all__ = [
    "Error",
    "build_dataset",
    "evaluate_suite",
    "expert_trajectory",
    "generate_episode",
    "initial_frame",
    "iou",
    "jaccard",
    "normalized_std",
    "parse_response",
    "render_answer",
    "reward_text",
    "run_episode",
    "sequence_order_score",
]
