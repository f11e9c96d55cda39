#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mhqa/grounding.hpp"
#include "mhqa/spans.hpp"

namespace mhqa::proposals {

inline constexpr double kSaliencyCoef = 0.7;
inline constexpr double kSimilarityCoef = 0.10;

/// Maps frame i to [i/fps, (i+1)/fps) shifted by clip_offset seconds.
/// num_frames 0 means "take the length of the input".
struct FrameAxis {
  std::size_t num_frames = 0;
  double frames_per_second = 1.0;
  double clip_offset = 0.0;
};

/// Frames with score > coef * max(score) become spans; runs of consecutive
/// frames are merged into one span.
SpanSet saliency_to_spans(std::span<const double> scores, double coef, const FrameAxis& axis);

/// Size-3, stride-1 mean filter along each row with edge replication.
grounding::Matrix smooth_rows(const grounding::Matrix& similarity);

/// Row-wise softmax of row / tau.
grounding::Matrix softmax_rows(const grounding::Matrix& m, double tau);

/// Smooth, softmax and threshold each row separately. Entry i grounds the
/// i-th grounding-token pair.
std::vector<SpanSet> per_row_spans(const grounding::Matrix& similarity, double tau, double coef,
                                   const FrameAxis& axis);

/// Union of per_row_spans.
SpanSet similarity_to_spans(const grounding::Matrix& similarity, double tau, double coef,
                            const FrameAxis& axis);

}  // namespace mhqa::proposals
