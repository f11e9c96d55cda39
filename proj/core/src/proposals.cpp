#include "mhqa/proposals.hpp"

#include <algorithm>
#include <cmath>

#include "mhqa/error.hpp"

namespace mhqa::proposals {

using grounding::Matrix;

namespace {

void check_axis(const FrameAxis& axis, std::size_t frames) {
  if (!(axis.frames_per_second > 0.0) || !std::isfinite(axis.frames_per_second)) {
    throw validation_error("frames_per_second must be positive");
  }
  if (!std::isfinite(axis.clip_offset) || axis.clip_offset < 0.0) {
    throw validation_error("clip_offset must be finite and non-negative");
  }
  if (axis.num_frames != 0 && axis.num_frames != frames) {
    throw validation_error("axis has " + std::to_string(axis.num_frames) + " frames but input has " +
                           std::to_string(frames));
  }
}

void check_coef(double coef) {
  if (!(coef > 0.0 && coef <= 1.0)) throw validation_error("threshold coefficient must be in (0, 1]");
}

SpanSet threshold_runs(std::span<const double> scores, double coef, const FrameAxis& axis) {
  const double threshold = coef * *std::max_element(scores.begin(), scores.end());
  const double fps = axis.frames_per_second;
  std::vector<TimeSpan> runs;
  std::size_t i = 0;
  while (i < scores.size()) {
    if (!(scores[i] > threshold)) {
      ++i;
      continue;
    }
    std::size_t last = i;
    while (last + 1 < scores.size() && scores[last + 1] > threshold) ++last;
    runs.push_back({axis.clip_offset + static_cast<double>(i) / fps,
                    axis.clip_offset + static_cast<double>(last + 1) / fps});
    i = last + 1;
  }
  return normalize(runs);
}

}  // namespace

SpanSet saliency_to_spans(std::span<const double> scores, double coef, const FrameAxis& axis) {
  if (scores.empty()) throw validation_error("saliency vector is empty");
  check_coef(coef);
  check_axis(axis, scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw validation_error("saliency score " + std::to_string(i) + " is not finite");
    }
  }
  return threshold_runs(scores, coef, axis);
}

Matrix smooth_rows(const Matrix& similarity) {
  Matrix out(similarity.rows, similarity.cols);
  const std::size_t L = similarity.cols;
  for (std::size_t r = 0; r < similarity.rows; ++r) {
    const auto row = similarity.row(r);
    if (L == 1) {
      out(r, 0) = row[0];
      continue;
    }
    for (std::size_t j = 0; j < L; ++j) {
      const double left = row[j == 0 ? 0 : j - 1];
      const double right = row[j + 1 == L ? j : j + 1];
      out(r, j) = (left + row[j] + right) / 3.0;
    }
  }
  return out;
}

Matrix softmax_rows(const Matrix& m, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw validation_error("tau must be positive");
  Matrix out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    const double peak = *std::max_element(row.begin(), row.end()) / tau;
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      out(r, j) = std::exp(row[j] / tau - peak);
      sum += out(r, j);
    }
    for (std::size_t j = 0; j < m.cols; ++j) out(r, j) /= sum;
  }
  return out;
}

std::vector<SpanSet> per_row_spans(const Matrix& similarity, double tau, double coef,
                                   const FrameAxis& axis) {
  if (similarity.empty()) throw validation_error("similarity matrix is empty");
  check_coef(coef);
  check_axis(axis, similarity.cols);
  for (double v : similarity.data) {
    if (!std::isfinite(v)) throw validation_error("similarity matrix has a non-finite entry");
  }
  const Matrix probs = softmax_rows(smooth_rows(similarity), tau);
  std::vector<SpanSet> out;
  out.reserve(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) out.push_back(threshold_runs(probs.row(r), coef, axis));
  return out;
}

SpanSet similarity_to_spans(const Matrix& similarity, double tau, double coef,
                            const FrameAxis& axis) {
  std::vector<TimeSpan> all;
  for (const auto& set : per_row_spans(similarity, tau, coef, axis)) {
    all.insert(all.end(), set.begin(), set.end());
  }
  return normalize(all);
}

}  // namespace mhqa::proposals
