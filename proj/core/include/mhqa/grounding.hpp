#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mhqa::grounding {

inline constexpr std::string_view kInstanceSchema = "mhqa.grounding_instance/v1";
inline constexpr double kProbabilityClamp = 1e-7;
inline constexpr double kDefaultTau = 0.07;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  bool empty() const { return rows == 0 || cols == 0; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

void to_json(nlohmann::json& j, const Matrix& m);
void from_json(const nlohmann::json& j, Matrix& m);

/// Elementwise logistic function.
std::vector<double> saliency_scores(std::span<const double> logits);

/// Cosine similarity between every query row (K x C) and frame row (L x C).
/// Throws a validation error naming the first zero-norm row.
Matrix similarity_matrix(const Matrix& query_embed, const Matrix& frame_embed);

/// Mean binary cross entropy over L frames with scores clamped to
/// [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> scores, std::span<const double> labels);

/// d bce_loss / d scores. Zero where the clamp is active.
std::vector<double> bce_grad(std::span<const double> scores, std::span<const double> labels);

/// -(1/K) sum_i log( sum_j S_ij exp(s_ij/tau) / sum_j exp(s_ij/tau) ).
double milnce_loss(const Matrix& similarity, const Matrix& labels, double tau);

/// d milnce_loss / d similarity.
Matrix milnce_grad(const Matrix& similarity, const Matrix& labels, double tau);

double total_loss(double ce, double bce, double nce, double lambda_bce, double lambda_nce);

/// Frame-level numeric state of one grounding example.
struct GroundingInstance {
  std::vector<double> saliency_logits;   // L
  Matrix frame_embed;                    // L x C
  Matrix query_embed;                    // K x C
  std::optional<Matrix> similarity;      // K x L, used instead of the embeddings when set
  std::vector<double> saliency_labels;   // L, 0/1
  Matrix similarity_labels;              // K x L, 0/1
  double tau = kDefaultTau;
  double lambda_bce = 1.0;
  double lambda_nce = 1.0;
  double ce = 0.0;

  std::size_t frames() const { return saliency_logits.size(); }

  /// Supplied similarity matrix or the cosine matrix of the embeddings.
  Matrix similarity_or_cosine() const;

  /// Checks dimensions, label values and tau; throws a validation error with
  /// the offending field path.
  void validate() const;
};

nlohmann::json to_json(const GroundingInstance& inst);
GroundingInstance instance_from_json(const nlohmann::json& j);

struct LossBreakdown {
  double bce = 0.0;
  double nce = 0.0;
  double total = 0.0;
};

LossBreakdown evaluate(const GroundingInstance& inst);

struct GradCheckReport {
  bool pass = true;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // e.g. "bce[3]" or "nce[1,7]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Relative error used by grad_check: |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-2);

/// Compares bce_grad and milnce_grad against central finite differences.
GradCheckReport grad_check(const GroundingInstance& inst, double rel_tol, double step = 1e-5);

nlohmann::json to_json(const GradCheckReport& report);

}  // namespace mhqa::grounding
