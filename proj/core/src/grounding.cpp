#include "mhqa/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mhqa/error.hpp"

namespace mhqa::grounding {

using nlohmann::json;

void to_json(json& j, const Matrix& m) {
  j = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    j.push_back(std::vector<double>(row.begin(), row.end()));
  }
}

void from_json(const json& j, Matrix& m) {
  if (!j.is_array()) throw validation_error("matrix must be an array of rows");
  m = Matrix{};
  m.rows = j.size();
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (r == 0) {
      m.cols = row.size();
    } else if (row.size() != m.cols) {
      throw validation_error("matrix row " + std::to_string(r) + " has " +
                                 std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(m.cols),
                             {{"row", r}});
    }
    m.data.insert(m.data.end(), row.begin(), row.end());
  }
}

std::vector<double> saliency_scores(std::span<const double> logits) {
  std::vector<double> out;
  out.reserve(logits.size());
  for (double x : logits) {
    if (x >= 0.0) {
      out.push_back(1.0 / (1.0 + std::exp(-x)));
    } else {
      const double e = std::exp(x);
      out.push_back(e / (1.0 + e));
    }
  }
  return out;
}

namespace {

double row_norm(std::span<const double> row) {
  return std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
}

void check_labels(std::span<const double> labels, const std::string& field) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw validation_error(field + "[" + std::to_string(i) + "] is not 0 or 1",
                             {{"field", field}, {"index", i}});
    }
  }
}

double clamp_prob(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

void check_nce_inputs(const Matrix& sim, const Matrix& labels, double tau) {
  if (sim.empty()) throw validation_error("similarity matrix is empty");
  if (sim.rows != labels.rows || sim.cols != labels.cols) {
    throw validation_error("similarity is " + std::to_string(sim.rows) + "x" +
                           std::to_string(sim.cols) + " but labels are " +
                           std::to_string(labels.rows) + "x" + std::to_string(labels.cols));
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw validation_error("tau must be positive");
  check_labels(labels.data, "similarity_labels");
  for (std::size_t i = 0; i < labels.rows; ++i) {
    const auto row = labels.row(i);
    if (std::find(row.begin(), row.end(), 1.0) == row.end()) {
      throw validation_error("similarity label row " + std::to_string(i) + " has no positive",
                             {{"row", i}});
    }
  }
}

// Log-sum-exp of row/tau over all entries and over positive entries.
std::pair<double, double> row_lse(std::span<const double> row, std::span<const double> labels,
                                  double tau) {
  double max_all = -INFINITY;
  for (double v : row) max_all = std::max(max_all, v / tau);
  double sum_all = 0.0, sum_pos = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double e = std::exp(row[j] / tau - max_all);
    sum_all += e;
    if (labels[j] == 1.0) sum_pos += e;
  }
  return {max_all + std::log(sum_all), max_all + std::log(sum_pos)};
}

}  // namespace

Matrix similarity_matrix(const Matrix& query_embed, const Matrix& frame_embed) {
  if (query_embed.cols != frame_embed.cols) {
    throw validation_error("query and frame embeddings differ in width: " +
                           std::to_string(query_embed.cols) + " vs " +
                           std::to_string(frame_embed.cols));
  }
  std::vector<double> qn(query_embed.rows), fn(frame_embed.rows);
  for (std::size_t i = 0; i < query_embed.rows; ++i) {
    qn[i] = row_norm(query_embed.row(i));
    if (qn[i] == 0.0) {
      throw validation_error("query_embed row " + std::to_string(i) + " has zero norm",
                             {{"field", "query_embed"}, {"row", i}});
    }
  }
  for (std::size_t j = 0; j < frame_embed.rows; ++j) {
    fn[j] = row_norm(frame_embed.row(j));
    if (fn[j] == 0.0) {
      throw validation_error("frame_embed row " + std::to_string(j) + " has zero norm",
                             {{"field", "frame_embed"}, {"row", j}});
    }
  }
  Matrix out(query_embed.rows, frame_embed.rows);
  for (std::size_t i = 0; i < query_embed.rows; ++i) {
    const auto q = query_embed.row(i);
    for (std::size_t j = 0; j < frame_embed.rows; ++j) {
      const auto f = frame_embed.row(j);
      const double c = std::inner_product(q.begin(), q.end(), f.begin(), 0.0) / (qn[i] * fn[j]);
      out(i, j) = std::clamp(c, -1.0, 1.0);
    }
  }
  return out;
}

double bce_loss(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw validation_error("bce: " + std::to_string(scores.size()) + " scores but " +
                           std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw validation_error("bce: empty input");
  check_labels(labels, "saliency_labels");
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = clamp_prob(scores[i]);
    sum += -labels[i] * std::log(p) - (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(scores.size());
}

std::vector<double> bce_grad(std::span<const double> scores, std::span<const double> labels) {
  bce_loss(scores, labels);  // validates
  const double n = static_cast<double>(scores.size());
  std::vector<double> g(scores.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = scores[i];
    if (p <= kProbabilityClamp || p >= 1.0 - kProbabilityClamp) continue;
    g[i] = (-labels[i] / p + (1.0 - labels[i]) / (1.0 - p)) / n;
  }
  return g;
}

double milnce_loss(const Matrix& similarity, const Matrix& labels, double tau) {
  check_nce_inputs(similarity, labels, tau);
  double sum = 0.0;
  for (std::size_t i = 0; i < similarity.rows; ++i) {
    const auto [all, pos] = row_lse(similarity.row(i), labels.row(i), tau);
    sum += all - pos;
  }
  return sum / static_cast<double>(similarity.rows);
}

Matrix milnce_grad(const Matrix& similarity, const Matrix& labels, double tau) {
  check_nce_inputs(similarity, labels, tau);
  Matrix g(similarity.rows, similarity.cols);
  const double scale = 1.0 / (static_cast<double>(similarity.rows) * tau);
  for (std::size_t i = 0; i < similarity.rows; ++i) {
    const auto row = similarity.row(i);
    const auto lab = labels.row(i);
    const auto [all, pos] = row_lse(row, lab, tau);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double soft = std::exp(row[j] / tau - all);
      const double posw = lab[j] == 1.0 ? std::exp(row[j] / tau - pos) : 0.0;
      g(i, j) = scale * (soft - posw);
    }
  }
  return g;
}

double total_loss(double ce, double bce, double nce, double lambda_bce, double lambda_nce) {
  return ce + lambda_bce * bce + lambda_nce * nce;
}

Matrix GroundingInstance::similarity_or_cosine() const {
  if (similarity) return *similarity;
  return similarity_matrix(query_embed, frame_embed);
}

void GroundingInstance::validate() const {
  const std::size_t L = frames();
  if (L == 0) throw validation_error("saliency_logits is empty", {{"field", "saliency_logits"}});
  for (std::size_t i = 0; i < L; ++i) {
    if (!std::isfinite(saliency_logits[i])) {
      throw validation_error("saliency_logits[" + std::to_string(i) + "] is not finite",
                             {{"field", "saliency_logits"}, {"index", i}});
    }
  }
  if (saliency_labels.size() != L) {
    throw validation_error("saliency_labels has " + std::to_string(saliency_labels.size()) +
                               " entries, expected " + std::to_string(L),
                           {{"field", "saliency_labels"}});
  }
  check_labels(saliency_labels, "saliency_labels");
  std::size_t K = similarity_labels.rows;
  if (similarity) {
    if (similarity->cols != L || similarity->rows != K) {
      throw validation_error("similarity must be K x L", {{"field", "similarity"}});
    }
  } else {
    if (frame_embed.rows != L) {
      throw validation_error("frame_embed must have one row per frame", {{"field", "frame_embed"}});
    }
    if (query_embed.rows != K) {
      throw validation_error("query_embed must have one row per label row",
                             {{"field", "query_embed"}});
    }
  }
  if (similarity_labels.cols != L) {
    throw validation_error("similarity_labels must be K x L", {{"field", "similarity_labels"}});
  }
  if (!(tau > 0.0)) throw validation_error("tau must be positive", {{"field", "tau"}});
  if (lambda_bce < 0.0 || lambda_nce < 0.0) {
    throw validation_error("loss weights must be non-negative", {{"field", "lambda"}});
  }
}

json to_json(const GroundingInstance& inst) {
  json j{{"schema", kInstanceSchema},
         {"saliency_logits", inst.saliency_logits},
         {"saliency_labels", inst.saliency_labels},
         {"similarity_labels", inst.similarity_labels},
         {"tau", inst.tau},
         {"lambda_bce", inst.lambda_bce},
         {"lambda_nce", inst.lambda_nce},
         {"ce", inst.ce}};
  if (inst.similarity) {
    j["similarity"] = *inst.similarity;
  } else {
    j["frame_embed"] = inst.frame_embed;
    j["query_embed"] = inst.query_embed;
  }
  return j;
}

GroundingInstance instance_from_json(const json& j) {
  if (!j.is_object()) throw validation_error("grounding instance must be an object");
  if (j.value("schema", std::string(kInstanceSchema)) != kInstanceSchema) {
    throw validation_error("unsupported grounding instance schema '" +
                               j.at("schema").get<std::string>() + "'",
                           {{"field", "schema"}});
  }
  GroundingInstance inst;
  try {
    inst.saliency_logits = j.at("saliency_logits").get<std::vector<double>>();
    inst.saliency_labels = j.value("saliency_labels", std::vector<double>(inst.frames(), 0.0));
    if (j.contains("similarity")) inst.similarity = j.at("similarity").get<Matrix>();
    if (j.contains("frame_embed")) inst.frame_embed = j.at("frame_embed").get<Matrix>();
    if (j.contains("query_embed")) inst.query_embed = j.at("query_embed").get<Matrix>();
    if (j.contains("similarity_labels")) {
      inst.similarity_labels = j.at("similarity_labels").get<Matrix>();
    } else {
      const std::size_t K = inst.similarity ? inst.similarity->rows : inst.query_embed.rows;
      inst.similarity_labels = Matrix(K, inst.frames(), 1.0);
    }
    inst.tau = j.value("tau", kDefaultTau);
    inst.lambda_bce = j.value("lambda_bce", 1.0);
    inst.lambda_nce = j.value("lambda_nce", 1.0);
    inst.ce = j.value("ce", 0.0);
  } catch (const json::exception& e) {
    throw validation_error(std::string("malformed grounding instance: ") + e.what());
  }
  inst.validate();
  return inst;
}

LossBreakdown evaluate(const GroundingInstance& inst) {
  inst.validate();
  LossBreakdown out;
  out.bce = bce_loss(saliency_scores(inst.saliency_logits), inst.saliency_labels);
  out.nce = milnce_loss(inst.similarity_or_cosine(), inst.similarity_labels, inst.tau);
  out.total = total_loss(inst.ce, out.bce, out.nce, inst.lambda_bce, inst.lambda_nce);
  return out;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const GroundingInstance& inst, double rel_tol, double step) {
  inst.validate();
  GradCheckReport report;
  const auto record = [&](const std::string& name, double a, double n) {
    ++report.checked;
    const double err = relative_error(a, n);
    if (report.worst.empty() || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst = name;
      report.worst_analytic = a;
      report.worst_numeric = n;
    }
  };

  std::vector<double> scores = saliency_scores(inst.saliency_logits);
  const auto g_bce = bce_grad(scores, inst.saliency_labels);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double keep = scores[i];
    scores[i] = keep + step;
    const double up = bce_loss(scores, inst.saliency_labels);
    scores[i] = keep - step;
    const double down = bce_loss(scores, inst.saliency_labels);
    scores[i] = keep;
    record("bce[" + std::to_string(i) + "]", g_bce[i], (up - down) / (2.0 * step));
  }

  Matrix sim = inst.similarity_or_cosine();
  const Matrix g_nce = milnce_grad(sim, inst.similarity_labels, inst.tau);
  for (std::size_t r = 0; r < sim.rows; ++r) {
    for (std::size_t c = 0; c < sim.cols; ++c) {
      const double keep = sim(r, c);
      sim(r, c) = keep + step;
      const double up = milnce_loss(sim, inst.similarity_labels, inst.tau);
      sim(r, c) = keep - step;
      const double down = milnce_loss(sim, inst.similarity_labels, inst.tau);
      sim(r, c) = keep;
      record("nce[" + std::to_string(r) + "," + std::to_string(c) + "]", g_nce(r, c),
             (up - down) / (2.0 * step));
    }
  }
  report.pass = report.max_rel_error <= rel_tol;
  return report;
}

json to_json(const GradCheckReport& r) {
  return json{{"pass", r.pass},
              {"checked", r.checked},
              {"max_rel_error", r.max_rel_error},
              {"worst", r.worst},
              {"worst_analytic", r.worst_analytic},
              {"worst_numeric", r.worst_numeric}};
}

}  // namespace mhqa::grounding
