#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "mhqa/config.hpp"
#include "mhqa/error.hpp"
#include "store_fixture.hpp"

using namespace mhqa;
namespace fs = std::filesystem;

namespace {

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    return e.details().value("field", "");
  }
  ADD_FAILURE() << "no error";
  return {};
}

struct EnvGuard {
  std::string name;
  EnvGuard(std::string n, const char* v) : name(std::move(n)) { ::setenv(name.c_str(), v, 1); }
  ~EnvGuard() { ::unsetenv(name.c_str()); }
};

}  // namespace

TEST(Config, DefaultsMatchRules) {
  RunConfig c;
  EXPECT_EQ(c.clip.min_narrations, 30u);
  EXPECT_EQ(c.clip.max_narrations, 60u);
  EXPECT_DOUBLE_EQ(c.clip.min_extent, 150.0);
  EXPECT_EQ(c.mining.t_min, 2u);
  EXPECT_EQ(c.mining.t_max, 5u);
  EXPECT_DOUBLE_EQ(c.mining.min_extent, 10.0);
  EXPECT_DOUBLE_EQ(c.saliency_coef, 0.7);
  EXPECT_DOUBLE_EQ(c.similarity_coef, 0.1);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, PrecedenceEnvFileFlags) {
  const auto dir = testkit::fresh_dir("config");
  fs::create_directories(dir);
  const auto file = dir / "run.conf";
  std::ofstream(file) << "# comment\n[mine]\nt_max = 7\nmin_extent = 12.5  # seconds\n"
                      << "[llm]\nmodel = from-file\n";
  EnvGuard a("MHQA_MINE_T_MAX", "9");
  EnvGuard b("MHQA_LLM_PARALLELISM", "3");
  EnvGuard c("MHQA_LLM_MODEL", "from-env");

  const auto cfg = load_config(file.string(), {"llm.model=from-flag"});
  EXPECT_EQ(cfg.mining.t_max, 7u);          // file beats env
  EXPECT_EQ(cfg.parallelism, 3u);           // env beats default
  EXPECT_DOUBLE_EQ(cfg.mining.min_extent, 12.5);
  EXPECT_EQ(cfg.llm_model, "from-flag");    // flag beats file
  EXPECT_EQ(load_config("", {}, false).mining.t_max, 5u);
  fs::remove_all(dir);
}

TEST(Config, JsonFileEquivalentToText) {
  const auto dir = testkit::fresh_dir("config_json");
  fs::create_directories(dir);
  std::ofstream(dir / "a.json") << R"({"schema_version": 1, "filter": {"min_narrations": 20},
                                      "eval": {"iou_thresholds": [0.3, 0.5]}})";
  std::ofstream(dir / "a.ini") << "[filter]\nmin_narrations = 20\n[eval]\niou_thresholds = 0.3,0.5\n";
  const auto a = load_config((dir / "a.json").string(), {}, false);
  const auto b = load_config((dir / "a.ini").string(), {}, false);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.clip.min_narrations, 20u);
  EXPECT_EQ(a.iou_thresholds, (std::vector<double>{0.3, 0.5}));
  fs::remove_all(dir);
}

TEST(Config, BadValuesNameTheirKey) {
  RunConfig c;
  EXPECT_EQ(field_of([&] { c.set("mine.nope", "1"); }), "mine.nope");
  EXPECT_EQ(field_of([&] { c.set("mine.t_min", "-1"); }), "mine.t_min");
  EXPECT_EQ(field_of([&] { c.set("proposals.saliency_coef", "abc"); }), "proposals.saliency_coef");
  EXPECT_EQ(field_of([&] { c.set("llm.mode", "carrier-pigeon"); }), "llm.mode");
  EXPECT_EQ(field_of([&] { c.set("eval.iou_thresholds", "1.5"); }), "eval.iou_thresholds");
  EXPECT_EQ(field_of([&] { c.apply_json({{"llm", {{"json_mode", "yes"}}}}); }), "llm.json_mode");
  EXPECT_EQ(field_of([&] { load_config("", {"mine.t_min=6"}, false); }), "mine.t_min");
}

TEST(Config, DefaultTextRoundTrips) {
  RunConfig parsed;
  parsed.apply_text(RunConfig::default_text());
  EXPECT_EQ(parsed.to_json(), RunConfig{}.to_json());
  for (const auto& key : RunConfig::keys()) {
    EXPECT_NE(RunConfig::default_text().find(key.substr(key.find('.') + 1)), std::string::npos)
        << key;
  }
}
