#include <gtest/gtest.h>

#include "mhqa/service.hpp"
#include "store_fixture.hpp"

using namespace mhqa;
using nlohmann::json;
namespace fs = std::filesystem;

class RouterTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = testkit::fresh_dir("router");
    store = std::make_unique<Store>(dir);
    testkit::seed_review_queue(*store);
    router = std::make_unique<service::Router>(*store);
  }
  void TearDown() override { fs::remove_all(dir); }

  service::Response get(const std::string& path, service::Query q = {}) {
    return router->handle("GET", path, q, "");
  }
  service::Response post(const std::string& path, const json& body) {
    return router->handle("POST", path, {}, body.dump());
  }
  static json accept(const std::string& id) {
    return {{"decision_id", id}, {"reviewer_id", "r1"}, {"action", "accept"}, {"category", "B"}};
  }

  fs::path dir;
  std::unique_ptr<Store> store;
  std::unique_ptr<service::Router> router;
};

TEST_F(RouterTest, ListFiltersByStatusAndClip) {
  auto r = get("/triplets", {{"status", "llm_filtered"}});
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["count"], 5);
  EXPECT_EQ(r.body["items"].size(), 5u);
  EXPECT_EQ(get("/triplets", {{"clip_id", "v_001"}}).body["count"], 2);
  EXPECT_EQ(get("/triplets", {{"status", "accepted"}}).body["count"], 0);

  const auto bad = get("/triplets", {{"status", "maybe"}});
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(bad.body["code"], "validation");
}

TEST_F(RouterTest, AcceptMovesTripletAndIsIdempotent) {
  auto r = post("/triplets/t0/decision", accept("d1"));
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["status"], "accepted");
  EXPECT_EQ(r.body["category"], "B");
  EXPECT_EQ(get("/triplets", {{"status", "accepted"}}).body["count"], 1);

  const auto again = post("/triplets/t0/decision", accept("d1"));
  EXPECT_EQ(again.status, 200);
  EXPECT_EQ(again.body, r.body);
  EXPECT_EQ(store->size("decisions"), 1u);

  auto changed = accept("d1");
  changed["category"] = "C";
  EXPECT_EQ(post("/triplets/t0/decision", changed).status, 409);
  // A new decision on a triplet that already left the queue.
  EXPECT_EQ(post("/triplets/t0/decision", accept("d2")).status, 409);
}

TEST_F(RouterTest, AdjustReplacesSpans) {
  json body = accept("d1");
  body["action"] = "adjust";
  body["adjusted_span_map"] = {{"<T1>", {{31, 36}}}, {"<T2>", {{91, 97}}}};
  const auto r = post("/triplets/t1/decision", body);
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["status"], "accepted");
  EXPECT_EQ(r.body["span_map"]["<T1>"], json::array({json::array({31, 36})}));
}

TEST_F(RouterTest, RejectRecordsStatus) {
  json body = accept("d9");
  body["action"] = "reject";
  body.erase("category");
  const auto r = post("/triplets/t2/decision", body);
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["status"], "rejected");
}

TEST_F(RouterTest, ValidationErrorsCarryFieldPaths) {
  json body = accept("d1");
  body["action"] = "adjust";
  body["adjusted_span_map"] = {{"<T1>", {{36, 31}}}, {"<T2>", {{91, 97}}}};
  auto r = post("/triplets/t1/decision", body);
  EXPECT_EQ(r.status, 422);
  ASSERT_FALSE(r.body["errors"].empty());
  EXPECT_EQ(r.body["errors"][0]["field"], "adjusted_span_map.<T1>[0]");
  EXPECT_EQ(get("/triplets/t1").body["status"], "llm_filtered");

  body = accept("d1");
  body["category"] = "Z";
  r = post("/triplets/t1/decision", body);
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["errors"][0]["field"], "category");

  body = accept("d1");
  body["triplet_id"] = "t2";
  EXPECT_EQ(post("/triplets/t1/decision", body).body["errors"][0]["field"], "triplet_id");

  r = router->handle("POST", "/triplets/t1/decision", {}, "{not json");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["type"], "about:blank#validation");
}

TEST_F(RouterTest, NotFoundAndMethodErrors) {
  EXPECT_EQ(post("/triplets/nope/decision", accept("d1")).status, 404);
  EXPECT_EQ(get("/triplets/nope").status, 404);
  EXPECT_EQ(get("/clips/nope").status, 404);
  EXPECT_EQ(get("/metrics/run/nope").status, 404);
  EXPECT_EQ(get("/elsewhere").status, 404);
  EXPECT_EQ(router->handle("DELETE", "/triplets/t0", {}, "").status, 405);
  EXPECT_EQ(router->handle("GET", "/triplets/t0/decision", {}, "").status, 405);
}

TEST_F(RouterTest, BearerTokenGuardsAllButHealth) {
  service::Router guarded(*store, "s3cret");
  EXPECT_EQ(guarded.handle("GET", "/health", {}, "").status, 200);
  EXPECT_EQ(guarded.handle("GET", "/triplets", {}, "").status, 401);
  EXPECT_EQ(guarded.handle("GET", "/triplets", {}, "", "Bearer wrong").status, 401);
  EXPECT_EQ(guarded.handle("GET", "/triplets", {}, "", "Bearer s3cret").status, 200);
}

TEST_F(RouterTest, StatusAndRunMetrics) {
  store->upsert("runs", "r1", {{"run_id", "r1"}, {"kind", "eval"}, {"metrics", {{"mean_iou", 50.0}}}});
  router->report_progress("generate", {{"done", 3}});
  const auto s = get("/status");
  EXPECT_EQ(s.body["collections"]["triplets"], 5);
  EXPECT_EQ(s.body["progress"].back()["stage"], "generate");
  EXPECT_EQ(get("/metrics/run/r1").body["metrics"]["mean_iou"], 50.0);
}
