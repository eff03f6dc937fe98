#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include <httplib.h>

#include "causex/error.hpp"
#include "causex/service.hpp"

using namespace causex;
using namespace causex::service;
using nlohmann::json;

namespace {

const std::string kData = CAUSEX_DATA_DIR;

json f1_spec() {
  return {{"graph", {{"path", "f1/graph.json"}}},
          {"dataset", {{"path", "f1/data.csv"}}},
          {"blackbox", {{"path", "f1/model.json"}}}};
}

json loan_spec() { return {{"graph", {{"path", "loan/graph.json"}}}, {"dataset", {{"path", "loan/data.csv"}}}}; }

json mediator_spec() {
  return {{"graph",
           {{"variables",
             {{{"name", "X"}, {"domain", {"0", "1"}}, {"ordered", true}},
              {{"name", "M"}, {"domain", {"0", "1"}}, {"ordered", true}},
              {{"name", "O"}, {"domain", {"0", "1"}}, {"ordered", true}}}},
            {"edges", json::array({json::array({"X", "M"}), json::array({"M", "O"})})}}},
          {"dataset", {{"csv", "X,M,O\n0,0,0\n0,1,1\n1,1,1\n1,0,0\n1,1,0\n"}}}};
}

class Api : public ::testing::Test {
 protected:
  void SetUp() override {
    ServerOptions o;
    o.port = 0;
    o.data_dir = kData;
    server_ = std::make_unique<Server>(o);
    port_ = server_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override { server_->stop(); }

  std::pair<int, nlohmann::ordered_json> post(const std::string& path, const json& body) {
    auto res = client_->Post(path.c_str(), body.dump(), "application/json");
    EXPECT_TRUE(res) << path;
    if (!res) return {0, {}};
    return {res->status, nlohmann::ordered_json::parse(res->body)};
  }

  std::string session(const json& spec) {
    auto [status, body] = post("/v1/sessions", spec);
    EXPECT_EQ(status, 201) << body.dump();
    return body.value("id", "");
  }

  std::unique_ptr<Server> server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

std::pair<int, std::string> run(const std::string& cmd) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = pclose(p);
  return {WEXITSTATUS(status), out};
}

}  // namespace

TEST_F(Api, CreateAndDescribeSession) {
  const std::string id = session(f1_spec());
  auto res = client_->Get(("/v1/sessions/" + id + "/schema").c_str());
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto body = json::parse(res->body);
  EXPECT_EQ(body["result"]["outcome"], "O");
  EXPECT_EQ(body["result"]["variables"].size(), 3u);
  EXPECT_EQ(body["meta"]["session"], id);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(Api, UnknownSessionIs404) {
  auto [status, body] = post("/v1/sessions/nope/scores", json::object());
  EXPECT_EQ(status, 404);
  EXPECT_EQ(body["code"], "SESSION_NOT_FOUND");
}

TEST_F(Api, DescendantContextIsNotIdentifiable) {
  const std::string id = session(mediator_spec());
  auto [status, body] = post("/v1/sessions/" + id + "/scores",
                             {{"query", {{"x", {{"X", "1"}}}, {"x_prime", {{"X", "0"}}}, {"context", {{"M", "1"}}}}}});
  EXPECT_EQ(status, 400);
  EXPECT_EQ(body["code"], "NOT_IDENTIFIABLE");
}

TEST_F(Api, PointScoresWithTiming) {
  const std::string id = session(mediator_spec());
  auto [status, body] =
      post("/v1/sessions/" + id + "/scores", {{"query", {{"x", {{"X", "1"}}}, {"x_prime", {{"X", "0"}}}}}});
  ASSERT_EQ(status, 200) << body.dump();
  EXPECT_TRUE(body["result"]["triple"]["nesuf"].is_number());
  EXPECT_TRUE(body["meta"]["elapsed_ms"].is_number());
}

TEST_F(Api, NullConditioningCode) {
  const std::string id = session(f1_spec());
  auto [status, body] = post("/v1/sessions/" + id + "/scores",
                             {{"query", {{"x", {{"X", "1"}}}, {"x_prime", {{"X", "0"}}}}}, {"mode", "bounds"}});
  EXPECT_EQ(status, 400);
  EXPECT_EQ(body["code"], "CONDITIONING_ON_NULL");
}

TEST_F(Api, SchemaMismatchIs422) {
  const std::string id = session(f1_spec());
  auto [status, body] =
      post("/v1/sessions/" + id + "/scores", {{"query", {{"x", {{"Q", "1"}}}, {"x_prime", {{"Q", "0"}}}}}});
  EXPECT_EQ(status, 422);
  EXPECT_EQ(body["code"], "SCHEMA_MISMATCH");
  auto [s2, b2] = post("/v1/sessions", {{"graph", {{"path", "f1/graph.json"}}}, {"dataset", {{"csv", "Z,X,Q\n0,0,0\n"}}}});
  EXPECT_EQ(s2, 422) << b2.dump();
}

TEST_F(Api, MalformedBodyIs400) {
  auto res = client_->Post("/v1/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(Api, WhatIfWithCurrentValuesChangesNothing) {
  const std::string id = session(f1_spec());
  auto [status, body] = post("/v1/sessions/" + id + "/whatif",
                             {{"individual", {{"Z", "0"}, {"X", "0"}}}, {"overrides", {{"X", "0"}}}});
  ASSERT_EQ(status, 200) << body.dump();
  const auto& r = body["result"];
  EXPECT_EQ(r["delta"], 0.0);
  EXPECT_EQ(r["prediction"], r["original_prediction"]);
  EXPECT_TRUE(r["changed"].empty());
}

TEST_F(Api, WhatIfFlipsPrediction) {
  const std::string id = session(f1_spec());
  auto [status, body] = post("/v1/sessions/" + id + "/whatif",
                             {{"individual", {{"Z", "0"}, {"X", "0"}}}, {"overrides", {{"Z", "1"}}}});
  ASSERT_EQ(status, 200) << body.dump();
  EXPECT_EQ(body["result"]["original_prediction"], "0");
  EXPECT_EQ(body["result"]["prediction"], "1");
}

TEST_F(Api, ExplainLevels) {
  const std::string id = session(f1_spec());
  auto [s1, g] = post("/v1/sessions/" + id + "/explain/global", {{"score", "nec"}});
  ASSERT_EQ(s1, 200) << g.dump();
  EXPECT_EQ(g["result"]["level"], "global");
  EXPECT_EQ(g["result"]["entries"].size(), 2u);
  auto [s2, c] = post("/v1/sessions/" + id + "/explain/contextual", {{"x_var", "X"}, {"context", {{"Z", "1"}}}});
  ASSERT_EQ(s2, 200) << c.dump();
  EXPECT_EQ(c["result"]["entries"].size(), 1u);
  auto [s3, l] = post("/v1/sessions/" + id + "/explain/local", {{"individual", {{"Z", "0"}, {"X", "0"}}}});
  ASSERT_EQ(s3, 200) << l.dump();
  EXPECT_EQ(l["result"]["positive_outcome"], false);
}

TEST_F(Api, RecourseMatchesCommandLine) {
  const std::string id = session(loan_spec());
  std::ifstream in(kData + "/loan/request.json");
  const json request = json::parse(in);
  auto [status, body] = post("/v1/sessions/" + id + "/recourse", request);
  ASSERT_EQ(status, 200) << body.dump();
  EXPECT_TRUE(body["result"]["feasible"].get<bool>());
  const auto [code, out] = run("cd " + kData + " && " + CAUSEX_CLI +
                               " --graph loan/graph.json --data loan/data.csv recourse --request loan/request.json");
  EXPECT_EQ(code, 0);
  EXPECT_EQ(out, body["result"].dump(2) + "\n");
}

TEST_F(Api, InfeasibleRecourse) {
  const std::string id = session(loan_spec());
  std::ifstream in(kData + "/loan/request.json");
  json request = json::parse(in);
  request["config"]["alpha"] = 1.0;
  auto [status, body] = post("/v1/sessions/" + id + "/recourse", request);
  EXPECT_EQ(status, 400);
  EXPECT_EQ(body["code"], "INFEASIBLE");
  EXPECT_FALSE(body["result"]["feasible"].get<bool>());
}

TEST_F(Api, OpenApiAndPreflight) {
  auto res = client_->Get("/v1/openapi");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_TRUE(json::parse(res->body)["paths"].contains("/v1/sessions/{id}/recourse"));
  auto pre = client_->Options("/v1/sessions");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
}

TEST(Store, SnapshotsReloadIdenticalSessions) {
  const auto dir = std::filesystem::temp_directory_path() / "causex_sessions_test";
  std::filesystem::remove_all(dir);
  const json body = {{"query", {{"x", {{"Z", "1"}}}, {"x_prime", {{"Z", "0"}}}}}};
  std::string id, first;
  {
    SessionStore store(kData, dir.string());
    auto s = store.create(f1_spec());
    id = s->id;
    first = handle_scores(*s, body).dump();
  }
  SessionStore reloaded(kData, dir.string());
  ASSERT_EQ(reloaded.size(), 1u);
  auto s = reloaded.get(id);
  ASSERT_TRUE(s);
  EXPECT_EQ(handle_scores(*s, body).dump(), first);
  std::filesystem::remove_all(dir);
}

TEST(Store, SessionsAreIndependent) {
  SessionStore store(kData);
  auto a = store.create(f1_spec());
  auto b = store.create(f1_spec());
  EXPECT_NE(a->id, b->id);
  EXPECT_EQ(store.size(), 2u);
  EXPECT_EQ(handle_schema(*a)["variables"], handle_schema(*b)["variables"]);
}

TEST(Status, ErrorMapping) {
  EXPECT_EQ(http_status(ErrorCode::SchemaMismatch), 422);
  EXPECT_EQ(http_status(ErrorCode::NotIdentifiable), 400);
  EXPECT_EQ(http_status(ErrorCode::ConditioningOnNull), 400);
}
