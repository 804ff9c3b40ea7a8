#include <filesystem>
#include <fstream>
#include <random>

#include "aigw/catalog.hpp"
#include "doctest.h"

using namespace aigw;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / "aigw-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PricingScheme default_scheme(std::string id = "scheme-1") {
  PricingScheme s;
  s.scheme_id = std::move(id);
  s.variant = PricingVariant::per_token;
  s.rate_in_per_token = Money(10);
  s.rate_out_per_token = Money(20);
  s.share_splits_ppm = {{"operator", 500000}, {"provider", 300000}, {"adapter_owner", 200000}};
  return s;
}

ModelDescriptor standalone_model(std::string id, std::string scheme = "scheme-1") {
  ModelDescriptor m;
  m.model_id = std::move(id);
  m.kind = ModelKind::standalone;
  m.provider_id = "prov-1";
  m.expected_output_tokens = 351.0;
  m.pricing_scheme_id = std::move(scheme);
  return m;
}

DeploymentDescriptor edge_deployment(std::string id, std::string model,
                                     Site site = Site::edge) {
  DeploymentDescriptor d;
  d.deployment_id = std::move(id);
  d.model_id = std::move(model);
  d.site = site;
  d.perf = {200.0, 40.0, 12.0, 2.0, 48, 64};
  d.gpu_count = 2;
  return d;
}

Plan simple_plan(std::string id, std::string tenant, std::string key) {
  Plan p;
  p.plan_id = std::move(id);
  p.tenant_id = std::move(tenant);
  p.api_key = std::move(key);
  p.allowed_latency_classes = {LatencyClass::standard};
  p.allowed_sites = {Site::edge};
  p.max_tokens_per_request = 1000;
  p.monthly_token_quota = 10000;
  p.pricing_scheme_id = "scheme-1";
  return p;
}

}  // namespace

TEST_CASE("model registration: happy path and validation") {
  Catalog cat;
  cat.create_pricing_scheme(default_scheme());
  cat.register_model(standalone_model("m-base"));

  CHECK(cat.lookup_model("m-base").has_value());
  CHECK(cat.list_models().size() == 1);

  SUBCASE("duplicate id") {
    CHECK_THROWS_AS(cat.register_model(standalone_model("m-base")), Error);
  }

  SUBCASE("adapter model requires an existing base") {
    ModelDescriptor adapter = standalone_model("m-adapter");
    adapter.kind = ModelKind::base_with_adapter;
    adapter.base_model_id = "m-missing";
    adapter.adapter_id = "lora-1";
    adapter.adapter_owner_id = "owner-1";
    CHECK_THROWS_AS(cat.register_model(adapter), Error);

    adapter.base_model_id = "m-base";
    cat.register_model(adapter);
    CHECK(cat.lookup_model("m-adapter")->base_model_id == "m-base");
  }

  SUBCASE("kind-conditional fields are enforced") {
    ModelDescriptor bad = standalone_model("m-bad");
    bad.adapter_id = "stray";
    CHECK_THROWS_AS(cat.register_model(bad), Error);

    ModelDescriptor dist = standalone_model("m-dist");
    dist.kind = ModelKind::distributed;
    CHECK_THROWS_AS(cat.register_model(dist), Error);  // partition_count missing
    dist.partition_count = 1;
    CHECK_THROWS_AS(cat.register_model(dist), Error);  // must be >= 2
    dist.partition_count = 4;
    cat.register_model(dist);
  }

  SUBCASE("collaborative table resolves and requires default") {
    cat.register_model(standalone_model("m-code"));
    cat.register_model(standalone_model("m-chat"));

    ModelDescriptor collab = standalone_model("m-collab");
    collab.kind = ModelKind::collaborative;
    collab.submodel_table = {{"code", "m-code"}, {"chat", "m-chat"}};
    CHECK_THROWS_AS(cat.register_model(collab), Error);  // no default entry

    collab.submodel_table["default"] = "m-chat";
    cat.register_model(collab);
    CHECK(cat.lookup_model("m-collab")->submodel_table.at("code") == "m-code");
  }
}

TEST_CASE("deployment registration") {
  Catalog cat;
  cat.create_pricing_scheme(default_scheme());
  cat.register_model(standalone_model("m-1"));

  cat.register_deployment(edge_deployment("d-edge", "m-1", Site::edge));
  cat.register_deployment(edge_deployment("d-cloud", "m-1", Site::cloud));

  SUBCASE("limit below capacity is rejected") {
    DeploymentDescriptor bad = edge_deployment("d-bad", "m-1");
    bad.perf.batch_capacity = 48;
    bad.perf.hard_admission_limit = 10;
    CHECK_THROWS_AS(cat.register_deployment(bad), Error);
  }

  SUBCASE("dangling model reference") {
    CHECK_THROWS_AS(cat.register_deployment(edge_deployment("d-x", "m-none")), Error);
  }

  SUBCASE("candidates returns every deployment of the model") {
    auto cands = cat.candidates("m-1");
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].deployment_id == "d-cloud");
    CHECK(cands[1].deployment_id == "d-edge");
  }
}

TEST_CASE("pricing scheme split validation") {
  Catalog cat;
  PricingScheme s = default_scheme();
  s.share_splits_ppm["operator"] = 499999;  // sums to 999,999
  CHECK_THROWS_AS(cat.create_pricing_scheme(s), Error);

  s = default_scheme();
  s.rate_out_per_token = Money(-1);
  CHECK_THROWS_AS(cat.create_pricing_scheme(s), Error);
}

TEST_CASE("persist/load round-trip") {
  fs::path dir = fresh_dir("catalog-roundtrip");
  Catalog cat;
  cat.create_pricing_scheme(default_scheme());
  cat.register_model(standalone_model("m-1"));
  ModelDescriptor collab = standalone_model("m-collab");
  collab.kind = ModelKind::collaborative;
  collab.submodel_table = {{"code", "m-1"}, {"default", "m-1"}};
  cat.register_model(collab);
  cat.register_deployment(edge_deployment("d-1", "m-1"));
  cat.create_plan(simple_plan("p-1", "tenant-a", "key-a"));
  cat.persist(dir);

  Catalog loaded = Catalog::load(dir);
  CHECK(loaded.deep_equals(cat));
}

TEST_CASE("load rejects corruption") {
  fs::path dir = fresh_dir("catalog-corrupt");
  Catalog cat;
  cat.create_pricing_scheme(default_scheme());
  cat.register_model(standalone_model("m-1"));
  cat.persist(dir);

  SUBCASE("truncated file") {
    auto path = dir / "models.json";
    auto size = fs::file_size(path);
    fs::resize_file(path, size / 2);
    CHECK_THROWS_AS(Catalog::load(dir), Error);
  }

  SUBCASE("bit flip in the body") {
    auto path = dir / "pricing.json";
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(10);
    f.put('X');
    f.close();
    CHECK_THROWS_AS(Catalog::load(dir), Error);
  }

  SUBCASE("missing checksum line") {
    auto path = dir / "plans.json";
    std::ofstream(path, std::ios::trunc) << "{\"plans\": []}\n";
    CHECK_THROWS_AS(Catalog::load(dir), Error);
  }
}

TEST_CASE("randomized catalog round-trips") {
  // Over 1000 randomized records survive persist/load across the rounds.
  fs::path dir = fresh_dir("catalog-random");
  std::mt19937_64 gen(2026);
  std::uniform_int_distribution<int> count(0, 20);
  std::uniform_int_distribution<int64_t> num(1, 1 << 20);

  size_t total_records = 0;
  for (int round = 0; round < 120; ++round) {
    Catalog cat;
    cat.create_pricing_scheme(default_scheme());
    int models = 1 + count(gen) % 8;
    for (int m = 0; m < models; ++m) {
      ModelDescriptor md = standalone_model("m-" + std::to_string(m));
      md.expected_output_tokens = double(num(gen) % 4096 + 1);
      cat.register_model(md);
    }
    int deployments = count(gen) % 6;
    for (int d = 0; d < deployments; ++d) {
      DeploymentDescriptor dd = edge_deployment(
          "d-" + std::to_string(d), "m-" + std::to_string(d % models),
          d % 2 == 0 ? Site::edge : Site::cloud);
      dd.perf.tft_base_ms = double(num(gen) % 1000 + 1);
      dd.perf.itt_base_ms = double(num(gen) % 100 + 1);
      cat.register_deployment(dd);
    }
    int plans = count(gen) % 5;
    for (int p = 0; p < plans; ++p) {
      Plan plan = simple_plan("p-" + std::to_string(p), "t-" + std::to_string(p),
                              "k-" + std::to_string(p));
      plan.monthly_token_quota = num(gen);
      plan.max_tokens_per_request = std::min<int64_t>(plan.monthly_token_quota, num(gen));
      plan.quota_committed = num(gen) % (plan.monthly_token_quota + 1);
      cat.create_plan(plan);
    }
    cat.persist(dir);
    CHECK(Catalog::load(dir).deep_equals(cat));
    total_records += cat.list_models().size() + cat.list_deployments().size() +
                     cat.list_plans().size() + cat.list_pricing_schemes().size();
  }
  CHECK(total_records > 1000);
}

TEST_CASE("write-ahead persistence: mutations survive reload") {
  fs::path dir = fresh_dir("catalog-wal");
  {
    Catalog cat;
    cat.attach_storage(dir);
    cat.create_pricing_scheme(default_scheme());
    cat.register_model(standalone_model("m-1"));
    // No explicit persist(): attach_storage persists each mutation.
  }
  Catalog loaded = Catalog::load(dir);
  CHECK(loaded.lookup_model("m-1").has_value());
  CHECK(loaded.lookup_pricing_scheme("scheme-1").has_value());
  loaded.check_integrity();
}

TEST_CASE("data dir resolution order") {
  CHECK(resolve_data_dir("explicit") == fs::path("explicit"));
  setenv("AIGW_DATA_DIR", "/tmp/from-env", 1);
  CHECK(resolve_data_dir("") == fs::path("/tmp/from-env"));
  unsetenv("AIGW_DATA_DIR");
  CHECK(resolve_data_dir("") == fs::path("data"));
}
