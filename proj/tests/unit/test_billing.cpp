#include <filesystem>
#include <random>

#include "aigw/billing.hpp"
#include "aigw/metering.hpp"
#include "doctest.h"

using namespace aigw;

namespace {

GenerationRequest request_with_prompt(int64_t prompt_tokens) {
  GenerationRequest r;
  r.request_id = "req-1";
  r.tenant_id = "tenant-a";
  r.api_key = "k";
  r.target_model_id = "m-1";
  r.prompt_tokens = prompt_tokens;
  r.max_output_tokens = 2000;
  return r;
}

std::vector<TokenEvent> uniform_stream(size_t count, double t0, double gap,
                                       uint64_t bytes_each = 24) {
  std::vector<TokenEvent> events;
  for (size_t k = 0; k < count; ++k) {
    events.push_back({"req-1", k, t0 + gap * double(k), bytes_each, ""});
  }
  return events;
}

UsageRecord usage_fixture(uint64_t in_tokens, uint64_t out_tokens) {
  UsageRecord u;
  u.request_id = "req-1";
  u.tenant_id = "tenant-a";
  u.model_id = "m-1";
  u.deployment_id = "d-1";
  u.input_tokens = in_tokens;
  u.output_tokens = out_tokens;
  u.gpu_seconds = 4.4;
  u.egress_bytes = 2048;
  u.tft_ms = 200.0;
  u.mean_itt_ms = 12.0;
  u.t_start_ms = 0.0;
  u.t_done_ms = 4412.0;
  return u;
}

PricingScheme per_token_scheme() {
  PricingScheme s;
  s.scheme_id = "s-tok";
  s.variant = PricingVariant::per_token;
  s.rate_in_per_token = Money(10);
  s.rate_out_per_token = Money(20);
  s.share_splits_ppm = {{"operator", 500000}, {"provider", 300000}, {"adapter_owner", 200000}};
  return s;
}

}  // namespace

TEST_CASE("meter_stream reduces a stream to billable facts") {
  SUBCASE("probe-shaped full stream") {
    auto events = uniform_stream(1000, 100.0, 10.0);
    SessionTiming timing{0.0, 100.0, 100.0 + 10.0 * 999};
    UsageRecord usage = meter_stream(events, request_with_prompt(10), timing,
                                     "m-1", "d-1");
    CHECK(usage.output_tokens == 1000);
    CHECK(usage.input_tokens == 10);
    CHECK(usage.tft_ms == doctest::Approx(100.0));
    CHECK(usage.mean_itt_ms == doctest::Approx(10.0));
    CHECK(usage.egress_bytes == 24000);
    CHECK(usage.gpu_seconds == doctest::Approx(9.99));
  }

  SUBCASE("empty stream is degenerate but legal") {
    SessionTiming timing{50.0, 50.0, 50.0};
    UsageRecord usage =
        meter_stream({}, request_with_prompt(10), timing, "m-1", "d-1");
    CHECK(usage.output_tokens == 0);
    CHECK(usage.gpu_seconds == 0.0);
    CHECK(usage.tft_ms == 0.0);
    CHECK(usage.mean_itt_ms == 0.0);
  }

  SUBCASE("five-token fixture: mean itt by hand") {
    std::vector<TokenEvent> events = {
        {"req-1", 0, 100.0, 10, ""}, {"req-1", 1, 112.0, 10, ""},
        {"req-1", 2, 120.0, 10, ""}, {"req-1", 3, 140.0, 10, ""},
        {"req-1", 4, 148.0, 10, ""},
    };
    // Gaps: 12, 8, 20, 8 -> mean 12.
    SessionTiming timing{90.0, 100.0, 148.0};
    UsageRecord usage = meter_stream(events, request_with_prompt(85), timing,
                                     "m-1", "d-1");
    CHECK(usage.mean_itt_ms == doctest::Approx(12.0));
    CHECK(usage.tft_ms == doctest::Approx(10.0));
  }

  SUBCASE("index gap is inconsistent") {
    auto events = uniform_stream(5, 100.0, 10.0);
    events[3].index = 9;
    SessionTiming timing{0.0, 100.0, 140.0};
    CHECK_THROWS_AS(
        meter_stream(events, request_with_prompt(10), timing, "m-1", "d-1"),
        Error);
  }

  SUBCASE("non-monotone timestamps are inconsistent") {
    auto events = uniform_stream(5, 100.0, 10.0);
    events[2].t_emit_ms = events[1].t_emit_ms;
    SessionTiming timing{0.0, 100.0, 140.0};
    CHECK_THROWS_AS(
        meter_stream(events, request_with_prompt(10), timing, "m-1", "d-1"),
        Error);
  }
}

TEST_CASE("price covers every scheme variant") {
  SUBCASE("per_token: the worked example") {
    Money p = price(usage_fixture(85, 351), per_token_scheme());
    CHECK(p.micro == 7870);  // 850 + 7020
  }

  SUBCASE("per_call is flat") {
    PricingScheme s;
    s.scheme_id = "s-call";
    s.variant = PricingVariant::per_call;
    s.flat_per_call = Money(5000);
    s.share_splits_ppm = {{"operator", 1000000}};
    CHECK(price(usage_fixture(1, 1), s).micro == 5000);
    CHECK(price(usage_fixture(9999, 9999), s).micro == 5000);
  }

  SUBCASE("resource: gpu seconds round up") {
    PricingScheme s;
    s.scheme_id = "s-res";
    s.variant = PricingVariant::resource;
    s.rate_gpu_second = Money(1000);
    s.rate_egress_byte = Money(1);
    s.share_splits_ppm = {{"operator", 1000000}};
    UsageRecord u = usage_fixture(85, 351);
    u.gpu_seconds = 4.4;
    u.egress_bytes = 2048;
    CHECK(price(u, s).micro == 7048);  // ceil(4.4)*1000 + 2048
  }

  SUBCASE("subscription prices usage at zero") {
    PricingScheme s;
    s.scheme_id = "s-sub";
    s.variant = PricingVariant::subscription;
    s.monthly_fee = Money(1000000);
    s.included_tokens = 10000;
    s.overage_rate_out = Money(20);
    s.share_splits_ppm = {{"operator", 1000000}};
    CHECK(price(usage_fixture(85, 351), s).micro == 0);
  }

  SUBCASE("per_token price is monotone in token counts") {
    PricingScheme s = per_token_scheme();
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<uint64_t> tokens(0, 100000);
    for (int i = 0; i < 300; ++i) {
      uint64_t in_a = tokens(gen), out_a = tokens(gen);
      Money base = price(usage_fixture(in_a, out_a), s);
      Money more_in = price(usage_fixture(in_a + 17, out_a), s);
      Money more_out = price(usage_fixture(in_a, out_a + 23), s);
      CHECK(more_in >= base);
      CHECK(more_out >= base);
    }
  }
}

TEST_CASE("build_invoice") {
  PricingScheme scheme = per_token_scheme();

  SUBCASE("zero usage, per_token: empty total") {
    Invoice inv = build_invoice("tenant-a", "2026-08", {}, scheme);
    CHECK(inv.total.micro == 0);
    CHECK(inv.line_items.empty());
  }

  SUBCASE("two usages sum exactly") {
    std::vector<UsageRecord> records = {usage_fixture(85, 351), usage_fixture(0, 250)};
    // 7870 and 5000
    Invoice inv = build_invoice("tenant-a", "2026-08", records, scheme);
    CHECK(inv.total.micro == 12870);
    REQUIRE(inv.line_items.size() == 2);
    CHECK(inv.line_items[0].amount.micro == 7870);
    CHECK(inv.line_items[1].amount.micro == 5000);
  }

  SUBCASE("subscription fee plus overage") {
    PricingScheme sub;
    sub.scheme_id = "s-sub";
    sub.variant = PricingVariant::subscription;
    sub.monthly_fee = Money(1000000);
    sub.included_tokens = 10000;
    sub.overage_rate_out = Money(20);
    sub.share_splits_ppm = {{"operator", 1000000}};

    std::vector<UsageRecord> records;
    UsageRecord u = usage_fixture(85, 10351);
    records.push_back(u);
    Invoice inv = build_invoice("tenant-a", "2026-08", records, sub);
    CHECK(inv.total.micro == 1007020);  // 1,000,000 + 351*20

    // Exactly at the included allowance: no overage line.
    records[0].output_tokens = 10000;
    Invoice flat = build_invoice("tenant-a", "2026-08", records, sub);
    CHECK(flat.total.micro == 1000000);
  }

  SUBCASE("mixed tenants are refused") {
    std::vector<UsageRecord> records = {usage_fixture(1, 1)};
    records[0].tenant_id = "tenant-b";
    CHECK_THROWS_AS(build_invoice("tenant-a", "2026-08", records, scheme), Error);
  }
}

TEST_CASE("allocate_shares: largest remainder, exact conservation") {
  SUBCASE("the worked 50/30/20 split") {
    Invoice inv;
    inv.invoice_id = "inv-1";
    inv.tenant_id = "tenant-a";
    inv.period = "2026-08";
    inv.total = Money(7870);
    auto splits = per_token_scheme().share_splits_ppm;
    ShareAllocation shares = allocate_shares(inv, splits);
    CHECK(shares.allocations.at("operator").micro == 3935);
    CHECK(shares.allocations.at("provider").micro == 2361);
    CHECK(shares.allocations.at("adapter_owner").micro == 1574);
  }

  SUBCASE("zero total allocates zeros") {
    Invoice inv;
    inv.invoice_id = "inv-0";
    inv.total = Money(0);
    ShareAllocation shares = allocate_shares(inv, per_token_scheme().share_splits_ppm);
    for (const auto& [_, amount] : shares.allocations) CHECK(amount.micro == 0);
  }

  SUBCASE("single stakeholder takes everything") {
    Invoice inv;
    inv.invoice_id = "inv-s";
    inv.total = Money(123457);
    ShareAllocation shares = allocate_shares(inv, {{"operator", 1000000}});
    CHECK(shares.allocations.at("operator").micro == 123457);
  }

  SUBCASE("conservation holds over 10^4 random totals and splits") {
    std::mt19937_64 gen(31337);
    std::uniform_int_distribution<int64_t> total_dist(0, int64_t(1) << 40);
    std::uniform_int_distribution<int> stakeholder_count(1, 6);
    std::uniform_int_distribution<int64_t> weight(0, 1000000);

    for (int round = 0; round < 10000; ++round) {
      int n = stakeholder_count(gen);
      std::map<std::string, int64_t> splits;
      int64_t remaining = 1000000;
      for (int i = 0; i < n - 1; ++i) {
        int64_t w = weight(gen) % (remaining + 1);
        splits["st-" + std::to_string(i)] = w;
        remaining -= w;
      }
      splits["st-" + std::to_string(n - 1)] = remaining;

      Money total(total_dist(gen));
      auto allocations = apportion_exact(total, splits);
      int64_t sum = 0;
      for (const auto& [_, amount] : allocations) sum += amount.micro;
      REQUIRE(sum == total.micro);
    }
  }

  SUBCASE("negative totals (refunds) mirror exactly") {
    auto allocations = apportion_exact(Money(-7870), per_token_scheme().share_splits_ppm);
    int64_t sum = 0;
    for (const auto& [_, amount] : allocations) sum += amount.micro;
    CHECK(sum == -7870);
  }

  SUBCASE("bad splits rejected") {
    CHECK_THROWS_AS(apportion_exact(Money(100), {{"x", 999999}}), Error);
    CHECK_THROWS_AS(apportion_exact(Money(100), {}), Error);
  }
}

TEST_CASE("payment stub is idempotent per invoice") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "aigw-tests" / "payments";
  fs::remove_all(dir);
  fs::create_directories(dir);

  Invoice inv;
  inv.invoice_id = "inv-42";
  inv.tenant_id = "tenant-a";
  inv.period = "2026-08";
  inv.total = Money(7870);

  PaymentGateway payments(dir / "receipts.jsonl");
  PaymentReceipt first = payments.pay(inv);
  PaymentReceipt second = payments.pay(inv);
  CHECK(first.receipt_id == second.receipt_id);
  CHECK(first.amount.micro == 7870);

  // Idempotency survives a reload from disk.
  PaymentGateway reloaded(dir / "receipts.jsonl");
  CHECK(reloaded.pay(inv).receipt_id == first.receipt_id);

  Invoice zero;
  zero.invoice_id = "inv-zero";
  zero.total = Money(0);
  CHECK(payments.pay(zero).amount.micro == 0);

  Invoice negative;
  negative.invoice_id = "inv-neg";
  negative.total = Money(-1);
  CHECK_THROWS_AS(payments.pay(negative), Error);
}
