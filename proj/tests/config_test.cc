#include "servesim/config.h"

#include <gtest/gtest.h>

#include "servesim/bucketing.h"
#include "servesim/config_file.h"
#include "servesim/errors.h"

namespace servesim {
namespace {

Request req(Tokens prompt, Tokens out) { return Request{1, 0, prompt, out}; }

TEST(ValidateRequest, Verdicts) {
  const EngineConfig cfg;
  EXPECT_TRUE(validate_request(req(100, 50), cfg).ok);
  const Verdict too_long = validate_request(req(8193, 1), cfg);
  EXPECT_FALSE(too_long.ok);
  EXPECT_EQ(too_long.reason, "prompt exceeds max bucket");
  const Verdict overflow = validate_request(req(8000, 300), cfg);
  EXPECT_FALSE(overflow.ok);
  EXPECT_EQ(overflow.reason, "context overflow");
  EXPECT_FALSE(validate_request(req(0, 5), cfg).ok);
  EXPECT_FALSE(validate_request(req(5, 0), cfg).ok);
}

TEST(ValidateRequest, AcceptedPromptsAlwaysHaveABucket) {
  const EngineConfig cfg;
  for (Tokens p = 1; p <= 8192; p += 13) {
    if (validate_request(req(p, 1), cfg).ok) {
      EXPECT_NO_THROW(select_bucket(p, cfg.bucket_ladder));
    }
  }
}

TEST(ValidateConfig, Defaults) {
  const EngineConfig cfg;
  EXPECT_TRUE(validate_config(cfg).ok);
  EXPECT_EQ(cfg.bucket_ladder.to_string(), "128,512,1024,2048,4096,8192");
  EXPECT_EQ(cfg.block_size, 16);
  EXPECT_EQ(cfg.total_blocks, 4096u);
  EXPECT_EQ(cfg.max_model_len, 8192);
  EXPECT_EQ(cfg.cost_model, (CostModel{1, 50, 1, 0}));
}

TEST(ValidateConfig, Violations) {
  EngineConfig cfg;
  cfg.bucket_ladder = BucketLadder{128, 4096};
  EXPECT_NE(validate_config(cfg).reason.find("ladder/max mismatch"), std::string::npos);

  cfg = EngineConfig{};
  cfg.block_size = 0;
  EXPECT_NE(validate_config(cfg).reason.find("block_size"), std::string::npos);

  cfg = EngineConfig{};
  cfg.total_blocks = 0;
  EXPECT_FALSE(validate_config(cfg).ok);

  cfg = EngineConfig{};
  cfg.max_decode_batch = 0;
  EXPECT_FALSE(validate_config(cfg).ok);

  cfg = EngineConfig{};
  cfg.prefill_token_budget = 4096;
  EXPECT_FALSE(validate_config(cfg).ok);

  cfg = EngineConfig{};
  cfg.cost_model = CostModel{1, 0, 0, 0};
  EXPECT_FALSE(validate_config(cfg).ok);

  cfg = EngineConfig{};
  cfg.cost_model.c_prefill_per_token = -1;
  EXPECT_FALSE(validate_config(cfg).ok);
}

TEST(BucketLadder, ParseAndInvariants) {
  EXPECT_EQ(BucketLadder::parse("128, 512,8192"), (BucketLadder{128, 512, 8192}));
  EXPECT_THROW(BucketLadder::parse(""), ConfigError);
  EXPECT_THROW(BucketLadder::parse("128,128"), ConfigError);
  EXPECT_THROW(BucketLadder::parse("512,128"), ConfigError);
  EXPECT_THROW(BucketLadder::parse("0,128"), ConfigError);
  EXPECT_THROW(BucketLadder::parse("12x"), ConfigError);
}

TEST(ConfigFile, ParsesDottedKeysAndComments) {
  const auto kv = parse_key_values(
      "# experiment\n"
      "engine.block_size = 32\n"
      "engine.bucket_ladder = 256,8192   # two buckets\n"
      "\n"
      "cost.c_decode_fixed=40\n");
  const ExperimentConfig cfg = build_experiment(kv);
  EXPECT_EQ(cfg.engine.block_size, 32);
  EXPECT_EQ(cfg.engine.bucket_ladder, (BucketLadder{256, 8192}));
  EXPECT_EQ(cfg.engine.cost_model.c_decode_fixed, 40);
  EXPECT_EQ(cfg.split.variant_a, cfg.engine);
}

TEST(ConfigFile, UnknownKeyReportsLine) {
  try {
    parse_key_values("engine.block_size = 16\nengine.blok_size = 16\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_key_values("engine.block_size 16\n"), ParseError);
  EXPECT_THROW(parse_key_values("engine.block_size = 1\nengine.block_size = 2\n"), ParseError);
}

TEST(ConfigFile, BadValuesAreConfigErrors) {
  EXPECT_THROW(build_experiment(parse_key_values("engine.block_size = 0\n")), ConfigError);
  EXPECT_THROW(build_experiment(parse_key_values("engine.block_size = x\n")), ConfigError);
  EXPECT_THROW(build_experiment(parse_key_values("engine.batching = dynamic\n")), ConfigError);
  EXPECT_THROW(build_experiment(parse_key_values("split.b_weight = 1.5\n")), ConfigError);
  EXPECT_THROW(build_experiment(parse_key_values("workload.prompt_min = 0\n")), ConfigError);
  EXPECT_THROW(build_experiment(parse_key_values(
                   "workload.trace = t.csv\nworkload.n_requests = 5\n")),
               ConfigError);
}

TEST(ConfigFile, VariantOverrides) {
  const ExperimentConfig cfg = build_experiment(parse_key_values(
      "engine.total_blocks = 512\n"
      "variant_b.engine.bucket_ladder = 8192\n"
      "variant_a.cost.c_decode_fixed = 10\n"
      "split.mode = shadow\n"));
  EXPECT_EQ(cfg.split.variant_a.total_blocks, 512u);
  EXPECT_EQ(cfg.split.variant_b.total_blocks, 512u);
  EXPECT_EQ(cfg.split.variant_b.bucket_ladder, BucketLadder::degenerate(8192));
  EXPECT_EQ(cfg.split.variant_a.bucket_ladder, BucketLadder{});
  EXPECT_EQ(cfg.split.variant_a.cost_model.c_decode_fixed, 10);
  EXPECT_EQ(cfg.split.mode, SplitMode::kShadow);
}

TEST(ConfigFile, ResolvedConfigRoundTrips) {
  const ExperimentConfig cfg = build_experiment(parse_key_values(
      "engine.block_size = 8\nworkload.rate = 250.5\nworkload.seed = 9\n"));
  std::string text;
  for (const auto& [k, v] : resolved_config(cfg, false)) text += k + " = " + v + "\n";
  const ExperimentConfig again = build_experiment(parse_key_values(text));
  EXPECT_EQ(again.engine, cfg.engine);
  EXPECT_EQ(again.workload, cfg.workload);
}

TEST(ConfigFile, EveryKnownKeyIsAccepted) {
  for (const std::string& key : known_config_keys()) {
    EXPECT_NO_THROW(parse_key_values(key + " = 1\n")) << key;
  }
}

}  // namespace
}  // namespace servesim
