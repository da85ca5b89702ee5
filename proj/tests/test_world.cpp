#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "teacher2task/world.hpp"

using namespace t2t;

namespace {
WorldConfig small_cfg() {
    WorldConfig cfg;
    cfg.num_items = 400;
    cfg.num_topics = 40;
    cfg.d_in = 16;
    cfg.positive_rate = 0.2;
    return cfg;
}
}  // namespace

TEST_CASE("realized positive rate matches the configured rate") {
    auto cfg = small_cfg();
    auto rng = derive_stream(42, "world");
    auto world = generate_world(cfg, rng);
    std::size_t pos = 0, total = 0;
    for (std::size_t i = 0; i < cfg.num_items; ++i)
        for (std::size_t t = 0; t < cfg.num_topics; ++t) {
            pos += world.relevant(static_cast<ItemId>(i), static_cast<TopicIndex>(t));
            ++total;
        }
    double rate = static_cast<double>(pos) / static_cast<double>(total);
    CHECK(std::abs(rate - 0.2) < 0.01);
}

TEST_CASE("identical seed gives identical feature matrices") {
    auto cfg = small_cfg();
    auto r1 = derive_stream(7, "world");
    auto r2 = derive_stream(7, "world");
    auto w1 = generate_world(cfg, r1);
    auto w2 = generate_world(cfg, r2);
    CHECK(w1.item_features == w2.item_features);
    CHECK(w1.topic_features == w2.topic_features);
    CHECK(w1.relevance_threshold == w2.relevance_threshold);
}

TEST_CASE("degenerate configs are rejected") {
    auto cfg = small_cfg();
    cfg.d_in = 0;
    auto rng = derive_stream(1, "world");
    CHECK_THROWS_AS(generate_world(cfg, rng), ConfigError);
    cfg = small_cfg();
    cfg.positive_rate = 0.7;
    CHECK_THROWS_AS(generate_world(cfg, rng), ConfigError);
}

TEST_CASE("relevance flag agrees with latent vs threshold") {
    auto cfg = small_cfg();
    auto rng = derive_stream(9, "world");
    auto world = generate_world(cfg, rng);
    for (ItemId i = 0; i < 50; ++i)
        for (TopicIndex t = 0; t < 10; ++t) {
            auto tr = world.true_relevance(i, t);
            CHECK(tr.relevant == (tr.latent >= world.relevance_threshold));
        }
}

TEST_CASE("items split into contiguous equal domain blocks") {
    auto cfg = small_cfg();
    auto rng = derive_stream(3, "world");
    auto world = generate_world(cfg, rng);
    CHECK(world.item_domain(0) == "image");
    CHECK(world.item_domain(static_cast<ItemId>(cfg.num_items / 2 - 1)) == "image");
    CHECK(world.item_domain(static_cast<ItemId>(cfg.num_items / 2)) == "video");
    CHECK(world.item_domain(static_cast<ItemId>(cfg.num_items - 1)) == "video");
}
