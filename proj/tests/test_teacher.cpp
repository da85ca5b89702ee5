#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "teacher2task/teacher.hpp"

using namespace t2t;

namespace {

// hand-built 1-d world where pair latents are just the topic feature values
World tiny_world(std::vector<double> topic_latents, double threshold) {
    World w;
    w.item_features = Eigen::MatrixXd::Ones(1, 1);
    w.topic_features.resize(static_cast<Eigen::Index>(topic_latents.size()), 1);
    for (std::size_t i = 0; i < topic_latents.size(); ++i)
        w.topic_features(static_cast<Eigen::Index>(i), 0) = topic_latents[i];
    w.relevance_threshold = threshold;
    w.domain_names = {"image"};
    w.domain_of_item = {0};
    return w;
}

TeacherSpec base_spec(TeacherKind kind) {
    TeacherSpec spec;
    spec.id = {0, "t"};
    spec.kind = kind;
    spec.coverage = {"image"};
    spec.budget = 1000000;
    return spec;
}

World random_world(std::uint64_t seed, std::size_t items = 400, std::size_t topics = 12) {
    WorldConfig cfg;
    cfg.num_items = items;
    cfg.num_topics = topics;
    cfg.d_in = 16;
    auto rng = derive_stream(seed, "world");
    return generate_world(cfg, rng);
}

std::vector<std::pair<ItemId, TopicIndex>> all_pairs(const World& w) {
    std::vector<std::pair<ItemId, TopicIndex>> out;
    for (std::size_t i = 0; i < w.num_items(); ++i)
        for (std::size_t t = 0; t < w.num_topics(); ++t)
            out.emplace_back(static_cast<ItemId>(i), static_cast<TopicIndex>(t));
    return out;
}

}  // namespace

TEST_CASE("noiseless teacher scores 0.5 exactly at the threshold") {
    auto world = tiny_world({0.3}, 0.3);
    auto spec = base_spec(TeacherKind::llm_binary);
    auto rng = derive_stream(1, "ann");
    auto anns = teacher_annotate(spec, world, {{0, 0}}, rng);
    REQUIRE(anns.size() == 1);
    CHECK(anns[0].score.value() == 0.5);
}

TEST_CASE("power calibration: gamma 2 turns raw 0.8 into 0.64") {
    auto world = tiny_world({std::log(4.0)}, 0.0);  // sigmoid(ln 4) = 0.8
    auto spec = base_spec(TeacherKind::llm_binary);
    spec.calibration_gamma = 2.0;
    auto rng = derive_stream(1, "ann");
    auto anns = teacher_annotate(spec, world, {{0, 0}}, rng);
    CHECK(anns[0].score.value() == Catch::Approx(0.64).margin(1e-12));
}

TEST_CASE("out-of-coverage annotation requests are rejected") {
    auto world = random_world(4);
    auto spec = base_spec(TeacherKind::llm_binary);
    spec.coverage = {"image"};
    ItemId video_item = static_cast<ItemId>(world.num_items() - 1);
    REQUIRE(world.item_domain(video_item) == "video");
    auto rng = derive_stream(1, "ann");
    CHECK_THROWS_AS(teacher_annotate(spec, world, {{video_item, 0}}, rng), ValidationError);
}

TEST_CASE("budget overrun is rejected") {
    auto world = tiny_world({0.0, 0.1}, 0.0);
    auto spec = base_spec(TeacherKind::llm_binary);
    spec.budget = 1;
    auto rng = derive_stream(1, "ann");
    CHECK_THROWS_AS(teacher_annotate(spec, world, {{0, 0}, {0, 1}}, rng), ValidationError);
}

TEST_CASE("human panel emits vote fractions and converges to p") {
    auto world = tiny_world({0.3}, 0.3);  // p = 0.5 exactly
    auto spec = base_spec(TeacherKind::human_panel);
    spec.panel_size = 5;
    auto rng = derive_stream(1, "ann");
    for (int rep = 0; rep < 50; ++rep) {
        auto anns = teacher_annotate(spec, world, {{0, 0}}, rng);
        double v = anns[0].score.value() * 5.0;
        CHECK(std::abs(v - std::round(v)) < 1e-12);
    }
    spec.panel_size = 1000;
    auto anns = teacher_annotate(spec, world, {{0, 0}}, rng);
    CHECK(std::abs(anns[0].score.value() - 0.5) < 0.05);
}

TEST_CASE("classifier softmax over a singleton is exactly 1") {
    auto world = tiny_world({0.7}, 0.0);
    auto spec = base_spec(TeacherKind::classifier);
    auto rng = derive_stream(1, "ann");
    auto anns = classifier_annotate(spec, world, 0, {0}, rng);
    REQUIRE(anns.size() == 1);
    CHECK(anns[0].score.value() == 1.0);
}

TEST_CASE("classifier with equal latents and no noise splits mass evenly") {
    auto world = tiny_world({0.4, 0.4, 0.4}, 0.0);
    auto spec = base_spec(TeacherKind::classifier);
    auto rng = derive_stream(1, "ann");
    auto anns = classifier_annotate(spec, world, 0, {0, 1, 2}, rng);
    REQUIRE(anns.size() == 3);
    for (const auto& a : anns)
        CHECK(a.score.value() == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("classifier scores over the topic set sum to 1") {
    auto world = tiny_world({0.4, -0.2, 0.9, 0.1}, 0.0);
    auto spec = base_spec(TeacherKind::classifier);
    spec.reliability = 0.6;
    auto rng = derive_stream(2, "ann");
    for (int rep = 0; rep < 20; ++rep) {
        auto anns = classifier_annotate(spec, world, 0, {0, 1, 2, 3}, rng);
        double sum = 0.0;
        for (const auto& a : anns) sum += a.score.value();
        CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("noiseless unbiased teacher ranks perfectly") {
    auto world = random_world(5);
    auto spec = base_spec(TeacherKind::llm_binary);
    spec.coverage = {"image", "video"};
    auto rng = derive_stream(1, "pr");
    auto report = measure_teacher_pr(spec, world, all_pairs(world), rng);
    CHECK(report.pr_auc == 1.0);
}

TEST_CASE("overwhelming noise degrades a teacher to prevalence-level PR-AUC") {
    auto world = random_world(6);
    auto spec = base_spec(TeacherKind::llm_binary);
    spec.coverage = {"image", "video"};
    spec.reliability = 1000.0;
    auto rng = derive_stream(2, "pr");
    auto report = measure_teacher_pr(spec, world, all_pairs(world), rng);
    double prevalence = static_cast<double>(report.num_pos) /
                        static_cast<double>(report.num_pos + report.num_neg);
    CHECK(std::abs(report.pr_auc - prevalence) < 0.05);
}

TEST_CASE("lower reliability noise gives strictly higher PR-AUC") {
    for (std::uint64_t seed : {11, 12, 13}) {
        auto world = random_world(seed);
        auto quiet = base_spec(TeacherKind::llm_binary);
        quiet.coverage = {"image", "video"};
        quiet.reliability = 0.1;
        auto noisy = quiet;
        noisy.reliability = 2.0;
        auto r1 = derive_stream(seed, "pr-quiet");
        auto r2 = derive_stream(seed, "pr-noisy");
        auto pairs = all_pairs(world);
        CHECK(measure_teacher_pr(quiet, world, pairs, r1).pr_auc >
              measure_teacher_pr(noisy, world, pairs, r2).pr_auc);
    }
}

TEST_CASE("calibration gamma does not change the ranking under shared noise") {
    auto world = random_world(8);
    auto spec = base_spec(TeacherKind::llm_binary);
    spec.coverage = {"image", "video"};
    spec.reliability = 0.5;
    auto g2 = spec;
    g2.calibration_gamma = 2.0;
    auto pairs = all_pairs(world);
    auto r1 = derive_stream(3, "shared");
    auto r2 = derive_stream(3, "shared");
    auto a = measure_teacher_pr(spec, world, pairs, r1);
    auto b = measure_teacher_pr(g2, world, pairs, r2);
    CHECK(a.pr_auc == Catch::Approx(b.pr_auc).margin(1e-12));
}

TEST_CASE("every emitted annotation is a valid confidence") {
    auto world = random_world(9);
    auto spec = base_spec(TeacherKind::llm_binary);
    spec.coverage = {"image", "video"};
    spec.reliability = 1.5;
    spec.bias = -0.7;
    spec.calibration_gamma = 0.5;
    auto rng = derive_stream(4, "fuzz");
    auto anns = teacher_annotate(spec, world, all_pairs(world), rng);
    for (const auto& a : anns) {
        CHECK(a.score.value() >= 0.0);
        CHECK(a.score.value() <= 1.0);
    }
}

TEST_CASE("quadrature weights form a probability distribution") {
    double sum = 0.0;
    for (double w : detail::kGHWeights) sum += w;
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("expected score matches a Monte Carlo estimate") {
    auto world = random_world(10);
    auto spec = base_spec(TeacherKind::llm_binary);
    spec.coverage = {"image", "video"};
    spec.reliability = 0.8;
    spec.bias = 0.2;
    spec.calibration_gamma = 1.5;
    ItemId item = 3;
    TopicIndex topic = 5;
    double expected = teacher_expected_score(spec, world, item, topic);
    auto rng = derive_stream(5, "mc");
    double mc = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double p = detail::raw_probability(spec, world, item, topic, rng);
        mc += detail::calibrate(spec, p);
    }
    mc /= n;
    CHECK(expected == Catch::Approx(mc).margin(2e-3));
}

TEST_CASE("human panel expected score is the expected raw probability") {
    auto world = tiny_world({0.3}, 0.3);
    auto spec = base_spec(TeacherKind::human_panel);
    spec.panel_size = 5;
    CHECK(teacher_expected_score(spec, world, 0, 0) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("style term requires an attached style matrix and is deterministic") {
    auto world = random_world(12);
    auto spec = base_spec(TeacherKind::llm_binary);
    spec.coverage = {"image", "video"};
    spec.reliability = 0.5;
    spec.style_strength = 0.5;
    auto rng = derive_stream(6, "ann");
    CHECK_THROWS_AS(teacher_annotate(spec, world, {{0, 0}}, rng), ConfigError);
    attach_style(spec, 6, world.d_in());
    auto again = spec;
    attach_style(again, 6, world.d_in());
    CHECK(spec.style == again.style);
    CHECK(teacher_expected_score(spec, world, 0, 0) ==
          teacher_expected_score(again, world, 0, 0));
}
