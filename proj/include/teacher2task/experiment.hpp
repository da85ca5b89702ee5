#ifndef TEACHER2TASK_EXPERIMENT_HPP
#define TEACHER2TASK_EXPERIMENT_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "teacher2task/baselines.hpp"
#include "teacher2task/core.hpp"
#include "teacher2task/eval.hpp"
#include "teacher2task/model.hpp"
#include "teacher2task/rng.hpp"
#include "teacher2task/selftrain.hpp"
#include "teacher2task/teacher.hpp"
#include "teacher2task/train.hpp"
#include "teacher2task/transform.hpp"
#include "teacher2task/world.hpp"

namespace t2t {

inline std::string to_string(TeacherKind k) {
    switch (k) {
        case TeacherKind::llm_binary: return "llm_binary";
        case TeacherKind::classifier: return "classifier";
        case TeacherKind::human_panel: return "human_panel";
        case TeacherKind::self_training: return "self_training";
    }
    throw ConfigError("bad teacher kind enum");
}
inline TeacherKind teacher_kind_from_string(const std::string& s) {
    if (s == "llm_binary") return TeacherKind::llm_binary;
    if (s == "classifier") return TeacherKind::classifier;
    if (s == "human_panel") return TeacherKind::human_panel;
    if (s == "self_training") return TeacherKind::self_training;
    throw ConfigError("unknown teacher kind: " + s);
}

struct TeacherSpecConfig {
    std::string token;
    TeacherKind kind = TeacherKind::llm_binary;
    double reliability = 0.0;
    double bias = 0.0;
    double calibration_gamma = 1.0;
    std::vector<std::string> coverage;
    std::size_t panel_size = 1;
    std::size_t budget = 1;
    double style_strength = 0.0;
};

struct SelfTrainSection {
    std::size_t iterations = 2;
    std::map<std::string, std::size_t> sample_repeats;
};

struct BaselineSection {
    AggregationMethod method = AggregationMethod::uniform_average;
    std::map<std::string, double> weights;
};

struct AblateSection {
    std::vector<std::size_t> embedding_sizes;
    std::vector<std::string> architectures;
    std::vector<std::vector<std::size_t>> model_sizes;
    std::vector<std::vector<std::string>> num_teachers;
    std::vector<std::size_t> selftrain_iters;
};

struct ExperimentConfig {
    WorldConfig world;
    std::vector<TeacherSpecConfig> teachers;
    double eval_fraction = 0.3;
    std::size_t groundtruth_budget = 0;
    ModelConfig model;  // d_in / num_identities / num_topics filled at build time
    TrainConfig train;
    std::optional<SelfTrainSection> selftrain;
    std::optional<BaselineSection> baseline;
    std::optional<AblateSection> ablate;
    std::string output_dir = "out";
    std::vector<std::uint64_t> seeds = {1};

    void validate() const {
        world.validate();
        if (teachers.empty() && groundtruth_budget == 0)
            throw ConfigError("experiment needs teachers or ground-truth labels");
        if (eval_fraction <= 0.0 || eval_fraction >= 1.0)
            throw ConfigError("eval_fraction must lie in (0, 1)");
        std::set<std::string> seen;
        for (const auto& t : teachers)
            if (!seen.insert(t.token).second)
                throw ConfigError("duplicate teacher token in config: " + t.token);
        if (seeds.empty()) throw ConfigError("seed list must be nonempty");
        train.validate();
    }
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::string& where,
                         const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key \"" + where + "." + it.key() + "\"");
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    detail::require_keys(j, "$",
                         {"world", "teachers", "eval_fraction", "groundtruth_budget",
                          "model", "train", "selftrain", "baseline", "ablate",
                          "output_dir", "seeds"});
    ExperimentConfig cfg;
    const auto& w = j.at("world");
    detail::require_keys(w, "world",
                         {"num_items", "num_topics", "d_in", "positive_rate", "domains"});
    cfg.world.num_items = w.at("num_items").get<std::size_t>();
    cfg.world.num_topics = w.at("num_topics").get<std::size_t>();
    cfg.world.d_in = w.at("d_in").get<std::size_t>();
    if (w.contains("positive_rate")) cfg.world.positive_rate = w.at("positive_rate").get<double>();
    if (w.contains("domains")) cfg.world.domains = w.at("domains").get<std::vector<std::string>>();

    for (const auto& t : j.at("teachers")) {
        detail::require_keys(t, "teachers[]",
                             {"token", "kind", "reliability", "bias", "calibration_gamma",
                              "coverage", "panel_size", "budget", "style_strength"});
        TeacherSpecConfig ts;
        ts.token = t.at("token").get<std::string>();
        ts.kind = teacher_kind_from_string(t.at("kind").get<std::string>());
        ts.reliability = t.at("reliability").get<double>();
        if (t.contains("bias")) ts.bias = t.at("bias").get<double>();
        if (t.contains("calibration_gamma"))
            ts.calibration_gamma = t.at("calibration_gamma").get<double>();
        ts.coverage = t.at("coverage").get<std::vector<std::string>>();
        if (t.contains("panel_size")) ts.panel_size = t.at("panel_size").get<std::size_t>();
        ts.budget = t.at("budget").get<std::size_t>();
        if (t.contains("style_strength"))
            ts.style_strength = t.at("style_strength").get<double>();
        cfg.teachers.push_back(std::move(ts));
    }
    cfg.eval_fraction = j.at("eval_fraction").get<double>();
    cfg.groundtruth_budget = j.at("groundtruth_budget").get<std::size_t>();

    const auto& m = j.at("model");
    detail::require_keys(m, "model",
                         {"architecture", "embedding_size", "hidden_sizes",
                          "param_budget_label", "loss"});
    cfg.model.architecture = architecture_from_string(m.at("architecture").get<std::string>());
    if (m.contains("embedding_size"))
        cfg.model.embedding_size = m.at("embedding_size").get<std::size_t>();
    cfg.model.hidden_sizes = m.at("hidden_sizes").get<std::vector<std::size_t>>();
    if (m.contains("param_budget_label"))
        cfg.model.param_budget_label = m.at("param_budget_label").get<std::string>();
    if (m.contains("loss")) cfg.model.loss = loss_from_string(m.at("loss").get<std::string>());

    const auto& tr = j.at("train");
    detail::require_keys(tr, "train",
                         {"learning_rate", "batch_size", "epochs", "optimizer",
                          "per_source_weights"});
    if (tr.contains("learning_rate")) cfg.train.learning_rate = tr.at("learning_rate").get<double>();
    if (tr.contains("batch_size")) cfg.train.batch_size = tr.at("batch_size").get<std::size_t>();
    if (tr.contains("epochs")) cfg.train.epochs = tr.at("epochs").get<std::size_t>();
    if (tr.contains("optimizer"))
        cfg.train.optimizer = optimizer_from_string(tr.at("optimizer").get<std::string>());
    if (tr.contains("per_source_weights"))
        cfg.train.per_source_weights =
            tr.at("per_source_weights").get<std::map<std::string, double>>();

    if (j.contains("selftrain")) {
        const auto& st = j.at("selftrain");
        detail::require_keys(st, "selftrain", {"iterations", "sample_repeats"});
        SelfTrainSection s;
        s.iterations = st.at("iterations").get<std::size_t>();
        if (st.contains("sample_repeats"))
            s.sample_repeats = st.at("sample_repeats").get<std::map<std::string, std::size_t>>();
        cfg.selftrain = s;
    }
    if (j.contains("baseline")) {
        const auto& b = j.at("baseline");
        detail::require_keys(b, "baseline", {"method", "weights"});
        BaselineSection s;
        s.method = aggregation_from_string(b.at("method").get<std::string>());
        if (b.contains("weights"))
            s.weights = b.at("weights").get<std::map<std::string, double>>();
        cfg.baseline = s;
    }
    if (j.contains("ablate")) {
        const auto& a = j.at("ablate");
        detail::require_keys(a, "ablate",
                             {"embedding_size", "architecture", "model_size",
                              "num_teachers", "selftrain_iters"});
        AblateSection s;
        if (a.contains("embedding_size"))
            s.embedding_sizes = a.at("embedding_size").get<std::vector<std::size_t>>();
        if (a.contains("architecture"))
            s.architectures = a.at("architecture").get<std::vector<std::string>>();
        if (a.contains("model_size"))
            s.model_sizes = a.at("model_size").get<std::vector<std::vector<std::size_t>>>();
        if (a.contains("num_teachers"))
            s.num_teachers = a.at("num_teachers").get<std::vector<std::vector<std::string>>>();
        if (a.contains("selftrain_iters"))
            s.selftrain_iters = a.at("selftrain_iters").get<std::vector<std::size_t>>();
        cfg.ablate = s;
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.validate();
    return cfg;
}

inline nlohmann::ordered_json experiment_config_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["world"] = {{"num_items", cfg.world.num_items},
                  {"num_topics", cfg.world.num_topics},
                  {"d_in", cfg.world.d_in},
                  {"positive_rate", cfg.world.positive_rate},
                  {"domains", cfg.world.domains}};
    nlohmann::ordered_json teachers = nlohmann::ordered_json::array();
    for (const auto& t : cfg.teachers) {
        teachers.push_back({{"token", t.token},
                            {"kind", to_string(t.kind)},
                            {"reliability", t.reliability},
                            {"bias", t.bias},
                            {"calibration_gamma", t.calibration_gamma},
                            {"coverage", t.coverage},
                            {"panel_size", t.panel_size},
                            {"budget", t.budget},
                            {"style_strength", t.style_strength}});
    }
    j["teachers"] = teachers;
    j["eval_fraction"] = cfg.eval_fraction;
    j["groundtruth_budget"] = cfg.groundtruth_budget;
    j["model"] = {{"architecture", to_string(cfg.model.architecture)},
                  {"embedding_size", cfg.model.embedding_size},
                  {"hidden_sizes", cfg.model.hidden_sizes},
                  {"param_budget_label", cfg.model.param_budget_label},
                  {"loss", to_string(cfg.model.loss)}};
    j["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"optimizer", to_string(cfg.train.optimizer)},
                  {"per_source_weights", cfg.train.per_source_weights}};
    if (cfg.selftrain)
        j["selftrain"] = {{"iterations", cfg.selftrain->iterations},
                          {"sample_repeats", cfg.selftrain->sample_repeats}};
    if (cfg.baseline)
        j["baseline"] = {{"method", to_string(cfg.baseline->method)},
                         {"weights", cfg.baseline->weights}};
    if (cfg.ablate) {
        j["ablate"] = {{"embedding_size", cfg.ablate->embedding_sizes},
                       {"architecture", cfg.ablate->architectures},
                       {"model_size", cfg.ablate->model_sizes},
                       {"num_teachers", cfg.ablate->num_teachers},
                       {"selftrain_iters", cfg.ablate->selftrain_iters}};
    }
    j["output_dir"] = cfg.output_dir;
    j["seeds"] = cfg.seeds;
    return j;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return experiment_config_from_json(j);
}

// Hash of the fully resolved config, used to key output directories.
inline std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = RandomStream::fnv1a(experiment_config_json(cfg).dump());
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// The pinned acceptance benchmark.
inline ExperimentConfig bench_v1() {
    ExperimentConfig cfg;
    cfg.world.num_items = 2000;
    cfg.world.num_topics = 60;
    cfg.world.d_in = 16;
    cfg.world.positive_rate = 0.2;
    cfg.world.domains = {"image", "video"};
    const double kStyle = 0.5;
    cfg.teachers = {
        {"human", TeacherKind::human_panel, 0.2, 0.0, 1.0, {"image", "video"}, 5, 3000, kStyle},
        {"llm_a", TeacherKind::llm_binary, 0.8, 0.0, 1.0, {"image", "video"}, 1, 40000, kStyle},
        {"llm_b", TeacherKind::llm_binary, 0.5, 0.3, 1.0, {"image", "video"}, 1, 40000, kStyle},
        {"specialist", TeacherKind::llm_binary, 0.3, 0.0, 1.0, {"image"}, 1, 20000, kStyle},
    };
    cfg.eval_fraction = 0.3;
    cfg.groundtruth_budget = 12000;
    cfg.model.architecture = Architecture::dual_encoder;
    cfg.model.embedding_size = 64;
    cfg.model.hidden_sizes = {128};
    cfg.model.loss = LossKind::mse;
    cfg.train.learning_rate = 1e-3;
    cfg.train.batch_size = 256;
    cfg.train.epochs = 8;
    cfg.train.optimizer = Optimizer::adam;
    cfg.selftrain = SelfTrainSection{2, {{kGroundTruthToken, 2}, {kSelfTrainToken, 3}}};
    cfg.baseline = BaselineSection{AggregationMethod::uniform_average, {}};
    cfg.seeds = {1, 2, 3, 4, 5};
    return cfg;
}

// Everything one seeded run of an experiment needs, built deterministically.
struct BenchArtifacts {
    std::uint64_t seed = 0;
    World world;
    TeacherRegistry registry;
    std::vector<TeacherSpec> specs;
    TopicSplit split;
    std::vector<TopicIndex> train_topics;  // sorted
    std::vector<AnnotatedSample> annotations;
    std::vector<GroundTruthLabel> ground_truth;
    Dataset dataset;
    std::vector<std::pair<ItemId, TopicIndex>> eval_pairs;
    std::vector<bool> eval_truth;
    ModelConfig model;  // fully resolved (d_in, identities, topics)
    TrainConfig train;
};

inline BenchArtifacts build_bench(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    BenchArtifacts art;
    art.seed = seed;
    auto world_rng = derive_stream(seed, "world");
    art.world = generate_world(cfg.world, world_rng);
    auto split_rng = derive_stream(seed, "split");
    art.split = make_topic_split(cfg.world.num_topics, cfg.eval_fraction, split_rng);
    art.train_topics.assign(art.split.train_topics.begin(), art.split.train_topics.end());

    for (const auto& tc : cfg.teachers) art.registry.register_teacher(tc.token);
    if (cfg.selftrain) art.registry.register_teacher(kSelfTrainToken);
    art.registry.register_teacher(kGroundTruthToken);

    for (const auto& tc : cfg.teachers) {
        TeacherSpec spec;
        spec.id = *art.registry.lookup(tc.token);
        spec.kind = tc.kind;
        spec.reliability = tc.reliability;
        spec.bias = tc.bias;
        spec.calibration_gamma = tc.calibration_gamma;
        spec.coverage = std::set<std::string>(tc.coverage.begin(), tc.coverage.end());
        spec.panel_size = tc.panel_size;
        spec.budget = tc.budget;
        spec.style_strength = tc.style_strength;
        if (spec.style_strength > 0.0) attach_style(spec, seed, cfg.world.d_in);
        spec.validate();
        art.specs.push_back(std::move(spec));
    }

    for (const auto& spec : art.specs) {
        std::vector<ItemId> covered;
        for (std::size_t i = 0; i < cfg.world.num_items; ++i)
            if (spec.coverage.count(art.world.item_domain(static_cast<ItemId>(i))))
                covered.push_back(static_cast<ItemId>(i));
        if (covered.empty())
            throw ConfigError("teacher " + spec.id.token + " covers no items");
        auto sample_rng = derive_stream(seed, "sample/" + spec.id.token);
        std::vector<std::pair<ItemId, TopicIndex>> pairs(spec.budget);
        for (auto& pr : pairs)
            pr = {covered[sample_rng.uniform_int(covered.size())],
                  art.train_topics[sample_rng.uniform_int(art.train_topics.size())]};
        auto noise_rng = derive_stream(seed, "annotate/" + spec.id.token);
        auto anns = teacher_annotate(spec, art.world, pairs, noise_rng);
        art.annotations.insert(art.annotations.end(), anns.begin(), anns.end());
    }

    auto gt_rng = derive_stream(seed, "gt");
    art.ground_truth.reserve(cfg.groundtruth_budget);
    for (std::size_t k = 0; k < cfg.groundtruth_budget; ++k) {
        ItemId item = static_cast<ItemId>(gt_rng.uniform_int(cfg.world.num_items));
        TopicIndex topic = art.train_topics[gt_rng.uniform_int(art.train_topics.size())];
        art.ground_truth.push_back({item, topic, art.world.relevant(item, topic)});
    }

    auto ds_rng = derive_stream(seed, "dataset");
    art.dataset = build_dataset(art.ground_truth, art.annotations, art.registry,
                                IdentityEncoding::onehot, ds_rng);

    for (TopicIndex t : art.split.eval_topics)
        for (std::size_t i = 0; i < cfg.world.num_items; ++i) {
            art.eval_pairs.emplace_back(static_cast<ItemId>(i), t);
            art.eval_truth.push_back(art.world.relevant(static_cast<ItemId>(i), t));
        }

    art.model = cfg.model;
    art.model.d_in = cfg.world.d_in;
    art.model.num_identities = art.registry.size();
    art.model.num_topics = cfg.world.num_topics;
    art.train = cfg.train;
    art.train.seed = seed;
    return art;
}

inline PRReport student_report(const BenchArtifacts& art, const ModelConfig& cfg,
                               const Parameters& params, const std::string& identity) {
    auto id = art.registry.lookup(identity);
    if (!id) {
        std::string known;
        for (const auto& t : art.registry.tokens()) known += (known.empty() ? "" : ", ") + t;
        throw ValidationError("unknown identity \"" + identity +
                              "\"; registered identities: " + known);
    }
    TeacherIndex idx = cfg.num_identities == 0 ? 0 : id->index;
    Eigen::VectorXd scores = score_pairs(cfg, params, art.world.item_features,
                                         art.world.topic_features, art.eval_pairs, idx);
    std::vector<std::pair<double, bool>> scored(art.eval_pairs.size());
    for (std::size_t i = 0; i < art.eval_pairs.size(); ++i)
        scored[i] = {scores(i), art.eval_truth[i]};
    return pr_curve(scored);
}

// Standalone teacher PR curves over the eval pairs within each coverage.
inline std::map<std::string, PRReport> teacher_reports(const BenchArtifacts& art) {
    std::map<std::string, PRReport> out;
    for (const auto& spec : art.specs) {
        std::vector<std::pair<ItemId, TopicIndex>> pairs;
        for (const auto& pr : art.eval_pairs)
            if (spec.coverage.count(art.world.item_domain(pr.first))) pairs.push_back(pr);
        TeacherSpec measured = spec;
        measured.budget = std::max(measured.budget, pairs.size());
        auto rng = derive_stream(art.seed, "teval/" + spec.id.token);
        out[spec.id.token] = measure_teacher_pr(measured, art.world, pairs, rng);
    }
    return out;
}

// Full Teacher2Task run for one seed: train on the N+1 tasks, return params.
inline std::pair<Parameters, TrainReport> run_training(const BenchArtifacts& art) {
    return train(art.model, art.train, art.dataset, art.registry,
                 art.world.item_features, art.world.topic_features);
}

inline SelfTrainConfig selftrain_config_for(const ExperimentConfig& cfg,
                                            const BenchArtifacts& art) {
    if (!cfg.selftrain) throw ConfigError("config has no selftrain section");
    SelfTrainConfig st;
    st.iterations = cfg.selftrain->iterations;
    st.sample_repeats = cfg.selftrain->sample_repeats;
    for (TopicIndex t : art.train_topics)
        for (std::size_t i = 0; i < art.world.num_items(); ++i)
            st.pool.emplace_back(static_cast<ItemId>(i), t);
    return st;
}

inline std::pair<Parameters, SelfTrainReport> run_selftrain(const ExperimentConfig& cfg,
                                                            const BenchArtifacts& art) {
    auto st = selftrain_config_for(cfg, art);
    return self_train(art.dataset, art.registry, art.model, art.train, st,
                      art.world.item_features, art.world.topic_features,
                      art.eval_pairs, art.eval_truth);
}

inline std::pair<Parameters, ModelConfig> run_baseline(const ExperimentConfig& cfg,
                                                       const BenchArtifacts& art) {
    if (!cfg.baseline) throw ConfigError("config has no baseline section");
    AggregationSpec spec;
    spec.method = cfg.baseline->method;
    spec.weights = cfg.baseline->weights;
    if (spec.method == AggregationMethod::oracle_selection)
        for (const auto& [token, report] : teacher_reports(art))
            spec.teacher_pr_auc[token] = report.pr_auc;
    auto rng = derive_stream(art.seed, "baseline");
    auto [params, model_cfg, report] =
        train_on_aggregate(spec, art.annotations, {}, art.model, art.train, art.registry,
                           art.world.item_features, art.world.topic_features, rng);
    return {std::move(params), model_cfg};
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw ValidationError("median of empty set");
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace t2t

#endif
