#ifndef TEACHER2TASK_SELFTRAIN_HPP
#define TEACHER2TASK_SELFTRAIN_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "teacher2task/core.hpp"
#include "teacher2task/eval.hpp"
#include "teacher2task/model.hpp"
#include "teacher2task/train.hpp"
#include "teacher2task/transform.hpp"

namespace t2t {

inline constexpr const char* kSelfTrainToken = "selftrain";

struct SelfTrainConfig {
    std::size_t iterations = 2;
    std::vector<std::pair<ItemId, TopicIndex>> pool;  // unlabeled pairs
    std::string query_identity = kGroundTruthToken;
    std::string selftrain_identity = kSelfTrainToken;
    std::optional<std::pair<double, double>> confidence_filter;  // drop scores inside
    // over-sampling multiplicities applied when assembling each round's data
    std::map<std::string, std::size_t> sample_repeats;
    // each round retrains from a fresh initialization on its own seed offset,
    // which keeps later rounds from being stuck at the previous fixed point
    std::uint64_t seed_stride = 101;

    void validate() const {
        if (query_identity == selftrain_identity)
            throw ConfigError("selftrain identity must differ from the query identity");
        if (confidence_filter) {
            auto [lo, hi] = *confidence_filter;
            if (!(lo <= hi) || lo < 0.0 || hi > 1.0)
                throw ConfigError("confidence_filter band must satisfy 0 <= lo <= hi <= 1");
        }
    }
};

struct SelfTrainIteration {
    double pr_auc = 0.0;
    std::size_t pseudo_labels = 0;  // selftrain samples used in this round
};

struct SelfTrainReport {
    std::vector<SelfTrainIteration> iterations;  // entry 0 = no pseudo-labels yet
};

// Iterative pseudo-labeling under a dedicated teacher identity. Each round:
// train, score the unlabeled pool as `query_identity`, wrap the scores as
// annotations of `selftrain_identity`, replace (not accumulate) the previous
// round's pseudo-labels, retrain. Pseudo-labels never carry the ground-truth
// identity, which is the mechanism that prevents confirmation bias.
inline std::pair<Parameters, SelfTrainReport> self_train(
    const Dataset& base_dataset, const TeacherRegistry& registry,
    const ModelConfig& model_cfg, const TrainConfig& train_cfg,
    const SelfTrainConfig& st_cfg,
    const Eigen::MatrixXd& item_features, const Eigen::MatrixXd& topic_features,
    const std::vector<std::pair<ItemId, TopicIndex>>& eval_pairs,
    const std::vector<bool>& eval_truth) {
    st_cfg.validate();
    if (st_cfg.iterations > 0 && st_cfg.pool.empty())
        throw ValidationError("self-training pool must be nonempty");
    auto st_id = registry.lookup(st_cfg.selftrain_identity);
    if (!st_id)
        throw ValidationError("selftrain identity not registered: " + st_cfg.selftrain_identity);
    auto query_id = registry.lookup(st_cfg.query_identity);
    if (!query_id)
        throw ValidationError("query identity not registered: " + st_cfg.query_identity);
    for (const auto& s : base_dataset.samples)
        if (s.teacher == st_id->index)
            throw ValidationError("base dataset already contains selftrain samples");

    Dataset current = base_dataset;
    Parameters params;
    SelfTrainReport report;
    for (std::size_t iter = 0; iter <= st_cfg.iterations; ++iter) {
        TrainConfig round_cfg = train_cfg;
        round_cfg.seed = train_cfg.seed + iter * st_cfg.seed_stride;
        Dataset round_data = st_cfg.sample_repeats.empty()
                                 ? current
                                 : repeat_sources(current, registry, st_cfg.sample_repeats);
        auto [p, tr] = train(model_cfg, round_cfg, round_data, registry,
                             item_features, topic_features);
        params = std::move(p);

        SelfTrainIteration entry;
        entry.pseudo_labels = current.provenance.count(st_cfg.selftrain_identity)
                                  ? current.provenance.at(st_cfg.selftrain_identity)
                                  : 0;
        Eigen::VectorXd scores = score_pairs(model_cfg, params, item_features,
                                             topic_features, eval_pairs, query_id->index);
        std::vector<std::pair<double, bool>> scored(eval_pairs.size());
        for (std::size_t i = 0; i < eval_pairs.size(); ++i)
            scored[i] = {scores(i), eval_truth[i]};
        entry.pr_auc = pr_curve(scored).pr_auc;
        report.iterations.push_back(entry);
        if (iter == st_cfg.iterations) break;

        // relabel the pool with the round's model and swap the pseudo-labels in
        Eigen::VectorXd pool_scores = score_pairs(model_cfg, params, item_features,
                                                  topic_features, st_cfg.pool,
                                                  query_id->index);
        Dataset next;
        next.seed = current.seed;
        for (const auto& s : base_dataset.samples) {
            next.samples.push_back(s);
            next.provenance[registry.token(s.teacher)]++;
        }
        std::size_t added = 0;
        for (std::size_t i = 0; i < st_cfg.pool.size(); ++i) {
            double sc = pool_scores(i);
            if (st_cfg.confidence_filter) {
                auto [lo, hi] = *st_cfg.confidence_filter;
                if (sc >= lo && sc <= hi) continue;
            }
            T2TSample s;
            s.teacher = st_id->index;
            s.item = st_cfg.pool[i].first;
            s.topic = st_cfg.pool[i].second;
            s.target = Confidence(sc);
            next.samples.push_back(s);
            ++added;
        }
        if (added > 0) next.provenance[st_cfg.selftrain_identity] = added;
        next.check_invariants();
        current = std::move(next);
    }
    return {params, report};
}

inline nlohmann::ordered_json selftrain_report_json(const SelfTrainReport& report) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < report.iterations.size(); ++i) {
        nlohmann::ordered_json row;
        row["iteration"] = i;
        std::ostringstream os;
        os.precision(6);
        os << std::fixed << report.iterations[i].pr_auc;
        row["pr_auc"] = os.str();
        row["pseudo_labels"] = report.iterations[i].pseudo_labels;
        rows.push_back(row);
    }
    j["iterations"] = rows;
    return j;
}

}  // namespace t2t

#endif
