#ifndef TEACHER2TASK_BASELINES_HPP
#define TEACHER2TASK_BASELINES_HPP

#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "teacher2task/core.hpp"
#include "teacher2task/model.hpp"
#include "teacher2task/rng.hpp"
#include "teacher2task/train.hpp"

namespace t2t {

enum class AggregationMethod {
    uniform_average,
    weighted_average,
    random_selection,
    oracle_selection
};

inline std::string to_string(AggregationMethod m) {
    switch (m) {
        case AggregationMethod::uniform_average: return "uniform_average";
        case AggregationMethod::weighted_average: return "weighted_average";
        case AggregationMethod::random_selection: return "random_selection";
        case AggregationMethod::oracle_selection: return "oracle_selection";
    }
    throw ConfigError("bad aggregation enum");
}
inline AggregationMethod aggregation_from_string(const std::string& s) {
    if (s == "uniform_average") return AggregationMethod::uniform_average;
    if (s == "weighted_average") return AggregationMethod::weighted_average;
    if (s == "random_selection") return AggregationMethod::random_selection;
    if (s == "oracle_selection") return AggregationMethod::oracle_selection;
    throw ConfigError("unknown aggregation method: " + s);
}

struct AggregationSpec {
    AggregationMethod method = AggregationMethod::uniform_average;
    std::map<std::string, double> weights;  // teacher token -> weight
    // standalone PR-AUC per teacher, required for oracle_selection
    std::map<std::string, double> teacher_pr_auc;
};

struct PseudoLabel {
    ItemId item = 0;
    TopicIndex topic = 0;
    Confidence label;
};

// The heuristic path the identity-conditioned transformation replaces: all
// annotations of one (item, topic) pair collapse into a single target.
// Coverage-restricted teachers make panels partial, so aggregation runs over
// whichever teachers are available per pair.
inline std::vector<PseudoLabel> aggregate_labels(const AggregationSpec& spec,
                                                 const std::vector<AnnotatedSample>& annotations,
                                                 const TeacherRegistry& registry,
                                                 RandomStream& rng) {
    std::map<std::pair<ItemId, TopicIndex>, std::vector<const AnnotatedSample*>> groups;
    for (const auto& a : annotations) groups[{a.item, a.topic}].push_back(&a);
    std::vector<PseudoLabel> out;
    out.reserve(groups.size());
    for (const auto& [key, group] : groups) {
        if (group.empty()) throw ValidationError("empty aggregation group");
        double label = 0.0;
        switch (spec.method) {
            case AggregationMethod::uniform_average: {
                double sum = 0.0;
                for (const auto* a : group) sum += a->score.value();
                label = sum / static_cast<double>(group.size());
                break;
            }
            case AggregationMethod::weighted_average: {
                double num = 0.0, den = 0.0;
                for (const auto* a : group) {
                    auto it = spec.weights.find(registry.token(a->teacher));
                    double w = it == spec.weights.end() ? 0.0 : it->second;
                    num += w * a->score.value();
                    den += w;
                }
                if (den <= 0.0)
                    throw ValidationError("weighted_average group has zero total weight");
                label = num / den;
                break;
            }
            case AggregationMethod::random_selection:
                label = group[rng.uniform_int(group.size())]->score.value();
                break;
            case AggregationMethod::oracle_selection: {
                const AnnotatedSample* best = nullptr;
                double best_pr = -1.0;
                for (const auto* a : group) {
                    auto it = spec.teacher_pr_auc.find(registry.token(a->teacher));
                    if (it == spec.teacher_pr_auc.end())
                        throw ValidationError("oracle_selection missing PR-AUC for teacher " +
                                              registry.token(a->teacher));
                    if (it->second > best_pr) {
                        best_pr = it->second;
                        best = a;
                    }
                }
                label = best->score.value();
                break;
            }
        }
        out.push_back({key.first, key.second, Confidence(label)});
    }
    return out;
}

// Trains the shared model core on aggregated pseudo-labels with no identity
// conditioning: the "teacher predictions as ground truth" baseline. Any truth
// labels passed in are mixed in as additional supervised targets.
inline std::tuple<Parameters, ModelConfig, TrainReport> train_on_aggregate(
    const AggregationSpec& spec, const std::vector<AnnotatedSample>& annotations,
    const std::vector<GroundTruthLabel>& truth_subset, const ModelConfig& model_cfg,
    const TrainConfig& train_cfg, const TeacherRegistry& registry,
    const Eigen::MatrixXd& item_features, const Eigen::MatrixXd& topic_features,
    RandomStream& rng) {
    if (annotations.empty())
        throw ValidationError("train_on_aggregate requires at least one teacher annotation");
    auto pseudo = aggregate_labels(spec, annotations, registry, rng);

    ModelConfig cfg = model_cfg;
    cfg.num_identities = 0;
    TeacherRegistry flat;
    flat.register_teacher("aggregate");
    Dataset ds;
    ds.seed = rng.seed();
    for (const auto& p : pseudo) {
        T2TSample s;
        s.teacher = 0;
        s.item = p.item;
        s.topic = p.topic;
        s.target = p.label;
        ds.samples.push_back(s);
    }
    for (const auto& t : truth_subset) {
        T2TSample s;
        s.teacher = 0;
        s.item = t.item;
        s.topic = t.topic;
        s.target = Confidence(t.relevant ? 1.0 : 0.0);
        ds.samples.push_back(s);
    }
    ds.provenance["aggregate"] = ds.samples.size();
    auto shuffle = rng.child("shuffle");
    for (std::size_t i = ds.samples.size(); i > 1; --i)
        std::swap(ds.samples[i - 1], ds.samples[shuffle.uniform_int(i)]);

    auto [params, report] = train(cfg, train_cfg, ds, flat, item_features, topic_features);
    return {std::move(params), cfg, std::move(report)};
}

}  // namespace t2t

#endif
