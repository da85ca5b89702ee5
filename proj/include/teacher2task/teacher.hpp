#ifndef TEACHER2TASK_TEACHER_HPP
#define TEACHER2TASK_TEACHER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teacher2task/core.hpp"
#include "teacher2task/eval.hpp"
#include "teacher2task/rng.hpp"
#include "teacher2task/world.hpp"

namespace t2t {

enum class TeacherKind { llm_binary, classifier, human_panel, self_training };

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// Parametric noisy observer of the world. The perturbation on the latent score
// splits into a fixed teacher-specific "style" component (a bilinear function
// of the item and topic features, shared across repeat annotations) and an
// i.i.d. component; style_strength is the fraction of perturbation variance
// carried by the style. Total perturbation std equals `reliability`.
struct TeacherSpec {
    TeacherId id;
    TeacherKind kind = TeacherKind::llm_binary;
    double reliability = 0.0;
    double bias = 0.0;
    double calibration_gamma = 1.0;
    std::set<std::string> coverage;  // domain tags this teacher can annotate
    std::size_t panel_size = 1;
    std::size_t budget = 1;
    double style_strength = 0.0;  // in [0, 1]; 0 = purely i.i.d. noise
    Eigen::MatrixXd style;        // d_in x d_in, attached lazily
    std::string prompt_doc;       // documentation only

    void validate() const {
        if (!std::isfinite(reliability) || reliability < 0.0)
            throw ConfigError("reliability must be finite and >= 0");
        if (!std::isfinite(bias)) throw ConfigError("bias must be finite");
        if (!std::isfinite(calibration_gamma) || calibration_gamma <= 0.0)
            throw ConfigError("calibration_gamma must be finite and > 0");
        if (coverage.empty()) throw ConfigError("coverage must be nonempty");
        if (budget < 1) throw ConfigError("budget must be >= 1");
        if (kind == TeacherKind::human_panel && panel_size < 1)
            throw ConfigError("panel_size must be >= 1");
        if (style_strength < 0.0 || style_strength > 1.0)
            throw ConfigError("style_strength must lie in [0, 1]");
    }
};

// Draws the teacher's fixed style function from its own labeled stream so it
// is stable across annotation calls.
inline void attach_style(TeacherSpec& spec, std::uint64_t seed, std::size_t d_in) {
    auto rng = derive_stream(seed, "style/" + spec.id.token);
    spec.style.resize(d_in, d_in);
    for (std::size_t r = 0; r < d_in; ++r)
        for (std::size_t c = 0; c < d_in; ++c)
            spec.style(r, c) = rng.normal();
}

namespace detail {

inline double style_value(const TeacherSpec& spec, const World& world,
                          ItemId item, TopicIndex topic) {
    if (spec.style_strength == 0.0) return 0.0;
    if (spec.style.rows() != static_cast<Eigen::Index>(world.d_in()))
        throw ConfigError("teacher style matrix not attached (call attach_style)");
    double g = (world.item_features.row(item) * spec.style *
                world.topic_features.row(topic).transpose())(0, 0);
    return g / static_cast<double>(world.d_in());
}

// mean of the perturbed latent (style included) and std of the i.i.d. part
inline std::pair<double, double> perturbation_moments(const TeacherSpec& spec,
                                                      const World& world,
                                                      ItemId item, TopicIndex topic) {
    double mu = world.latent(item, topic) + spec.bias +
                spec.reliability * std::sqrt(spec.style_strength) *
                    style_value(spec, world, item, topic);
    double sigma = spec.reliability * std::sqrt(1.0 - spec.style_strength);
    return {mu, sigma};
}

inline double raw_probability(const TeacherSpec& spec, const World& world,
                              ItemId item, TopicIndex topic, RandomStream& rng) {
    auto [mu, sigma] = perturbation_moments(spec, world, item, topic);
    double z = mu + sigma * rng.normal();
    return sigmoid(z - world.relevance_threshold);
}

inline double calibrate(const TeacherSpec& spec, double p) {
    return std::clamp(std::pow(p, spec.calibration_gamma), 0.0, 1.0);
}

inline void check_coverage(const TeacherSpec& spec, const World& world, ItemId item) {
    if (!spec.coverage.count(world.item_domain(item)))
        throw ValidationError("teacher \"" + spec.id.token +
                              "\" cannot annotate domain \"" + world.item_domain(item) + "\"");
}

}  // namespace detail

inline std::vector<AnnotatedSample> teacher_annotate(
    const TeacherSpec& spec, const World& world,
    const std::vector<std::pair<ItemId, TopicIndex>>& pairs, RandomStream& rng) {
    spec.validate();
    if (spec.kind == TeacherKind::self_training)
        throw ConfigError("self_training teachers do not annotate the world directly");
    if (pairs.size() > spec.budget)
        throw ValidationError("annotation request exceeds teacher budget (" +
                              std::to_string(pairs.size()) + " > " +
                              std::to_string(spec.budget) + ")");
    std::vector<AnnotatedSample> out;
    out.reserve(pairs.size());
    for (const auto& [item, topic] : pairs) {
        detail::check_coverage(spec, world, item);
        double p = detail::raw_probability(spec, world, item, topic, rng);
        double score;
        if (spec.kind == TeacherKind::human_panel) {
            std::size_t votes = 0;
            for (std::size_t v = 0; v < spec.panel_size; ++v)
                votes += rng.uniform() < p ? 1 : 0;
            score = static_cast<double>(votes) / static_cast<double>(spec.panel_size);
        } else {
            score = detail::calibrate(spec, p);
        }
        out.push_back({spec.id.index, item, topic, Confidence(score)});
    }
    return out;
}

// One multi-class inference: per-topic perturbed probabilities normalized by
// softmax over the queried topic set, one sample emitted per topic.
inline std::vector<AnnotatedSample> classifier_annotate(
    const TeacherSpec& spec, const World& world, ItemId item,
    const std::vector<TopicIndex>& topics, RandomStream& rng) {
    spec.validate();
    if (spec.kind != TeacherKind::classifier)
        throw ConfigError("classifier_annotate requires a classifier-kind teacher");
    if (topics.empty()) throw ValidationError("topic set must be nonempty");
    detail::check_coverage(spec, world, item);
    std::vector<double> p(topics.size());
    for (std::size_t k = 0; k < topics.size(); ++k)
        p[k] = detail::raw_probability(spec, world, item, topics[k], rng);
    double pmax = *std::max_element(p.begin(), p.end());
    double denom = 0.0;
    for (double v : p) denom += std::exp(v - pmax);
    std::vector<AnnotatedSample> out;
    out.reserve(topics.size());
    for (std::size_t k = 0; k < topics.size(); ++k)
        out.push_back({spec.id.index, item, topics[k],
                       Confidence(std::exp(p[k] - pmax) / denom)});
    return out;
}

namespace detail {

// 21-node Gauss-Hermite quadrature (probabilists' convention, weights
// normalized to sum 1): E[f(Z)] for Z ~ N(0,1) is sum_i w_i f(x_i).
inline constexpr std::array<double, 21> kGHNodes = {
    -7.8493828951138225, -6.751444718717461,  -5.8293820073044715,
    -4.994963944782025,  -4.214343981688422,  -3.4698466904753764,
    -2.7505929810523733, -2.049102468257163,  -1.3597658232112302,
    -0.678045692440644,  0.0,                 0.678045692440644,
    1.3597658232112302,  2.049102468257163,   2.7505929810523733,
    3.4698466904753764,  4.214343981688422,   4.994963944782025,
    5.8293820073044715,  6.751444718717461,   7.8493828951138225};
inline constexpr std::array<double, 21> kGHWeights = {
    2.0989912195656712e-14, 4.9753686041217186e-11, 1.4506612844930857e-08,
    1.2253548361482526e-06, 4.219234742551663e-05,  0.0007080477954815369,
    0.006439697051408777,   0.033952729786542866,   0.10839228562641949,
    0.2153337156950597,     0.27026018357287707,    0.2153337156950597,
    0.10839228562641949,    0.033952729786542866,   0.006439697051408777,
    0.0007080477954815369,  4.219234742551663e-05,  1.2253548361482526e-06,
    1.4506612844930857e-08, 4.9753686041217186e-11, 2.0989912195656712e-14};

}  // namespace detail

// Expected emitted score for a pair, averaging out the i.i.d. perturbation by
// quadrature. This is the teacher's deterministic labeling-style function; a
// faithful student of the teacher's identity should regress onto it. For a
// human panel the vote mean is an unbiased estimate of p, so the expectation
// is E[p]; binary scorers expect E[clamp(p^gamma)].
inline double teacher_expected_score(const TeacherSpec& spec, const World& world,
                                     ItemId item, TopicIndex topic) {
    spec.validate();
    detail::check_coverage(spec, world, item);
    auto [mu, sigma] = detail::perturbation_moments(spec, world, item, topic);
    double acc = 0.0;
    for (std::size_t i = 0; i < detail::kGHNodes.size(); ++i) {
        double p = sigmoid(mu + sigma * detail::kGHNodes[i] - world.relevance_threshold);
        double s = spec.kind == TeacherKind::human_panel ? p : detail::calibrate(spec, p);
        acc += detail::kGHWeights[i] * s;
    }
    return acc;
}

// Standalone PR of a teacher over eval pairs within its coverage, using a
// dedicated labeled stream so the measurement is reproducible.
inline PRReport measure_teacher_pr(const TeacherSpec& spec, const World& world,
                                   const std::vector<std::pair<ItemId, TopicIndex>>& eval_pairs,
                                   RandomStream& rng) {
    auto anns = teacher_annotate(spec, world, eval_pairs, rng);
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(anns.size());
    for (const auto& a : anns)
        scored.emplace_back(a.score.value(), world.relevant(a.item, a.topic));
    return pr_curve(scored);
}

}  // namespace t2t

#endif
