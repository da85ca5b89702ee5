#ifndef TEACHER2TASK_EVAL_HPP
#define TEACHER2TASK_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "teacher2task/core.hpp"
#include "teacher2task/rng.hpp"

namespace t2t {

struct TopicSplit {
    std::set<TopicIndex> train_topics;
    std::set<TopicIndex> eval_topics;
    double fraction_unseen = 0.0;
};

// Seeded random partition; |eval| = floor(num_topics * eval_fraction).
inline TopicSplit make_topic_split(std::size_t num_topics, double eval_fraction,
                                   RandomStream& rng) {
    if (eval_fraction <= 0.0 || eval_fraction >= 1.0)
        throw ConfigError("eval_fraction must lie in (0, 1)");
    std::vector<TopicIndex> order(num_topics);
    std::iota(order.begin(), order.end(), TopicIndex{0});
    for (std::size_t i = num_topics; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    std::size_t n_eval = static_cast<std::size_t>(
        static_cast<double>(num_topics) * eval_fraction);
    TopicSplit split;
    for (std::size_t i = 0; i < num_topics; ++i) {
        if (i < n_eval)
            split.eval_topics.insert(order[i]);
        else
            split.train_topics.insert(order[i]);
    }
    split.fraction_unseen =
        static_cast<double>(n_eval) / static_cast<double>(num_topics);
    return split;
}

struct PRPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct PRReport {
    std::vector<PRPoint> curve;  // one point per distinct score threshold
    double pr_auc = 0.0;
    std::size_t num_pos = 0;
    std::size_t num_neg = 0;
};

// Step-wise average precision with ties grouped at a single threshold:
// sort descending by score, at each distinct score emit (recall, precision),
// and integrate pr_auc = sum (R_k - R_{k-1}) * P_k.
inline PRReport pr_curve(const std::vector<std::pair<double, bool>>& scored) {
    std::size_t pos = 0, neg = 0;
    for (const auto& [s, y] : scored) (y ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw ValidationError("pr_curve requires at least one positive and one negative");

    std::vector<std::size_t> order(scored.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scored[a].first > scored[b].first;
    });

    PRReport report;
    report.num_pos = pos;
    report.num_neg = neg;
    std::size_t tp = 0, fp = 0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& [score, label] = scored[order[k]];
        (label ? tp : fp)++;
        bool last_of_group =
            (k + 1 == order.size()) || (scored[order[k + 1]].first != score);
        if (!last_of_group) continue;
        double recall = static_cast<double>(tp) / static_cast<double>(pos);
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        report.curve.push_back({recall, precision});
        report.pr_auc += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return report;
}

// Scores (item, topic) pairs with any scorer and compares against truth labels.
// The scorer is typically predict_as_teacher bound to a queried identity.
template <typename Scorer, typename Truth>
PRReport evaluate_pairs(Scorer&& scorer, const std::vector<std::pair<ItemId, TopicIndex>>& pairs,
                        Truth&& truth) {
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(pairs.size());
    for (const auto& [item, topic] : pairs)
        scored.emplace_back(scorer(item, topic), truth(item, topic));
    return pr_curve(scored);
}

// Precision at recall level r under previous-point (staircase) interpolation:
// the precision of the first curve point whose recall reaches r.
inline double precision_at_recall(const PRReport& report, double r) {
    for (const auto& p : report.curve)
        if (p.recall >= r) return p.precision;
    return report.curve.back().precision;
}

// True iff curve a stays within `tolerance` above curve b in precision at every
// recall level of a common 101-point grid.
inline bool curve_dominates(const PRReport& a, const PRReport& b, double tolerance) {
    for (int k = 0; k <= 100; ++k) {
        double r = static_cast<double>(k) / 100.0;
        if (precision_at_recall(a, r) < precision_at_recall(b, r) - tolerance)
            return false;
    }
    return true;
}

inline void write_pr_csv(const PRReport& report, std::ostream& out) {
    out << "recall,precision\n";
    for (const auto& p : report.curve) {
        out << format_score(p.recall) << "," << format_score(p.precision) << "\n";
    }
}

inline nlohmann::ordered_json pr_report_json(const PRReport& report) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    {
        std::ostringstream os;
        os.precision(6);
        os << std::fixed << report.pr_auc;
        j["pr_auc"] = os.str();
    }
    j["num_pos"] = report.num_pos;
    j["num_neg"] = report.num_neg;
    j["num_thresholds"] = report.curve.size();
    return j;
}

}  // namespace t2t

#endif
