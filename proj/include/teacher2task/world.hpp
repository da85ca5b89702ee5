#ifndef TEACHER2TASK_WORLD_HPP
#define TEACHER2TASK_WORLD_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teacher2task/core.hpp"
#include "teacher2task/rng.hpp"

namespace t2t {

struct WorldConfig {
    std::size_t num_items = 0;
    std::size_t num_topics = 0;
    std::size_t d_in = 0;
    double positive_rate = 0.2;
    // items are assigned to domains in contiguous equal blocks
    std::vector<std::string> domains = {"image", "video"};

    void validate() const {
        if (num_items < 1 || num_topics < 1 || d_in < 1)
            throw ConfigError("world config requires num_items, num_topics, d_in >= 1");
        if (positive_rate < 0.05 || positive_rate > 0.5)
            throw ConfigError("positive_rate must lie in [0.05, 0.5]");
        if (domains.empty())
            throw ConfigError("at least one domain required");
    }
};

struct TrueRelevance {
    ItemId item = 0;
    TopicIndex topic = 0;
    double latent = 0.0;
    bool relevant = false;
};

// Synthetic ground-truth world: items and topics are feature vectors, the
// latent relevance of a pair is their scaled dot product, and the relevance
// threshold is the empirical quantile matching the configured positive rate.
struct World {
    Eigen::MatrixXd item_features;   // num_items x d_in
    Eigen::MatrixXd topic_features;  // num_topics x d_in
    double relevance_threshold = 0.0;
    std::vector<std::string> domain_names;
    std::vector<std::uint32_t> domain_of_item;

    std::size_t num_items() const { return static_cast<std::size_t>(item_features.rows()); }
    std::size_t num_topics() const { return static_cast<std::size_t>(topic_features.rows()); }
    std::size_t d_in() const { return static_cast<std::size_t>(item_features.cols()); }

    double latent(ItemId item, TopicIndex topic) const {
        return item_features.row(item).dot(topic_features.row(topic)) /
               std::sqrt(static_cast<double>(d_in()));
    }

    bool relevant(ItemId item, TopicIndex topic) const {
        return latent(item, topic) >= relevance_threshold;
    }

    TrueRelevance true_relevance(ItemId item, TopicIndex topic) const {
        double z = latent(item, topic);
        return TrueRelevance{item, topic, z, z >= relevance_threshold};
    }

    const std::string& item_domain(ItemId item) const {
        return domain_names[domain_of_item[item]];
    }
};

inline World generate_world(const WorldConfig& cfg, RandomStream& rng) {
    cfg.validate();
    World w;
    w.item_features.resize(cfg.num_items, cfg.d_in);
    w.topic_features.resize(cfg.num_topics, cfg.d_in);
    auto items_rng = rng.child("items");
    auto topics_rng = rng.child("topics");
    for (std::size_t i = 0; i < cfg.num_items; ++i)
        for (std::size_t k = 0; k < cfg.d_in; ++k)
            w.item_features(i, k) = items_rng.normal();
    for (std::size_t j = 0; j < cfg.num_topics; ++j)
        for (std::size_t k = 0; k < cfg.d_in; ++k)
            w.topic_features(j, k) = topics_rng.normal();

    // threshold = empirical (1 - positive_rate) quantile over all pairs
    std::vector<double> latents;
    latents.reserve(cfg.num_items * cfg.num_topics);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_in));
    Eigen::MatrixXd all = w.item_features * w.topic_features.transpose() * scale;
    for (Eigen::Index i = 0; i < all.rows(); ++i)
        for (Eigen::Index j = 0; j < all.cols(); ++j)
            latents.push_back(all(i, j));
    std::sort(latents.begin(), latents.end());
    if (latents.front() == latents.back())
        throw ConfigError("degenerate world: zero variance in latent scores");
    std::size_t q = static_cast<std::size_t>(
        std::llround((1.0 - cfg.positive_rate) * static_cast<double>(latents.size())));
    q = std::min(q, latents.size() - 1);
    w.relevance_threshold = latents[q];

    w.domain_names = cfg.domains;
    w.domain_of_item.resize(cfg.num_items);
    const std::size_t block =
        (cfg.num_items + cfg.domains.size() - 1) / cfg.domains.size();
    for (std::size_t i = 0; i < cfg.num_items; ++i)
        w.domain_of_item[i] = static_cast<std::uint32_t>(
            std::min(i / block, cfg.domains.size() - 1));

    // sanity: realized positive rate must stay within the supported band
    std::size_t pos = latents.end() - std::lower_bound(latents.begin(), latents.end(),
                                                       w.relevance_threshold);
    double rate = static_cast<double>(pos) / static_cast<double>(latents.size());
    if (rate < 0.04 || rate > 0.51)
        throw ConfigError("realized positive rate out of band: " + std::to_string(rate));
    return w;
}

}  // namespace t2t

#endif
