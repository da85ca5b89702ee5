#ifndef TEACHER2TASK_TRAIN_HPP
#define TEACHER2TASK_TRAIN_HPP

#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "teacher2task/core.hpp"
#include "teacher2task/model.hpp"
#include "teacher2task/rng.hpp"

namespace t2t {

enum class Optimizer { sgd, adam };

inline std::string to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adam"; }
inline Optimizer optimizer_from_string(const std::string& s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "adam") return Optimizer::adam;
    throw ConfigError("unknown optimizer: " + s);
}

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 256;
    std::size_t epochs = 8;
    Optimizer optimizer = Optimizer::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::map<std::string, double> per_source_weights;  // identity -> weight, default 1
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
            throw ConfigError("learning_rate must be finite and >= 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        for (const auto& [k, w] : per_source_weights)
            if (!std::isfinite(w) || w < 0.0)
                throw ConfigError("per_source weight for \"" + k + "\" must be finite, >= 0");
    }
};

struct TrainReport {
    std::vector<double> epoch_losses;  // mean batch loss per epoch
    std::map<std::string, std::size_t> samples_seen;  // per identity, per epoch pass
    double wall_seconds = 0.0;
};

// Optimizer state over the flat parameter vector.
struct OptimizerState {
    std::vector<double> m, v;
    std::size_t t = 0;

    void init(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        t = 0;
    }

    void step(const TrainConfig& cfg, Parameters& params, const std::vector<double>& grad) {
        if (cfg.optimizer == Optimizer::sgd) {
            for (std::size_t i = 0; i < params.values.size(); ++i)
                params.values[i] -= cfg.learning_rate * grad[i];
            return;
        }
        ++t;
        const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.values.size(); ++i) {
            double g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            params.values[i] -=
                cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam_eps);
        }
    }
};

struct TrainState {
    ModelConfig model_cfg;
    TrainConfig train_cfg;
    Parameters params;
    OptimizerState opt;
    std::size_t epochs_done = 0;
};

namespace detail {

// Dataset flattened into contiguous arrays for batched gradient math.
struct TrainArrays {
    Eigen::MatrixXd items, topics;
    std::vector<TeacherIndex> identities;
    std::vector<TopicIndex> topic_indices;
    Eigen::VectorXd targets;
    Eigen::VectorXd weights;
    std::map<std::string, std::size_t> per_identity;
};

// Sources with weight exactly 0 are dropped before any batching so that a
// zero-weighted run is bit-identical to training on the reduced dataset.
inline TrainArrays flatten_dataset(const Dataset& ds, const TeacherRegistry& registry,
                                   const TrainConfig& cfg,
                                   const Eigen::MatrixXd& item_features,
                                   const Eigen::MatrixXd& topic_features) {
    auto weight_of = [&](const std::string& token) {
        auto it = cfg.per_source_weights.find(token);
        return it == cfg.per_source_weights.end() ? 1.0 : it->second;
    };
    std::vector<const T2TSample*> kept;
    kept.reserve(ds.samples.size());
    for (const auto& s : ds.samples)
        if (weight_of(registry.token(s.teacher)) > 0.0) kept.push_back(&s);
    if (kept.empty()) throw ValidationError("no training samples left after source weighting");

    TrainArrays a;
    const std::size_t n = kept.size();
    a.items.resize(n, item_features.cols());
    a.topics.resize(n, topic_features.cols());
    a.identities.resize(n);
    a.topic_indices.resize(n);
    a.targets.resize(n);
    a.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T2TSample& s = *kept[i];
        a.items.row(i) = item_features.row(s.item);
        a.topics.row(i) = topic_features.row(s.topic);
        a.identities[i] = s.teacher;
        a.topic_indices[i] = s.topic;
        a.targets(i) = s.target.value();
        a.weights(i) = weight_of(registry.token(s.teacher));
        a.per_identity[registry.token(s.teacher)]++;
    }
    return a;
}

}  // namespace detail

// One full pass over the data in a given order; returns mean batch loss.
inline double train_epoch_stream(TrainState& state, const detail::TrainArrays& data,
                                 const std::vector<std::size_t>& order) {
    const std::size_t n = order.size();
    const std::size_t bs = state.train_cfg.batch_size;
    std::vector<double> grad;
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t k0 = 0; k0 < n; k0 += bs) {
        const std::size_t m = std::min(bs, n - k0);
        BatchView batch;
        batch.items.resize(m, data.items.cols());
        batch.topics.resize(m, data.topics.cols());
        batch.identities.resize(m);
        batch.topic_indices.resize(m);
        batch.targets.resize(m);
        batch.weights.resize(m);
        for (std::size_t r = 0; r < m; ++r) {
            std::size_t i = order[k0 + r];
            batch.items.row(r) = data.items.row(i);
            batch.topics.row(r) = data.topics.row(i);
            batch.identities[r] = data.identities[i];
            batch.topic_indices[r] = data.topic_indices[i];
            batch.targets(r) = data.targets(i);
            batch.weights(r) = data.weights(i);
        }
        double loss = loss_and_grad(state.model_cfg, state.params, batch, grad);
        state.opt.step(state.train_cfg, state.params, grad);
        loss_sum += loss;
        ++batches;
    }
    return loss_sum / static_cast<double>(batches);
}

// Mini-batch training over a transformed dataset. Deterministic: the epoch
// shuffle comes from a labeled stream keyed by the epoch number, so a resumed
// run retraces the interrupted one exactly.
inline std::pair<Parameters, TrainReport> train(const ModelConfig& model_cfg,
                                                const TrainConfig& train_cfg,
                                                const Dataset& dataset,
                                                const TeacherRegistry& registry,
                                                const Eigen::MatrixXd& item_features,
                                                const Eigen::MatrixXd& topic_features,
                                                TrainState* resume = nullptr) {
    model_cfg.validate();
    train_cfg.validate();
    if (dataset.samples.empty()) throw ValidationError("cannot train on an empty dataset");
    auto t0 = std::chrono::steady_clock::now();

    auto data = detail::flatten_dataset(dataset, registry, train_cfg,
                                        item_features, topic_features);
    TrainState local;
    TrainState& state = resume ? *resume : local;
    if (!resume) {
        state.model_cfg = model_cfg;
        state.train_cfg = train_cfg;
        auto init_rng = derive_stream(train_cfg.seed, "init");
        state.params = init_params(model_cfg, init_rng);
        state.opt.init(state.params.values.size());
    }

    TrainReport report;
    report.samples_seen = data.per_identity;
    const std::size_t n = data.identities.size();
    std::vector<std::size_t> order(n);
    for (std::size_t ep = state.epochs_done; ep < train_cfg.epochs; ++ep) {
        auto shuffle = derive_stream(train_cfg.seed, "epoch:" + std::to_string(ep));
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle.uniform_int(i)]);
        report.epoch_losses.push_back(train_epoch_stream(state, data, order));
        state.epochs_done = ep + 1;
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {state.params, report};
}

inline nlohmann::ordered_json train_report_json(const TrainReport& report) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["epoch_losses"] = report.epoch_losses;
    nlohmann::ordered_json seen = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.samples_seen) seen[k] = v;
    j["samples_seen"] = seen;
    // wall time deliberately not serialized: report files must be rerun-stable
    return j;
}

}  // namespace t2t

#endif
