#ifndef TEACHER2TASK_MODEL_HPP
#define TEACHER2TASK_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "teacher2task/core.hpp"
#include "teacher2task/rng.hpp"
#include "teacher2task/teacher.hpp"

namespace t2t {

enum class Architecture { encoder_only, dual_encoder, multi_head };
enum class LossKind { mse, bce };

inline std::string to_string(Architecture a) {
    switch (a) {
        case Architecture::encoder_only: return "encoder_only";
        case Architecture::dual_encoder: return "dual_encoder";
        case Architecture::multi_head: return "multi_head";
    }
    throw ConfigError("bad architecture enum");
}
inline Architecture architecture_from_string(const std::string& s) {
    if (s == "encoder_only") return Architecture::encoder_only;
    if (s == "dual_encoder") return Architecture::dual_encoder;
    if (s == "multi_head") return Architecture::multi_head;
    throw ConfigError("unknown architecture: " + s);
}
inline std::string to_string(LossKind l) {
    return l == LossKind::mse ? "mse" : "bce";
}
inline LossKind loss_from_string(const std::string& s) {
    if (s == "mse") return LossKind::mse;
    if (s == "bce") return LossKind::bce;
    throw ConfigError("unknown loss: " + s);
}

struct ModelConfig {
    Architecture architecture = Architecture::dual_encoder;
    std::size_t embedding_size = 64;  // dual_encoder only
    std::vector<std::size_t> hidden_sizes = {128};
    std::string param_budget_label = "small";
    LossKind loss = LossKind::mse;
    std::size_t d_in = 0;
    std::size_t num_identities = 0;  // 0 = unconditioned supervised model
    std::size_t num_topics = 0;      // multi_head only

    void validate() const {
        if (d_in < 1) throw ConfigError("model d_in must be >= 1");
        if (architecture == Architecture::dual_encoder && embedding_size < 1)
            throw ConfigError("dual_encoder requires embedding_size >= 1");
        if (architecture == Architecture::multi_head && num_topics < 1)
            throw ConfigError("multi_head requires num_topics >= 1");
        for (auto h : hidden_sizes)
            if (h < 1) throw ConfigError("hidden sizes must be positive");
    }
};

struct TensorSlice {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool is_weight = false;  // weights get Glorot init, everything else zeros
};

struct Parameters {
    std::vector<double> values;
    std::vector<TensorSlice> layout;

    Eigen::Map<Eigen::MatrixXd> tensor(std::size_t i) {
        const auto& t = layout[i];
        return Eigen::Map<Eigen::MatrixXd>(values.data() + t.offset, t.rows, t.cols);
    }
    Eigen::Map<const Eigen::MatrixXd> tensor(std::size_t i) const {
        const auto& t = layout[i];
        return Eigen::Map<const Eigen::MatrixXd>(values.data() + t.offset, t.rows, t.cols);
    }
};

namespace detail {

// MLP trunk dims per architecture; the dual-encoder trunk is its item tower.
inline std::vector<std::size_t> trunk_dims(const ModelConfig& cfg) {
    std::vector<std::size_t> dims;
    switch (cfg.architecture) {
        case Architecture::encoder_only:
            // [item, topic, item*topic, identity onehot] -> scalar logit
            dims.push_back(3 * cfg.d_in + cfg.num_identities);
            for (auto h : cfg.hidden_sizes) dims.push_back(h);
            dims.push_back(1);
            break;
        case Architecture::dual_encoder:
            dims.push_back(cfg.d_in + cfg.num_identities);
            for (auto h : cfg.hidden_sizes) dims.push_back(h);
            dims.push_back(cfg.embedding_size);
            break;
        case Architecture::multi_head:
            dims.push_back(cfg.d_in + cfg.num_identities);
            for (auto h : cfg.hidden_sizes) dims.push_back(h);
            dims.push_back(cfg.num_topics);
            break;
    }
    return dims;
}

}  // namespace detail

inline std::vector<TensorSlice> param_layout(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<TensorSlice> layout;
    std::size_t offset = 0;
    auto add = [&](const std::string& name, std::size_t r, std::size_t c, bool w) {
        layout.push_back({name, offset, r, c, w});
        offset += r * c;
    };
    auto dims = detail::trunk_dims(cfg);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        add("W" + std::to_string(i), dims[i], dims[i + 1], true);
        add("b" + std::to_string(i), 1, dims[i + 1], false);
    }
    if (cfg.architecture == Architecture::dual_encoder) {
        // linear topic tower; an MLP here would memorize the training topics
        // and lose the unseen-topic generalization the eval split measures
        add("Wt", cfg.d_in, cfg.embedding_size, true);
        add("bt", 1, cfg.embedding_size, false);
        add("b", 1, 1, false);
    }
    return layout;
}

inline std::size_t param_count(const ModelConfig& cfg) {
    std::size_t n = 0;
    for (const auto& t : param_layout(cfg)) n += t.rows * t.cols;
    return n;
}

inline Parameters init_params(const ModelConfig& cfg, RandomStream& rng) {
    Parameters p;
    p.layout = param_layout(cfg);
    const auto& last = p.layout.back();
    p.values.assign(last.offset + last.rows * last.cols, 0.0);
    for (std::size_t i = 0; i < p.layout.size(); ++i) {
        if (!p.layout[i].is_weight) continue;
        auto m = p.tensor(i);
        double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
    }
    return p;
}

struct Prediction {
    double logit = 0.0;
    Confidence score;
};

namespace detail {

// Assembles the trunk input matrix for a batch. Identity indices may be
// anything when num_identities == 0 (the onehot block is empty).
inline Eigen::MatrixXd trunk_input(const ModelConfig& cfg, const Eigen::MatrixXd& items,
                                   const Eigen::MatrixXd& topics,
                                   const std::vector<TeacherIndex>& ids) {
    const auto n = items.rows();
    const std::size_t d = cfg.d_in;
    std::size_t width = cfg.architecture == Architecture::encoder_only
                            ? 3 * d + cfg.num_identities
                            : d + cfg.num_identities;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, width);
    x.leftCols(d) = items;
    std::size_t onehot_at = d;
    if (cfg.architecture == Architecture::encoder_only) {
        x.middleCols(d, d) = topics;
        x.middleCols(2 * d, d) = items.cwiseProduct(topics);
        onehot_at = 3 * d;
    }
    if (cfg.num_identities > 0) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (ids[i] >= cfg.num_identities)
                throw ValidationError("identity index out of range for model");
            x(i, onehot_at + ids[i]) = 1.0;
        }
    }
    return x;
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = trunk input
    Eigen::MatrixXd topic_emb;          // dual only
    Eigen::VectorXd logits;
};

inline std::size_t trunk_layers(const ModelConfig& cfg) {
    return detail::trunk_dims(cfg).size() - 1;
}

inline ForwardCache forward_batch(const ModelConfig& cfg, const Parameters& params,
                                  const Eigen::MatrixXd& items, const Eigen::MatrixXd& topics,
                                  const std::vector<TeacherIndex>& ids,
                                  const std::vector<TopicIndex>* topic_heads = nullptr) {
    ForwardCache fc;
    fc.acts.push_back(trunk_input(cfg, items, topics, ids));
    const std::size_t L = trunk_layers(cfg);
    for (std::size_t l = 0; l < L; ++l) {
        auto W = params.tensor(2 * l);
        auto b = params.tensor(2 * l + 1);
        Eigen::MatrixXd z = (fc.acts.back() * W).rowwise() + b.row(0);
        if (l + 1 < L) z = z.cwiseMax(0.0);
        fc.acts.push_back(std::move(z));
    }
    const auto n = items.rows();
    fc.logits.resize(n);
    switch (cfg.architecture) {
        case Architecture::encoder_only:
            fc.logits = fc.acts.back().col(0);
            break;
        case Architecture::dual_encoder: {
            auto Wt = params.tensor(2 * L);
            auto bt = params.tensor(2 * L + 1);
            auto b = params.tensor(2 * L + 2);
            fc.topic_emb = (topics * Wt).rowwise() + bt.row(0);
            double scale = 1.0 / std::sqrt(static_cast<double>(cfg.embedding_size));
            fc.logits = (fc.acts.back().cwiseProduct(fc.topic_emb)).rowwise().sum() * scale;
            fc.logits.array() += b(0, 0);
            break;
        }
        case Architecture::multi_head: {
            if (!topic_heads)
                throw ValidationError("multi_head forward requires queried topic indices");
            for (Eigen::Index i = 0; i < n; ++i) {
                TopicIndex t = (*topic_heads)[i];
                if (t >= cfg.num_topics)
                    throw ValidationError("topic head index out of range");
                fc.logits(i) = fc.acts.back()(i, t);
            }
            break;
        }
    }
    return fc;
}

}  // namespace detail

// Single-pair forward pass.
inline Prediction forward(const ModelConfig& cfg, const Parameters& params,
                          const Eigen::RowVectorXd& item, const Eigen::RowVectorXd& topic,
                          TeacherIndex identity, TopicIndex topic_index = 0) {
    std::vector<TeacherIndex> ids{identity};
    std::vector<TopicIndex> heads{topic_index};
    auto fc = detail::forward_batch(cfg, params, item, topic, ids, &heads);
    Prediction p;
    p.logit = fc.logits(0);
    p.score = Confidence(sigmoid(p.logit));
    return p;
}

struct BatchView {
    Eigen::MatrixXd items;   // n x d_in
    Eigen::MatrixXd topics;  // n x d_in
    std::vector<TeacherIndex> identities;
    std::vector<TopicIndex> topic_indices;
    Eigen::VectorXd targets;
    Eigen::VectorXd weights;  // per-sample loss weights
};

// Loss over a batch and the exact analytic gradient in parameter layout.
inline double loss_and_grad(const ModelConfig& cfg, const Parameters& params,
                            const BatchView& batch, std::vector<double>& grad_out) {
    const auto n = batch.items.rows();
    if (n == 0) throw ValidationError("loss_and_grad requires a nonempty batch");
    auto fc = detail::forward_batch(cfg, params, batch.items, batch.topics,
                                    batch.identities, &batch.topic_indices);
    Eigen::ArrayXd s = fc.logits.array().unaryExpr([](double z) { return sigmoid(z); });
    Eigen::ArrayXd y = batch.targets.array();
    Eigen::ArrayXd w = batch.weights.array();
    const double inv_n = 1.0 / static_cast<double>(n);

    double loss = 0.0;
    Eigen::ArrayXd dlogit(n);
    if (cfg.loss == LossKind::mse) {
        Eigen::ArrayXd diff = s - y;
        loss = (w * diff.square()).sum() * inv_n;
        dlogit = 2.0 * w * diff * s * (1.0 - s) * inv_n;
    } else {
        const double lo = 1e-7, hi = 1.0 - 1e-7;
        Eigen::ArrayXd sc = s.min(hi).max(lo);
        loss = (w * -(y * sc.log() + (1.0 - y) * (1.0 - sc).log())).sum() * inv_n;
        // clamp has zero derivative where it is active
        Eigen::ArrayXd inside = ((s > lo) && (s < hi)).cast<double>();
        dlogit = w * (sc - y) * inside * inv_n;
    }
    if (!std::isfinite(loss))
        throw TrainingError("nonfinite loss in batch of size " + std::to_string(n));

    grad_out.assign(params.values.size(), 0.0);
    Parameters grad;
    grad.values.swap(grad_out);
    grad.layout = params.layout;

    const std::size_t L = detail::trunk_layers(cfg);
    Eigen::MatrixXd d_last;  // gradient wrt trunk output, n x dims.back()
    switch (cfg.architecture) {
        case Architecture::encoder_only:
            d_last = dlogit.matrix();
            break;
        case Architecture::dual_encoder: {
            auto Wt = params.tensor(2 * L);
            double scale = 1.0 / std::sqrt(static_cast<double>(cfg.embedding_size));
            Eigen::MatrixXd dl = dlogit.matrix();
            d_last = (dl * Eigen::RowVectorXd::Ones(cfg.embedding_size))
                         .cwiseProduct(fc.topic_emb) * scale;
            Eigen::MatrixXd det = (dl * Eigen::RowVectorXd::Ones(cfg.embedding_size))
                                      .cwiseProduct(fc.acts.back()) * scale;
            grad.tensor(2 * L) = batch.topics.transpose() * det;
            grad.tensor(2 * L + 1) = det.colwise().sum();
            grad.tensor(2 * L + 2)(0, 0) = dlogit.sum();
            break;
        }
        case Architecture::multi_head: {
            d_last = Eigen::MatrixXd::Zero(n, cfg.num_topics);
            for (Eigen::Index i = 0; i < n; ++i)
                d_last(i, batch.topic_indices[i]) = dlogit(i);
            break;
        }
    }
    Eigen::MatrixXd d = std::move(d_last);
    for (std::size_t l = L; l-- > 0;) {
        grad.tensor(2 * l) = fc.acts[l].transpose() * d;
        grad.tensor(2 * l + 1) = d.colwise().sum();
        if (l > 0) {
            auto W = params.tensor(2 * l);
            d = (d * W.transpose()).cwiseProduct(
                (fc.acts[l].array() > 0.0).cast<double>().matrix());
        }
    }
    grad_out.swap(grad.values);
    return loss;
}

// Query-time entry point: score one (item, topic) pair under a chosen
// identity, including the reserved "groundtruth" one.
inline Confidence predict_as_teacher(const ModelConfig& cfg, const Parameters& params,
                                     const TeacherRegistry& registry,
                                     const std::string& identity_token,
                                     const Eigen::RowVectorXd& item,
                                     const Eigen::RowVectorXd& topic,
                                     TopicIndex topic_index = 0) {
    auto id = registry.lookup(identity_token);
    if (!id) throw ValidationError("unknown identity token: " + identity_token);
    return forward(cfg, params, item, topic, id->index, topic_index).score;
}

// Batched scoring of many pairs under one identity (eval fast path).
inline Eigen::VectorXd score_pairs(const ModelConfig& cfg, const Parameters& params,
                                   const Eigen::MatrixXd& item_features,
                                   const Eigen::MatrixXd& topic_features,
                                   const std::vector<std::pair<ItemId, TopicIndex>>& pairs,
                                   TeacherIndex identity) {
    const std::size_t chunk = 8192;
    Eigen::VectorXd out(pairs.size());
    for (std::size_t k0 = 0; k0 < pairs.size(); k0 += chunk) {
        std::size_t m = std::min(chunk, pairs.size() - k0);
        Eigen::MatrixXd xi(m, cfg.d_in), xt(m, cfg.d_in);
        std::vector<TeacherIndex> ids(m, identity);
        std::vector<TopicIndex> heads(m);
        for (std::size_t r = 0; r < m; ++r) {
            xi.row(r) = item_features.row(pairs[k0 + r].first);
            xt.row(r) = topic_features.row(pairs[k0 + r].second);
            heads[r] = pairs[k0 + r].second;
        }
        auto fc = detail::forward_batch(cfg, params, xi, xt, ids, &heads);
        for (std::size_t r = 0; r < m; ++r) out(k0 + r) = sigmoid(fc.logits(r));
    }
    return out;
}

// Dual-encoder factorization: cached tower outputs reproduce the direct path.
inline Eigen::VectorXd item_embedding(const ModelConfig& cfg, const Parameters& params,
                                      const Eigen::RowVectorXd& item, TeacherIndex identity) {
    if (cfg.architecture != Architecture::dual_encoder)
        throw ConfigError("item_embedding is a dual_encoder operation");
    std::vector<TeacherIndex> ids{identity};
    Eigen::MatrixXd x = detail::trunk_input(cfg, item, Eigen::MatrixXd::Zero(1, cfg.d_in), ids);
    const std::size_t L = detail::trunk_layers(cfg);
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < L; ++l) {
        a = (a * params.tensor(2 * l)).rowwise() + params.tensor(2 * l + 1).row(0);
        if (l + 1 < L) a = a.cwiseMax(0.0);
    }
    return a.row(0);
}

inline Eigen::VectorXd topic_embedding(const ModelConfig& cfg, const Parameters& params,
                                       const Eigen::RowVectorXd& topic) {
    if (cfg.architecture != Architecture::dual_encoder)
        throw ConfigError("topic_embedding is a dual_encoder operation");
    const std::size_t L = detail::trunk_layers(cfg);
    return ((topic * params.tensor(2 * L)).rowwise() + params.tensor(2 * L + 1).row(0)).row(0);
}

inline Confidence score_from_embeddings(const ModelConfig& cfg, const Parameters& params,
                                        const Eigen::VectorXd& e_item,
                                        const Eigen::VectorXd& e_topic) {
    const std::size_t L = detail::trunk_layers(cfg);
    double logit = e_item.dot(e_topic) / std::sqrt(static_cast<double>(cfg.embedding_size)) +
                   params.tensor(2 * L + 2)(0, 0);
    return Confidence(sigmoid(logit));
}

inline nlohmann::ordered_json model_config_json(const ModelConfig& cfg) {
    nlohmann::ordered_json j;
    j["architecture"] = to_string(cfg.architecture);
    j["embedding_size"] = cfg.embedding_size;
    j["hidden_sizes"] = cfg.hidden_sizes;
    j["param_budget_label"] = cfg.param_budget_label;
    j["loss"] = to_string(cfg.loss);
    j["d_in"] = cfg.d_in;
    j["num_identities"] = cfg.num_identities;
    j["num_topics"] = cfg.num_topics;
    return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.architecture = architecture_from_string(j.at("architecture").get<std::string>());
    cfg.embedding_size = j.at("embedding_size").get<std::size_t>();
    cfg.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
    cfg.param_budget_label = j.at("param_budget_label").get<std::string>();
    cfg.loss = loss_from_string(j.at("loss").get<std::string>());
    cfg.d_in = j.at("d_in").get<std::size_t>();
    cfg.num_identities = j.at("num_identities").get<std::size_t>();
    cfg.num_topics = j.at("num_topics").get<std::size_t>();
    cfg.validate();
    return cfg;
}

inline void save_checkpoint(const ModelConfig& cfg, const Parameters& params,
                            const TeacherRegistry& registry, const std::string& path) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["model_config"] = model_config_json(cfg);
    j["teachers"] = registry.tokens();
    nlohmann::json vals = nlohmann::json::array();
    for (double v : params.values) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        vals.push_back(os.str());
    }
    j["parameters"] = vals;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump() << "\n";
}

inline std::tuple<ModelConfig, Parameters, TeacherRegistry> load_checkpoint(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("format_version").get<int>() != 1)
        throw ValidationError("unsupported checkpoint format_version");
    ModelConfig cfg = model_config_from_json(j.at("model_config"));
    TeacherRegistry registry;
    for (const auto& t : j.at("teachers")) registry.register_teacher(t.get<std::string>());
    Parameters params;
    params.layout = param_layout(cfg);
    for (const auto& v : j.at("parameters"))
        params.values.push_back(std::stod(v.get<std::string>()));
    if (params.values.size() != param_count(cfg))
        throw ValidationError("checkpoint parameter count does not match config");
    return {cfg, params, registry};
}

}  // namespace t2t

#endif
