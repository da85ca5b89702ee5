#ifndef TEACHER2TASK_CORE_HPP
#define TEACHER2TASK_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "teacher2task/rng.hpp"

namespace t2t {

// reserved identity of the primary (ground-truth) task
inline constexpr const char* kGroundTruthToken = "groundtruth";

struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using ItemId = std::uint32_t;
using TopicIndex = std::uint32_t;
using TeacherIndex = std::uint32_t;

struct TeacherId {
    TeacherIndex index = 0;
    std::string token;
};

struct TopicId {
    TopicIndex index = 0;
    std::string name;
};

// Confidence score in [0, 1]; construction rejects anything else.
class Confidence {
public:
    Confidence() = default;
    explicit Confidence(double v) : value_(v) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw ValidationError("confidence out of range: " + std::to_string(v));
    }
    double value() const { return value_; }
    friend bool operator==(Confidence a, Confidence b) { return a.value_ == b.value_; }

private:
    double value_ = 0.0;
};

struct AnnotatedSample {
    TeacherIndex teacher = 0;
    ItemId item = 0;
    TopicIndex topic = 0;
    Confidence score;
};

struct GroundTruthLabel {
    ItemId item = 0;
    TopicIndex topic = 0;
    bool relevant = false;
};

enum class IdentityEncoding { prefix, onehot };

struct T2TSample {
    TeacherIndex teacher = 0;
    ItemId item = 0;
    TopicIndex topic = 0;
    Confidence target;
    IdentityEncoding identity_encoding = IdentityEncoding::onehot;
};

namespace detail {
inline void validate_token(const std::string& token) {
    if (token.empty()) throw ValidationError("token must be nonempty");
    for (char c : token) {
        if (std::isspace(static_cast<unsigned char>(c)))
            throw ValidationError("token contains whitespace: \"" + token + "\"");
        if (c == ':')
            throw ValidationError("token contains reserved separator ':': \"" + token + "\"");
    }
}
}  // namespace detail

// Append-only registry of teacher identities; indices are dense and stable.
class TeacherRegistry {
public:
    TeacherId register_teacher(const std::string& token) {
        detail::validate_token(token);
        if (by_token_.count(token))
            throw ValidationError("duplicate teacher token: \"" + token + "\"");
        TeacherIndex idx = static_cast<TeacherIndex>(tokens_.size());
        tokens_.push_back(token);
        by_token_.emplace(token, idx);
        return TeacherId{idx, token};
    }

    std::optional<TeacherId> lookup(std::string_view token) const {
        auto it = by_token_.find(std::string(token));
        if (it == by_token_.end()) return std::nullopt;
        return TeacherId{it->second, it->first};
    }

    const std::string& token(TeacherIndex index) const {
        if (index >= tokens_.size())
            throw ValidationError("teacher index out of range");
        return tokens_[index];
    }

    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TeacherIndex> by_token_;
};

inline TeacherId register_teacher(TeacherRegistry& registry, const std::string& token) {
    return registry.register_teacher(token);
}

class TopicRegistry {
public:
    TopicId register_topic(const std::string& name) {
        if (name.empty()) throw ValidationError("topic name must be nonempty");
        if (by_name_.count(name))
            throw ValidationError("duplicate topic name: \"" + name + "\"");
        TopicIndex idx = static_cast<TopicIndex>(names_.size());
        names_.push_back(name);
        by_name_.emplace(name, idx);
        return TopicId{idx, name};
    }
    const std::string& name(TopicIndex index) const {
        if (index >= names_.size()) throw ValidationError("topic index out of range");
        return names_[index];
    }
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, TopicIndex> by_name_;
};

// score serialization: 9 significant digits for cross-platform text stability
inline std::string format_score(double v) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

struct Dataset {
    std::vector<T2TSample> samples;
    std::map<std::string, std::size_t> provenance;  // teacher token -> count
    std::uint64_t seed = 0;

    void check_invariants() const {
        std::size_t total = 0;
        for (const auto& [token, n] : provenance) total += n;
        if (total != samples.size())
            throw ValidationError("dataset provenance counts do not sum to sample count");
    }
};

inline void write_dataset_jsonl(const Dataset& ds, const TeacherRegistry& registry,
                                std::ostream& out) {
    ds.check_invariants();
    nlohmann::ordered_json header;
    header["format_version"] = 1;
    header["seed"] = ds.seed;
    nlohmann::ordered_json prov = nlohmann::ordered_json::object();
    for (const auto& [token, n] : ds.provenance) prov[token] = n;
    header["provenance"] = prov;
    out << header.dump() << "\n";
    for (const auto& s : ds.samples) {
        nlohmann::ordered_json line;
        line["teacher"] = registry.token(s.teacher);
        line["item"] = s.item;
        line["topic"] = s.topic;
        line["score"] = format_score(s.target.value());
        out << line.dump() << "\n";
    }
}

inline Dataset read_dataset_jsonl(std::istream& in, const TeacherRegistry& registry) {
    Dataset ds;
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError("dataset file is empty");
    auto header = nlohmann::json::parse(line);
    if (!header.contains("format_version") || header["format_version"].get<int>() != 1)
        throw ValidationError("unsupported dataset format_version");
    ds.seed = header.at("seed").get<std::uint64_t>();
    for (auto it = header.at("provenance").begin(); it != header.at("provenance").end(); ++it)
        ds.provenance[it.key()] = it.value().get<std::size_t>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        T2TSample s;
        auto id = registry.lookup(j.at("teacher").get<std::string>());
        if (!id) throw ValidationError("unknown teacher token in dataset: " +
                                       j.at("teacher").get<std::string>());
        s.teacher = id->index;
        s.item = j.at("item").get<ItemId>();
        s.topic = j.at("topic").get<TopicIndex>();
        s.target = Confidence(std::stod(j.at("score").get<std::string>()));
        ds.samples.push_back(s);
    }
    ds.check_invariants();
    return ds;
}

inline void save_dataset(const Dataset& ds, const TeacherRegistry& registry,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_dataset_jsonl(ds, registry, out);
}

inline Dataset load_dataset(const std::string& path, const TeacherRegistry& registry) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_dataset_jsonl(in, registry);
}

}  // namespace t2t

#endif
