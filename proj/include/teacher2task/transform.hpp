#ifndef TEACHER2TASK_TRANSFORM_HPP
#define TEACHER2TASK_TRANSFORM_HPP

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "teacher2task/core.hpp"
#include "teacher2task/rng.hpp"

namespace t2t {

// LLM-style binary prediction: the annotation already is the "yes" confidence.
inline T2TSample from_llm_prediction(const AnnotatedSample& ann) {
    T2TSample s;
    s.teacher = ann.teacher;
    s.item = ann.item;
    s.topic = ann.topic;
    s.target = ann.score;
    return s;
}

// One classifier inference over k classes yields k training samples.
inline std::vector<T2TSample> from_classifier_inference(
    const std::vector<AnnotatedSample>& anns) {
    if (anns.empty()) throw ValidationError("classifier inference must be nonempty");
    for (const auto& a : anns) {
        if (a.item != anns.front().item)
            throw ValidationError("classifier inference spans multiple items");
        if (a.teacher != anns.front().teacher)
            throw ValidationError("classifier inference spans multiple teachers");
    }
    std::vector<T2TSample> out;
    out.reserve(anns.size());
    for (const auto& a : anns) out.push_back(from_llm_prediction(a));
    return out;
}

// Multiple human judgments of one pair collapse to their mean.
inline T2TSample from_human_annotations(const std::vector<Confidence>& scores,
                                        TeacherIndex teacher, ItemId item,
                                        TopicIndex topic) {
    if (scores.empty()) throw ValidationError("human annotation set must be nonempty");
    double sum = 0.0;
    for (const auto& c : scores) sum += c.value();
    T2TSample s;
    s.teacher = teacher;
    s.item = item;
    s.topic = topic;
    s.target = Confidence(sum / static_cast<double>(scores.size()));
    return s;
}

// Text form of identity conditioning: "{token}: {input text}".
inline std::string encode_identity_prefix(const TeacherId& teacher,
                                          const std::string& topic_name) {
    return teacher.token + ": " + topic_name;
}

inline std::pair<std::string, std::string> decode_identity_prefix(std::string_view s) {
    auto pos = s.find(": ");
    if (pos == std::string_view::npos)
        throw ValidationError("prefix-encoded string missing \": \" separator");
    return {std::string(s.substr(0, pos)), std::string(s.substr(pos + 2))};
}

// Feature-vector form: features followed by an appended one-hot identity block.
inline std::vector<double> encode_identity_onehot(const TeacherId& teacher,
                                                  const std::vector<double>& features,
                                                  std::size_t num_teachers) {
    if (teacher.index >= num_teachers)
        throw ValidationError("teacher index " + std::to_string(teacher.index) +
                              " not below num_teachers " + std::to_string(num_teachers));
    std::vector<double> out(features.size() + num_teachers, 0.0);
    std::copy(features.begin(), features.end(), out.begin());
    out[features.size() + teacher.index] = 1.0;
    return out;
}

// The central transformation: ground-truth labels become the primary task
// under the reserved identity, each teacher's annotations become that
// teacher's auxiliary task, and nothing is aggregated. Conflicting labels for
// the same pair simply coexist under different identities.
inline Dataset build_dataset(const std::vector<GroundTruthLabel>& ground_truth,
                             const std::vector<AnnotatedSample>& teacher_outputs,
                             const TeacherRegistry& registry,
                             IdentityEncoding encoding, RandomStream& rng) {
    auto gt = registry.lookup(kGroundTruthToken);
    if (!gt)
        throw ValidationError("registry is missing the reserved \"groundtruth\" identity");
    Dataset ds;
    ds.seed = rng.seed();
    for (const auto& token : registry.tokens()) ds.provenance[token] = 0;
    ds.provenance.erase(kGroundTruthToken);
    for (const auto& ann : teacher_outputs) {
        T2TSample s = from_llm_prediction(ann);
        s.identity_encoding = encoding;
        ds.samples.push_back(s);
        ds.provenance[registry.token(ann.teacher)]++;
    }
    for (const auto& label : ground_truth) {
        T2TSample s;
        s.teacher = gt->index;
        s.item = label.item;
        s.topic = label.topic;
        s.target = Confidence(label.relevant ? 1.0 : 0.0);
        s.identity_encoding = encoding;
        ds.samples.push_back(s);
    }
    ds.provenance[kGroundTruthToken] = ground_truth.size();
    // drop identities that produced nothing so provenance reflects content
    for (auto it = ds.provenance.begin(); it != ds.provenance.end();)
        it = it->second == 0 ? ds.provenance.erase(it) : std::next(it);

    auto shuffle_rng = rng.child("shuffle");
    for (std::size_t i = ds.samples.size(); i > 1; --i)
        std::swap(ds.samples[i - 1], ds.samples[shuffle_rng.uniform_int(i)]);
    ds.check_invariants();
    return ds;
}

// Per-source over-sampling by integer repeats, applied at assembly time.
// Sources absent from the map keep multiplicity 1.
inline Dataset repeat_sources(const Dataset& ds, const TeacherRegistry& registry,
                              const std::map<std::string, std::size_t>& repeats) {
    for (const auto& [token, r] : repeats) {
        if (!registry.lookup(token))
            throw ValidationError("repeat for unregistered identity: " + token);
        if (r < 1) throw ValidationError("repeat count must be >= 1");
    }
    Dataset out;
    out.seed = ds.seed;
    for (const auto& s : ds.samples) {
        const std::string& token = registry.token(s.teacher);
        auto it = repeats.find(token);
        std::size_t r = it == repeats.end() ? 1 : it->second;
        for (std::size_t k = 0; k < r; ++k) out.samples.push_back(s);
        out.provenance[token] += r;
    }
    out.check_invariants();
    return out;
}

}  // namespace t2t

#endif
