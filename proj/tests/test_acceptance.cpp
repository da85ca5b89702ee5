// End-to-end acceptance gate for the identity-conditioned multi-teacher
// pipeline. Runs the pinned bench_v1 benchmark across its five seeds plus the
// ablation variants, then prints one PASS/FAIL line per criterion. Exit code
// is the number of failed criteria, so it slots into ctest directly.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "teacher2task/teacher2task.hpp"

using namespace t2t;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%2d] %-34s %s  (%s)\n", idx, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

struct SeedRun {
    BenchArtifacts art;
    Parameters params;
    TrainReport train_report;
    PRReport student;
    std::map<std::string, PRReport> teachers;
};

// Train a variant that shares the seed's dataset but swaps the model config.
double variant_auc(const SeedRun& run, const ModelConfig& model) {
    auto [params, rep] = train(model, run.art.train, run.art.dataset, run.art.registry,
                               run.art.world.item_features, run.art.world.topic_features);
    return student_report(run.art, model, params, kGroundTruthToken).pr_auc;
}

// Exhaustive threshold-enumeration average precision, the independent oracle
// for the fast tie-grouping implementation.
double oracle_pr_auc(const std::vector<std::pair<double, bool>>& scored) {
    std::vector<double> thresholds;
    for (const auto& [s, y] : scored) thresholds.push_back(s);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::size_t total_pos = 0;
    for (const auto& [s, y] : scored) total_pos += y;
    double auc = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        std::size_t tp = 0, predicted = 0;
        for (const auto& [s, y] : scored)
            if (s >= t) {
                ++predicted;
                tp += y;
            }
        double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        double precision = static_cast<double>(tp) / static_cast<double>(predicted);
        auc += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return auc;
}

bool gradcheck_all() {
    const double h = 1e-5;
    for (auto arch : {Architecture::dual_encoder, Architecture::encoder_only,
                      Architecture::multi_head}) {
        for (auto loss : {LossKind::mse, LossKind::bce}) {
            ModelConfig cfg;
            cfg.architecture = arch;
            cfg.loss = loss;
            cfg.embedding_size = 4;
            cfg.hidden_sizes = {6, 5};
            cfg.d_in = 4;
            cfg.num_identities = 3;
            cfg.num_topics = 5;
            auto rng = derive_stream(99, "gradcheck/" + to_string(arch) + "/" + to_string(loss));
            auto params = init_params(cfg, rng);
            const std::size_t n = 8;
            Eigen::MatrixXd items(n, 4), topics(n, 4);
            BatchView b;
            b.identities.resize(n);
            b.topic_indices.resize(n);
            b.targets.resize(n);
            b.weights = Eigen::VectorXd::Ones(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (int c = 0; c < 4; ++c) {
                    items(i, c) = rng.normal();
                    topics(i, c) = rng.normal();
                }
                b.identities[i] = static_cast<TeacherIndex>(rng.uniform_int(3));
                b.topic_indices[i] = static_cast<TopicIndex>(rng.uniform_int(5));
                b.targets(i) = rng.uniform();
            }
            b.items = items;
            b.topics = topics;
            std::vector<double> grad;
            loss_and_grad(cfg, params, b, grad);
            for (int probe = 0; probe < 20; ++probe) {
                std::size_t k = rng.uniform_int(params.values.size());
                auto plus = params, minus = params;
                plus.values[k] += h;
                minus.values[k] -= h;
                std::vector<double> scratch;
                double fd = (loss_and_grad(cfg, plus, b, scratch) -
                             loss_and_grad(cfg, minus, b, scratch)) /
                            (2.0 * h);
                double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-8});
                if (std::abs(fd - grad[k]) / denom >= 1e-4) return false;
            }
        }
    }
    return true;
}

}  // namespace

int main() {
    auto cfg = bench_v1();

    std::vector<SeedRun> runs;
    std::vector<double> full_aucs, best_teacher_aucs;
    for (std::uint64_t seed : cfg.seeds) {
        SeedRun run;
        run.art = build_bench(cfg, seed);
        std::tie(run.params, run.train_report) = run_training(run.art);
        run.student = student_report(run.art, run.art.model, run.params, kGroundTruthToken);
        run.teachers = teacher_reports(run.art);
        full_aucs.push_back(run.student.pr_auc);
        double best = 0.0;
        for (const auto& [tok, rep] : run.teachers) best = std::max(best, rep.pr_auc);
        best_teacher_aucs.push_back(best);
        runs.push_back(std::move(run));
    }
    double med_full = median(full_aucs);
    double med_best_teacher = median(best_teacher_aucs);

    // 1. Student queried as ground truth beats the best individual teacher.
    report(1, "student surpasses best teacher", med_full >= med_best_teacher + 0.02,
           "student " + fmt(med_full) + " vs best teacher " + fmt(med_best_teacher) + " + 0.02");

    // Median-seed run for the curve- and fidelity-based criteria.
    std::vector<std::size_t> order(runs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return full_aucs[a] < full_aucs[b]; });
    const SeedRun& mid = runs[order[order.size() / 2]];

    // 2. The student's PR curve is an outer bound on every teacher's curve.
    bool dominated_all = true;
    std::string dom_detail;
    for (const auto& [tok, rep] : mid.teachers) {
        bool ok = curve_dominates(mid.student, rep, 0.03);
        dominated_all = dominated_all && ok;
        dom_detail += tok + (ok ? " ok " : " FAIL ");
    }
    report(2, "student curve outer-bounds teachers", dominated_all, dom_detail);

    // 3. Queried under a teacher's identity, the student reproduces that
    // teacher's deterministic scoring function on held-in pairs.
    bool fidelity = true;
    std::string fid_detail;
    for (const auto& spec : mid.art.specs) {
        std::vector<ItemId> covered;
        for (std::size_t i = 0; i < mid.art.world.num_items(); ++i)
            if (spec.coverage.count(mid.art.world.item_domain(static_cast<ItemId>(i))))
                covered.push_back(static_cast<ItemId>(i));
        auto rng = derive_stream(mid.art.seed, "fidelity/" + spec.id.token);
        double se = 0.0;
        const std::size_t n = 2000;
        for (std::size_t k = 0; k < n; ++k) {
            ItemId item = covered[rng.uniform_int(covered.size())];
            TopicIndex topic =
                mid.art.train_topics[rng.uniform_int(mid.art.train_topics.size())];
            double want = teacher_expected_score(spec, mid.art.world, item, topic);
            double got = predict_as_teacher(mid.art.model, mid.params, mid.art.registry,
                                            spec.id.token, mid.art.world.item_features.row(item),
                                            mid.art.world.topic_features.row(topic), topic)
                             .value();
            se += (want - got) * (want - got);
        }
        double mse = se / static_cast<double>(n);
        fidelity = fidelity && mse <= 0.02;
        fid_detail += spec.id.token + " mse " + fmt(mse) + " ";
    }
    report(3, "per-teacher score fidelity", fidelity, fid_detail);

    // 4. More teachers help: human-only < full teacher set < + self-training.
    auto cfg_human = cfg;
    cfg_human.teachers = {cfg.teachers[0]};
    cfg_human.selftrain.reset();
    std::vector<double> human_aucs, selftrain_aucs;
    for (std::uint64_t seed : cfg.seeds) {
        auto art = build_bench(cfg_human, seed);
        auto [p, rep] = run_training(art);
        human_aucs.push_back(student_report(art, art.model, p, kGroundTruthToken).pr_auc);
    }
    for (const auto& run : runs) {
        auto [p, rep] = run_selftrain(cfg, run.art);
        selftrain_aucs.push_back(
            student_report(run.art, run.art.model, p, kGroundTruthToken).pr_auc);
    }
    double med_human = median(human_aucs);
    double med_st = median(selftrain_aucs);
    report(4, "teacher-count monotonicity",
           med_full - med_human >= 0.01 && med_st - med_full >= 0.01,
           "human-only " + fmt(med_human) + " < full " + fmt(med_full) + " < selftrain " +
               fmt(med_st) + ", gaps >= 0.01");

    // 5. Larger item/topic embeddings do not hurt (tolerance 0.005 per step).
    std::map<std::size_t, double> emb_median = {{64, med_full}};
    for (std::size_t emb : {std::size_t{16}, std::size_t{32}, std::size_t{128}}) {
        std::vector<double> aucs;
        for (const auto& run : runs) {
            auto model = run.art.model;
            model.embedding_size = emb;
            aucs.push_back(variant_auc(run, model));
        }
        emb_median[emb] = median(aucs);
    }
    bool emb_ok = true;
    std::string emb_detail;
    double prev = 0.0;
    for (auto [emb, auc] : emb_median) {  // std::map iterates sizes in order
        emb_ok = emb_ok && auc >= prev - 0.005;
        prev = auc;
        emb_detail += std::to_string(emb) + ":" + fmt(auc) + " ";
    }
    report(5, "embedding-size trend", emb_ok, emb_detail);

    // 6. A single-tower encoder matches or beats the dual encoder.
    std::vector<double> enc_aucs;
    for (const auto& run : runs) {
        auto model = run.art.model;
        model.architecture = Architecture::encoder_only;
        model.hidden_sizes = {128, 128};
        enc_aucs.push_back(variant_auc(run, model));
    }
    double med_enc = median(enc_aucs);
    report(6, "encoder-only matches dual encoder", med_enc >= med_full - 0.005,
           "encoder " + fmt(med_enc) + " vs dual " + fmt(med_full) + " - 0.005");

    // 7. Doubling the hidden width barely moves the result.
    std::vector<double> wide_aucs;
    for (const auto& run : runs) {
        auto model = run.art.model;
        model.hidden_sizes = {256};
        wide_aucs.push_back(variant_auc(run, model));
    }
    double med_wide = median(wide_aucs);
    report(7, "model-size stability", std::abs(med_wide - med_full) < 0.01,
           "hidden 256 " + fmt(med_wide) + " vs 128 " + fmt(med_full));

    // 8. Identity conditioning beats training on uniformly averaged labels,
    // which lets the biased teacher contaminate every target.
    std::vector<double> base_aucs;
    for (const auto& run : runs) {
        auto [p, model] = run_baseline(cfg, run.art);
        base_aucs.push_back(student_report(run.art, model, p, kGroundTruthToken).pr_auc);
    }
    double med_base = median(base_aucs);
    report(8, "beats uniform-average baseline", med_full - med_base >= 0.02,
           "student " + fmt(med_full) + " vs baseline " + fmt(med_base) + " + 0.02");

    // 9. Fast PR-AUC equals the exhaustive-threshold oracle.
    bool pr_ok = true;
    auto pr_rng = derive_stream(7, "prfuzz");
    for (int trial = 0; trial < 1000 && pr_ok; ++trial) {
        std::vector<std::pair<double, bool>> scored;
        bool has_pos = false, has_neg = false;
        std::size_t n = 2 + pr_rng.uniform_int(49);
        for (std::size_t i = 0; i < n; ++i) {
            bool y = pr_rng.uniform() < 0.4;
            // coarse score grid provokes ties
            double s = static_cast<double>(pr_rng.uniform_int(8)) / 7.0;
            scored.emplace_back(s, y);
            (y ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        pr_ok = std::abs(pr_curve(scored).pr_auc - oracle_pr_auc(scored)) < 1e-9;
    }
    std::vector<std::pair<double, bool>> worked = {
        {0.9, true}, {0.7, false}, {0.5, true}, {0.3, false}};
    double worked_auc = pr_curve(worked).pr_auc;
    bool worked_ok = worked_auc == 0.5 * 1.0 + 0.5 * (2.0 / 3.0);
    report(9, "pr-auc oracle equivalence", pr_ok && worked_ok,
           std::string("fuzz ") + (pr_ok ? "ok" : "FAIL") + ", worked example " +
               fmt(worked_auc));

    // 10. Analytic gradients match central finite differences.
    report(10, "gradient correctness", gradcheck_all(),
           "3 architectures x 2 losses, 20 probes, rel err < 1e-4");

    // 11. Same config + seed means byte-identical data and identical reports.
    const SeedRun& first = runs.front();
    auto art2 = build_bench(cfg, first.art.seed);
    auto [p2, rep2] = run_training(art2);
    std::ostringstream d1, d2;
    write_dataset_jsonl(first.art.dataset, first.art.registry, d1);
    write_dataset_jsonl(art2.dataset, art2.registry, d2);
    auto pr2 = student_report(art2, art2.model, p2, kGroundTruthToken);
    bool deterministic = d1.str() == d2.str() && first.params.values == p2.values &&
                         train_report_json(first.train_report).dump() ==
                             train_report_json(rep2).dump() &&
                         pr_report_json(first.student).dump() == pr_report_json(pr2).dump();
    report(11, "rerun determinism", deterministic,
           "dataset bytes, parameters, and reports identical across reruns");

    std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "ALL PASS" : "FAILURES",
                g_failures);
    return g_failures;
}
