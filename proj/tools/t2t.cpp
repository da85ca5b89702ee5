// Experiment runner: generate benchmark artifacts, train students, evaluate
// PR curves, run ablation sweeps, self-training, and aggregation baselines.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "teacher2task/teacher2task.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::string identity = t2t::kGroundTruthToken;
    std::string axis;
};

struct Run {
    t2t::ExperimentConfig cfg;
    std::string hash;
    std::vector<std::uint64_t> seeds;
};

Run load_run(const CommonArgs& args) {
    Run run;
    run.cfg = t2t::load_experiment_config(args.config_path);
    if (args.out) run.cfg.output_dir = *args.out;
    run.hash = t2t::config_hash(run.cfg);
    run.seeds = args.seed ? std::vector<std::uint64_t>{*args.seed} : run.cfg.seeds;
    return run;
}

fs::path seed_dir(const Run& run, std::uint64_t seed, bool create) {
    fs::path dir = fs::path(run.cfg.output_dir) / run.hash / std::to_string(seed);
    if (create) fs::create_directories(dir);
    return dir;
}

void write_json(const fs::path& path, ordered_json j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

ordered_json stamped(const Run& run) {
    ordered_json j;
    j["format_version"] = 1;
    j["config_hash"] = run.hash;
    return j;
}

void write_pr_outputs(const Run& run, const fs::path& dir, const std::string& stem,
                      const t2t::PRReport& report) {
    std::ofstream csv(dir / (stem + ".csv"));
    t2t::write_pr_csv(report, csv);
    ordered_json j = stamped(run);
    const auto body = t2t::pr_report_json(report);
    for (const auto& [k, v] : body.items())
        if (k != "format_version") j[k] = v;
    write_json(dir / (stem + ".json"), j);
}

void cmd_generate(const CommonArgs& args) {
    Run run = load_run(args);
    for (auto seed : run.seeds) {
        auto art = t2t::build_bench(run.cfg, seed);
        fs::path dir = seed_dir(run, seed, true);

        ordered_json world = stamped(run);
        world["seed"] = seed;
        world["relevance_threshold"] = t2t::format_score(art.world.relevance_threshold);
        world["domains"] = run.cfg.world.domains;
        auto mat = [](const Eigen::MatrixXd& m) {
            ordered_json rows = ordered_json::array();
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                ordered_json row = ordered_json::array();
                for (Eigen::Index c = 0; c < m.cols(); ++c)
                    row.push_back(t2t::format_score(m(r, c)));
                rows.push_back(row);
            }
            return rows;
        };
        world["item_features"] = mat(art.world.item_features);
        world["topic_features"] = mat(art.world.topic_features);
        write_json(dir / "world.json", world);

        ordered_json split = stamped(run);
        split["train_topics"] = std::vector<t2t::TopicIndex>(art.split.train_topics.begin(),
                                                             art.split.train_topics.end());
        split["eval_topics"] = std::vector<t2t::TopicIndex>(art.split.eval_topics.begin(),
                                                            art.split.eval_topics.end());
        split["fraction_unseen"] = art.split.fraction_unseen;
        write_json(dir / "split.json", split);

        for (const auto& spec : art.specs) {
            std::ofstream out(dir / ("annotations_" + spec.id.token + ".jsonl"));
            ordered_json header;
            header["format_version"] = 1;
            header["config_hash"] = run.hash;
            header["teacher"] = spec.id.token;
            out << header.dump() << "\n";
            for (const auto& a : art.annotations) {
                if (a.teacher != spec.id.index) continue;
                ordered_json line;
                line["item"] = a.item;
                line["topic"] = a.topic;
                line["score"] = t2t::format_score(a.score.value());
                out << line.dump() << "\n";
            }
        }
        t2t::save_dataset(art.dataset, art.registry, (dir / "dataset.jsonl").string());
        std::cout << "generated " << dir.string() << "\n";
    }
}

void cmd_train(const CommonArgs& args) {
    Run run = load_run(args);
    for (auto seed : run.seeds) {
        fs::path dir = seed_dir(run, seed, true);
        if (!fs::exists(dir / "dataset.jsonl"))
            throw std::runtime_error("missing artifact " + (dir / "dataset.jsonl").string() +
                                     " (run `t2t generate` first)");
        auto art = t2t::build_bench(run.cfg, seed);
        auto dataset = t2t::load_dataset((dir / "dataset.jsonl").string(), art.registry);
        auto [params, report] = t2t::train(art.model, art.train, dataset, art.registry,
                                           art.world.item_features, art.world.topic_features);
        t2t::save_checkpoint(art.model, params, art.registry,
                             (dir / "checkpoint.json").string());
        ordered_json j = stamped(run);
        const auto body = t2t::train_report_json(report);
        for (const auto& [k, v] : body.items())
            if (k != "format_version") j[k] = v;
        write_json(dir / "train_report.json", j);
        std::cout << "trained " << dir.string() << "\n";
    }
}

void cmd_eval(const CommonArgs& args) {
    Run run = load_run(args);
    for (auto seed : run.seeds) {
        fs::path dir = seed_dir(run, seed, true);
        if (!fs::exists(dir / "checkpoint.json"))
            throw std::runtime_error("missing artifact " + (dir / "checkpoint.json").string() +
                                     " (run `t2t train` first)");
        auto art = t2t::build_bench(run.cfg, seed);
        auto [cfg, params, registry] = t2t::load_checkpoint((dir / "checkpoint.json").string());
        auto report = t2t::student_report(art, cfg, params, args.identity);
        write_pr_outputs(run, dir, "pr_" + args.identity, report);
        for (const auto& [token, tr] : t2t::teacher_reports(art))
            write_pr_outputs(run, dir, "pr_teacher_" + token, tr);
        std::cout << "pr_auc[" << args.identity << "] seed " << seed << " = "
                  << t2t::format_score(report.pr_auc) << "\n";
    }
}

void cmd_selftrain(const CommonArgs& args) {
    Run run = load_run(args);
    for (auto seed : run.seeds) {
        auto art = t2t::build_bench(run.cfg, seed);
        auto [params, report] = t2t::run_selftrain(run.cfg, art);
        fs::path dir = seed_dir(run, seed, true);
        t2t::save_checkpoint(art.model, params, art.registry,
                             (dir / "checkpoint_selftrain.json").string());
        ordered_json j = stamped(run);
        const auto body = t2t::selftrain_report_json(report);
        for (const auto& [k, v] : body.items())
            if (k != "format_version") j[k] = v;
        write_json(dir / "selftrain_report.json", j);
        std::cout << "selftrain seed " << seed << " final pr_auc = "
                  << t2t::format_score(report.iterations.back().pr_auc) << "\n";
    }
}

void cmd_baseline(const CommonArgs& args) {
    Run run = load_run(args);
    for (auto seed : run.seeds) {
        auto art = t2t::build_bench(run.cfg, seed);
        auto [params, model_cfg] = t2t::run_baseline(run.cfg, art);
        auto report = t2t::student_report(art, model_cfg, params, t2t::kGroundTruthToken);
        fs::path dir = seed_dir(run, seed, true);
        write_pr_outputs(run, dir, "pr_baseline", report);
        std::cout << "baseline seed " << seed << " pr_auc = "
                  << t2t::format_score(report.pr_auc) << "\n";
    }
}

double cell_pr_auc(const t2t::ExperimentConfig& cfg, std::uint64_t seed, bool selftrain) {
    auto art = t2t::build_bench(cfg, seed);
    if (selftrain) {
        auto [params, report] = t2t::run_selftrain(cfg, art);
        return report.iterations.back().pr_auc;
    }
    auto [params, report] = t2t::run_training(art);
    return t2t::student_report(art, art.model, params, t2t::kGroundTruthToken).pr_auc;
}

void cmd_ablate(const CommonArgs& args) {
    Run run = load_run(args);
    if (!run.cfg.ablate) throw t2t::ConfigError("config has no ablate section");
    const auto& ab = *run.cfg.ablate;

    struct Cell {
        std::string label;
        t2t::ExperimentConfig cfg;
        bool selftrain = false;
    };
    std::vector<Cell> cells;
    if (args.axis == "embedding_size") {
        for (auto e : ab.embedding_sizes) {
            Cell c{std::to_string(e), run.cfg};
            c.cfg.model.embedding_size = e;
            cells.push_back(std::move(c));
        }
    } else if (args.axis == "architecture") {
        for (const auto& a : ab.architectures) {
            Cell c{a, run.cfg};
            c.cfg.model.architecture = t2t::architecture_from_string(a);
            if (c.cfg.model.architecture == t2t::Architecture::encoder_only)
                c.cfg.model.hidden_sizes.push_back(c.cfg.model.hidden_sizes.back());
            cells.push_back(std::move(c));
        }
    } else if (args.axis == "model_size") {
        for (const auto& hs : ab.model_sizes) {
            std::string label;
            for (auto h : hs) label += (label.empty() ? "" : "x") + std::to_string(h);
            Cell c{label, run.cfg};
            c.cfg.model.hidden_sizes = hs;
            cells.push_back(std::move(c));
        }
    } else if (args.axis == "num_teachers") {
        for (const auto& subset : ab.num_teachers) {
            std::string label;
            for (const auto& t : subset) label += (label.empty() ? "" : "+") + t;
            Cell c{label.empty() ? "none" : label, run.cfg};
            bool with_selftrain = false;
            c.cfg.teachers.clear();
            for (const auto& tc : run.cfg.teachers)
                if (std::find(subset.begin(), subset.end(), tc.token) != subset.end())
                    c.cfg.teachers.push_back(tc);
            for (const auto& t : subset)
                if (t == t2t::kSelfTrainToken) with_selftrain = true;
            if (!with_selftrain) c.cfg.selftrain.reset();
            c.selftrain = with_selftrain;
            cells.push_back(std::move(c));
        }
    } else if (args.axis == "selftrain_iters") {
        for (auto it : ab.selftrain_iters) {
            Cell c{std::to_string(it), run.cfg};
            if (!c.cfg.selftrain) throw t2t::ConfigError("selftrain_iters axis needs a selftrain section");
            c.cfg.selftrain->iterations = it;
            c.selftrain = true;
            cells.push_back(std::move(c));
        }
    } else {
        throw t2t::ConfigError(
            "unknown ablation axis \"" + args.axis +
            "\" (expected embedding_size, architecture, model_size, num_teachers, "
            "or selftrain_iters)");
    }
    if (cells.empty()) throw t2t::ConfigError("ablate axis has no values in config");

    ordered_json rows = ordered_json::array();
    std::ostringstream csv;
    csv << "cell,mean,std,median\n";
    for (const auto& cell : cells) {
        std::vector<double> aucs;
        for (auto seed : run.seeds) aucs.push_back(cell_pr_auc(cell.cfg, seed, cell.selftrain));
        double mean = 0.0;
        for (double a : aucs) mean += a;
        mean /= static_cast<double>(aucs.size());
        double var = 0.0;
        for (double a : aucs) var += (a - mean) * (a - mean);
        double sd = std::sqrt(var / static_cast<double>(aucs.size()));
        double med = t2t::median(aucs);
        ordered_json row;
        row["cell"] = cell.label;
        row["mean"] = t2t::format_score(mean);
        row["std"] = t2t::format_score(sd);
        row["median"] = t2t::format_score(med);
        rows.push_back(row);
        csv << cell.label << "," << t2t::format_score(mean) << "," << t2t::format_score(sd)
            << "," << t2t::format_score(med) << "\n";
        std::cout << args.axis << "=" << cell.label << " median pr_auc "
                  << t2t::format_score(med) << "\n";
    }
    fs::path dir = fs::path(run.cfg.output_dir) / run.hash;
    fs::create_directories(dir);
    ordered_json j = stamped(run);
    j["axis"] = args.axis;
    j["seeds"] = run.seeds;
    j["cells"] = rows;
    write_json(dir / ("ablate_" + args.axis + ".json"), j);
    std::ofstream csv_out(dir / ("ablate_" + args.axis + ".csv"));
    csv_out << csv.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Teacher2Task experiment runner"};
    app.require_subcommand(1);
    CommonArgs args;

    auto add_common = [&](CLI::App* sub, bool with_identity = false, bool with_axis = false) {
        sub->add_option("--config", args.config_path, "experiment config JSON")->required();
        sub->add_option("--seed", args.seed, "run a single seed instead of the config list");
        sub->add_option("--out", args.out, "override output directory");
        if (with_identity)
            sub->add_option("--identity", args.identity, "identity token to query");
        if (with_axis)
            sub->add_option("--axis", args.axis, "ablation axis")->required();
        return sub;
    };
    auto* generate = add_common(app.add_subcommand("generate", "write world, annotations, dataset"));
    auto* train = add_common(app.add_subcommand("train", "train the student on generated data"));
    auto* eval = add_common(app.add_subcommand("eval", "emit PR curves for an identity"), true);
    auto* ablate = add_common(app.add_subcommand("ablate", "sweep one config axis"), false, true);
    auto* selftrain = add_common(app.add_subcommand("selftrain", "run self-training iterations"));
    auto* baseline = add_common(app.add_subcommand("baseline", "train the aggregation baseline"));

    CLI11_PARSE(app, argc, argv);
    try {
        if (generate->parsed()) cmd_generate(args);
        if (train->parsed()) cmd_train(args);
        if (eval->parsed()) cmd_eval(args);
        if (ablate->parsed()) cmd_ablate(args);
        if (selftrain->parsed()) cmd_selftrain(args);
        if (baseline->parsed()) cmd_baseline(args);
    } catch (const t2t::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
