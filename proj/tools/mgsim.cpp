// mgsim: dataset generation, training, evaluation and scenario runs.
//
// Exit codes: 0 ok, 1 usage, 2 configuration, 3 data, 4 runtime.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgsim/dataset.hpp"
#include "mgsim/manifest.hpp"
#include "mgsim/model_io.hpp"
#include "mgsim/scenario.hpp"
#include "mgsim/train.hpp"

namespace fs = std::filesystem;
using namespace mgsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

// Relative output paths land under $MGSIM_OUTPUT_DIR when it is set.
fs::path output_path(const fs::path& p) {
    const char* base = std::getenv("MGSIM_OUTPUT_DIR");
    if (base == nullptr || *base == '\0' || p.is_absolute()) return p;
    return fs::path(base) / p;
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
    fs::path out = p;
    out.replace_extension();
    out += suffix;
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct GenArgs {
    std::string config;
    std::string out = "data/dataset.csv";
    std::uint64_t seed = 42;
};

int cmd_gen_dataset(const GenArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    const data::SweepSpec sweep = a.config.empty() ? data::SweepSpec{} : data::load_sweep_file(a.config);
    const plant::PlantConfig plant_cfg;
    const data::Dataset ds = data::generate_dataset(plant_cfg, sweep, a.seed);

    const fs::path out = output_path(a.out);
    ensure_parent(out);
    data::save_csv(ds, out);

    std::printf("%zu cases (%zu grid, %zu islanded)\n", ds.case_count(), ds.case_count(BreakerStatus::GridConnected),
                ds.case_count(BreakerStatus::Islanded));
    std::printf("%zu windows of %zu frames -> %s\n", ds.windows.size(), ds.seq_len(), out.string().c_str());

    manifest::RunManifest m;
    m.command = "gen-dataset";
    m.config_hash = manifest::fnv1a64_hex(data::to_yaml(sweep));
    m.seed = a.seed;
    m.add_output(out);
    m.wall_clock_s = seconds_since(t0);
    m.write(with_suffix(out, ".manifest.json"));
    return 0;
}

struct TrainArgs {
    std::string dataset = "data/dataset.csv";
    std::string out_model = "models/gru_standard.json";
    std::string metrics;
    int epochs = 200;
    std::uint64_t seed = 42;
    std::string variant = "standard";
    std::size_t hidden = 50;
    double train_fraction = 0.7;
};

int cmd_train(const TrainArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    train::TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    cfg.variant = gru::variant_from_string(a.variant);
    cfg.hidden_size = a.hidden;
    cfg.train_fraction = a.train_fraction;
    cfg.validate();

    const data::Dataset ds = data::load_csv(a.dataset);
    if (ds.empty()) throw DataError("dataset " + a.dataset + " has no windows");
    cfg.seq_len = ds.seq_len();
    const auto [train_set, test_set] = data::split(ds, cfg.train_fraction, cfg.seed);
    std::printf("split: %zu train cases, %zu test cases\n", train_set.case_count(), test_set.case_count());

    const auto result = train::train(train_set, &test_set, cfg, [&](const train::EpochLog& e) {
        if (e.epoch == 1 || e.epoch % 20 == 0 || e.epoch == cfg.epochs) {
            std::printf("epoch %3d  loss %.6f  train acc %.4f  test acc %.4f\n", e.epoch, e.train_loss,
                        e.train_accuracy, e.test_accuracy.value_or(0.0));
            std::fflush(stdout);
        }
    });

    const fs::path model_path = output_path(a.out_model);
    const fs::path metrics_path = a.metrics.empty() ? with_suffix(model_path, ".metrics.csv") : output_path(a.metrics);
    ensure_parent(model_path);
    ensure_parent(metrics_path);
    model_io::save_params(result.model, model_path);
    train::write_log_csv(result.log, metrics_path);

    const auto& last = result.log.back();
    std::printf("final train accuracy %.4f\n", last.train_accuracy);
    std::printf("final test accuracy %.4f\n", last.test_accuracy.value_or(0.0));

    manifest::RunManifest m;
    m.command = "train";
    const nlohmann::json config = {{"dataset_hash", manifest::file_hash(a.dataset)},
                                   {"epochs", cfg.epochs},
                                   {"variant", gru::to_string(cfg.variant)},
                                   {"hidden", cfg.hidden_size},
                                   {"train_fraction", cfg.train_fraction}};
    m.config_hash = manifest::fnv1a64_hex(config.dump());
    m.seed = cfg.seed;
    m.add_output(model_path);
    m.add_output(metrics_path);
    m.wall_clock_s = seconds_since(t0);
    m.write(with_suffix(model_path, ".manifest.json"));
    return 0;
}

struct EvalArgs {
    std::string model = "models/gru_standard.json";
    std::string dataset = "data/dataset.csv";
    std::string split = "all";
    std::uint64_t seed = 42;
    double train_fraction = 0.7;
    std::string errors;
};

int cmd_eval(const EvalArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    const train::GruModel model = model_io::load_params(a.model);
    data::Dataset ds = data::load_csv(a.dataset);
    if (ds.empty()) throw DataError("dataset " + a.dataset + " has no windows");
    if (a.split != "all") {
        auto parts = data::split(ds, a.train_fraction, a.seed);
        ds = a.split == "train" ? std::move(parts.first) : std::move(parts.second);
    }

    const train::Evaluation ev = train::evaluate(model, ds);
    std::printf("windows %zu  accuracy %.4f  mse %.6f\n", ev.windows, ev.accuracy(), ev.mse);
    std::printf("confusion (rows truth, cols predicted; grid, islanded)\n");
    std::printf("  grid      %6zu %6zu\n", ev.confusion[0][0], ev.confusion[0][1]);
    std::printf("  islanded  %6zu %6zu\n", ev.confusion[1][0], ev.confusion[1][1]);

    struct CaseErrors {
        BreakerStatus mode;
        std::size_t windows = 0;
        std::size_t wrong = 0;
    };
    std::map<std::uint32_t, CaseErrors> per_case;
    for (const auto& w : ds.windows) {
        auto& c = per_case.try_emplace(w.case_id, CaseErrors{w.mode}).first->second;
        ++c.windows;
        if (model.classify(w.frames) != w.mode) ++c.wrong;
    }
    const fs::path errors_path =
        output_path(a.errors.empty() ? with_suffix(fs::path(a.model).filename(), ".errors.csv") : fs::path(a.errors));
    ensure_parent(errors_path);
    {
        std::ofstream out(errors_path);
        if (!out) throw RuntimeFailure("cannot write " + errors_path.string());
        out << "case_id,mode,windows,misclassified\n";
        for (const auto& [id, c] : per_case) out << id << ',' << to_string(c.mode) << ',' << c.windows << ',' << c.wrong << '\n';
    }
    std::printf("per-case errors -> %s\n", errors_path.string().c_str());

    manifest::RunManifest m;
    m.command = "eval";
    const nlohmann::json config = {{"model_hash", manifest::file_hash(a.model)},
                                   {"dataset_hash", manifest::file_hash(a.dataset)},
                                   {"split", a.split},
                                   {"train_fraction", a.train_fraction}};
    m.config_hash = manifest::fnv1a64_hex(config.dump());
    m.seed = a.seed;
    m.add_output(errors_path);
    m.wall_clock_s = seconds_since(t0);
    m.write(with_suffix(errors_path, ".manifest.json"));
    return 0;
}

struct RunArgs {
    std::string scenario;
    std::string mitigation = "off";
    std::string model;
    std::string transport;
    std::string out_dir;
};

int cmd_run(const RunArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    scenario::ScenarioConfig cfg;
    if (auto p = scenario::preset(a.scenario)) {
        cfg = *p;
    } else if (fs::exists(a.scenario)) {
        cfg = scenario::load_scenario_file(a.scenario);
    } else {
        throw ConfigError("scenario '" + a.scenario + "' is neither a preset nor a file");
    }
    cfg.mitigation_enabled = a.mitigation == "on";
    if (!a.model.empty()) cfg.model_path = a.model;
    if (a.transport == "tcp") cfg.transport = scenario::TransportKind::Tcp;
    if (a.transport == "memory") cfg.transport = scenario::TransportKind::Memory;
    if (!a.out_dir.empty()) cfg.output_dir = a.out_dir;
    else cfg.output_dir += cfg.mitigation_enabled ? "_on" : "_off";
    cfg.output_dir = output_path(cfg.output_dir);
    cfg.validate();

    const scenario::ScenarioReport report = scenario::run_scenario(cfg);
    std::cout << report.to_json() << '\n';

    manifest::RunManifest m;
    m.command = "run";
    m.config_hash = manifest::fnv1a64_hex(scenario::to_yaml(cfg));
    m.seed = cfg.seed;
    for (const auto& p : report.outputs) m.add_output(p);
    m.wall_clock_s = seconds_since(t0);
    m.write(cfg.output_dir / "manifest.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Microgrid false-data-injection testbed"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-dataset", "Generate the labelled telemetry dataset");
    gen_cmd->add_option("--config", gen.config, "Sweep YAML file (defaults when omitted)")->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", gen.out, "Dataset CSV path")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Noise seed")->capture_default_str();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train the GRU breaker-status detector");
    train_cmd->add_option("--dataset", tr.dataset, "Dataset CSV")->capture_default_str();
    train_cmd->add_option("--out-model", tr.out_model, "Model file to write")->capture_default_str();
    train_cmd->add_option("--metrics", tr.metrics, "Per-epoch metrics CSV (default: next to the model)");
    train_cmd->add_option("--epochs", tr.epochs)->capture_default_str();
    train_cmd->add_option("--seed", tr.seed, "Split, init and shuffle seed")->capture_default_str();
    train_cmd->add_option("--variant", tr.variant)
        ->check(CLI::IsMember({"standard", "paper-literal"}))
        ->capture_default_str();
    train_cmd->add_option("--hidden", tr.hidden)->capture_default_str();
    train_cmd->add_option("--train-fraction", tr.train_fraction)->capture_default_str();

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model on a dataset");
    eval_cmd->add_option("--model", ev.model)->capture_default_str();
    eval_cmd->add_option("--dataset", ev.dataset)->capture_default_str();
    eval_cmd->add_option("--split", ev.split, "all, train or test")
        ->check(CLI::IsMember({"all", "train", "test"}))
        ->capture_default_str();
    eval_cmd->add_option("--seed", ev.seed, "Split seed (match training)")->capture_default_str();
    eval_cmd->add_option("--train-fraction", ev.train_fraction)->capture_default_str();
    eval_cmd->add_option("--errors", ev.errors, "Per-case errors CSV");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run an attack scenario");
    run_cmd->add_option("--scenario", run.scenario, "Preset name (scenario_a, scenario_b) or YAML file")->required();
    run_cmd->add_option("--mitigation", run.mitigation)->check(CLI::IsMember({"on", "off"}))->capture_default_str();
    run_cmd->add_option("--model", run.model, "Model file (overrides the scenario)");
    run_cmd->add_option("--transport", run.transport)->check(CLI::IsMember({"memory", "tcp"}));
    run_cmd->add_option("--out-dir", run.out_dir, "Output directory (overrides the scenario)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen_dataset(gen);
        if (train_cmd->parsed()) return cmd_train(tr);
        if (eval_cmd->parsed()) return cmd_eval(ev);
        if (run_cmd->parsed()) return cmd_run(run);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const train::TrainingDiverged& e) {
        std::fprintf(stderr, "training diverged at epoch %d, batch %zu\n", e.epoch(), e.batch());
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return 0;
}
