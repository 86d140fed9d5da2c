/*
 * Copyright 2025 The Selens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <CLI11.hpp>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "selens/selens.hpp"

namespace fs = std::filesystem;
using namespace selens;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitInternal = 3;

std::string sanitize(const std::string& id) {
    std::string out;
    for (char c : id) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (c == '(' || c == '-' || c == '_') {
            out += '_';
        }
        // ')' and everything else dropped
    }
    return out;
}

struct CommonArgs {
    std::string input;
    std::string truth;
    std::string out_dir;
    std::string config_path;
    std::optional<std::string> strategy;
    std::optional<std::uint64_t> seed;
};

struct Loaded {
    PipelineConfig cfg;
    InputSpec input;
    RunManifest manifest;
};

Loaded load_common(const CommonArgs& a, const std::string& command) {
    Loaded l;
    if (!a.config_path.empty()) {
        apply_config(parse_config_file(a.config_path), l.cfg, l.input);
    }
    if (a.strategy) l.cfg.strategy.kind = parse_strategy(*a.strategy);
    if (a.seed) l.cfg.master_seed = *a.seed;
    l.cfg.strategy.seed = l.cfg.master_seed;
    if (l.cfg.phase2_strategy) l.cfg.phase2_strategy->seed = l.cfg.master_seed;

    l.manifest.tool_version = SELENS_VERSION;
    l.manifest.command = command;
    l.manifest.config_path = a.config_path;
    if (!a.input.empty()) l.manifest.inputs.push_back(a.input);
    if (!a.truth.empty()) l.manifest.inputs.push_back(a.truth);
    l.manifest.out_dir = a.out_dir;
    l.manifest.seed = l.cfg.master_seed;
    return l;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write " + path.string());
    }
    return out;
}

void write_json(const fs::path& path, const RunManifest& m, nlohmann::json body) {
    body["manifest"] = manifest_to_json(m);
    auto out = open_out(path);
    out << body.dump(2) << '\n';
}

int cmd_detect(const CommonArgs& a, bool dump_features) {
    auto l = load_common(a, "detect");
    fs::create_directories(a.out_dir);
    const auto g = load_edge_stream(a.input, l.input.directed, l.input.ticks);
    const auto lists = run_detectors(g, l.cfg);
    for (const auto& s : lists) {
        auto out = open_out(fs::path(a.out_dir) / ("scores_" + sanitize(s.id) + ".csv"));
        write_score_csv(out, l.manifest, s);
    }
    if (dump_features) {
        for (Feature f : l.cfg.features) {
            const auto fm = extract_features(g, f);
            auto out = open_out(fs::path(a.out_dir) /
                                (std::string("features_") + feature_name(f) + ".csv"));
            write_manifest_comments(out, l.manifest);
            write_feature_csv(out, fm, g.timestamps);
        }
    }
    std::cerr << "detect: wrote " << lists.size() << " score lists to " << a.out_dir << "\n";
    return 0;
}

int cmd_ensemble(const CommonArgs& a) {
    auto l = load_common(a, "ensemble");
    fs::create_directories(a.out_dir);
    const auto g = load_edge_stream(a.input, l.input.directed, l.input.ticks);
    const auto rep = run_pipeline(g, l.cfg);
    write_json(fs::path(a.out_dir) / "report.json", l.manifest, report_to_json(rep));
    auto out = open_out(fs::path(a.out_dir) / "final.csv");
    write_rank_csv(out, l.manifest, rep.final_ranks, rep.final_scores.scores);
    std::cerr << "ensemble: " << rep.components.size() << " components, phase1 kept "
              << rep.phase1.selected.size() << ", phase2 kept " << rep.phase2.selected.size()
              << ", " << rep.seconds << " s\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& a, std::size_t delay_max, std::size_t trials) {
    auto l = load_common(a, "evaluate");
    fs::create_directories(a.out_dir);
    const auto g = load_edge_stream(a.input, l.input.directed, l.input.ticks);
    const auto truth = load_truth(a.truth);
    const auto lists = run_detectors(g, l.cfg);
    CalibrationCache cache;
    const auto rep = run_ensemble(lists, l.cfg, &cache);

    EvalReport ev;
    for (std::size_t d = 0; d <= delay_max; ++d) {
        ev.ap_by_delay[d] = average_precision(rep.final_ranks, truth, d);
    }
    if (trials > 0) {
        const auto sig = significance_vs_random(lists, l.cfg, truth, trials,
                                                l.cfg.master_seed, 0, &cache);
        ev.has_significance = true;
        ev.trials = sig.trials;
        ev.k1 = sig.k1;
        ev.k2 = sig.k2;
        ev.rand_mu = sig.rand_mu;
        ev.rand_sigma = sig.rand_sigma;
        ev.z_gain = sig.z_gain;
        ev.z_defined = sig.z_defined;
    }
    write_json(fs::path(a.out_dir) / "eval.json", l.manifest, eval_report_to_json(ev));
    {
        auto out = open_out(fs::path(a.out_dir) / "ap_vs_delay.csv");
        write_ap_delay_csv(out, l.manifest, ev.ap_by_delay);
    }
    {
        auto out = open_out(fs::path(a.out_dir) / "pr_curve.csv");
        write_pr_curve_csv(out, l.manifest, rep.final_ranks, truth, 0);
    }
    std::cerr << "evaluate: AP(0)=" << ev.ap_by_delay[0];
    if (ev.has_significance && ev.z_defined) std::cerr << ", z_gain=" << ev.z_gain;
    std::cerr << "\n";
    return 0;
}

int cmd_noise(const CommonArgs& a, std::size_t noise_max, std::size_t repeats) {
    auto l = load_common(a, "noise");
    fs::create_directories(a.out_dir);
    const auto g = load_edge_stream(a.input, l.input.directed, l.input.ticks);
    const auto truth = load_truth(a.truth);
    const auto base = run_detectors(g, l.cfg);
    const std::vector<Strategy> strategies = {Strategy::full, Strategy::vertical,
                                              Strategy::horizontal, Strategy::diverse};
    const auto rows =
        noise_sweep(base, truth, strategies, noise_max, repeats, l.cfg.master_seed, l.cfg);
    auto out = open_out(fs::path(a.out_dir) / "noise.csv");
    write_noise_csv(out, l.manifest, rows);
    std::cerr << "noise: wrote " << rows.size() << " rows\n";
    return 0;
}

int cmd_synth(const CommonArgs& a, std::size_t nodes, std::size_t ticks, std::size_t events,
              std::size_t clique, double edge_prob) {
    auto l = load_common(a, "synth");
    fs::create_directories(a.out_dir);
    // event ticks drawn from the master seed, kept away from the first ticks
    // so every detector is past warm-up
    Rng rng(derive_seed(l.cfg.master_seed, 9001));
    if (events == 0 || ticks < 20 || events > ticks / 2) {
        throw validation_error("synth: need 0 < events <= ticks/2 and ticks >= 20");
    }
    std::vector<std::size_t> event_ticks;
    const std::size_t lo = 10;
    std::vector<std::size_t> pool;
    for (std::size_t t = lo; t < ticks; ++t) pool.push_back(t);
    rng.shuffle(pool);
    event_ticks.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(events));
    std::sort(event_ticks.begin(), event_ticks.end());

    SynthParams sp;
    sp.clique_size = clique;
    sp.edge_prob = edge_prob;
    const auto [g, truth] = make_synthetic(nodes, ticks, event_ticks,
                                           derive_seed(l.cfg.master_seed, 9002), sp);
    {
        auto out = open_out(fs::path(a.out_dir) / "edges.csv");
        write_manifest_comments(out, l.manifest);
        out << "time,src,dst,weight\n";
        for (std::size_t t = 0; t < g.ticks(); ++t) {
            for (const Edge& e : g.snapshots[t]) {
                out << g.timestamps[t] << ',' << g.node_ids[e.src] << ',' << g.node_ids[e.dst]
                    << ',' << format_double(e.weight) << '\n';
            }
        }
    }
    {
        auto out = open_out(fs::path(a.out_dir) / "truth.txt");
        write_manifest_comments(out, l.manifest);
        for (std::size_t t : truth.event_ticks) out << t << '\n';
    }
    std::cerr << "synth: " << nodes << " nodes, " << ticks << " ticks, " << events
              << " events -> " << a.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"selective anomaly-ensemble event detection for temporal graphs"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string strategy_flag, seed_flag;
    bool dump_features = false;
    std::size_t delay_max = 5, trials = 0, noise_max = 10, repeats = 10;
    std::size_t synth_nodes = 100, synth_ticks = 200, synth_events = 10, synth_clique = 10;
    double synth_edge_prob = 0.02;

    auto add_common = [&](CLI::App* cmd, bool needs_input, bool needs_truth) {
        if (needs_input) {
            cmd->add_option("--input", args.input, "edge-list CSV (time,src,dst[,weight])")
                ->required();
        }
        if (needs_truth) {
            cmd->add_option("--truth", args.truth, "ground-truth file, one event tick per line")
                ->required();
        }
        cmd->add_option("--out", args.out_dir, "output directory")->required();
        cmd->add_option("--config", args.config_path, "pipeline config file");
        cmd->add_option("--strategy", strategy_flag,
                        "selection strategy: full|vertical|horizontal|diverse|random");
        cmd->add_option("--seed", seed_flag, "master seed (overrides config)");
    };

    auto* detect = app.add_subcommand("detect", "run detectors, write per-component score CSVs");
    add_common(detect, true, false);
    detect->add_flag("--dump-features", dump_features, "also write feature matrices as CSV");

    auto* ensemble =
        app.add_subcommand("ensemble", "run the two-phase ensemble, write report + final ranking");
    add_common(ensemble, true, false);

    auto* evaluate =
        app.add_subcommand("evaluate", "run the ensemble and score it against ground truth");
    add_common(evaluate, true, true);
    evaluate->add_option("--delay-max", delay_max, "largest detection delay to report");
    evaluate->add_option("--trials", trials,
                         "random-ensemble trials for the significance report (0 = skip)");

    auto* noise = app.add_subcommand("noise", "noise-injection sweep over all strategies");
    add_common(noise, true, true);
    noise->add_option("--noise-max", noise_max, "largest number of shuffled lists to add");
    noise->add_option("--repeats", repeats, "seeded repeats averaged per point");

    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
    add_common(synth, false, false);
    synth->add_option("--nodes", synth_nodes, "node count");
    synth->add_option("--ticks", synth_ticks, "tick count");
    synth->add_option("--events", synth_events, "planted event count");
    synth->add_option("--clique", synth_clique, "planted clique size");
    synth->add_option("--edge-prob", synth_edge_prob, "background edge probability");

    CLI11_PARSE(app, argc, argv);

    if (!strategy_flag.empty()) args.strategy = strategy_flag;
    if (!seed_flag.empty()) {
        try {
            args.seed = std::stoull(seed_flag);
        } catch (...) {
            std::cerr << "error: bad --seed value '" << seed_flag << "'\n";
            return kExitValidation;
        }
    }

    try {
        if (detect->parsed()) return cmd_detect(args, dump_features);
        if (ensemble->parsed()) return cmd_ensemble(args);
        if (evaluate->parsed()) return cmd_evaluate(args, delay_max, trials);
        if (noise->parsed()) return cmd_noise(args, noise_max, repeats);
        if (synth->parsed()) {
            return cmd_synth(args, synth_nodes, synth_ticks, synth_events, synth_clique,
                             synth_edge_prob);
        }
    } catch (const io_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const capacity_error& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
