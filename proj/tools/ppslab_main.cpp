#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "ppslab/harness.hpp"

namespace fs = std::filesystem;
using namespace ppslab;

namespace {

harness::ExperimentConfig load_config(const std::string& config_path, uint64_t seed,
                                      const std::string& out_dir) {
    harness::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = harness::ExperimentConfig::from_json_file(config_path);
    if (seed != 0) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    return cfg;
}

pps::PpsGraph load_graph(const harness::ExperimentConfig& cfg) {
    const fs::path p = fs::path(cfg.out_dir) / "graph.ppsg";
    if (!fs::exists(p)) throw harness::StageFailure("load-graph", "missing " + p.string());
    return pps::PpsGraph::load(p.string());
}

reach::IouClusterer load_clusterer(const harness::ExperimentConfig& cfg) {
    // Rebuilt from the persisted history so classification is reproducible.
    const fs::path p = fs::path(cfg.out_dir) / "clusterer.json";
    if (!fs::exists(p)) throw harness::StageFailure("load-clusterer", "missing " + p.string());
    std::ifstream in(p);
    const auto j = nlohmann::json::parse(in);
    reach::IouClusterer c;
    for (double v : j.at("history").get<std::vector<double>>()) c.add(v);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ppslab: desk-scale developmental reach-and-grasp pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    uint64_t seed = 0;
    app.add_option("--config", config_path, "experiment config JSON");
    app.add_option("--seed", seed, "master seed override");
    app.add_option("--out", out_dir, "output directory override");

    auto* cmd_run = app.add_subcommand("run", "run the full pipeline");
    bool paper_scale = false;
    cmd_run->add_flag("--paper-scale", paper_scale, "3000-node graph");

    auto* cmd_build = app.add_subcommand("build", "build and densify the PPS graph");
    int nodes = 0;
    std::string graph_out;
    cmd_build->add_option("--nodes", nodes, "node count");
    cmd_build->add_option("--out-file", graph_out, "graph archive path");

    auto* cmd_explore = app.add_subcommand("explore", "bump-discovery exploration");

    auto* cmd_reach = app.add_subcommand("reach", "evaluate one reach policy");
    std::string policy_name = "jacobian-adjusted";
    cmd_reach->add_option("--policy", policy_name,
                          "random-node|random-candidate|nearest-candidate|jacobian-adjusted");

    auto* cmd_grasp = app.add_subcommand("grasp", "grasp-learning stages");
    auto* g_aperture = cmd_grasp->add_subcommand("learn-aperture", "aperture study");
    auto* g_cossim = cmd_grasp->add_subcommand("learn-cossim", "cosine-similarity table");
    auto* g_wrist = cmd_grasp->add_subcommand("wrist-search", "build the example database");
    auto* g_eval = cmd_grasp->add_subcommand("eval", "evaluate grasp methods");
    bool eval_train = false, eval_test = false;
    g_eval->add_flag("--train", eval_train, "train placements");
    g_eval->add_flag("--test", eval_test, "test placements");
    auto* g_offgrid = cmd_grasp->add_subcommand("offset-grid", "grid-search the center offset");

    auto* cmd_eval = app.add_subcommand("eval", "full train+test grasp evaluation");
    auto* cmd_figures = app.add_subcommand("emit-figures", "write figure CSVs from a finished run");
    auto* cmd_replay = app.add_subcommand("replay", "re-execute a record log and verify IOUs");
    std::string replay_log = "";
    cmd_replay->add_option("--log", replay_log, "records.jsonl path");

    CLI11_PARSE(app, argc, argv);

    try {
        harness::ExperimentConfig cfg = load_config(config_path, seed, out_dir);

        if (cmd_run->parsed()) {
            cfg.paper_scale = cfg.paper_scale || paper_scale;
            const harness::PipelineResult result = harness::run_pipeline(cfg);
            for (const auto& s : result.stages)
                std::cout << s.stage << ": " << s.wall_seconds << " s\n";
            std::cout << "done: " << cfg.out_dir << "\n";
            return 0;
        }
        if (cmd_build->parsed()) {
            if (nodes > 0) cfg.graph_nodes = nodes;
            harness::stage_build(cfg);
            const fs::path built = fs::path(cfg.out_dir) / "graph.ppsg";
            if (!graph_out.empty() && graph_out != built.string())
                fs::copy_file(built, graph_out, fs::copy_options::overwrite_existing);
            std::cout << "graph: " << (graph_out.empty() ? built.string() : graph_out) << "\n";
            return 0;
        }
        if (cmd_explore->parsed()) {
            const pps::PpsGraph g = load_graph(cfg);
            const reach::ExplorationResult res = harness::stage_explore(cfg, g);
            std::cout << "trajectories: " << res.trajectories
                      << " values: " << res.clusterer.history().size()
                      << " small-cluster: " << res.clusterer.small_cluster_count() << "\n";
            return 0;
        }
        if (cmd_reach->parsed()) {
            const pps::PpsGraph g = load_graph(cfg);
            const reach::IouClusterer clusterer = load_clusterer(cfg);
            sim::World world(cfg.world);
            Rng prng = Rng::substream(cfg.placement_seed(), 0x5452414e);
            const auto placements =
                reach::sample_placements(world, cfg.train_placements, prng);
            reach::Policy policy = reach::Policy::kJacobianAdjusted;
            for (reach::Policy p :
                 {reach::Policy::kRandomNode, reach::Policy::kRandomCandidate,
                  reach::Policy::kNearestCandidate, reach::Policy::kJacobianAdjusted})
                if (policy_name == reach::policy_name(p)) policy = p;
            Rng rng = Rng::substream(cfg.policy_seed(), splitmix64(0x52454143 + int(policy)));
            const auto row =
                harness::run_reach_policy(world, g, placements, policy, clusterer, rng);
            std::cout << row.policy << ": final=" << row.bumps_final << "/" << row.trials
                      << " any=" << row.bumps_any << " gt=" << row.bumps_ground_truth << "\n";
            return 0;
        }
        if (cmd_grasp->parsed() || cmd_eval->parsed() || cmd_figures->parsed()) {
            // These stages consume earlier artifacts; the full pipeline runner
            // provides them all and keeps the stage sequencing in one place.
            if (g_offgrid->parsed()) {
                const pps::PpsGraph g = load_graph(cfg);
                const reach::IouClusterer clusterer = load_clusterer(cfg);
                sim::World world(cfg.world);
                Rng prng = Rng::substream(cfg.placement_seed(), 0x5452414e);
                const auto placements =
                    reach::sample_placements(world, cfg.train_placements, prng);
                std::cout << "dv_frac,du_frac,dd_frac,grasps,trials\n";
                for (double dv : {0.0, -0.125, -0.25, -0.375}) {
                    grasp::FineTunePolicy pol = cfg.fine_tune;
                    pol.dv_frac = dv;
                    pol.du_frac = -dv / 2.0;
                    pol.dd_frac = dv / 2.0;
                    const auto rep = grasp::evaluate(world, g, placements,
                                                     grasp::Method::kFineTuned, {}, clusterer,
                                                     pol);
                    std::cout << dv << "," << pol.du_frac << "," << pol.dd_frac << ","
                              << rep.grasps << "," << rep.trials() << "\n";
                }
                return 0;
            }
            const harness::PipelineResult result = harness::run_pipeline(cfg);
            if (g_aperture->parsed()) {
                for (const auto& r : result.aperture)
                    std::cout << "a=" << r.aperture << " palmar=" << r.palmar_bumps << "/"
                              << r.trials << "\n";
            } else if (g_cossim->parsed()) {
                std::cout << "cossim table: " << cfg.out_dir << "/cossim.csv\n";
            } else if (g_wrist->parsed()) {
                std::cout << "examples: " << cfg.out_dir << "/grasp_examples.csv\n";
            } else if (g_eval->parsed()) {
                for (const auto& rep : result.grasp_methods)
                    std::cout << grasp::method_name(rep.method) << ": " << rep.grasps << "/"
                              << rep.trials() << "\n";
                if (eval_test)
                    std::cout << "test: " << result.test_report.grasps << "/"
                              << result.test_report.trials() << "\n";
            } else if (cmd_figures->parsed()) {
                harness::emit_figures(result, cfg.out_dir);
                std::cout << "figures: " << cfg.out_dir << "\n";
            } else {
                for (const auto& rep : result.grasp_methods)
                    std::cout << grasp::method_name(rep.method) << ": " << rep.grasps << "/"
                              << rep.trials() << "\n";
            }
            return 0;
        }
        if (cmd_replay->parsed()) {
            if (replay_log.empty())
                replay_log = (fs::path(cfg.out_dir) / "records.jsonl").string();
            const int mismatches = harness::replay_log(
                replay_log, (fs::path(cfg.out_dir) / "graph.ppsg").string(), cfg);
            std::cout << "replay mismatches: " << mismatches << "\n";
            return mismatches == 0 ? 0 : 1;
        }
    } catch (const harness::StageFailure& e) {
        std::cerr << "stage failure [" << e.stage << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
