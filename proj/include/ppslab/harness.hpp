#pragma once

#include "ppslab/grasp.hpp"

namespace ppslab::harness {

struct StageFailure : std::runtime_error {
    std::string stage;
    StageFailure(const std::string& stage_name, const std::string& cause)
        : std::runtime_error(stage_name + ": " + cause), stage(stage_name) {}
};

struct ExperimentConfig {
    int schema_version = 1;
    sim::WorldConfig world;
    int graph_nodes = 600;
    uint64_t seed = 7;
    uint64_t seed_babble = 0;     // 0: derive from seed
    uint64_t seed_placement = 0;  // 0: derive from seed
    uint64_t seed_policy = 0;     // 0: derive from seed
    int train_placements = 40;
    int test_placements = 40;
    int explore_min_small_cluster = 20;
    int explore_max_trajectories = 2000;
    grasp::FineTunePolicy fine_tune;
    std::vector<double> apertures = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::string out_dir = "out";
    bool paper_scale = false;  // 3000-node graph

    uint64_t babble_seed() const { return seed_babble ? seed_babble : splitmix64(seed ^ 0x1001); }
    uint64_t placement_seed() const { return seed_placement ? seed_placement : splitmix64(seed ^ 0x2002); }
    uint64_t policy_seed() const { return seed_policy ? seed_policy : splitmix64(seed ^ 0x3003); }
    int effective_graph_nodes() const { return paper_scale ? 3000 : graph_nodes; }

    static ExperimentConfig from_json_file(const std::string& path);
    void to_json_file(const std::string& path) const;
};

struct StageReport {
    std::string stage;
    double wall_seconds = 0.0;
    std::string summary;
};

struct PipelineResult {
    std::vector<StageReport> stages;
    // Per-policy reach ladder counts (4 policies x {final, any, ground truth}).
    struct LadderRow {
        std::string policy;
        int trials = 0;
        int bumps_final = 0;
        int bumps_any = 0;
        int bumps_ground_truth = 0;
    };
    std::vector<LadderRow> ladder;
    std::vector<grasp::ApertureRow> aperture;
    std::vector<grasp::MethodReport> grasp_methods;  // accidental, cosine, wrist, fine-tuned
    grasp::MethodReport test_report;
    grasp::Generalization generalization;
    reach::Comparator selected_feature;
    std::vector<reach::BumpTableRow> bump_table;
    int exploration_trajectories = 0;
    int exploration_values = 0;
    int exploration_small_cluster = 0;
};

/// Runs the full developmental pipeline with seeded substreams, writing
/// every stage artifact into cfg.out_dir.
PipelineResult run_pipeline(const ExperimentConfig& cfg);

// Stage entry points (each loads its inputs from out_dir, so any checkpoint
// can be rerun in isolation).
void stage_build(const ExperimentConfig& cfg);
reach::ExplorationResult stage_explore(const ExperimentConfig& cfg, const pps::PpsGraph& g);

/// Reach evaluation for one policy over the train placements.
PipelineResult::LadderRow run_reach_policy(sim::World& world, const pps::PpsGraph& g,
                                           const std::vector<sim::BlockPlacement>& placements,
                                           reach::Policy policy,
                                           const reach::IouClusterer& clusterer, Rng& rng,
                                           std::vector<reach::EventRecord>* records = nullptr);

// Event log (JSON lines, schema-versioned).
void append_record_log(const std::string& path, const reach::EventRecord& rec,
                       const std::string& stage);
struct LoggedTrial {
    std::string stage;
    reach::Plan plan;
    std::vector<sim::BlockPlacement> placements;
    std::vector<double> ious;
};
std::vector<LoggedTrial> read_record_log(const std::string& path);

/// Re-executes logged trajectories and checks every recorded IOU
/// reproduces exactly; returns the number of mismatches.
int replay_log(const std::string& log_path, const std::string& graph_path,
               const ExperimentConfig& cfg);

void emit_figures(const PipelineResult& result, const std::string& dir);

std::string csv_escape(const std::string& s);

}  // namespace ppslab::harness
