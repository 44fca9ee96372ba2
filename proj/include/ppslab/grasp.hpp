#pragma once

#include "ppslab/reach.hpp"

namespace ppslab::grasp {

struct GraspError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoSuccessfulInterval : GraspError { NoSuccessfulInterval() : GraspError("no wrist interval succeeds") {} };
struct NoExamples : GraspError { NoExamples() : GraspError("no example grasps") {} };
struct MissingReturnPercepts : GraspError { MissingReturnPercepts() : GraspError("return percepts missing") {} };

enum class GraspOutcome { kMiss, kBump, kPalmarBump, kWeakGrasp, kGrasp };
const char* outcome_name(GraspOutcome o);

enum class Method { kAccidental, kCosine, kWrist, kFineTuned };
const char* method_name(Method m);

/// Proprioceptive Palmar detection: the aperture dropped from its commanded
/// value to a lower fixed point during the motion.
bool detect_palmar_bump(const reach::EventRecord& record);

/// Eq.-7 style classification from the return-trip observations, refined by
/// the proprioceptive Palmar signal and the observed IOU class.
GraspOutcome classify_grasp(const reach::EventRecord& record, const pps::PpsGraph& g);

struct ApertureRow {
    double aperture = 0.0;
    int trials = 0;
    int observed_bumps = 0;
    int gt_bumps = 0;
    int palmar_bumps = 0;
};

/// Repeats the Jacobian-adjusted reach set at each aperture setting.
std::vector<ApertureRow> aperture_experiment(sim::World& world, const pps::PpsGraph& g,
                                             const std::vector<sim::BlockPlacement>& placements,
                                             const reach::IouClusterer& clusterer,
                                             const std::vector<double>& apertures);

// Cosine-similarity statistics over the six approach vectors.
enum class ApproachVec { kGp, kGf, kMpf, kMpt, kMft, kO };
const char* vec_name(ApproachVec v);
constexpr int kNumApproachVecs = 6;
constexpr std::array<double, 5> kCosBuckets = {-1.0, -0.5, 0.0, 0.5, 1.0};

int nearest_bucket(double cosine);  // index into kCosBuckets

struct CosSimCell {
    int count = 0;
    int palmar = 0;
    double rate() const { return count > 0 ? double(palmar) / count : 0.0; }
};

struct CosSimTable {
    // cells[pair_index][bucket]; pairs enumerate (i, j), i < j.
    std::vector<std::array<CosSimCell, 5>> cells;
    std::vector<std::pair<ApproachVec, ApproachVec>> pairs;
    std::vector<bool> sufficient;  // per pair: any populated bucket
};

CosSimTable build_cos_sim_table(const std::vector<reach::EventRecord>& records,
                                const pps::PpsGraph& g);

struct GeometryRule {
    double motion_pair_bucket = 1.0;  // ideal C for hand/motion vector pairs
    double axis_pair_bucket = 0.0;    // ideal C against the target major axis
    std::vector<std::pair<ApproachVec, ApproachVec>> skipped;  // insufficient data
};

GeometryRule conclude_approach_geometry(const CosSimTable& table);

/// Candidate choice by minimal |C(g_f, o)|, Jacobian-adjusted final config,
/// and a preshape displaced opposite the gripper direction; the trajectory
/// runs home -> nearest node to the preshape -> preshape -> final.
reach::Plan plan_grasp_approach(const pps::PpsGraph& g, const sim::ArmModel& arm,
                                const reach::TargetInfo& target, double preshape_magnitude,
                                double candidate_cutoff = 0.0,
                                const percept::Center3* aim_override = nullptr);

struct GraspExample {
    sim::BlockPlacement placement;
    std::array<double, 6> q16{};  // final config q1..q6
    double ideal_q7 = 0.0;
    GraspOutcome outcome = GraspOutcome::kGrasp;
    reach::Plan plan;  // the executed plan, for replay
};

/// Replays a successful grasp over a q7 grid and keeps the center of the
/// longest contiguous successful interval.
GraspExample wrist_search(sim::World& world, const pps::PpsGraph& g,
                          const reach::EventRecord& success,
                          const reach::IouClusterer& clusterer, int grid_steps = 16);

/// Ideal q7 of the nearest example by Euclidean distance over q1..q6.
double wrist_transfer(const std::vector<GraspExample>& examples,
                      const sim::JointConfig& q_star_f);

struct FineTunePolicy {
    double candidate_cutoff = 21.0;
    bool stop_on_reflex = true;
    // Aim offsets as fractions of the target's major-axis pixel length.
    double dv_frac = -0.25;
    double du_frac = 0.125;
    double dd_frac = -0.125;
    double preshape_magnitude = 21.0;
};

percept::Center3 offset_aim(const reach::TargetInfo& target, const FineTunePolicy& policy);

reach::Plan fine_tuned_grasp(const pps::PpsGraph& g, const sim::ArmModel& arm,
                             const reach::TargetInfo& target, const FineTunePolicy& policy,
                             const std::vector<GraspExample>& examples);

struct TrialRow {
    int trial = 0;
    double x = 0.0, y = 0.0;
    GraspOutcome outcome = GraspOutcome::kMiss;
    int tier1_candidates = 0;
    bool gt_bump = false;
    bool observed_bump = false;
    bool palmar = false;
};

struct MethodReport {
    Method method = Method::kAccidental;
    std::vector<TrialRow> rows;
    std::vector<reach::EventRecord> records;
    int misses = 0, bumps = 0, palmar_bumps = 0, weak_grasps = 0, grasps = 0;
    int trials() const { return static_cast<int>(rows.size()); }
    double grasp_rate() const { return rows.empty() ? 0.0 : double(grasps) / rows.size(); }
    double palmar_rate() const {
        return rows.empty() ? 0.0 : double(palmar_bumps + weak_grasps + grasps) / rows.size();
    }
};

/// Runs one grasp method over a placement set.
MethodReport evaluate(sim::World& world, const pps::PpsGraph& g,
                      const std::vector<sim::BlockPlacement>& placements, Method method,
                      const std::vector<GraspExample>& examples,
                      const reach::IouClusterer& clusterer, const FineTunePolicy& policy);

struct Generalization {
    int train_grasps = 0, train_trials = 0;
    int test_grasps = 0, test_trials = 0;
    double two_proportion_z = 0.0;
    double two_proportion_p = 1.0;
    double train_mean_candidates = 0.0;
    double test_mean_candidates = 0.0;
    double candidates_t = 0.0;
    double candidates_p = 1.0;
};

Generalization generalization_study(const MethodReport& train, const MethodReport& test);

}  // namespace ppslab::grasp
