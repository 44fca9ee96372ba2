#pragma once

#include <optional>

#include "ppslab/graph.hpp"

namespace ppslab::reach {

struct ReachError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientHistory : ReachError { InsufficientHistory() : ReachError("clusterer needs >= 2 values") {} };
struct InsufficientData : ReachError { InsufficientData() : ReachError("no usable examples") {} };
struct NoCandidates : ReachError { NoCandidates() : ReachError("candidate set empty") {} };

/// Result of a deterministic 1-D 2-means run.
struct TwoMeans {
    double lo_centroid = 0.0;
    double hi_centroid = 0.0;
    int lo_count = 0;
    int hi_count = 0;
};

/// Centroids initialized at min and max; assignment ties go to the lower
/// centroid. Converges in at most |values| sweeps on 1-D data.
TwoMeans two_means(const std::vector<double>& values);

/// Accumulates every observed IOU and classifies new values by 2-means
/// cluster membership; the smaller cluster is the unusual ("bump") event.
class IouClusterer {
public:
    void add(double value) { history_.push_back(value); }
    const std::vector<double>& history() const { return history_; }

    /// Clusters history plus the value; true when the value lands in the
    /// smaller cluster. Requires >= 2 historical values.
    bool classify_bump(double value) const;

    /// Size of the smaller cluster over the history alone.
    int small_cluster_count() const;

    TwoMeans cluster_history() const { return two_means(history_); }

private:
    std::vector<double> history_;
};

enum class Policy { kRandomNode, kRandomCandidate, kNearestCandidate, kJacobianAdjusted };
const char* policy_name(Policy p);

/// What the agent extracted about one foreground object from the home
/// percept.
struct TargetInfo {
    int block_id = 0;
    percept::Mask mask;
    percept::DepthRange range;
    percept::Center3 center;
    percept::Vec3Dir orientation;
};

struct ObjectObservation {
    TargetInfo initial;
    double final_iou = 1.0;
    bool observed_bump = false;
    bool ground_truth_push = false;
};

struct Plan {
    Policy policy = Policy::kRandomNode;
    std::vector<int> trajectory;  // home .. final graph node
    int final_node = -1;
    int tier = 0;
    bool has_adjusted_final = false;
    sim::JointConfig adjusted_final;  // q*_f
    bool has_preshape = false;
    sim::JointConfig preshape;  // q*_p
    bool has_q7_override = false;
    double q7_override = 0.0;
    double aperture = 1.0;
    bool stop_on_reflex = false;
    bool resume_on_usual = true;
    bool joint_limit_clamped = false;
    percept::Center3 aim;
    std::unordered_set<pps::EdgeKey> banned;
};

/// One executed trajectory with observations and ground truth from the
/// simulator event log.
struct EventRecord {
    int trial = -1;
    Plan plan;
    std::vector<sim::BlockPlacement> placements;
    std::vector<ObjectObservation> objects;

    bool observed_bump_any = false;
    bool observed_bump_at_final = false;
    bool change_detected_at_final = false;
    int abort_resume_cycles = 0;

    bool gt_push_any = false;
    bool gt_push_before_final = false;
    bool gt_palmar = false;
    bool gt_attach = false;
    int reflex_stop_substep = -1;

    double commanded_aperture = 1.0;
    std::vector<double> aperture_trace;  // aperture at the end of each forward leg

    // Return-trip observations of the primary target at each graph node
    // (reverse order: final first, home last).
    std::vector<int> return_nodes;
    std::vector<percept::Mask> return_target_masks;
    std::vector<std::optional<percept::DepthRange>> return_target_ranges;
    std::vector<uint8_t> attached_at_return;
    bool return_captured = false;
};

struct CandidateSet {
    int tier = 1;  // 1 = mask and depth intersect, 2 = depth only, 3 = all nodes
    std::vector<int> node_ids;
    std::vector<double> center_distance;
};

/// Tiered candidate final nodes: palm mask and depth range both intersect
/// the target's; widened until nonempty.
CandidateSet candidate_final_nodes(const pps::PpsGraph& g, const TargetInfo& target);

struct BumpTableRow {
    std::string mask_kind;  // palm | hand | swept
    bool mask_intersects = false;
    bool range_intersects = false;
    int bumps = 0;
    int total = 0;
    double probability() const { return total > 0 ? double(bumps) / total : 0.0; }
};

/// Conditional bump probabilities per (mask kind x mask-intersect x
/// depth-intersect) group over (record, object) examples.
std::vector<BumpTableRow> bump_probability_table(const std::vector<EventRecord>& records,
                                                 const pps::PpsGraph& g);

enum class FeatureKind { kCenterDistance, kU, kV, kD };
const char* feature_name(FeatureKind k);

struct Comparator {
    FeatureKind kind = FeatureKind::kCenterDistance;
    double threshold = 0.0;
    double probability = 0.0;
    int support = 0;
};

struct FeatureCell {
    FeatureKind kind;
    double threshold;
    int bumps;
    int total;
};

/// Evaluates P(bump | tier-1 candidate and feature holds) over the threshold
/// grid k in {2,4,...,40}; returns the maximizing comparator (ties prefer
/// f_c, then smaller k).
Comparator select_feature(const std::vector<EventRecord>& records, const pps::PpsGraph& g,
                          std::vector<FeatureCell>* table = nullptr);

/// Policy-dependent final-node choice plus obstacle-edge banning.
Plan plan_reach(const pps::PpsGraph& g, const sim::ArmModel& arm, const TargetInfo& target,
                Policy policy, Rng& rng);

/// Off-graph correction of the final configuration toward an aimed image
/// point via the inverse local Jacobian; joints are clamped to their ranges
/// (clamping reported through *clamped).
sim::JointConfig adjust_final_config(const pps::PpsGraph& g, int n_f,
                                     const percept::Center3& aim,
                                     const pps::LocalJacobian& lj, const sim::ArmModel& arm,
                                     bool* clamped = nullptr);

/// Shortest path home->dst that avoids non-final edges whose swept mask and
/// depth range both intersect the target; bans relax when no path survives.
std::vector<int> plan_trajectory_avoiding(const pps::PpsGraph& g, const TargetInfo& target,
                                          int dst, bool protect_final_edge,
                                          std::unordered_set<pps::EdgeKey>* banned_out);

/// Full execution protocol: forward with mask-change monitoring, abort and
/// return on change, occlusion resume when the clusterer calls the IOU
/// usual, and a full return trip capturing target observations per node.
EventRecord execute_reach(sim::World& world, const pps::PpsGraph& g, const Plan& plan,
                          const IouClusterer* clusterer);

TargetInfo observe_target(const percept::Percept& home_percept, int block_id);

/// Rejection-sample block placements that are visible and unoccluded at the
/// home percept.
std::vector<sim::BlockPlacement> sample_placements(const sim::World& prototype, int count,
                                                   Rng& rng);

struct ExplorationResult {
    std::vector<EventRecord> records;
    IouClusterer clusterer;
    int trajectories = 0;
};

/// The bump-discovery loop: three blocks per trajectory, random final nodes,
/// reclustering after every trajectory until the smaller IOU cluster holds
/// at least `min_small_cluster` examples.
ExplorationResult random_exploration(sim::World& world, const pps::PpsGraph& g,
                                     Rng& placement_rng, Rng& policy_rng,
                                     int min_small_cluster = 20, int max_trajectories = 2000);

}  // namespace ppslab::reach
