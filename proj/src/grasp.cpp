#include "ppslab/grasp.hpp"

#include <algorithm>
#include <cmath>

#include "ppslab/stats.hpp"

namespace ppslab::grasp {

const char* outcome_name(GraspOutcome o) {
    switch (o) {
        case GraspOutcome::kMiss: return "miss";
        case GraspOutcome::kBump: return "bump";
        case GraspOutcome::kPalmarBump: return "palmar-bump";
        case GraspOutcome::kWeakGrasp: return "weak-grasp";
        case GraspOutcome::kGrasp: return "grasp";
    }
    return "?";
}

const char* method_name(Method m) {
    switch (m) {
        case Method::kAccidental: return "accidental";
        case Method::kCosine: return "cosine";
        case Method::kWrist: return "wrist";
        case Method::kFineTuned: return "fine-tuned";
    }
    return "?";
}

bool detect_palmar_bump(const reach::EventRecord& record) {
    for (double a : record.aperture_trace) {
        if (a < record.commanded_aperture - 0.02) return true;
    }
    return false;
}

GraspOutcome classify_grasp(const reach::EventRecord& record, const pps::PpsGraph& g) {
    const bool palmar = detect_palmar_bump(record);

    if (record.return_captured && !record.return_nodes.empty()) {
        if (record.return_target_masks.size() != record.return_nodes.size())
            throw MissingReturnPercepts();
        // Eq.-7 style check with the full hand mask: the closed fingers may
        // obscure the palm-region part of the object.
        int held_prefix = 0;
        bool all = true;
        for (size_t j = 0; j < record.return_nodes.size(); ++j) {
            const pps::Node& n = g.node(record.return_nodes[j]);
            bool ok = false;
            if (!record.return_target_masks[j].empty() && record.return_target_ranges[j]) {
                ok = percept::masks_intersect(n.hand, record.return_target_masks[j]) &&
                     n.hand_range.intersects(*record.return_target_ranges[j]);
            }
            if (ok && all) ++held_prefix;
            if (!ok) all = false;
        }
        if (all) return GraspOutcome::kGrasp;
        // A short-lived hold that survives at least one full return edge
        // reads as a grasp that failed in transit.
        if (palmar && held_prefix >= 2) return GraspOutcome::kWeakGrasp;
    }

    if (palmar) return GraspOutcome::kPalmarBump;
    if (record.observed_bump_any) return GraspOutcome::kBump;
    return GraspOutcome::kMiss;
}

std::vector<ApertureRow> aperture_experiment(sim::World& world, const pps::PpsGraph& g,
                                             const std::vector<sim::BlockPlacement>& placements,
                                             const reach::IouClusterer& clusterer,
                                             const std::vector<double>& apertures) {
    std::vector<ApertureRow> rows;
    Rng rng(0);  // plans are deterministic for this policy; rng is unused entropy
    for (double a : apertures) {
        ApertureRow row;
        row.aperture = a;
        for (const auto& placement : placements) {
            world.reset_blocks({placement});
            world.teleport(world.arm_model().home());
            const percept::Percept home = world.render();
            reach::TargetInfo target;
            try {
                target = reach::observe_target(home, 0);
            } catch (const percept::BlockNotVisible&) {
                row.trials += 1;
                continue;
            }
            reach::Plan plan = reach::plan_reach(g, world.arm_model(), target,
                                                 reach::Policy::kJacobianAdjusted, rng);
            plan.aperture = a;
            const reach::EventRecord rec = reach::execute_reach(world, g, plan, &clusterer);
            row.trials += 1;
            row.observed_bumps += rec.observed_bump_any ? 1 : 0;
            row.gt_bumps += rec.gt_push_any ? 1 : 0;
            row.palmar_bumps += detect_palmar_bump(rec) ? 1 : 0;
        }
        rows.push_back(row);
    }
    return rows;
}

const char* vec_name(ApproachVec v) {
    switch (v) {
        case ApproachVec::kGp: return "g_p";
        case ApproachVec::kGf: return "g_f";
        case ApproachVec::kMpf: return "m_pf";
        case ApproachVec::kMpt: return "m_pt";
        case ApproachVec::kMft: return "m_ft";
        case ApproachVec::kO: return "o";
    }
    return "?";
}

int nearest_bucket(double cosine) {
    int best = 0;
    double best_d = std::abs(cosine - kCosBuckets[0]);
    for (int i = 1; i < 5; ++i) {
        const double d = std::abs(cosine - kCosBuckets[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

CosSimTable build_cos_sim_table(const std::vector<reach::EventRecord>& records,
                                const pps::PpsGraph& g) {
    CosSimTable table;
    for (int i = 0; i < kNumApproachVecs; ++i)
        for (int j = i + 1; j < kNumApproachVecs; ++j)
            table.pairs.emplace_back(static_cast<ApproachVec>(i), static_cast<ApproachVec>(j));
    table.cells.resize(table.pairs.size());

    for (const auto& rec : records) {
        if (rec.plan.trajectory.size() < 2 || rec.objects.empty()) continue;
        const int f = rec.plan.trajectory.back();
        const int p = rec.plan.trajectory[rec.plan.trajectory.size() - 2];
        const pps::Node& nf = g.node(f);
        const pps::Node& np = g.node(p);
        const reach::TargetInfo& t = rec.objects.front().initial;

        std::array<percept::Vec3Dir, kNumApproachVecs> vecs;
        vecs[0] = np.gripper;
        vecs[1] = nf.gripper;
        vecs[2] = percept::direction(np.palm_center, nf.palm_center);
        vecs[3] = percept::direction(np.palm_center, t.center);
        vecs[4] = percept::direction(nf.palm_center, t.center);
        vecs[5] = t.orientation;

        const bool palmar = detect_palmar_bump(rec);
        for (size_t pi = 0; pi < table.pairs.size(); ++pi) {
            const auto [a, b] = table.pairs[pi];
            double c;
            try {
                c = percept::cosine_similarity(vecs[static_cast<int>(a)],
                                               vecs[static_cast<int>(b)]);
            } catch (const percept::DegenerateVector&) {
                continue;
            }
            CosSimCell& cell = table.cells[pi][nearest_bucket(c)];
            cell.count += 1;
            cell.palmar += palmar ? 1 : 0;
        }
    }
    table.sufficient.resize(table.pairs.size());
    for (size_t pi = 0; pi < table.pairs.size(); ++pi) {
        bool any = false;
        for (const auto& cell : table.cells[pi]) any |= cell.count > 0;
        table.sufficient[pi] = any;
    }
    return table;
}

GeometryRule conclude_approach_geometry(const CosSimTable& table) {
    GeometryRule rule;
    double motion_votes[5] = {0, 0, 0, 0, 0};
    double axis_votes[5] = {0, 0, 0, 0, 0};
    for (size_t pi = 0; pi < table.pairs.size(); ++pi) {
        if (!table.sufficient[pi]) {
            rule.skipped.push_back(table.pairs[pi]);
            continue;
        }
        int best = -1;
        double best_rate = -1.0;
        for (int b = 0; b < 5; ++b) {
            const auto& cell = table.cells[pi][b];
            if (cell.count > 0 && cell.rate() > best_rate) {
                best_rate = cell.rate();
                best = b;
            }
        }
        const bool has_o = table.pairs[pi].first == ApproachVec::kO ||
                           table.pairs[pi].second == ApproachVec::kO;
        // |C| matters for the axis pairs: the major-axis sign is arbitrary.
        if (has_o) {
            axis_votes[best] += 1.0;
        } else {
            motion_votes[best] += 1.0;
        }
    }
    int mb = 4, ab = 2;
    double mv = -1, av = -1;
    for (int b = 0; b < 5; ++b) {
        if (motion_votes[b] > mv) {
            mv = motion_votes[b];
            mb = b;
        }
        if (axis_votes[b] > av) {
            av = axis_votes[b];
            ab = b;
        }
    }
    rule.motion_pair_bucket = kCosBuckets[mb];
    rule.axis_pair_bucket = std::abs(kCosBuckets[ab]);
    return rule;
}

reach::Plan plan_grasp_approach(const pps::PpsGraph& g, const sim::ArmModel& arm,
                                const reach::TargetInfo& target, double preshape_magnitude,
                                double candidate_cutoff, const percept::Center3* aim_override) {
    reach::CandidateSet cands = reach::candidate_final_nodes(g, target);
    if (cands.tier != 1) throw reach::NoCandidates();
    if (candidate_cutoff > 0.0) {
        reach::CandidateSet filtered;
        filtered.tier = 1;
        for (size_t i = 0; i < cands.node_ids.size(); ++i) {
            if (cands.center_distance[i] < candidate_cutoff) {
                filtered.node_ids.push_back(cands.node_ids[i]);
                filtered.center_distance.push_back(cands.center_distance[i]);
            }
        }
        if (filtered.node_ids.empty()) throw reach::NoCandidates();
        cands = std::move(filtered);
    }

    // n_f minimizes |C(g_f, o)|: gripper as perpendicular to the target's
    // major axis as the graph allows.
    int n_f = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int id : cands.node_ids) {
        double c;
        try {
            c = std::abs(percept::cosine_similarity(g.node(id).gripper, target.orientation));
        } catch (const percept::DegenerateVector&) {
            continue;
        }
        if (c < best) {
            best = c;
            n_f = id;
        }
    }
    if (n_f < 0) throw reach::NoCandidates();

    reach::Plan plan;
    plan.policy = reach::Policy::kJacobianAdjusted;
    plan.final_node = n_f;
    plan.tier = 1;
    plan.aim = aim_override ? *aim_override : target.center;

    const pps::LocalJacobian lj = pps::local_jacobian(g, n_f);
    plan.adjusted_final =
        reach::adjust_final_config(g, n_f, plan.aim, lj, arm, &plan.joint_limit_clamped);
    plan.has_adjusted_final = true;

    // Preshape: the final pose translated in image space opposite the
    // gripper direction, so the final motion leads with the opening.
    const percept::Vec3Dir gf = g.node(n_f).gripper;
    const double gn = gf.norm();
    const Eigen::RowVector3d dc(-preshape_magnitude * gf.du / gn,
                                -preshape_magnitude * gf.dv / gn,
                                -preshape_magnitude * gf.dd / gn);
    const Eigen::Matrix<double, 1, 7> dq = dc * lj.jinv;
    plan.preshape = plan.adjusted_final;
    for (int k = 0; k < 7; ++k) {
        const double raw = plan.preshape.q[k] + dq(0, k);
        plan.preshape.q[k] = arm.clamp_joint(k, raw);
        plan.joint_limit_clamped |= plan.preshape.q[k] != raw;
    }
    plan.has_preshape = true;

    // Nearest graph node to the preshape configuration starts the approach.
    int n_n = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.size(); ++i) {
        const double d = pps::joint_distance(g.node(i).config, plan.preshape);
        if (d < best_d) {
            best_d = d;
            n_n = i;
        }
    }
    plan.trajectory = reach::plan_trajectory_avoiding(g, target, n_n,
                                                      /*protect_final_edge=*/false,
                                                      &plan.banned);
    return plan;
}

GraspExample wrist_search(sim::World& world, const pps::PpsGraph& g,
                          const reach::EventRecord& success,
                          const reach::IouClusterer& clusterer, int grid_steps) {
    const sim::ArmModel& arm = world.arm_model();
    const double lo = arm.range_lo(6), hi = arm.range_hi(6);
    std::vector<double> grid;
    for (int i = 0; i <= grid_steps; ++i)
        grid.push_back(lo + (hi - lo) * i / grid_steps);

    std::vector<uint8_t> ok(grid.size(), 0);
    for (size_t i = 0; i < grid.size(); ++i) {
        world.reset_blocks(success.placements);
        reach::Plan plan = success.plan;
        plan.has_q7_override = true;
        plan.q7_override = grid[i];
        const reach::EventRecord rec = reach::execute_reach(world, g, plan, &clusterer);
        ok[i] = classify_grasp(rec, g) == GraspOutcome::kGrasp ? 1 : 0;
    }

    // Longest contiguous successful run; ties keep the lower-q7 interval.
    int best_start = -1, best_len = 0;
    int start = -1;
    for (size_t i = 0; i <= grid.size(); ++i) {
        if (i < grid.size() && ok[i]) {
            if (start < 0) start = static_cast<int>(i);
        } else if (start >= 0) {
            const int len = static_cast<int>(i) - start;
            if (len > best_len) {
                best_len = len;
                best_start = start;
            }
            start = -1;
        }
    }
    if (best_len == 0) throw NoSuccessfulInterval();

    GraspExample ex;
    ex.placement = success.placements.front();
    ex.plan = success.plan;
    ex.ideal_q7 = (grid[best_start] + grid[best_start + best_len - 1]) / 2.0;
    const sim::JointConfig& fin =
        success.plan.has_adjusted_final ? success.plan.adjusted_final
                                        : g.node(success.plan.trajectory.back()).config;
    for (int k = 0; k < 6; ++k) ex.q16[k] = fin.q[k];
    ex.outcome = GraspOutcome::kGrasp;
    return ex;
}

double wrist_transfer(const std::vector<GraspExample>& examples,
                      const sim::JointConfig& q_star_f) {
    if (examples.empty()) throw NoExamples();
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < examples.size(); ++i) {
        double s = 0.0;
        for (int k = 0; k < 6; ++k) {
            const double d = examples[i].q16[k] - q_star_f.q[k];
            s += d * d;
        }
        if (s < best_d) {  // strict keeps the lower-index example on ties
            best_d = s;
            best = static_cast<int>(i);
        }
    }
    return examples[best].ideal_q7;
}

percept::Center3 offset_aim(const reach::TargetInfo& target, const FineTunePolicy& policy) {
    // Major-axis pixel length from the mask extent along the orientation.
    double smin = 0.0, smax = 0.0;
    bool first = true;
    for (int r = 0; r < target.mask.rows; ++r) {
        for (int c = 0; c < target.mask.cols; ++c) {
            if (!target.mask.get(r, c)) continue;
            const double s = (c - target.center.u) * target.orientation.du +
                             (r - target.center.v) * target.orientation.dv;
            if (first) {
                smin = smax = s;
                first = false;
            } else {
                smin = std::min(smin, s);
                smax = std::max(smax, s);
            }
        }
    }
    const double axis_len = smax - smin;
    percept::Center3 aim = target.center;
    aim.u += policy.du_frac * axis_len;
    aim.v += policy.dv_frac * axis_len;
    aim.d += policy.dd_frac * axis_len;
    return aim;
}

reach::Plan fine_tuned_grasp(const pps::PpsGraph& g, const sim::ArmModel& arm,
                             const reach::TargetInfo& target, const FineTunePolicy& policy,
                             const std::vector<GraspExample>& examples) {
    const percept::Center3 aim = offset_aim(target, policy);
    reach::Plan plan = plan_grasp_approach(g, arm, target, policy.preshape_magnitude,
                                           policy.candidate_cutoff, &aim);
    plan.stop_on_reflex = policy.stop_on_reflex;
    if (!examples.empty()) {
        plan.has_q7_override = true;
        plan.q7_override = wrist_transfer(examples, plan.adjusted_final);
    }
    return plan;
}

MethodReport evaluate(sim::World& world, const pps::PpsGraph& g,
                      const std::vector<sim::BlockPlacement>& placements, Method method,
                      const std::vector<GraspExample>& examples,
                      const reach::IouClusterer& clusterer, const FineTunePolicy& policy) {
    MethodReport report;
    report.method = method;
    Rng rng(0);  // deterministic policies below; placeholder entropy
    for (size_t t = 0; t < placements.size(); ++t) {
        const auto& placement = placements[t];
        world.reset_blocks({placement});
        world.teleport(world.arm_model().home());

        TrialRow row;
        row.trial = static_cast<int>(t);
        row.x = placement.x;
        row.y = placement.y;

        reach::TargetInfo target;
        try {
            target = reach::observe_target(world.render(), 0);
        } catch (const percept::BlockNotVisible&) {
            row.outcome = GraspOutcome::kMiss;
            report.rows.push_back(row);
            report.misses += 1;
            continue;
        }
        row.tier1_candidates = 0;
        {
            const reach::CandidateSet cs = reach::candidate_final_nodes(g, target);
            if (cs.tier == 1) row.tier1_candidates = static_cast<int>(cs.node_ids.size());
        }

        reach::Plan plan;
        try {
            switch (method) {
                case Method::kAccidental:
                    plan = reach::plan_reach(g, world.arm_model(), target,
                                             reach::Policy::kJacobianAdjusted, rng);
                    break;
                case Method::kCosine:
                    plan = plan_grasp_approach(g, world.arm_model(), target,
                                               policy.preshape_magnitude);
                    break;
                case Method::kWrist: {
                    plan = plan_grasp_approach(g, world.arm_model(), target,
                                               policy.preshape_magnitude);
                    if (!examples.empty()) {
                        plan.has_q7_override = true;
                        plan.q7_override = wrist_transfer(examples, plan.adjusted_final);
                    }
                    break;
                }
                case Method::kFineTuned:
                    plan = fine_tuned_grasp(g, world.arm_model(), target, policy, examples);
                    break;
            }
        } catch (const reach::NoCandidates&) {
            row.outcome = GraspOutcome::kMiss;
            report.rows.push_back(row);
            report.misses += 1;
            continue;
        }

        reach::EventRecord rec = reach::execute_reach(world, g, plan, &clusterer);
        rec.trial = static_cast<int>(t);
        row.outcome = classify_grasp(rec, g);
        row.gt_bump = rec.gt_push_any;
        row.observed_bump = rec.observed_bump_any;
        row.palmar = detect_palmar_bump(rec);
        switch (row.outcome) {
            case GraspOutcome::kMiss: report.misses += 1; break;
            case GraspOutcome::kBump: report.bumps += 1; break;
            case GraspOutcome::kPalmarBump: report.palmar_bumps += 1; break;
            case GraspOutcome::kWeakGrasp: report.weak_grasps += 1; break;
            case GraspOutcome::kGrasp: report.grasps += 1; break;
        }
        report.rows.push_back(row);
        report.records.push_back(std::move(rec));
    }
    return report;
}

Generalization generalization_study(const MethodReport& train, const MethodReport& test) {
    Generalization gen;
    gen.train_grasps = train.grasps;
    gen.train_trials = train.trials();
    gen.test_grasps = test.grasps;
    gen.test_trials = test.trials();
    const auto prop = stats::two_proportion_test(train.grasps, train.trials(), test.grasps,
                                                 test.trials());
    gen.two_proportion_z = prop.statistic;
    gen.two_proportion_p = prop.p_value;

    std::vector<double> a, b;
    for (const auto& r : train.rows) a.push_back(r.tier1_candidates);
    for (const auto& r : test.rows) b.push_back(r.tier1_candidates);
    const auto tt = stats::welch_t_test(a, b);
    gen.candidates_t = tt.statistic;
    gen.candidates_p = tt.p_value;
    double sa = 0, sb = 0;
    for (double v : a) sa += v;
    for (double v : b) sb += v;
    gen.train_mean_candidates = a.empty() ? 0.0 : sa / a.size();
    gen.test_mean_candidates = b.empty() ? 0.0 : sb / b.size();
    return gen;
}

}  // namespace ppslab::grasp
