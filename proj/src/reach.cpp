#include "ppslab/reach.hpp"

#include <algorithm>
#include <cmath>

namespace ppslab::reach {

TwoMeans two_means(const std::vector<double>& values) {
    TwoMeans tm;
    if (values.empty()) return tm;
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn, hi = *mx;
    std::vector<uint8_t> assign(values.size(), 0);
    for (size_t sweep = 0; sweep <= values.size(); ++sweep) {
        bool changed = false;
        for (size_t i = 0; i < values.size(); ++i) {
            // Ties go to the lower centroid.
            const uint8_t a = std::abs(values[i] - lo) <= std::abs(values[i] - hi) ? 0 : 1;
            if (a != assign[i]) {
                assign[i] = a;
                changed = true;
            }
        }
        double slo = 0.0, shi = 0.0;
        int nlo = 0, nhi = 0;
        for (size_t i = 0; i < values.size(); ++i) {
            if (assign[i] == 0) {
                slo += values[i];
                ++nlo;
            } else {
                shi += values[i];
                ++nhi;
            }
        }
        if (nlo > 0) lo = slo / nlo;
        if (nhi > 0) hi = shi / nhi;
        tm.lo_count = nlo;
        tm.hi_count = nhi;
        if (!changed) break;
    }
    tm.lo_centroid = lo;
    tm.hi_centroid = hi;
    return tm;
}

namespace {

// True when the value's cluster is the smaller one. Size ties resolve to the
// lower-centroid cluster being the bump cluster.
bool bump_from_clustering(const TwoMeans& tm, double value) {
    const bool in_lo = std::abs(value - tm.lo_centroid) <= std::abs(value - tm.hi_centroid);
    const bool lo_is_smaller =
        tm.lo_count < tm.hi_count || (tm.lo_count == tm.hi_count && true);
    return in_lo == lo_is_smaller;
}

}  // namespace

bool IouClusterer::classify_bump(double value) const {
    if (history_.size() < 2) throw InsufficientHistory();
    std::vector<double> all = history_;
    all.push_back(value);
    return bump_from_clustering(two_means(all), value);
}

int IouClusterer::small_cluster_count() const {
    if (history_.size() < 2) return 0;
    const TwoMeans tm = two_means(history_);
    return std::min(tm.lo_count, tm.hi_count);
}

const char* policy_name(Policy p) {
    switch (p) {
        case Policy::kRandomNode: return "random-node";
        case Policy::kRandomCandidate: return "random-candidate";
        case Policy::kNearestCandidate: return "nearest-candidate";
        case Policy::kJacobianAdjusted: return "jacobian-adjusted";
    }
    return "?";
}

const char* feature_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::kCenterDistance: return "f_c";
        case FeatureKind::kU: return "f_u";
        case FeatureKind::kV: return "f_v";
        case FeatureKind::kD: return "f_d";
    }
    return "?";
}

CandidateSet candidate_final_nodes(const pps::PpsGraph& g, const TargetInfo& target) {
    if (target.mask.empty()) throw ReachError("candidate_final_nodes: empty target mask");
    CandidateSet out;
    auto collect = [&](int tier) {
        out.tier = tier;
        out.node_ids.clear();
        out.center_distance.clear();
        for (int i = 0; i < g.size(); ++i) {
            const pps::Node& n = g.node(i);
            const bool depth_ok = n.palm_range.intersects(target.range);
            const bool mask_ok = percept::masks_intersect(n.palm, target.mask);
            const bool keep = tier == 1 ? (mask_ok && depth_ok) : tier == 2 ? depth_ok : true;
            if (keep) {
                out.node_ids.push_back(i);
                out.center_distance.push_back(percept::distance(target.center, n.palm_center));
            }
        }
        return !out.node_ids.empty();
    };
    if (collect(1)) return out;
    if (collect(2)) return out;
    collect(3);
    return out;
}

namespace {

struct Example {
    int node = -1;       // final graph node
    int prev = -1;       // penultimate (== node when |T| == 1)
    const TargetInfo* target;
    bool bump;
};

std::vector<Example> gather_examples(const std::vector<EventRecord>& records) {
    std::vector<Example> out;
    for (const auto& r : records) {
        if (r.plan.trajectory.empty()) continue;
        Example e;
        e.node = r.plan.trajectory.back();
        e.prev = r.plan.trajectory.size() >= 2
                     ? r.plan.trajectory[r.plan.trajectory.size() - 2]
                     : e.node;
        for (const auto& obj : r.objects) {
            e.target = &obj.initial;
            e.bump = obj.observed_bump;
            out.push_back(e);
        }
    }
    return out;
}

}  // namespace

std::vector<BumpTableRow> bump_probability_table(const std::vector<EventRecord>& records,
                                                 const pps::PpsGraph& g) {
    std::vector<BumpTableRow> rows;
    for (const char* kind : {"palm", "hand", "swept"}) {
        for (bool mi : {true, false}) {
            for (bool ri : {true, false}) {
                rows.push_back({kind, mi, ri, 0, 0});
            }
        }
    }
    for (const Example& e : gather_examples(records)) {
        const pps::Node& nf = g.node(e.node);
        const pps::Node& np = g.node(e.prev);
        const percept::Mask swept = percept::swept_mask(np.hand, nf.hand);
        const percept::DepthRange swept_range =
            percept::swept_depth_range(np.hand_range, nf.hand_range);

        const std::array<std::pair<bool, bool>, 3> groups = {
            std::pair<bool, bool>{percept::masks_intersect(nf.palm, e.target->mask),
                                  nf.palm_range.intersects(e.target->range)},
            {percept::masks_intersect(nf.hand, e.target->mask),
             nf.hand_range.intersects(e.target->range)},
            {percept::masks_intersect(swept, e.target->mask),
             swept_range.intersects(e.target->range)},
        };
        for (int k = 0; k < 3; ++k) {
            for (auto& row : rows) {
                if (row.mask_kind == std::array<const char*, 3>{"palm", "hand", "swept"}[k] &&
                    row.mask_intersects == groups[k].first &&
                    row.range_intersects == groups[k].second) {
                    row.total += 1;
                    row.bumps += e.bump ? 1 : 0;
                }
            }
        }
    }
    return rows;
}

Comparator select_feature(const std::vector<EventRecord>& records, const pps::PpsGraph& g,
                          std::vector<FeatureCell>* table) {
    struct Row {
        double du, dv, dd, dc;
        bool bump;
    };
    std::vector<Row> rows;
    for (const Example& e : gather_examples(records)) {
        const pps::Node& nf = g.node(e.node);
        const bool tier1 = percept::masks_intersect(nf.palm, e.target->mask) &&
                           nf.palm_range.intersects(e.target->range);
        if (!tier1) continue;
        Row r;
        r.du = std::abs(e.target->center.u - nf.palm_center.u);
        r.dv = std::abs(e.target->center.v - nf.palm_center.v);
        r.dd = std::abs(e.target->center.d - nf.palm_center.d);
        r.dc = percept::distance(e.target->center, nf.palm_center);
        r.bump = e.bump;
        rows.push_back(r);
    }
    if (rows.empty()) throw InsufficientData();

    Comparator best;
    bool have_best = false;
    // Preference order breaks exact ties: f_c first, then smaller k.
    const std::array<FeatureKind, 4> kinds = {FeatureKind::kCenterDistance, FeatureKind::kU,
                                              FeatureKind::kV, FeatureKind::kD};
    for (FeatureKind kind : kinds) {
        for (int k = 2; k <= 40; k += 2) {
            int total = 0, bumps = 0;
            for (const Row& r : rows) {
                const double v = kind == FeatureKind::kCenterDistance ? r.dc
                                 : kind == FeatureKind::kU            ? r.du
                                 : kind == FeatureKind::kV            ? r.dv
                                                                      : r.dd;
                if (v < k) {
                    ++total;
                    bumps += r.bump ? 1 : 0;
                }
            }
            if (table) table->push_back({kind, double(k), bumps, total});
            if (total == 0) continue;
            const double p = double(bumps) / total;
            if (!have_best || p > best.probability) {
                best = {kind, double(k), p, total};
                have_best = true;
            }
        }
    }
    if (!have_best) throw InsufficientData();
    return best;
}

std::vector<int> plan_trajectory_avoiding(const pps::PpsGraph& g, const TargetInfo& target,
                                          int dst, bool protect_final_edge,
                                          std::unordered_set<pps::EdgeKey>* banned_out) {
    std::unordered_set<pps::EdgeKey> banned;
    bool banning = true;
    std::vector<int> path;
    while (true) {
        try {
            path = pps::shortest_path(g, g.home_node(), dst, banned);
        } catch (const pps::NoPath&) {
            if (banning && !banned.empty()) {
                // Relax: allow everything rather than fail (the chain keeps
                // the graph connected, so this always yields a path).
                banned.clear();
                banning = false;
                continue;
            }
            throw;
        }
        if (!banning) break;
        bool offended = false;
        const size_t last_edge_idx = path.size() >= 2 ? path.size() - 2 : 0;
        for (size_t i = 0; i + 1 < path.size(); ++i) {
            if (protect_final_edge && i == last_edge_idx) continue;  // final edge may touch
            const int e = g.edge_between(path[i], path[i + 1]);
            const pps::Edge& edge = g.edge(e);
            if (!edge.swept_range.intersects(target.range)) continue;
            if (!percept::masks_intersect(g.edge_swept_mask(e), target.mask)) continue;
            banned.insert(pps::edge_key(edge.a, edge.b));
            offended = true;
        }
        if (!offended) break;
    }
    if (banned_out) *banned_out = banned;
    return path;
}

sim::JointConfig adjust_final_config(const pps::PpsGraph& g, int n_f,
                                     const percept::Center3& aim,
                                     const pps::LocalJacobian& lj, const sim::ArmModel& arm,
                                     bool* clamped) {
    const pps::Node& node = g.node(n_f);
    const Eigen::RowVector3d dc(aim.u - node.palm_center.u, aim.v - node.palm_center.v,
                                aim.d - node.palm_center.d);
    const Eigen::Matrix<double, 1, 7> dq = dc * lj.jinv;
    sim::JointConfig q = node.config;
    bool any_clamped = false;
    for (int k = 0; k < 7; ++k) {
        const double raw = q.q[k] + dq(0, k);
        q.q[k] = arm.clamp_joint(k, raw);
        any_clamped |= q.q[k] != raw;
    }
    if (clamped) *clamped = any_clamped;
    return q;
}

TargetInfo observe_target(const percept::Percept& home_percept, int block_id) {
    TargetInfo t;
    t.block_id = block_id;
    t.mask = percept::target_mask(home_percept, block_id);
    t.range = percept::depth_range(home_percept, t.mask);
    t.center = percept::center(home_percept, t.mask);
    t.orientation = percept::target_orientation(home_percept, t.mask);
    return t;
}

Plan plan_reach(const pps::PpsGraph& g, const sim::ArmModel& arm, const TargetInfo& target,
                Policy policy, Rng& rng) {
    Plan plan;
    plan.policy = policy;
    plan.aim = target.center;

    if (policy == Policy::kRandomNode) {
        plan.final_node = rng.uniform_int(0, g.size() - 1);
        plan.trajectory = pps::shortest_path(g, g.home_node(), plan.final_node);
        return plan;
    }

    const CandidateSet cands = candidate_final_nodes(g, target);
    plan.tier = cands.tier;
    if (policy == Policy::kRandomCandidate) {
        plan.final_node = cands.node_ids[rng.uniform_int(0, int(cands.node_ids.size()) - 1)];
    } else {
        // Nearest candidate; ties to the lower node id (ids are ascending).
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < cands.node_ids.size(); ++i) {
            if (cands.center_distance[i] < best_d) {
                best_d = cands.center_distance[i];
                best = cands.node_ids[i];
            }
        }
        plan.final_node = best;
    }

    plan.trajectory = plan_trajectory_avoiding(g, target, plan.final_node,
                                               /*protect_final_edge=*/true, &plan.banned);

    if (policy == Policy::kJacobianAdjusted) {
        const pps::LocalJacobian lj = pps::local_jacobian(g, plan.final_node);
        plan.adjusted_final = adjust_final_config(g, plan.final_node, target.center, lj, arm,
                                                  &plan.joint_limit_clamped);
        plan.has_adjusted_final = true;
    }
    return plan;
}

namespace {

struct Leg {
    sim::JointConfig config;
    int node = -1;  // graph node id, or -1 for off-graph configs
};

std::vector<Leg> build_legs(const pps::PpsGraph& g, const Plan& plan,
                            const sim::ArmModel& arm) {
    std::vector<Leg> legs;
    for (size_t i = 1; i < plan.trajectory.size(); ++i) {
        legs.push_back({g.node(plan.trajectory[i]).config, plan.trajectory[i]});
    }
    if (plan.has_preshape) legs.push_back({plan.preshape, -1});
    if (plan.has_adjusted_final) legs.push_back({plan.adjusted_final, -1});
    for (Leg& leg : legs) {
        if (plan.has_q7_override) leg.config.q[6] = arm.clamp_joint(6, plan.q7_override);
        for (int k = 0; k < 7; ++k) leg.config.q[k] = arm.clamp_joint(k, leg.config.q[k]);
    }
    return legs;
}

double changed_fraction(const percept::Percept& now, const percept::Percept& initial,
                        const percept::Mask& mask) {
    int changed = 0, total = 0;
    for (int i = 0; i < mask.rows * mask.cols; ++i) {
        if (!mask.bits[i]) continue;
        ++total;
        if (now.labels[i] != initial.labels[i]) ++changed;
    }
    return total > 0 ? double(changed) / total : 0.0;
}

}  // namespace

EventRecord execute_reach(sim::World& world, const pps::PpsGraph& g, const Plan& plan,
                          const IouClusterer* clusterer) {
    EventRecord rec;
    rec.plan = plan;
    rec.commanded_aperture = plan.aperture;
    for (const auto& b : world.state().blocks) {
        if (!b.removed) rec.placements.push_back({b.x, b.y, b.yaw, b.dims});
    }

    const sim::ArmModel& arm = world.arm_model();
    sim::JointConfig home_cfg = g.node(g.home_node()).config;
    if (plan.has_q7_override) home_cfg.q[6] = arm.clamp_joint(6, plan.q7_override);
    home_cfg.a = plan.aperture;
    world.teleport(home_cfg);

    const percept::Percept home_percept = world.render();
    for (const auto& b : world.state().blocks) {
        if (b.removed) continue;
        ObjectObservation obs;
        obs.initial = observe_target(home_percept, b.id);
        rec.objects.push_back(std::move(obs));
    }

    const std::vector<Leg> legs = build_legs(g, plan, arm);
    // Index of the leg that finishes the final graph edge; pushes strictly
    // before it count as early contact.
    int final_boundary = -1;
    for (size_t i = 0; i < legs.size(); ++i)
        if (legs[i].node >= 0) final_boundary = static_cast<int>(i);

    std::vector<Leg> executed;
    int confirmed_prefix = 0;
    bool reflex_halt = false;
    bool early_bump = false;

    auto record_outcome = [&](const sim::MotionOutcome& mo, int leg_index) {
        for (const auto& ev : mo.events) {
            if (ev.kind == sim::MotionEvent::kPush || ev.kind == sim::MotionEvent::kToppleOff) {
                rec.gt_push_any = true;
                if (leg_index < final_boundary) rec.gt_push_before_final = true;
                for (auto& obj : rec.objects)
                    if (obj.initial.block_id == ev.block) obj.ground_truth_push = true;
            }
            if (ev.kind == sim::MotionEvent::kPalmarTrigger) rec.gt_palmar = true;
            if (ev.kind == sim::MotionEvent::kAttach) rec.gt_attach = true;
        }
    };

    auto capture_return_node = [&](int node_id) {
        const percept::Percept p = world.render();
        rec.return_nodes.push_back(node_id);
        percept::Mask tmask = percept::label_mask(
            p,
            static_cast<int16_t>(percept::kBlockBase + rec.objects.front().initial.block_id));
        if (!tmask.empty()) {
            rec.return_target_ranges.push_back(percept::depth_range(p, tmask));
        } else {
            rec.return_target_ranges.push_back(std::nullopt);
        }
        rec.return_target_masks.push_back(std::move(tmask));
        rec.attached_at_return.push_back(
            world.state().attached_block == rec.objects.front().initial.block_id ? 1 : 0);
    };

    auto return_home = [&](bool capture) {
        capture = capture && !rec.objects.empty();
        // The first return observation is taken where the forward motion
        // ended, when that is a graph node.
        if (capture && !executed.empty() && executed.back().node >= 0) {
            capture_return_node(executed.back().node);
        }
        for (int i = static_cast<int>(executed.size()) - 2; i >= -1; --i) {
            const Leg& leg = i >= 0 ? executed[i] : Leg{home_cfg, g.home_node()};
            const sim::MotionOutcome mo = world.step_to(leg.config, plan.aperture, false);
            record_outcome(mo, -1);  // return-trip pushes are not "early"
            if (capture && leg.node >= 0) capture_return_node(leg.node);
        }
        if (capture) rec.return_captured = true;
    };

    auto compute_ious = [&]() {
        const percept::Percept now = world.render();
        for (auto& obj : rec.objects) {
            percept::Mask final_mask = percept::label_mask(
                now, static_cast<int16_t>(percept::kBlockBase + obj.initial.block_id));
            if (final_mask.empty()) {
                obj.final_iou = 0.0;  // absence of a final mask
            } else {
                obj.final_iou = percept::iou(obj.initial.mask, final_mask);
            }
        }
    };

    while (true) {
        executed.clear();
        int abort_leg = -1;
        for (size_t i = 0; i < legs.size(); ++i) {
            const sim::MotionOutcome mo =
                world.step_to(legs[i].config, plan.aperture, plan.stop_on_reflex);
            record_outcome(mo, static_cast<int>(i));
            rec.aperture_trace.push_back(mo.aperture_end);
            if (mo.reflex_stop_step) {
                rec.reflex_stop_substep = *mo.reflex_stop_step;
                executed.push_back({mo.final_config, -1});
                reflex_halt = true;
                break;
            }
            executed.push_back(legs[i]);
            if (static_cast<int>(i) < confirmed_prefix) continue;
            const percept::Percept now = world.render();
            bool changed = false;
            for (const auto& obj : rec.objects) {
                if (changed_fraction(now, home_percept, obj.initial.mask) > 0.2) {
                    changed = true;
                    break;
                }
            }
            if (changed) {
                if (i + 1 == legs.size()) {
                    rec.change_detected_at_final = true;
                } else {
                    abort_leg = static_cast<int>(i);
                    break;
                }
            }
        }

        if (abort_leg < 0 || reflex_halt) break;  // forward trajectory complete

        // Abort: return home and decide occlusion vs bump.
        return_home(false);
        compute_ious();
        bool any_bump = false;
        if (clusterer != nullptr && clusterer->history().size() >= 2) {
            for (const auto& obj : rec.objects)
                any_bump |= clusterer->classify_bump(obj.final_iou);
        } else {
            any_bump = true;  // without a trained clusterer, do not resume
        }
        if (any_bump || !plan.resume_on_usual) {
            early_bump = true;
            break;
        }
        confirmed_prefix = abort_leg + 1;
        rec.abort_resume_cycles += 1;
        rec.aperture_trace.clear();
    }

    if (!early_bump) return_home(true);
    compute_ious();

    if (clusterer != nullptr && clusterer->history().size() >= 2) {
        for (auto& obj : rec.objects) obj.observed_bump = clusterer->classify_bump(obj.final_iou);
        rec.observed_bump_any =
            std::any_of(rec.objects.begin(), rec.objects.end(),
                        [](const ObjectObservation& o) { return o.observed_bump; });
        rec.observed_bump_at_final =
            rec.observed_bump_any && !early_bump;
    }
    return rec;
}

std::vector<sim::BlockPlacement> sample_placements(const sim::World& prototype, int count,
                                                   Rng& rng) {
    sim::World scratch(prototype.config());
    const sim::TableBounds& t = scratch.config().table;
    const sim::Vec3 dims = scratch.config().block_dims;
    const double margin = 0.06;
    scratch.teleport(scratch.arm_model().home());
    std::vector<sim::BlockPlacement> out;

    for (int placed = 0; placed < count;) {
        sim::BlockPlacement p;
        p.x = rng.uniform(t.x0 + margin, t.x1 - margin);
        p.y = rng.uniform(t.y0 + margin, t.y1 - margin);
        p.yaw = 0.0;
        p.dims = dims;
        int id;
        try {
            id = scratch.place_block(p);
        } catch (const sim::OverlapError&) {
            continue;
        }
        // Visible, not clipped, and unoccluded at the home percept.
        const percept::Percept scene = scratch.render();
        bool ok = true;
        int scene_count = 0;
        const int16_t label = static_cast<int16_t>(percept::kBlockBase + id);
        for (int r = 0; r < scene.rows && ok; ++r) {
            for (int c = 0; c < scene.cols; ++c) {
                if (scene.label(r, c) == label) {
                    ++scene_count;
                    if (r == 0 || c == 0 || r == scene.rows - 1 || c == scene.cols - 1) {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if (ok && scene_count >= 12) {
            sim::World solo(prototype.config());
            solo.place_block(p);
            const percept::Percept alone = solo.render_blocks_only();
            int solo_count = 0;
            for (int16_t l : alone.labels) solo_count += l == static_cast<int16_t>(percept::kBlockBase) ? 1 : 0;
            ok = solo_count == scene_count;
        } else {
            ok = false;
        }
        if (ok) {
            out.push_back(p);
            ++placed;
        } else {
            scratch.state().blocks.pop_back();
        }
    }
    return out;
}

ExplorationResult random_exploration(sim::World& world, const pps::PpsGraph& g,
                                     Rng& placement_rng, Rng& policy_rng,
                                     int min_small_cluster, int max_trajectories) {
    ExplorationResult res;
    for (int trial = 0; trial < max_trajectories; ++trial) {
        const std::vector<sim::BlockPlacement> placements =
            sample_placements(world, 3, placement_rng);
        world.reset_blocks(placements);

        Plan plan;
        plan.policy = Policy::kRandomNode;
        plan.final_node = policy_rng.uniform_int(0, g.size() - 1);
        plan.trajectory = pps::shortest_path(g, g.home_node(), plan.final_node);
        plan.resume_on_usual = false;  // the discovery protocol aborts and classifies

        EventRecord rec = execute_reach(world, g, plan, nullptr);
        rec.trial = trial;
        for (const auto& obj : rec.objects) res.clusterer.add(obj.final_iou);
        res.records.push_back(std::move(rec));
        res.trajectories = trial + 1;
        if (res.clusterer.small_cluster_count() >= min_small_cluster) break;
    }
    // Final labels come from the converged clustering over the whole history.
    for (auto& rec : res.records) {
        rec.observed_bump_any = false;
        for (auto& obj : rec.objects) {
            obj.observed_bump = res.clusterer.classify_bump(obj.final_iou);
            rec.observed_bump_any |= obj.observed_bump;
        }
    }
    return res;
}

}  // namespace ppslab::reach
