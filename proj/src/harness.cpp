#include "ppslab/harness.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ppslab::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr uint64_t kStreamExplore = 0x4558504c;  // "EXPL"
constexpr uint64_t kStreamTrain = 0x5452414e;
constexpr uint64_t kStreamTest = 0x54455354;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

json plan_to_json(const reach::Plan& p) {
    json j;
    j["policy"] = reach::policy_name(p.policy);
    j["trajectory"] = p.trajectory;
    j["final_node"] = p.final_node;
    j["tier"] = p.tier;
    j["aperture"] = p.aperture;
    j["stop_on_reflex"] = p.stop_on_reflex;
    j["resume_on_usual"] = p.resume_on_usual;
    if (p.has_adjusted_final) j["adjusted_final"] = p.adjusted_final.q;
    if (p.has_preshape) j["preshape"] = p.preshape.q;
    if (p.has_q7_override) j["q7_override"] = p.q7_override;
    j["aim"] = {p.aim.u, p.aim.v, p.aim.d};
    return j;
}

reach::Plan plan_from_json(const json& j) {
    reach::Plan p;
    const std::string name = j.at("policy").get<std::string>();
    for (reach::Policy pol :
         {reach::Policy::kRandomNode, reach::Policy::kRandomCandidate,
          reach::Policy::kNearestCandidate, reach::Policy::kJacobianAdjusted}) {
        if (name == reach::policy_name(pol)) p.policy = pol;
    }
    p.trajectory = j.at("trajectory").get<std::vector<int>>();
    p.final_node = j.at("final_node").get<int>();
    p.tier = j.at("tier").get<int>();
    p.aperture = j.at("aperture").get<double>();
    p.stop_on_reflex = j.at("stop_on_reflex").get<bool>();
    p.resume_on_usual = j.at("resume_on_usual").get<bool>();
    if (j.contains("adjusted_final")) {
        p.has_adjusted_final = true;
        p.adjusted_final.q = j["adjusted_final"].get<std::array<double, 7>>();
    }
    if (j.contains("preshape")) {
        p.has_preshape = true;
        p.preshape.q = j["preshape"].get<std::array<double, 7>>();
    }
    if (j.contains("q7_override")) {
        p.has_q7_override = true;
        p.q7_override = j["q7_override"].get<double>();
    }
    const auto aim = j.at("aim").get<std::array<double, 3>>();
    p.aim = {aim[0], aim[1], aim[2]};
    return p;
}

json placements_to_json(const std::vector<sim::BlockPlacement>& ps) {
    json arr = json::array();
    for (const auto& p : ps)
        arr.push_back({{"x", p.x},
                       {"y", p.y},
                       {"yaw", p.yaw},
                       {"dims", {p.dims.x(), p.dims.y(), p.dims.z()}}});
    return arr;
}

std::vector<sim::BlockPlacement> placements_from_json(const json& arr) {
    std::vector<sim::BlockPlacement> out;
    for (const auto& jp : arr) {
        sim::BlockPlacement p;
        p.x = jp.at("x").get<double>();
        p.y = jp.at("y").get<double>();
        p.yaw = jp.at("yaw").get<double>();
        const auto d = jp.at("dims").get<std::array<double, 3>>();
        p.dims = sim::Vec3(d[0], d[1], d[2]);
        out.push_back(p);
    }
    return out;
}

}  // namespace

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

void append_record_log(const std::string& path, const reach::EventRecord& rec,
                       const std::string& stage) {
    json j;
    j["schema_version"] = 1;
    j["stage"] = stage;
    j["trial"] = rec.trial;
    j["plan"] = plan_to_json(rec.plan);
    j["placements"] = placements_to_json(rec.placements);
    json ious = json::array();
    for (const auto& o : rec.objects) ious.push_back(o.final_iou);
    j["ious"] = ious;
    j["observed_bump_any"] = rec.observed_bump_any;
    j["observed_bump_at_final"] = rec.observed_bump_at_final;
    j["gt_push_any"] = rec.gt_push_any;
    j["gt_palmar"] = rec.gt_palmar;
    j["gt_attach"] = rec.gt_attach;
    std::ofstream out(path, std::ios::app);
    out << j.dump() << "\n";
}

std::vector<LoggedTrial> read_record_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StageFailure("replay", "cannot open log: " + path);
    std::vector<LoggedTrial> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        LoggedTrial t;
        t.stage = j.at("stage").get<std::string>();
        t.plan = plan_from_json(j.at("plan"));
        t.placements = placements_from_json(j.at("placements"));
        t.ious = j.at("ious").get<std::vector<double>>();
        out.push_back(std::move(t));
    }
    return out;
}

int replay_log(const std::string& log_path, const std::string& graph_path,
               const ExperimentConfig& cfg) {
    const pps::PpsGraph g = pps::PpsGraph::load(graph_path);
    reach::IouClusterer clusterer;
    {
        std::ifstream in(fs::path(cfg.out_dir) / "clusterer.json");
        if (in) {
            const json j = json::parse(in);
            for (double v : j.at("history").get<std::vector<double>>()) clusterer.add(v);
        }
    }
    int mismatches = 0;
    for (const LoggedTrial& t : read_record_log(log_path)) {
        sim::World world(cfg.world);
        world.reset_blocks(t.placements);
        const reach::IouClusterer* cl = t.stage == "explore" ? nullptr : &clusterer;
        const reach::EventRecord rec = reach::execute_reach(world, g, t.plan, cl);
        if (rec.objects.size() != t.ious.size()) {
            ++mismatches;
            continue;
        }
        for (size_t i = 0; i < t.ious.size(); ++i) {
            if (rec.objects[i].final_iou != t.ious[i]) ++mismatches;
        }
    }
    return mismatches;
}

void stage_build(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    if (cfg.effective_graph_nodes() <= 0)
        throw StageFailure("build", "graph must have at least one node");
    sim::World world(cfg.world);
    pps::PpsGraph g = pps::build_graph(world, cfg.effective_graph_nodes(), cfg.babble_seed());
    pps::densify(g);
    g.save((fs::path(cfg.out_dir) / "graph.ppsg").string());
}

reach::ExplorationResult stage_explore(const ExperimentConfig& cfg, const pps::PpsGraph& g) {
    sim::World world(cfg.world);
    Rng placement_rng = Rng::substream(cfg.placement_seed(), kStreamExplore);
    Rng policy_rng = Rng::substream(cfg.policy_seed(), kStreamExplore);
    reach::ExplorationResult res =
        reach::random_exploration(world, g, placement_rng, policy_rng,
                                  cfg.explore_min_small_cluster, cfg.explore_max_trajectories);

    const fs::path out(cfg.out_dir);
    {
        json j;
        j["schema_version"] = 1;
        j["history"] = res.clusterer.history();
        const reach::TwoMeans tm = res.clusterer.cluster_history();
        j["lo_centroid"] = tm.lo_centroid;
        j["hi_centroid"] = tm.hi_centroid;
        j["lo_count"] = tm.lo_count;
        j["hi_count"] = tm.hi_count;
        std::ofstream os(out / "clusterer.json");
        os << j.dump(2) << "\n";
    }
    const std::string log = (out / "explore_records.jsonl").string();
    std::ofstream(log, std::ios::trunc).close();
    for (const auto& rec : res.records) append_record_log(log, rec, "explore");
    return res;
}

PipelineResult::LadderRow run_reach_policy(sim::World& world, const pps::PpsGraph& g,
                                           const std::vector<sim::BlockPlacement>& placements,
                                           reach::Policy policy,
                                           const reach::IouClusterer& clusterer, Rng& rng,
                                           std::vector<reach::EventRecord>* records) {
    PipelineResult::LadderRow row;
    row.policy = reach::policy_name(policy);
    for (size_t t = 0; t < placements.size(); ++t) {
        world.reset_blocks({placements[t]});
        world.teleport(world.arm_model().home());
        row.trials += 1;
        reach::TargetInfo target;
        try {
            target = reach::observe_target(world.render(), 0);
        } catch (const percept::BlockNotVisible&) {
            continue;
        }
        reach::Plan plan = reach::plan_reach(g, world.arm_model(), target, policy, rng);
        reach::EventRecord rec = reach::execute_reach(world, g, plan, &clusterer);
        rec.trial = static_cast<int>(t);
        row.bumps_final += rec.observed_bump_at_final ? 1 : 0;
        row.bumps_any += rec.observed_bump_any ? 1 : 0;
        row.bumps_ground_truth += rec.gt_push_any ? 1 : 0;
        if (records) records->push_back(std::move(rec));
    }
    return row;
}

namespace {

void write_ladder_csv(const fs::path& path, const std::vector<PipelineResult::LadderRow>& rows) {
    std::ofstream os(path);
    os << "policy,trials,bumps_final,bumps_any,bumps_ground_truth\n";
    for (const auto& r : rows) {
        os << r.policy << "," << r.trials << "," << r.bumps_final << "," << r.bumps_any << ","
           << r.bumps_ground_truth << "\n";
    }
}

void write_ladder_figure_csv(const fs::path& path,
                             const std::vector<PipelineResult::LadderRow>& rows) {
    std::ofstream os(path);
    os << "policy,criterion,successes,trials,rate\n";
    for (const auto& r : rows) {
        const std::array<std::pair<const char*, int>, 3> crit = {
            std::pair<const char*, int>{"bump_final", r.bumps_final},
            {"bump_anywhere", r.bumps_any},
            {"bump_ground_truth", r.bumps_ground_truth}};
        for (const auto& [name, n] : crit) {
            os << r.policy << "," << name << "," << n << "," << r.trials << ","
               << fmt(r.trials ? double(n) / r.trials : 0.0) << "\n";
        }
    }
}

void write_aperture_csv(const fs::path& path, const std::vector<grasp::ApertureRow>& rows) {
    std::ofstream os(path);
    os << "aperture,trials,observed_bump_rate,gt_bump_rate,palmar_rate\n";
    for (const auto& r : rows) {
        const double n = std::max(1, r.trials);
        os << fmt(r.aperture) << "," << r.trials << "," << fmt(r.observed_bumps / n) << ","
           << fmt(r.gt_bumps / n) << "," << fmt(r.palmar_bumps / n) << "\n";
    }
}

void write_method_csv(const fs::path& path, const std::vector<grasp::MethodReport>& reports) {
    std::ofstream os(path);
    os << "method,n,miss,bump,palmar,weak,grasp,grasp_rate\n";
    for (const auto& r : reports) {
        os << grasp::method_name(r.method) << "," << r.trials() << "," << r.misses << ","
           << r.bumps << "," << r.palmar_bumps << "," << r.weak_grasps << "," << r.grasps << ","
           << fmt(r.grasp_rate()) << "\n";
    }
}

void write_scatter_csv(const fs::path& path, const grasp::MethodReport& report) {
    std::ofstream os(path);
    os << "x,y,outcome\n";
    for (const auto& row : report.rows) {
        os << fmt(row.x) << "," << fmt(row.y) << "," << grasp::outcome_name(row.outcome) << "\n";
    }
}

void write_bump_table_csv(const fs::path& path, const std::vector<reach::BumpTableRow>& rows) {
    std::ofstream os(path);
    os << "mask_kind,mask_intersects,range_intersects,bumps,total,probability\n";
    for (const auto& r : rows) {
        os << r.mask_kind << "," << (r.mask_intersects ? 1 : 0) << ","
           << (r.range_intersects ? 1 : 0) << "," << r.bumps << "," << r.total << ","
           << fmt(r.probability()) << "\n";
    }
}

void write_feature_csv(const fs::path& path, const std::vector<reach::FeatureCell>& cells,
                       const reach::Comparator& best) {
    std::ofstream os(path);
    os << "feature,threshold,bumps,total,probability,selected\n";
    for (const auto& c : cells) {
        const bool sel = c.kind == best.kind && c.threshold == best.threshold;
        os << reach::feature_name(c.kind) << "," << fmt(c.threshold) << "," << c.bumps << ","
           << c.total << "," << fmt(c.total ? double(c.bumps) / c.total : 0.0) << ","
           << (sel ? 1 : 0) << "\n";
    }
}

void write_cossim_csv(const fs::path& path, const grasp::CosSimTable& table) {
    std::ofstream os(path);
    os << "v1,v2,bucket,count,palmar,rate\n";
    for (size_t pi = 0; pi < table.pairs.size(); ++pi) {
        for (int b = 0; b < 5; ++b) {
            const auto& cell = table.cells[pi][b];
            os << grasp::vec_name(table.pairs[pi].first) << ","
               << grasp::vec_name(table.pairs[pi].second) << "," << fmt(grasp::kCosBuckets[b])
               << "," << cell.count << "," << cell.palmar << "," << fmt(cell.rate()) << "\n";
        }
    }
}

void write_examples_csv(const fs::path& path, const std::vector<grasp::GraspExample>& examples) {
    std::ofstream os(path);
    os << "x,y,yaw,q1,q2,q3,q4,q5,q6,ideal_q7,outcome\n";
    for (const auto& e : examples) {
        os << fmt(e.placement.x) << "," << fmt(e.placement.y) << "," << fmt(e.placement.yaw);
        for (double q : e.q16) os << "," << fmt(q);
        os << "," << fmt(e.ideal_q7) << "," << grasp::outcome_name(e.outcome) << "\n";
    }
}

}  // namespace

void emit_figures(const PipelineResult& result, const std::string& dir) {
    const fs::path out(dir);
    fs::create_directories(out);
    write_ladder_figure_csv(out / "fig_reach_ladder.csv", result.ladder);
    write_aperture_csv(out / "fig_aperture.csv", result.aperture);
    std::vector<grasp::MethodReport> all = result.grasp_methods;
    write_method_csv(out / "fig_grasp_methods.csv", all);
    for (const auto& rep : result.grasp_methods) {
        write_scatter_csv(out / (std::string("fig_scatter_") + grasp::method_name(rep.method) +
                                 ".csv"),
                          rep);
    }
    write_scatter_csv(out / "fig_scatter_test.csv", result.test_report);
}

PipelineResult run_pipeline(const ExperimentConfig& cfg) {
    PipelineResult result;
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    const std::string log = (out / "records.jsonl").string();
    std::ofstream(log, std::ios::trunc).close();

    auto timed = [&](const std::string& name, auto&& fn) {
        const double t0 = now_seconds();
        try {
            fn();
        } catch (const StageFailure&) {
            throw;
        } catch (const std::exception& e) {
            throw StageFailure(name, e.what());
        }
        StageReport rep;
        rep.stage = name;
        rep.wall_seconds = now_seconds() - t0;
        result.stages.push_back(rep);
    };

    pps::PpsGraph graph;
    timed("build", [&] {
        stage_build(cfg);
        graph = pps::PpsGraph::load((out / "graph.ppsg").string());
    });

    reach::ExplorationResult explore;
    timed("explore", [&] {
        explore = stage_explore(cfg, graph);
        result.exploration_trajectories = explore.trajectories;
        result.exploration_values = static_cast<int>(explore.clusterer.history().size());
        result.exploration_small_cluster = explore.clusterer.small_cluster_count();
        result.bump_table = reach::bump_probability_table(explore.records, graph);
        write_bump_table_csv(out / "bump_table.csv", result.bump_table);
        std::vector<reach::FeatureCell> cells;
        result.selected_feature = reach::select_feature(explore.records, graph, &cells);
        write_feature_csv(out / "feature_selection.csv", cells, result.selected_feature);
    });

    sim::World world(cfg.world);
    std::vector<sim::BlockPlacement> train, test;
    {
        Rng train_rng = Rng::substream(cfg.placement_seed(), kStreamTrain);
        Rng test_rng = Rng::substream(cfg.placement_seed(), kStreamTest);
        train = reach::sample_placements(world, cfg.train_placements, train_rng);
        test = reach::sample_placements(world, cfg.test_placements, test_rng);
    }

    std::vector<reach::EventRecord> jacobian_records;
    timed("reach-ladder", [&] {
        const std::array<reach::Policy, 4> policies = {
            reach::Policy::kRandomNode, reach::Policy::kRandomCandidate,
            reach::Policy::kNearestCandidate, reach::Policy::kJacobianAdjusted};
        for (reach::Policy p : policies) {
            Rng rng = Rng::substream(cfg.policy_seed(), splitmix64(0x52454143 + int(p)));
            std::vector<reach::EventRecord> records;
            result.ladder.push_back(
                run_reach_policy(world, graph, train, p, explore.clusterer, rng, &records));
            for (const auto& rec : records)
                append_record_log(log, rec, std::string("reach-") + reach::policy_name(p));
            if (p == reach::Policy::kJacobianAdjusted) jacobian_records = std::move(records);
        }
        write_ladder_csv(out / "reach_ladder.csv", result.ladder);
    });

    timed("aperture", [&] {
        result.aperture =
            grasp::aperture_experiment(world, graph, train, explore.clusterer, cfg.apertures);
        write_aperture_csv(out / "aperture.csv", result.aperture);
    });

    grasp::CosSimTable cossim;
    timed("cossim", [&] {
        cossim = grasp::build_cos_sim_table(jacobian_records, graph);
        write_cossim_csv(out / "cossim.csv", cossim);
        const grasp::GeometryRule rule = grasp::conclude_approach_geometry(cossim);
        json j;
        j["motion_pair_bucket"] = rule.motion_pair_bucket;
        j["axis_pair_bucket"] = rule.axis_pair_bucket;
        std::ofstream os(out / "approach_geometry.json");
        os << j.dump(2) << "\n";
    });

    std::vector<grasp::GraspExample> examples;
    timed("grasp-accidental", [&] {
        result.grasp_methods.push_back(grasp::evaluate(world, graph, train,
                                                       grasp::Method::kAccidental, examples,
                                                       explore.clusterer, cfg.fine_tune));
        for (const auto& rec : result.grasp_methods.back().records)
            append_record_log(log, rec, "grasp-accidental");
    });

    timed("grasp-cosine", [&] {
        result.grasp_methods.push_back(grasp::evaluate(world, graph, train,
                                                       grasp::Method::kCosine, examples,
                                                       explore.clusterer, cfg.fine_tune));
        for (const auto& rec : result.grasp_methods.back().records)
            append_record_log(log, rec, "grasp-cosine");
    });

    timed("wrist-search", [&] {
        const grasp::MethodReport& cosine = result.grasp_methods.back();
        for (const auto& rec : cosine.records) {
            if (grasp::classify_grasp(rec, graph) != grasp::GraspOutcome::kGrasp) continue;
            try {
                examples.push_back(grasp::wrist_search(world, graph, rec, explore.clusterer));
            } catch (const grasp::NoSuccessfulInterval&) {
                // original success not reproduced on the grid; skip
            }
        }
        write_examples_csv(out / "grasp_examples.csv", examples);
    });

    timed("grasp-wrist", [&] {
        result.grasp_methods.push_back(grasp::evaluate(world, graph, train,
                                                       grasp::Method::kWrist, examples,
                                                       explore.clusterer, cfg.fine_tune));
        for (const auto& rec : result.grasp_methods.back().records)
            append_record_log(log, rec, "grasp-wrist");
    });

    timed("grasp-fine-tuned", [&] {
        result.grasp_methods.push_back(grasp::evaluate(world, graph, train,
                                                       grasp::Method::kFineTuned, examples,
                                                       explore.clusterer, cfg.fine_tune));
        for (const auto& rec : result.grasp_methods.back().records)
            append_record_log(log, rec, "grasp-fine-tuned");
        write_method_csv(out / "grasp_methods.csv", result.grasp_methods);
        for (const auto& rep : result.grasp_methods) {
            write_scatter_csv(out / (std::string("scatter_") + grasp::method_name(rep.method) +
                                     ".csv"),
                              rep);
        }
    });

    timed("test-eval", [&] {
        result.test_report = grasp::evaluate(world, graph, test, grasp::Method::kFineTuned,
                                             examples, explore.clusterer, cfg.fine_tune);
        for (const auto& rec : result.test_report.records)
            append_record_log(log, rec, "grasp-test");
        write_scatter_csv(out / "scatter_test.csv", result.test_report);
        result.generalization =
            grasp::generalization_study(result.grasp_methods.back(), result.test_report);
        json j;
        j["train_grasps"] = result.generalization.train_grasps;
        j["train_trials"] = result.generalization.train_trials;
        j["test_grasps"] = result.generalization.test_grasps;
        j["test_trials"] = result.generalization.test_trials;
        j["two_proportion_z"] = result.generalization.two_proportion_z;
        j["two_proportion_p"] = result.generalization.two_proportion_p;
        j["train_mean_candidates"] = result.generalization.train_mean_candidates;
        j["test_mean_candidates"] = result.generalization.test_mean_candidates;
        j["candidates_t"] = result.generalization.candidates_t;
        j["candidates_p"] = result.generalization.candidates_p;
        std::ofstream os(out / "generalization.json");
        os << j.dump(2) << "\n";
    });

    timed("emit-figures", [&] { emit_figures(result, cfg.out_dir); });

    {
        json j;
        j["schema_version"] = 1;
        j["stages"] = json::array();
        for (const auto& s : result.stages)
            j["stages"].push_back({{"stage", s.stage}, {"wall_seconds", s.wall_seconds}});
        j["exploration_trajectories"] = result.exploration_trajectories;
        j["exploration_values"] = result.exploration_values;
        j["selected_feature"] = reach::feature_name(result.selected_feature.kind);
        j["selected_threshold"] = result.selected_feature.threshold;
        std::ofstream os(out / "pipeline_report.json");
        os << j.dump(2) << "\n";
    }
    return result;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StageFailure("config", "cannot open " + path);
    const json j = json::parse(in);
    ExperimentConfig cfg;
    cfg.schema_version = j.value("schema_version", 1);
    cfg.graph_nodes = j.value("graph_nodes", cfg.graph_nodes);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.seed_babble = j.value("seed_babble", cfg.seed_babble);
    cfg.seed_placement = j.value("seed_placement", cfg.seed_placement);
    cfg.seed_policy = j.value("seed_policy", cfg.seed_policy);
    cfg.train_placements = j.value("train_placements", cfg.train_placements);
    cfg.test_placements = j.value("test_placements", cfg.test_placements);
    cfg.explore_min_small_cluster =
        j.value("explore_min_small_cluster", cfg.explore_min_small_cluster);
    cfg.explore_max_trajectories =
        j.value("explore_max_trajectories", cfg.explore_max_trajectories);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.paper_scale = j.value("paper_scale", cfg.paper_scale);
    if (j.contains("apertures")) cfg.apertures = j["apertures"].get<std::vector<double>>();
    if (j.contains("fine_tune")) {
        const auto& f = j["fine_tune"];
        cfg.fine_tune.candidate_cutoff = f.value("candidate_cutoff", 21.0);
        cfg.fine_tune.stop_on_reflex = f.value("stop_on_reflex", true);
        cfg.fine_tune.dv_frac = f.value("dv_frac", -0.25);
        cfg.fine_tune.du_frac = f.value("du_frac", 0.125);
        cfg.fine_tune.dd_frac = f.value("dd_frac", -0.125);
        cfg.fine_tune.preshape_magnitude = f.value("preshape_magnitude", 21.0);
    }
    if (j.contains("world_config")) {
        cfg.world = sim::WorldConfig::from_json_file(j["world_config"].get<std::string>());
    }
    return cfg;
}

void ExperimentConfig::to_json_file(const std::string& path) const {
    json j;
    j["schema_version"] = schema_version;
    j["graph_nodes"] = graph_nodes;
    j["seed"] = seed;
    j["train_placements"] = train_placements;
    j["test_placements"] = test_placements;
    j["explore_min_small_cluster"] = explore_min_small_cluster;
    j["explore_max_trajectories"] = explore_max_trajectories;
    j["out_dir"] = out_dir;
    j["paper_scale"] = paper_scale;
    j["apertures"] = apertures;
    j["fine_tune"] = {{"candidate_cutoff", fine_tune.candidate_cutoff},
                      {"stop_on_reflex", fine_tune.stop_on_reflex},
                      {"dv_frac", fine_tune.dv_frac},
                      {"du_frac", fine_tune.du_frac},
                      {"dd_frac", fine_tune.dd_frac},
                      {"preshape_magnitude", fine_tune.preshape_magnitude}};
    std::ofstream os(path);
    os << j.dump(2) << "\n";
}

}  // namespace ppslab::harness
