#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cdrive/cwnet/cwnet.hpp"
#include "cdrive/data/dataset.hpp"
#include "cdrive/eval/closed_loop.hpp"
#include "cdrive/eval/concept_eval.hpp"
#include "cdrive/eval/report.hpp"
#include "cdrive/harness/catalog.hpp"
#include "cdrive/harness/config.hpp"
#include "cdrive/harness/server.hpp"
#include "cdrive/harness/telemetry.hpp"

using namespace cdrive;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

harness::Settings load_settings(const Common& c) {
  harness::Settings s;
  if (!c.config.empty()) {
    auto cfg = harness::Config::load(c.config);
    harness::apply(cfg, s);
  }
  if (c.seed) s.gen.seed = s.train.seed = s.cwnet.seed = s.sim.seed = *c.seed;
  return s;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value settings file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "overrides every seed in the settings");
}

std::vector<const data::DatasetRecord*> pointers(const data::Dataset& ds, std::optional<bool> holdout = {}) {
  if (holdout) return ds.split(*holdout);
  std::vector<const data::DatasetRecord*> out;
  for (const auto& r : ds.records) out.push_back(&r);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  write_text(path, j.dump(2) + "\n");
  std::cerr << "wrote " << path << "\n";
}

world::FeatureSchema feature_schema(const std::vector<std::string>& excluded) {
  world::FeatureSchema s;
  for (const auto& name : excluded) s.categories[static_cast<int>(world::category_from_string(name))] = false;
  return s;
}

harness::DriveLog load_log(const std::string& path) { return harness::load_drive_log(path); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept-bottleneck driving planner toolkit"};
  app.require_subcommand(1);

  // gen-data
  Common gen_c;
  std::string gen_suite;
  std::optional<int> gen_records;
  auto* gen = app.add_subcommand("gen-data", "drive the expert through a scenario suite and record a labelled dataset");
  add_common(gen, gen_c);
  gen->add_option("--suite", gen_suite, "full | nominal | turns | straights | cyclists");
  gen->add_option("--records", gen_records, "number of records");
  gen->add_option("--out", gen_c.out, "dataset path")->required();

  // train-planner
  Common tp_c;
  std::string tp_data, tp_data_out;
  std::vector<std::string> tp_exclude;
  auto* tp = app.add_subcommand("train-planner", "train the black-box encoder and reward head");
  add_common(tp, tp_c);
  tp->add_option("--data", tp_data, "dataset path")->required()->check(CLI::ExistingFile);
  tp->add_option("--exclude", tp_exclude, "agent categories left out of the planner's features");
  tp->add_option("--out", tp_c.out, "bundle path")->required();
  tp->add_option("--data-out", tp_data_out, "also write the dataset with black-box choices filled in");

  // train-cwnet
  Common tc_c;
  std::string tc_data, tc_bundle, tc_schema = "dataset1", tc_mode = "cwnet_causal", tc_report;
  auto* tc = app.add_subcommand("train-cwnet", "train concept head and concept reward on a frozen black box");
  add_common(tc, tc_c);
  tc->add_option("--data", tc_data, "dataset path")->required()->check(CLI::ExistingFile);
  tc->add_option("--bundle", tc_bundle, "black-box bundle")->required()->check(CLI::ExistingFile);
  tc->add_option("--schema", tc_schema)->check(CLI::IsMember({"dataset1", "dataset2"}));
  tc->add_option("--mode", tc_mode)->check(CLI::IsMember({"cwnet_causal", "cwnet_parallel"}));
  tc->add_option("--out", tc_c.out, "bundle path")->required();
  tc->add_option("--report", tc_report, "holdout concept report (json)");

  // eval
  Common ev_c;
  std::string ev_bundle, ev_mode = "blackbox", ev_scenario, ev_data;
  std::optional<int> ev_count;
  auto* ev = app.add_subcommand("eval", "closed-loop metrics against the expert, plus concept metrics on a dataset");
  add_common(ev, ev_c);
  ev->add_option("--bundle", ev_bundle)->required()->check(CLI::ExistingFile);
  ev->add_option("--mode", ev_mode)->check(CLI::IsMember({"blackbox", "cwnet_causal", "cwnet_parallel"}));
  ev->add_option("--scenario", ev_scenario, "single scenario instead of the nominal suite");
  ev->add_option("--scenarios", ev_count, "size of the nominal suite");
  ev->add_option("--data", ev_data, "dataset for concept metrics (holdout split)")->check(CLI::ExistingFile);
  ev->add_option("--out", ev_c.out, "summary json");

  // simulate
  Common sm_c;
  std::string sm_bundle, sm_mode = "blackbox", sm_scenario = "empty", sm_script, sm_replay, sm_csv;
  std::optional<double> sm_duration;
  bool sm_no_backstop = false;
  auto* sm = app.add_subcommand("simulate", "headless closed-loop run, optionally scripted");
  add_common(sm, sm_c);
  sm->add_option("--bundle", sm_bundle)->required()->check(CLI::ExistingFile);
  sm->add_option("--mode", sm_mode)->check(CLI::IsMember({"blackbox", "cwnet_causal", "cwnet_parallel"}));
  sm->add_option("--scenario", sm_scenario, "catalog name or scenario file");
  sm->add_option("--script", sm_script, "command script (jsonl)")->check(CLI::ExistingFile);
  sm->add_option("--replay", sm_replay, "re-run the commands recorded in a drive log")->check(CLI::ExistingFile);
  sm->add_option("--duration", sm_duration, "seconds");
  sm->add_flag("--no-backstop", sm_no_backstop);
  sm->add_option("--csv", sm_csv, "time series csv");
  sm->add_option("--out", sm_c.out, "drive log path")->required();
  sm->get_option("--script")->excludes("--replay");

  // serve
  Common sv_c;
  std::string sv_bundle, sv_mode = "blackbox", sv_scenario = "empty";
  harness::ServeConfig sv_cfg;
  auto* sv = app.add_subcommand("serve", "interactive session over HTTP and /ws");
  add_common(sv, sv_c);
  sv->add_option("--bundle", sv_bundle)->required()->check(CLI::ExistingFile);
  sv->add_option("--mode", sv_mode)->check(CLI::IsMember({"blackbox", "cwnet_causal", "cwnet_parallel"}));
  sv->add_option("--scenario", sv_scenario);
  sv->add_option("--address", sv_cfg.address);
  sv->add_option("--port", sv_cfg.port);
  sv->add_option("--static", sv_cfg.static_root, "console assets directory");
  sv->add_option("--tick-rate", sv_cfg.tick_rate, "planning cycles per second");
  sv->add_option("--out", sv_c.out, "drive log written on shutdown");

  // analyze
  auto* an = app.add_subcommand("analyze", "intercept, DTW, effect-size and distribution reports");
  an->require_subcommand(1);
  std::string an_out;
  std::vector<std::string> an_logs;
  std::string an_concept = "CLOSE";
  auto* an_int = an->add_subcommand("intercept", "fit speed = slope * p(concept) + intercept over self-driving ticks");
  an_int->add_option("--log", an_logs)->required()->check(CLI::ExistingFile);
  an_int->add_option("--concept", an_concept);
  an_int->add_option("--out", an_out);
  auto* an_dtw = an->add_subcommand("dtw", "DTW distance between two speed profiles");
  an_dtw->add_option("--log", an_logs)->required()->expected(2)->check(CLI::ExistingFile);
  an_dtw->add_option("--out", an_out);
  std::vector<double> st_a, st_b;
  std::vector<double> st_sa, st_sb;
  auto* an_st = an->add_subcommand("stats", "Welch t, Mann-Whitney U and Cohen's d");
  an_st->add_option("--a", st_a, "samples of group A")->delimiter(',');
  an_st->add_option("--b", st_b, "samples of group B")->delimiter(',');
  an_st->add_option("--a-summary", st_sa, "mean,sd,n of group A")->delimiter(',')->expected(3);
  an_st->add_option("--b-summary", st_sb, "mean,sd,n of group B")->delimiter(',')->expected(3);
  an_st->add_option("--out", an_out);
  auto* an_dist = an->add_subcommand("distribution", "concept activation histograms over self-driving ticks");
  an_dist->add_option("--log", an_logs)->required()->expected(2)->check(CLI::ExistingFile);
  an_dist->add_option("--out", an_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto s = load_settings(gen_c);
      if (!gen_suite.empty()) s.gen.suite = gen_suite;
      if (gen_records) s.gen.n_records = *gen_records;
      data::GenerationReport rep;
      const auto ds = data::generate_dataset(s.gen, &rep);
      data::save_dataset(ds, gen_c.out);
      for (const auto& m : rep.messages) std::cerr << m << "\n";
      std::cout << "records " << ds.records.size() << " scenarios " << rep.scenarios_run << " skipped "
                << rep.scenarios_skipped << " holdout " << ds.split(true).size() << "\n";
    } else if (*tp) {
      auto s = load_settings(tp_c);
      auto ds = data::load_dataset(tp_data);
      auto train = pointers(ds, false);
      auto bundle = planner::make_bundle(s.train.seed, feature_schema(tp_exclude), s.dims);
      planner::TrainReport rep;
      bundle = planner::train_blackbox(train, bundle, s.train, &rep, [](int e, double loss) {
        std::cerr << "epoch " << e + 1 << " loss " << loss << "\n";
      });
      planner::save_bundle(bundle, tp_c.out);
      std::cout << "expert label accuracy train " << planner::label_accuracy(bundle, train);
      if (const auto held = pointers(ds, true); !held.empty())
        std::cout << " holdout " << planner::label_accuracy(bundle, held);
      std::cout << "\n";
      if (!tp_data_out.empty()) {
        planner::fill_blackbox_choices(bundle, ds);
        data::save_dataset(ds, tp_data_out);
      }
    } else if (*tc) {
      auto s = load_settings(tc_c);
      auto ds = data::load_dataset(tc_data);
      const auto bb = planner::load_bundle(tc_bundle);
      planner::fill_blackbox_choices(bb, ds);
      const auto schema = cwnet::ConceptSchema::by_tag(tc_schema);
      const auto mode = tc_mode == "cwnet_causal" ? cwnet::Mode::causal : cwnet::Mode::parallel;
      cwnet::CwTrainReport rep;
      const auto cw = cwnet::train_cwnet(bb, pointers(ds, false), schema, mode, s.cwnet, &rep,
                                         [](int e, const cwnet::LossReport& l) {
                                           std::cerr << "epoch " << e + 1 << " concept " << l.concept_loss
                                                     << " trajectory " << l.trajectory_loss << "\n";
                                         });
      planner::save_bundle(cw, tc_c.out);
      const auto held = pointers(ds, true);
      const auto report = eval::evaluate_concepts(cw, held.empty() ? pointers(ds) : held, mode == cwnet::Mode::causal);
      std::cout << eval::format_concept_table(report);
      write_json(tc_report, eval::to_json(report));
    } else if (*ev) {
      auto s = load_settings(ev_c);
      const auto bundle = planner::load_bundle(ev_bundle);
      s.sim.mode = harness::planner_mode_from_string(ev_mode);
      std::vector<world::Scenario> scns;
      if (!ev_scenario.empty()) scns.push_back(harness::resolve_scenario(ev_scenario, s.sim.seed));
      else scns = harness::nominal_suite(ev_count.value_or(s.eval_scenarios), s.eval_seed);
      const auto res = eval::evaluate_suite(scns, bundle, s.sim, s.gen.expert);
      std::vector<std::pair<std::string, eval::MetricsReport>> rows;
      for (const auto& r : res.runs) rows.push_back({r.scenario, r.metrics});
      rows.push_back({"overall", res.overall});
      std::cout << eval::format_metrics_table(rows);
      for (const auto& n : res.skipped) std::cerr << "skipped " << n << " (no expert reference)\n";
      json summary{{"mode", ev_mode}, {"overall", eval::to_json(res.overall)}, {"skipped", res.skipped}};
      for (const auto& r : res.runs) summary["runs"][r.scenario] = eval::to_json(r.metrics);
      if (!ev_data.empty()) {
        auto ds = data::load_dataset(ev_data);
        planner::fill_blackbox_choices(bundle, ds);
        const auto held = pointers(ds, true);
        const auto rep = eval::evaluate_concepts(bundle, held.empty() ? pointers(ds) : held,
                                                 s.sim.mode == harness::PlannerMode::cwnet_causal);
        std::cout << eval::format_concept_table(rep);
        summary["concepts"] = eval::to_json(rep);
      }
      write_json(ev_c.out, summary);
    } else if (*sm) {
      auto s = load_settings(sm_c);
      const auto bundle = planner::load_bundle(sm_bundle);
      s.sim.mode = harness::planner_mode_from_string(sm_mode);
      if (sm_duration) s.sim.duration = *sm_duration;
      if (sm_no_backstop) s.sim.backstop = false;
      harness::CommandScript script;
      if (!sm_script.empty()) script = harness::load_script(sm_script);
      if (!sm_replay.empty()) script = harness::script_from_log(load_log(sm_replay));
      const auto log = harness::run_closed_loop(harness::resolve_scenario(sm_scenario, s.sim.seed), bundle, s.sim, script);
      harness::save_drive_log(log, sm_c.out);
      if (!sm_csv.empty()) {
        std::ofstream csv(sm_csv);
        eval::write_timeseries_csv(csv, log);
      }
      int backstop = 0, collisions = 0, errors = 0;
      for (const auto& t : log.ticks) {
        backstop += t.backstop;
        collisions += t.collision;
        errors += !t.error.empty();
      }
      std::cout << "ticks " << log.ticks.size() << " backstop " << backstop << " collisions " << collisions
                << " errors " << errors << "\n";
    } else if (*sv) {
      auto s = load_settings(sv_c);
      const auto bundle = planner::load_bundle(sv_bundle);
      s.sim.mode = harness::planner_mode_from_string(sv_mode);
      harness::Server server(harness::resolve_scenario(sv_scenario, s.sim.seed), bundle, s.sim, sv_cfg);
      server.start();
      std::cerr << "serving http://" << sv_cfg.address << ":" << server.port() << "/ (ws at /ws)\n";
      server.run_until_signal();
      if (!sv_c.out.empty()) harness::save_drive_log(server.log(), sv_c.out);
    } else if (*an_int) {
      std::vector<double> p, v;
      for (const auto& path : an_logs) {
        const auto log = load_log(path);
        const auto c = eval::concept_series(log, an_concept);
        for (std::size_t i = 0; i < log.ticks.size(); ++i) {
          if (log.ticks[i].mode != harness::AutonomyMode::self_driving || std::isnan(c[i])) continue;
          p.push_back(c[i]);
          v.push_back(log.ticks[i].ego.speed);
        }
      }
      const auto fit = eval::fit_intercept(p, v);
      std::cout << "concept " << an_concept << " points " << fit.n << " intercept " << fit.intercept;
      if (fit.slope) std::cout << " slope " << *fit.slope << " r2 " << *fit.r2;
      if (fit.constant_regressor) std::cout << " (constant regressor)";
      std::cout << "\n";
      auto j = eval::to_json(fit);
      j["concept"] = an_concept;
      write_json(an_out, j);
    } else if (*an_dtw) {
      const auto a = load_log(an_logs[0]), b = load_log(an_logs[1]);
      const double d = eval::dtw_distance(eval::speed_profile(a), eval::speed_profile(b));
      std::cout << "dtw " << d << "\n";
      write_json(an_out, {{"a", an_logs[0]}, {"b", an_logs[1]}, {"dtw", d}});
    } else if (*an_st) {
      auto summary = [](const std::vector<double>& v) {
        return eval::GroupSummary{v[0], v[1], static_cast<int>(v[2])};
      };
      eval::EffectStats r;
      if (!st_a.empty() && !st_b.empty()) r = eval::effect_stats(st_a, st_b);
      else if (!st_sa.empty() && !st_sb.empty()) r = eval::effect_stats(summary(st_sa), summary(st_sb));
      else throw std::invalid_argument("stats needs --a/--b samples or --a-summary/--b-summary");
      const auto j = eval::to_json(r);
      std::cout << j.dump(2) << "\n";
      write_json(an_out, j);
    } else if (*an_dist) {
      const auto a = load_log(an_logs[0]), b = load_log(an_logs[1]);
      const auto rep = eval::distribution_report(a, b, a.concept_names);
      std::cout << eval::format_distribution_table(rep);
      write_json(an_out, eval::to_json(rep));
    }
  } catch (const std::exception& e) {
    std::cerr << "cdrive: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
