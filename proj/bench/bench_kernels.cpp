// Serial reference vs OpenMP kernels on a generated corpus.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "CLI11.hpp"
#include "cdrive/cwnet/cwnet.hpp"
#include "cdrive/data/dataset.hpp"
#include "cdrive/planner/planner.hpp"

using namespace cdrive;

namespace {

double seconds(const std::function<void()>& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark"};
  int records = 200, reps = 3;
  app.add_option("--records", records);
  app.add_option("--reps", reps);
  CLI11_PARSE(app, argc, argv);

  data::GenerateConfig g;
  g.seed = 17;
  g.n_records = records;
  g.record_stride = 2;
  auto ds = data::generate_dataset(g);
  std::vector<const data::DatasetRecord*> recs;
  for (const auto& r : ds.records) recs.push_back(&r);
  auto bundle = planner::make_bundle(1);
  planner::TrainConfig tc;
  tc.epochs = 1;
  bundle = planner::train_blackbox(recs, bundle, tc);
  planner::fill_blackbox_choices(bundle, ds);
  planner::attach_concept_heads(bundle, cwnet::ConceptSchema::dataset1(), 2);

  std::printf("threads %d, records %zu, candidates %zu\n", omp_get_max_threads(), recs.size(),
              recs.front()->candidates.size());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial s", "omp s", "speedup");

  std::vector<int> cs, cp;
  const double s1 = seconds([&] { cs = planner::blackbox_choices(bundle, recs, false); }, reps);
  const double p1 = seconds([&] { cp = planner::blackbox_choices(bundle, recs, true); }, reps);
  row("blackbox_choices", s1, p1, cs == cp);

  std::vector<ad::Matrix> zs, zp;
  const double s2 = seconds([&] { zs = cwnet::cache_embeddings(bundle, recs, false); }, reps);
  const double p2 = seconds([&] { zp = cwnet::cache_embeddings(bundle, recs, true); }, reps);
  bool same = zs.size() == zp.size();
  for (std::size_t i = 0; same && i < zs.size(); ++i) same = zs[i] == zp[i];
  row("cache_embeddings", s2, p2, same);

  planner::ModelBundle ts, tp;
  tc.parallel = false;
  const double s3 = seconds([&] { ts = planner::train_blackbox(recs, bundle, tc); }, 1);
  tc.parallel = true;
  const double p3 = seconds([&] { tp = planner::train_blackbox(recs, bundle, tc); }, 1);
  row("train_blackbox epoch", s3, p3, ts.checksum({"H", "E", "R"}) == tp.checksum({"H", "E", "R"}));

  cwnet::CwTrainConfig cc;
  cc.epochs = 1;
  cc.parallel = false;
  const auto schema = cwnet::ConceptSchema::dataset1();
  const double s4 = seconds([&] { ts = cwnet::train_cwnet(bundle, recs, schema, cwnet::Mode::causal, cc); }, 1);
  cc.parallel = true;
  const double p4 = seconds([&] { tp = cwnet::train_cwnet(bundle, recs, schema, cwnet::Mode::causal, cc); }, 1);
  row("train_cwnet epoch", s4, p4, ts.checksum({"C", "Rp"}) == tp.checksum({"C", "Rp"}));
  return 0;
}
