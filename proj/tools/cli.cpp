#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>

#include "atomic_li/bench.hpp"
#include "atomic_li/dataset.hpp"
#include "atomic_li/errors.hpp"
#include "atomic_li/index.hpp"
#include "atomic_li/model.hpp"

namespace ali::cli {
namespace {

const std::vector<std::string> kDistNames = {"uniform", "lognormal"};
const std::vector<std::string> kModelNames = {"NN0", "NN1", "NN2", "L", "Q", "C"};

/// Neural training flags shared by train, eval-rf and bench.
struct NnFlags {
  std::string preset = "desk";
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
  std::optional<double> momentum;
  std::optional<std::size_t> batch;
  std::optional<double> tolerance;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& cmd) {
    cmd.add_option("--preset", preset, "NN preset: desk (200 epochs) or paper-nn (2000 epochs)")
        ->check(CLI::IsMember({"desk", "paper-nn"}))
        ->capture_default_str();
    cmd.add_option("--epochs", epochs, "Override NN epoch count");
    cmd.add_option("--lr", learning_rate, "Override NN learning rate");
    cmd.add_option("--momentum", momentum, "Override NN momentum");
    cmd.add_option("--batch", batch, "Override NN batch size");
    cmd.add_option("--tolerance", tolerance, "Early-stop tolerance on per-epoch loss change (0 = off)");
    cmd.add_option("--nn-seed", seed, "NN initialization/shuffle seed");
  }

  TrainConfig config() const {
    TrainConfig c = preset == "paper-nn" ? TrainConfig::full() : TrainConfig::desk();
    if (epochs) c.epochs = *epochs;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (momentum) c.momentum = *momentum;
    if (batch) c.batch_size = *batch;
    if (tolerance) c.stop_tolerance = *tolerance;
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
};

std::string dataset_label(KeyDistribution dist) { return dist == KeyDistribution::uniform ? "uni" : "logn"; }

/// Wraps a subcommand body, mapping library exceptions to exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const LoadError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const Divergence& e) {
    err << "training error: " << e.what() << '\n';
    return kDataError;
  } catch (const DegenerateInput& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Atomic learned indexes over sorted 64-bit key tables", "atomic_li"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Generate a synthetic sorted table");
  std::string gen_dist;
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 42;
  std::string gen_out;
  std::string gen_workload_out;
  std::optional<std::uint64_t> gen_workload_seed;
  generate->add_option("--dist", gen_dist, "uniform or lognormal")->required()->check(CLI::IsMember(kDistNames));
  generate->add_option("--n", gen_n, "Number of keys")->required();
  generate->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Table output path")->required();
  generate->add_option("--workload-out", gen_workload_out, "Also write a query workload here");
  generate->add_option("--workload-seed", gen_workload_seed, "Workload seed (default: seed + 1)");

  // workload
  auto* workload_cmd = app.add_subcommand("workload", "Build a half-member query workload for a table");
  std::string wl_data;
  std::string wl_out;
  std::uint64_t wl_seed = 43;
  std::string wl_dist = "empirical";
  workload_cmd->add_option("--data", wl_data, "Table file")->required();
  workload_cmd->add_option("--out", wl_out, "Workload output path")->required();
  workload_cmd->add_option("--seed", wl_seed, "Workload seed")->capture_default_str();
  workload_cmd->add_option("--nonmember-dist", wl_dist, "Distribution of absent keys")
      ->check(CLI::IsMember({"empirical", "uniform", "lognormal"}))
      ->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train one model and report epsilon and training time");
  std::string tr_model;
  std::string tr_data;
  std::string tr_out;
  std::size_t tr_repeats = 1;
  NnFlags tr_nn;
  train->add_option("--model", tr_model, "L, Q, C, NN0, NN1 or NN2")->required()->check(CLI::IsMember(kModelNames));
  train->add_option("--data", tr_data, "Table file")->required();
  train->add_option("--out", tr_out, "Write the trained model here");
  train->add_option("--repeats", tr_repeats, "Training repeats (median time is reported)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr_nn.attach(*train);

  // eval-rf
  auto* eval = app.add_subcommand("eval-rf", "Empirical reduction factor of a model over a workload");
  std::string ev_data;
  std::string ev_workload;
  std::string ev_model_file;
  std::string ev_model;
  std::string ev_search = "bfs";
  std::size_t ev_repeats = 0;
  NnFlags ev_nn;
  eval->add_option("--data", ev_data, "Table file")->required();
  eval->add_option("--workload", ev_workload, "Workload file")->required();
  auto* ev_file_opt = eval->add_option("--model-file", ev_model_file, "Trained model file");
  auto* ev_kind_opt = eval->add_option("--model", ev_model, "Train this model kind on the fly")
                          ->check(CLI::IsMember(kModelNames));
  ev_file_opt->excludes(ev_kind_opt);
  eval->add_option("--search", ev_search, "bbs or bfs")->check(CLI::IsMember({"bbs", "bfs"}))->capture_default_str();
  eval->add_option("--time-repeats", ev_repeats, "Also time queries with this many repeats (0 = skip)");
  ev_nn.attach(*eval);

  // bench
  auto* bench = app.add_subcommand("bench", "Run the dataset x model x search grid and write a CSV report");
  std::vector<std::string> be_dists;
  std::size_t be_n = 1050000;
  std::uint64_t be_seed = 42;
  std::vector<std::string> be_data;
  std::vector<std::string> be_models;
  std::vector<std::string> be_search;
  std::size_t be_repeats = 5;
  std::size_t be_nn_repeats = 1;
  std::string be_out;
  bool be_baseline = false;
  NnFlags be_nn;
  bench->add_option("--dist", be_dists, "Synthetic datasets to generate (uniform,lognormal)")
      ->delimiter(',')
      ->check(CLI::IsMember(kDistNames));
  bench->add_option("--n", be_n, "Keys per synthetic dataset")->capture_default_str();
  bench->add_option("--seed", be_seed, "Seed for generated tables and workloads")->capture_default_str();
  bench->add_option("--data", be_data, "Extra table files as name=path (repeatable)");
  bench->add_option("--models", be_models, "Comma-separated models (default: all six)")
      ->delimiter(',')
      ->check(CLI::IsMember(kModelNames));
  bench->add_option("--search", be_search, "Comma-separated search kinds (default: bbs,bfs)")
      ->delimiter(',')
      ->check(CLI::IsMember({"bbs", "bfs"}));
  bench->add_option("--repeats", be_repeats, "Timing repeats (median)")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--nn-train-repeats", be_nn_repeats, "Training repeats for neural models")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--out", be_out, "CSV report path")->required();
  bench->add_flag("--baseline", be_baseline, "Add plain full-table search rows (model 'none')");
  be_nn.attach(*bench);

  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const std::string& arg : argv) raw.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  if (generate->parsed()) {
    return guarded(err, [&] {
      const KeyDistribution dist = parse_distribution(gen_dist);
      const SortedTable table = ali::generate(dist, gen_n, gen_seed);
      save_table(table, gen_out);
      out << "n=" << table.size() << " min=" << table.min_key() << " max=" << table.max_key()
          << " bytes=" << std::filesystem::file_size(gen_out) << '\n';
      if (!gen_workload_out.empty()) {
        const QueryWorkload workload = make_workload(table, gen_workload_seed.value_or(gen_seed + 1));
        save_workload(workload, gen_workload_out);
        out << "workload queries=" << workload.size() << " members=" << workload.member_count << '\n';
      }
      return int{kOk};
    });
  }

  if (workload_cmd->parsed()) {
    return guarded(err, [&] {
      const SortedTable table = load_table(wl_data);
      const QueryWorkload workload = make_workload(table, wl_seed, parse_distribution(wl_dist));
      save_workload(workload, wl_out);
      out << "queries=" << workload.size() << " members=" << workload.member_count << '\n';
      return int{kOk};
    });
  }

  if (train->parsed()) {
    return guarded(err, [&] {
      const ModelKind kind = parse_model_kind(tr_model);
      const TrainConfig config = tr_nn.config();
      const SortedTable table = load_table(tr_data);
      std::optional<CdfModel> model;
      TrainSummary summary;
      const Timing timing = time_training(
          [&](const SortedTable& t) { model.emplace(train_model(kind, t, config, &summary)); }, table, tr_repeats);
      const std::size_t epsilon = model->visit([&](const auto& m) { return compute_epsilon(m, table); });
      if (!tr_out.empty()) save_model(*model, tr_out);
      out << "model=" << tr_model << " n=" << table.size() << " epsilon=" << epsilon
          << " train_s_per_elem=" << timing.seconds_per_element;
      if (is_neural(kind)) out << " epochs=" << summary.epochs_run << " final_loss=" << summary.final_loss;
      out << '\n';
      return int{kOk};
    });
  }

  if (eval->parsed()) {
    return guarded(err, [&] {
      if (ev_model_file.empty() && ev_model.empty()) throw InvalidArgument("eval-rf needs --model-file or --model");
      auto table = std::make_shared<const SortedTable>(load_table(ev_data));
      const QueryWorkload workload = load_workload(ev_workload);
      CdfModel model = ev_model_file.empty() ? train_model(parse_model_kind(ev_model), *table, ev_nn.config())
                                             : load_model(ev_model_file);
      const AtomicIndex index(table, std::move(model), parse_search_kind(ev_search));
      out << "model=" << index.model().name() << " n=" << table->size() << " epsilon=" << index.epsilon()
          << " rf_percent=" << reduction_factor(index, workload)
          << " repairs=" << count_repairs(index, workload) << '\n';
      if (ev_repeats > 0) {
        const Timing timing = time_queries(index, workload, ev_repeats);
        out << "query_s_per_elem=" << timing.seconds_per_element << " checksum=" << timing.checksum << '\n';
      }
      return int{kOk};
    });
  }

  // bench
  return guarded(err, [&] {
    std::vector<BenchDataset> datasets;
    std::vector<std::string> dist_names = be_dists;
    if (dist_names.empty() && be_data.empty()) dist_names = kDistNames;
    for (const std::string& name : dist_names) {
      const KeyDistribution dist = parse_distribution(name);
      auto table = std::make_shared<const SortedTable>(ali::generate(dist, be_n, be_seed));
      QueryWorkload workload = make_workload(*table, be_seed + 1);
      datasets.push_back({dataset_label(dist), std::move(table), std::move(workload)});
    }
    for (const std::string& spec : be_data) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
        throw InvalidArgument("--data expects name=path, got '" + spec + "'");
      auto table = std::make_shared<const SortedTable>(load_table(spec.substr(eq + 1)));
      QueryWorkload workload = make_workload(*table, be_seed + 1);
      datasets.push_back({spec.substr(0, eq), std::move(table), std::move(workload)});
    }

    std::vector<ModelKind> models;
    for (const std::string& name : be_models.empty() ? kModelNames : be_models) models.push_back(parse_model_kind(name));
    std::vector<SearchKind> searches;
    for (const std::string& name : be_search.empty() ? std::vector<std::string>{"bbs", "bfs"} : be_search)
      searches.push_back(parse_search_kind(name));

    SuiteConfig config;
    config.nn = be_nn.config();
    config.repeats = be_repeats;
    config.nn_train_repeats = be_nn_repeats;
    config.include_baseline = be_baseline;
    config.progress = [&](const std::string& message) { err << "[bench] " << message << '\n'; };

    const std::vector<BenchRow> rows = run_suite(datasets, models, searches, config);
    std::ofstream csv(be_out, std::ios::trunc);
    if (!csv) throw LoadError(LoadErrorKind::io, "cannot write " + be_out);
    write_csv(csv, rows);
    if (!csv) throw LoadError(LoadErrorKind::io, "write failed for " + be_out);
    print_table(out, rows);
    const bool any_failed = std::any_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.failed(); });
    return int{any_failed ? kPartialFailure : kOk};
  });
}

}  // namespace ali::cli
