// triage: command-line front end for the artefact triage toolkit.

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "triage/csv.hpp"
#include "triage/http_server.hpp"
#include "triage/pipeline.hpp"
#include "triage/service.hpp"
#include "triage/synthgen.hpp"

namespace fs = std::filesystem;
using namespace triage;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDegenerate = 3 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::invalid_window:
    case ErrorCode::generation: return kUsage;
    case ErrorCode::degenerate_class: return kDegenerate;
    default: return kData;
  }
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::persistence, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::persistence, "cannot write " + path.string());
  return out;
}

Algorithm algorithm_from(const std::string& text) {
  const auto a = parse_algorithm(text);
  if (!a) throw Error(ErrorCode::invalid_argument, "unknown algorithm " + text + " (tree, gnb, knn, svm, logreg)");
  return *a;
}

MetadataFormat format_from(const std::string& text) {
  const auto f = parse_metadata_format(text);
  if (!f) throw Error(ErrorCode::invalid_argument, "unknown metadata format " + text + " (auto, csv, bodyfile)");
  return *f;
}

// Training/analysis flags shared by several subcommands.
struct AnalysisFlags {
  std::string algorithm = "tree";
  AnalysisOptions options;
  int tree_max_depth = 0;

  void add(CLI::App* app, bool with_threshold = true) {
    auto& t = options.train;
    app->add_option("--algorithm,-a", algorithm, "tree | gnb | knn | svm | logreg")->capture_default_str();
    app->add_option("--seed", options.seed, "random seed")->capture_default_str();
    if (with_threshold)
      app->add_option("--threshold", options.threshold, "class-1 score cut-off")->capture_default_str();
    app->add_option("--k-neighbors", t.k_neighbors)->capture_default_str();
    app->add_option("--tree-max-depth", tree_max_depth, "0 = unlimited")->capture_default_str();
    app->add_option("--tree-min-leaf", t.tree_min_leaf)->capture_default_str();
    app->add_option("--svm-lambda", t.svm_lambda)->capture_default_str();
    app->add_option("--svm-epochs", t.svm_epochs)->capture_default_str();
    app->add_option("--lr-rate", t.lr_rate)->capture_default_str();
    app->add_option("--lr-epochs", t.lr_epochs)->capture_default_str();
    app->add_option("--lr-l2", t.lr_l2)->capture_default_str();
    app->add_option("--gnb-var-floor", t.gnb_var_floor_scale)->capture_default_str();
    app->add_option("--top-k-extensions", options.top_k_extensions)->capture_default_str();
    app->add_option("--holdout", options.holdout_fraction, "holdout fraction for metrics")->capture_default_str();
  }

  AnalysisOptions resolve() const {
    AnalysisOptions o = options;
    o.train.algorithm = algorithm_from(algorithm);
    o.train.seed = o.seed;
    if (tree_max_depth > 0) o.train.tree_max_depth = tree_max_depth;
    else if (tree_max_depth < 0) throw Error(ErrorCode::invalid_argument, "--tree-max-depth must be >= 0");
    o.train.validate();
    return o;
  }
};

void print_prf(std::ostream& out, const std::string& label, const Prf& s, double ap) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-22s precision %.4f  recall %.4f  f1 %.4f  ap %.4f\n", label.c_str(), s.precision,
                s.recall, s.f1, ap);
  out << buf;
}

std::map<std::string, int> read_ground_truth(const fs::path& path) {
  auto in = open_in(path);
  std::map<std::string, int> truth;
  csv::Reader reader(in);
  csv::Record rec;
  bool first = true;
  while (reader.next(rec)) {
    if (first && !rec.fields.empty() && rec.fields[0] == "hash") {
      first = false;
      continue;
    }
    first = false;
    if (rec.fields.size() < 2) throw Error(ErrorCode::format, path.string() + ": expected hash,class rows");
    const auto label = parse_label(rec.fields[1]);
    if (!label) throw Error(ErrorCode::format, path.string() + ": bad class " + rec.fields[1]);
    truth[lowercase(rec.fields[0])] = class_of(*label);
  }
  return truth;
}

// ---- subcommands ------------------------------------------------------------

struct GenArgs {
  fs::path out_dir;
  std::size_t total = 5000;
  double illegal_fraction = kDataset2IllegalRatio;
  int dataset = 0;
  std::size_t clusters = 3;
  double known_fraction = 0.5;
  std::uint64_t seed = 1;
};

int cmd_gen(const GenArgs& a) {
  double fraction = a.illegal_fraction;
  if (a.dataset == 1) fraction = kDataset1IllegalRatio;
  else if (a.dataset == 2) fraction = kDataset2IllegalRatio;
  else if (a.dataset != 0) throw Error(ErrorCode::invalid_argument, "--dataset must be 1 or 2");
  auto params = scenario_with_ratio(a.total, fraction, a.clusters, a.seed);
  params.known_fraction = a.known_fraction;
  const auto c = generate(params);
  const auto files = emit(c, a.out_dir);
  std::cout << "artifacts    " << files.artifacts.string() << " (" << c.metadata.size() << " rows)\n"
            << "timeline     " << files.timeline.string() << " (" << c.events.size() << " events)\n"
            << "ground truth " << files.ground_truth.string() << "\n"
            << "known base   " << files.known_base.string() << " (" << c.known_fraction_hashes.size() << " hashes)\n";
  return kOk;
}

struct IngestArgs {
  fs::path timeline, metadata, out, merged, known_base, ground_truth;
  std::string format = "auto";
  std::string source_id;
};

int cmd_ingest(const IngestArgs& a) {
  auto timeline = open_in(a.timeline);
  auto metadata = open_in(a.metadata);
  const std::optional<std::string> source = a.source_id.empty() ? std::nullopt : std::optional(a.source_id);
  auto data = load_case(timeline, metadata, format_from(a.format), source, std::nullopt);

  std::map<std::string, int> truth;
  if (!a.ground_truth.empty()) truth = read_ground_truth(a.ground_truth);
  if (!a.known_base.empty()) {
    const auto known = KnownBase::load(a.known_base);
    for (const auto& e : known.entries()) truth.emplace(e.hash, class_of(e.label));
  }
  auto vectors = extract_all(data.records, data.reference_time);
  std::size_t labelled = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto it = truth.find(lowercase(data.records[i].metadata.hash));
    if (it != truth.end()) {
      vectors[i].class_label = it->second;
      ++labelled;
    }
  }
  {
    auto out = open_out(a.out);
    write_feature_csv(out, vectors);
  }
  if (!a.merged.empty()) {
    auto out = open_out(a.merged);
    write_merged_csv(out, data.records);
  }
  std::cout << "artefacts " << data.records.size() << ", labelled " << labelled << ", orphan events "
            << data.orphan_events << ", diagnostics " << data.metadata_diagnostics.size() << " metadata / "
            << data.timeline_diagnostics.size() << " timeline\n";
  for (const auto& d : data.metadata_diagnostics)
    std::cerr << a.metadata.string() << ":" << d.line_number << ": " << to_string(d.reason) << "\n";
  for (const auto& d : data.timeline_diagnostics)
    std::cerr << a.timeline.string() << ":" << d.line_number << ": " << to_string(d.reason) << "\n";
  return kOk;
}

std::vector<FeatureVector> read_dataset(const fs::path& path) {
  auto in = open_in(path);
  return read_feature_csv(in);
}

struct TrainArgs {
  fs::path dataset, model_out;
  AnalysisFlags flags;
};

int cmd_train(const TrainArgs& a) {
  const auto options = a.flags.resolve();
  auto rows = read_dataset(a.dataset);
  std::erase_if(rows, [](const FeatureVector& v) { return !v.class_label; });
  const auto schema = build_schema(rows, options.top_k_extensions);
  Matrix x;
  std::vector<int> y;
  for (const auto& v : rows) {
    x.push_back(encode(v, schema).values);
    y.push_back(*v.class_label);
  }
  const auto model = train(x, y, options.train);
  save_model(a.model_out, {model, schema});
  std::cout << display_name(model.algorithm) << " trained on " << rows.size() << " rows, width " << model.width
            << ", schema " << schema.fingerprint() << "\n";
  return kOk;
}

struct PredictArgs {
  fs::path model, dataset, out;
  double threshold = 0.5;
};

int cmd_predict(const PredictArgs& a) {
  const auto file = load_model(a.model);
  const auto rows = read_dataset(a.dataset);
  std::ofstream file_out;
  std::ostream* out = &std::cout;
  if (!a.out.empty()) {
    file_out = open_out(a.out);
    out = &file_out;
  }
  *out << "row,score,predicted,class\n";
  std::vector<int> y_true, y_pred;
  char buf[64];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = encode(rows[i], file.schema);
    const double s = score(file.model, row.values);
    const int p = predict(file.model, row.values, a.threshold);
    std::snprintf(buf, sizeof buf, "%.6f", s);
    *out << i + 1 << ',' << buf << ',' << p << ',' << (rows[i].class_label ? std::to_string(*rows[i].class_label) : "")
         << '\n';
    if (rows[i].class_label) {
      y_true.push_back(*rows[i].class_label);
      y_pred.push_back(p);
    }
  }
  if (!y_true.empty() && !a.out.empty()) print_prf(std::cout, "labelled rows", prf(confusion(y_true, y_pred)), 0.0);
  return kOk;
}

struct EvalArgs {
  std::vector<std::string> datasets;  // name=path
  bool synthetic = false;
  std::size_t total = 5000;
  std::string algorithms = "all";
  fs::path out, pr_dir;
  AnalysisFlags flags;
};

int cmd_eval(const EvalArgs& a) {
  const auto options = a.flags.resolve();
  std::vector<Algorithm> algorithms;
  if (a.algorithms == "all") {
    algorithms.assign(kAllAlgorithms.begin(), kAllAlgorithms.end());
  } else {
    std::stringstream list(a.algorithms);
    for (std::string item; std::getline(list, item, ',');) algorithms.push_back(algorithm_from(item));
  }

  std::vector<std::pair<std::string, std::vector<FeatureVector>>> sets;
  if (a.synthetic) {
    sets.emplace_back("dataset1", labelled_vectors(generate(scenario_with_ratio(a.total, kDataset1IllegalRatio, 3, options.seed))));
    sets.emplace_back("dataset2", labelled_vectors(generate(scenario_with_ratio(a.total, kDataset2IllegalRatio, 3, options.seed))));
  }
  for (const auto& spec : a.datasets) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::invalid_argument, "--dataset expects name=path, got " + spec);
    auto rows = read_dataset(spec.substr(eq + 1));
    std::erase_if(rows, [](const FeatureVector& v) { return !v.class_label; });
    sets.emplace_back(spec.substr(0, eq), std::move(rows));
  }
  if (sets.empty()) throw Error(ErrorCode::invalid_argument, "give --dataset name=path or --synthetic");

  EvalReport report;
  for (const auto& [name, rows] : sets) {
    auto entries = evaluate_dataset(rows, name, algorithms, options);
    for (auto& e : entries) {
      print_prf(std::cout, std::string(display_name(e.algorithm)) + " / " + name, e.scores, e.average_precision);
      report.entries.push_back(std::move(e));
    }
  }
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    write_eval_csv(out, report);
  }
  if (!a.pr_dir.empty()) {
    for (const auto& e : report.entries) {
      auto out = open_out(a.pr_dir / (e.dataset + "_" + std::string(to_string(e.algorithm)) + ".csv"));
      write_pr_curve_csv(out, e.curve);
    }
  }
  return kOk;
}

struct RunArgs {
  fs::path timeline, metadata, known_base, extra_training, out_dir;
  std::string format = "auto";
  std::string source_id;
  std::string reference_time;
  AnalysisFlags flags;
};

int cmd_run(const RunArgs& a) {
  PipelineConfig config;
  config.timeline_path = a.timeline;
  config.metadata_path = a.metadata;
  config.metadata_format = format_from(a.format);
  if (!a.source_id.empty()) config.source_id = a.source_id;
  config.known_base_path = a.known_base;
  if (!a.extra_training.empty()) config.extra_training_path = a.extra_training;
  if (!a.reference_time.empty()) {
    const auto t = parse_iso8601_utc(a.reference_time);
    if (!t) throw Error(ErrorCode::invalid_argument, "--reference-time must be ISO 8601 UTC");
    config.reference_time = *t;
  }
  if (!a.out_dir.empty()) config.output_dir = a.out_dir;
  config.analysis = a.flags.resolve();

  const auto report = run_case(config);
  const auto& c = report.counts;
  std::cout << "artefacts " << c.total << ": known benign " << c.known_benign << ", known illegal " << c.known_illegal
            << ", unknown " << c.unknown << "\n"
            << "model " << display_name(report.model.algorithm) << " on " << report.model.training_rows << " rows\n";
  if (report.holdout.available) print_prf(std::cout, "holdout", report.holdout.scores, report.holdout.average_precision);
  else std::cout << "holdout unavailable: " << report.holdout.note << "\n";
  std::cout << "predicted suspicious " << c.predicted_suspicious << " of " << c.unknown << " unknown\n";
  const auto top = rank_unknown(report, 10);
  for (std::size_t i = 0; i < top.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", top[i].score);
    std::cout << "  " << i + 1 << ". " << buf << "  " << top[i].path << "\n";
  }
  return kOk;
}

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

struct ServeArgs {
  fs::path data_dir = "triage-data";
  fs::path known_base;
  std::string host = "127.0.0.1";
  int port = 8080;
  AnalysisFlags flags;
};

int cmd_serve(const ServeArgs& a) {
  ServiceConfig config;
  config.data_dir = a.data_dir;
  if (!a.known_base.empty()) config.known_base_path = a.known_base;
  config.defaults = a.flags.resolve();
  CaseService service(config);
  HttpServer server(service);
  const int port = server.bind(a.host, a.port);
  std::cout << "listening on http://" << a.host << ":" << port << "/v1/" << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.serve();
  g_server = nullptr;
  return kOk;
}

struct ImportArgs {
  fs::path known_base, hashes;
  std::string label;
  std::string case_id = "import";
};

int cmd_import(const ImportArgs& a) {
  const auto label = parse_label(a.label);
  if (!label) throw Error(ErrorCode::invalid_argument, "--label must be benign or illegal");
  auto base = KnownBase::open(a.known_base);
  auto in = open_in(a.hashes);
  const auto now = std::chrono::time_point_cast<seconds>(std::chrono::system_clock::now());
  const auto n = base.import_hash_list(in, *label, a.case_id, now);
  std::cout << "imported " << n << " " << to_string(*label) << " hashes; base now holds " << base.size() << "\n";
  return kOk;
}

// CLI11 only reads config files for the top-level app, so a subcommand's
// --config is expanded here: each key becomes --key=value, inserted right
// after the subcommand unless the flag is also given explicitly. Keys may sit
// at top level or in a [subcommand] section.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || args.empty()) return args;

  const std::string& sub = args.front();
  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigINI().from_file(*path)) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub)) continue;
    if (item.name == "config" || item.name.empty()) continue;
    const std::string flag = "--" + item.name;
    const bool explicit_flag = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (explicit_flag) continue;
    for (const auto& value : item.inputs) injected.push_back(flag + "=" + value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forensic file artefact triage: timeline ingest, known-file filtering and suspicion ranking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "triage 1.0.0");

  auto with_config = [](CLI::App* sub) {
    sub->add_option("--config", "key = value file; every flag may appear as a key");
    return sub;
  };

  GenArgs gen;
  auto* gen_cmd = with_config(app.add_subcommand("gen", "generate a synthetic case with planted illegal clusters"));
  gen_cmd->add_option("--out,-o", gen.out_dir, "output directory")->required();
  gen_cmd->add_option("--total", gen.total, "artefact count")->capture_default_str();
  gen_cmd->add_option("--illegal-fraction", gen.illegal_fraction)->capture_default_str();
  gen_cmd->add_option("--dataset", gen.dataset, "1 or 2: use that reference dataset's class ratio");
  gen_cmd->add_option("--clusters", gen.clusters)->capture_default_str();
  gen_cmd->add_option("--known-fraction", gen.known_fraction)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();

  IngestArgs ingest;
  auto* ingest_cmd = with_config(app.add_subcommand("ingest", "parse and merge inputs, export a feature dataset CSV"));
  ingest_cmd->add_option("--timeline", ingest.timeline, "l2tcsv super timeline")->required();
  ingest_cmd->add_option("--metadata", ingest.metadata, "artifact CSV or bodyfile")->required();
  ingest_cmd->add_option("--format", ingest.format, "auto | csv | bodyfile")->capture_default_str();
  ingest_cmd->add_option("--source-id", ingest.source_id);
  ingest_cmd->add_option("--known-base", ingest.known_base, "label rows found in this base");
  ingest_cmd->add_option("--ground-truth", ingest.ground_truth, "hash,class file used for labels");
  ingest_cmd->add_option("--out,-o", ingest.out, "dataset CSV")->required();
  ingest_cmd->add_option("--merged", ingest.merged, "also write the merged artefact CSV");

  TrainArgs tr;
  auto* train_cmd = with_config(app.add_subcommand("train", "train a model from a labelled dataset CSV"));
  train_cmd->add_option("--dataset", tr.dataset)->required();
  train_cmd->add_option("--model,-o", tr.model_out, "model file to write")->required();
  tr.flags.add(train_cmd, false);

  PredictArgs pr;
  auto* predict_cmd = with_config(app.add_subcommand("predict", "score a dataset CSV with a saved model"));
  predict_cmd->add_option("--model,-m", pr.model)->required();
  predict_cmd->add_option("--dataset", pr.dataset)->required();
  predict_cmd->add_option("--threshold", pr.threshold)->capture_default_str();
  predict_cmd->add_option("--out,-o", pr.out, "CSV output (stdout when absent)");

  EvalArgs ev;
  auto* eval_cmd = with_config(app.add_subcommand("eval", "precision/recall/F1/AP matrix over algorithms and datasets"));
  eval_cmd->add_option("--dataset", ev.datasets, "name=path of a labelled dataset CSV (repeatable)");
  eval_cmd->add_flag("--synthetic", ev.synthetic, "add generated cases at both reference class ratios");
  eval_cmd->add_option("--total", ev.total, "artefacts per synthetic case")->capture_default_str();
  eval_cmd->add_option("--algorithms", ev.algorithms, "comma list or all")->capture_default_str();
  eval_cmd->add_option("--out,-o", ev.out, "eval CSV");
  eval_cmd->add_option("--pr-dir", ev.pr_dir, "directory for per-run PR curve CSVs");
  ev.flags.add(eval_cmd);

  RunArgs run;
  auto* run_cmd = with_config(app.add_subcommand("run", "full flow: ingest, filter, train, rank"));
  run_cmd->add_option("--timeline", run.timeline)->required();
  run_cmd->add_option("--metadata", run.metadata)->required();
  run_cmd->add_option("--known-base", run.known_base)->required();
  run_cmd->add_option("--format", run.format, "auto | csv | bodyfile")->capture_default_str();
  run_cmd->add_option("--source-id", run.source_id);
  run_cmd->add_option("--extra-training", run.extra_training, "labelled dataset CSV appended to training");
  run_cmd->add_option("--reference-time", run.reference_time, "ISO 8601 UTC; latest observed instant by default");
  run_cmd->add_option("--out,-o", run.out_dir, "directory for report.json, ranking.csv, model.json, ...");
  run.flags.add(run_cmd);

  ServeArgs serve;
  auto* serve_cmd = with_config(app.add_subcommand("serve", "start the case service"));
  serve_cmd->add_option("--data-dir", serve.data_dir)->capture_default_str();
  serve_cmd->add_option("--known-base", serve.known_base, "shared known base, updated by confirmations");
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "0 picks a free port")->capture_default_str();
  serve.flags.add(serve_cmd);

  ImportArgs imp;
  auto* import_cmd = with_config(app.add_subcommand("import", "add a digest list to a known base"));
  import_cmd->add_option("--known-base", imp.known_base)->required();
  import_cmd->add_option("--hashes", imp.hashes, "one digest per line")->required();
  import_cmd->add_option("--label", imp.label, "benign | illegal")->required();
  import_cmd->add_option("--case-id", imp.case_id)->capture_default_str();

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*ingest_cmd) return cmd_ingest(ingest);
    if (*train_cmd) return cmd_train(tr);
    if (*predict_cmd) return cmd_predict(pr);
    if (*eval_cmd) return cmd_eval(ev);
    if (*run_cmd) return cmd_run(run);
    if (*serve_cmd) return cmd_serve(serve);
    if (*import_cmd) return cmd_import(imp);
  } catch (const Error& e) {
    std::cerr << "triage: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "triage: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
