#include "triage/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "triage/csv.hpp"
#include "triage/error.hpp"

namespace triage {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

MetadataFormat sniff_format(std::istream& in) {
  const auto start = in.tellg();
  std::string first;
  std::getline(in, first);
  in.clear();
  in.seekg(start);
  if (!in) throw Error(ErrorCode::format, "metadata input is not seekable; pass an explicit format");
  return first.rfind("source_id,", 0) == 0 ? MetadataFormat::artifact_csv : MetadataFormat::bodyfile;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::persistence, "cannot open " + path.string());
  return in;
}

void write_output(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::persistence, "cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw Error(ErrorCode::persistence, "write failed for " + path.string());
}

Matrix encode_all(std::span<const FeatureVector> vectors, const FeatureSchema& schema) {
  Matrix rows;
  rows.reserve(vectors.size());
  for (const auto& v : vectors) rows.push_back(encode(v, schema).values);
  return rows;
}

std::vector<int> labels_of(std::span<const FeatureVector> vectors) {
  std::vector<int> y;
  y.reserve(vectors.size());
  for (const auto& v : vectors) y.push_back(*v.class_label);
  return y;
}

template <class T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items[i]);
  return out;
}

}  // namespace

std::optional<MetadataFormat> parse_metadata_format(std::string_view text) {
  if (text == "auto") return MetadataFormat::automatic;
  if (text == "csv" || text == "artifact") return MetadataFormat::artifact_csv;
  if (text == "bodyfile" || text == "body") return MetadataFormat::bodyfile;
  return std::nullopt;
}

Instant latest_instant(std::span<const FileMetadata> metadata, std::span<const TimelineEvent> events) {
  Instant latest{};
  for (const auto& m : metadata)
    for (const auto& t : {m.crtime, m.atime, m.mtime, m.ctime})
      if (t) latest = std::max(latest, *t);
  for (const auto& e : events) latest = std::max(latest, e.instant);
  return latest;
}

CaseData load_case(std::istream& timeline, std::istream& metadata, MetadataFormat format,
                   const std::optional<std::string>& source_id, const std::optional<Instant>& reference_time) {
  if (format == MetadataFormat::automatic) format = sniff_format(metadata);

  CaseData data;
  ParseResult<FileMetadata> meta;
  if (format == MetadataFormat::bodyfile) {
    meta = parse_bodyfile(metadata, source_id.value_or("img1"));
  } else {
    meta = parse_artifact_csv(metadata);
  }
  auto events = parse_l2tcsv(timeline);

  data.source_id = source_id ? *source_id : (meta.records.empty() ? "img1" : meta.records.front().source_id);
  auto collated = collate(meta.records, events.records, data.source_id);
  data.records = std::move(collated.records);
  data.orphan_events = collated.orphan_count;
  data.duplicate_metadata = collated.duplicate_keys.size();
  data.metadata_diagnostics = std::move(meta.diagnostics);
  data.timeline_diagnostics = std::move(events.diagnostics);
  data.reference_time = reference_time ? *reference_time : latest_instant(meta.records, events.records);
  return data;
}

std::vector<FeatureVector> extract_all(std::span<const ArtifactRecord> records, Instant reference_time) {
  std::vector<FeatureVector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(extract(r, reference_time));
  return out;
}

void sort_ranking(std::vector<RankedEntry>& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.path != b.path) return a.path < b.path;
    return a.key < b.key;
  });
}

CaseReport analyze_case(const CaseData& data, const KnownBase& known, const AnalysisOptions& options,
                        std::span<const FeatureVector> extra_training, ModelFile* model_out) {
  CaseReport report;
  report.threshold = options.threshold;
  report.seed = options.seed;
  report.reference_time = data.reference_time;

  // Step 2: filter against the known base
  auto split = known.filter_split(data.records);
  report.counts.total = data.records.size();
  report.counts.unknown = split.unknown.size();
  for (const auto& r : split.known) (*r.label == Label::illegal ? report.counts.known_illegal : report.counts.known_benign)++;
  report.counts.orphan_events = data.orphan_events;
  report.counts.duplicate_metadata = data.duplicate_metadata;
  report.counts.metadata_diagnostics = data.metadata_diagnostics.size();
  report.counts.timeline_diagnostics = data.timeline_diagnostics.size();

  auto training = extract_all(split.known, data.reference_time);
  const auto unknown_vectors = extract_all(split.unknown, data.reference_time);
  for (const auto& v : training) report.counts.flagged_crtime += v.flagged();
  for (const auto& v : unknown_vectors) report.counts.flagged_crtime += v.flagged();
  for (const auto& v : extra_training) {
    if (!v.class_label) throw Error(ErrorCode::format, "external training rows must carry a class");
    training.push_back(v);
  }

  const auto labels = labels_of(training);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (training.empty() || positives == 0 || positives == training.size()) {
    const std::string missing = training.empty() ? "both classes" : positives == 0 ? "class 1 (illegal)" : "class 0 (benign)";
    throw Error(ErrorCode::degenerate_class,
                "known artefacts lack " + missing +
                    "; import more known hashes into the known base (e.g. `triage import --label illegal`)");
  }

  TrainConfig train_config = options.train;
  train_config.seed = options.seed;

  // Step 3a: internal holdout for the report's metrics
  try {
    auto holdout = stratified_split(labels, options.holdout_fraction, options.seed);
    const auto train_vectors = gather<FeatureVector>(training, holdout.train);
    const auto test_vectors = gather<FeatureVector>(training, holdout.test);
    const auto schema = build_schema(train_vectors, options.top_k_extensions, data.reference_time);
    const auto model = train(encode_all(train_vectors, schema), labels_of(train_vectors), train_config);
    const auto test_labels = labels_of(test_vectors);
    auto entry = evaluate(model, encode_all(test_vectors, schema), test_labels, "holdout", options.threshold);
    report.holdout.available = true;
    report.holdout.train_rows = train_vectors.size();
    report.holdout.test_rows = test_vectors.size();
    report.holdout.counts = entry.counts;
    report.holdout.scores = entry.scores;
    report.holdout.average_precision = entry.average_precision;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::stratification && e.code() != ErrorCode::degenerate_class) throw;
    report.holdout.note = e.what();
  }

  // Step 3b: final model on every known artefact
  const auto schema = build_schema(training, options.top_k_extensions, data.reference_time);
  const auto model = train(encode_all(training, schema), labels, train_config);
  report.model = {model.algorithm, training.size(), positives, extra_training.size(), model.width, schema.fingerprint()};

  // Step 4: score and rank the unknown artefacts
  report.ranking.reserve(split.unknown.size());
  for (std::size_t i = 0; i < split.unknown.size(); ++i) {
    const auto row = encode(unknown_vectors[i], schema);
    const double s = score(model, row.values);
    const auto& r = split.unknown[i];
    report.ranking.push_back({r.key, r.metadata.path, r.metadata.hash, s, s >= options.threshold ? 1 : 0});
    report.counts.predicted_suspicious += static_cast<std::size_t>(s >= options.threshold);
  }
  sort_ranking(report.ranking);

  if (model_out) *model_out = ModelFile{model, schema};
  return report;
}

std::vector<EvalEntry> evaluate_dataset(std::span<const FeatureVector> rows, const std::string& dataset,
                                        std::span<const Algorithm> algorithms, const AnalysisOptions& options) {
  for (const auto& v : rows)
    if (!v.class_label) throw Error(ErrorCode::format, "evaluation rows must carry a class");
  const auto labels = labels_of(rows);
  const auto split = stratified_split(labels, options.holdout_fraction, options.seed);
  const auto train_vectors = gather<FeatureVector>(rows, split.train);
  const auto test_vectors = gather<FeatureVector>(rows, split.test);
  const auto schema = build_schema(train_vectors, options.top_k_extensions);
  const auto train_rows = encode_all(train_vectors, schema);
  const auto test_rows = encode_all(test_vectors, schema);
  const auto train_labels = labels_of(train_vectors);
  const auto test_labels = labels_of(test_vectors);

  std::vector<EvalEntry> entries;
  for (const auto algorithm : algorithms) {
    TrainConfig config = options.train;
    config.algorithm = algorithm;
    config.seed = options.seed;
    const auto model = train(train_rows, train_labels, config);
    entries.push_back(evaluate(model, test_rows, test_labels, dataset, options.threshold));
  }
  return entries;
}

CaseReport run_case(const PipelineConfig& config) {
  auto timeline = open_input(config.timeline_path);
  auto metadata = open_input(config.metadata_path);
  const CaseData data = load_case(timeline, metadata, config.metadata_format, config.source_id, config.reference_time);
  const KnownBase known = KnownBase::load(config.known_base_path);

  std::vector<FeatureVector> extra;
  if (config.extra_training_path) {
    auto in = open_input(*config.extra_training_path);
    extra = read_feature_csv(in);
    std::erase_if(extra, [](const FeatureVector& v) { return !v.class_label.has_value(); });
  }

  ModelFile model;
  CaseReport report = analyze_case(data, known, config.analysis, extra, &model);

  if (config.output_dir) {
    const auto& dir = *config.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::persistence, "cannot create " + dir.string() + ": " + ec.message());
    write_output(dir / "report.json", [&](std::ostream& out) { out << serialize_report(report); });
    write_output(dir / "ranking.csv", [&](std::ostream& out) { write_ranking_csv(out, report.ranking); });
    save_model(dir / "model.json", model);
    auto labelled = known.filter_split(data.records);
    std::vector<ArtifactRecord> all = std::move(labelled.known);
    all.insert(all.end(), std::make_move_iterator(labelled.unknown.begin()), std::make_move_iterator(labelled.unknown.end()));
    write_output(dir / "dataset.csv", [&](std::ostream& out) {
      const auto vectors = extract_all(all, data.reference_time);
      write_feature_csv(out, vectors);
    });
    write_output(dir / "merged.csv", [&](std::ostream& out) { write_merged_csv(out, data.records); });
  }
  return report;
}

std::vector<RankedEntry> rank_unknown(const CaseReport& report, long long top_n) {
  if (top_n < 0) throw Error(ErrorCode::invalid_argument, "top_n must be >= 0");
  const auto n = std::min(static_cast<std::size_t>(top_n), report.ranking.size());
  return {report.ranking.begin(), report.ranking.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::string serialize_report(const CaseReport& r) {
  ordered_json ranking = ordered_json::array();
  for (const auto& e : r.ranking)
    ranking.push_back({{"source_id", e.key.source_id},
                       {"inode", e.key.inode},
                       {"path", e.path},
                       {"hash", e.hash},
                       {"score", e.score},
                       {"predicted", e.predicted}});
  const auto& c = r.counts;
  ordered_json j = {
      {"counts",
       {{"total", c.total},
        {"known_benign", c.known_benign},
        {"known_illegal", c.known_illegal},
        {"unknown", c.unknown},
        {"orphan_events", c.orphan_events},
        {"duplicate_metadata", c.duplicate_metadata},
        {"metadata_diagnostics", c.metadata_diagnostics},
        {"timeline_diagnostics", c.timeline_diagnostics},
        {"flagged_crtime", c.flagged_crtime},
        {"predicted_suspicious", c.predicted_suspicious}}},
      {"model",
       {{"algorithm", to_string(r.model.algorithm)},
        {"training_rows", r.model.training_rows},
        {"training_positives", r.model.training_positives},
        {"extra_training_rows", r.model.extra_training_rows},
        {"width", r.model.width},
        {"schema_fingerprint", r.model.schema_fingerprint}}},
      {"holdout",
       {{"available", r.holdout.available},
        {"note", r.holdout.note},
        {"train_rows", r.holdout.train_rows},
        {"test_rows", r.holdout.test_rows},
        {"tp", r.holdout.counts.tp},
        {"fp", r.holdout.counts.fp},
        {"fn", r.holdout.counts.fn},
        {"tn", r.holdout.counts.tn},
        {"precision", r.holdout.scores.precision},
        {"recall", r.holdout.scores.recall},
        {"f1", r.holdout.scores.f1},
        {"average_precision", r.holdout.average_precision}}},
      {"threshold", r.threshold},
      {"seed", r.seed},
      {"reference_time", format_iso8601_utc(r.reference_time)},
      {"ranking", ranking}};
  return j.dump(2) + "\n";
}

CaseReport parse_report(std::string_view json_text) {
  try {
    const auto j = json::parse(json_text);
    CaseReport r;
    const auto& c = j.at("counts");
    r.counts.total = c.at("total");
    r.counts.known_benign = c.at("known_benign");
    r.counts.known_illegal = c.at("known_illegal");
    r.counts.unknown = c.at("unknown");
    r.counts.orphan_events = c.at("orphan_events");
    r.counts.duplicate_metadata = c.at("duplicate_metadata");
    r.counts.metadata_diagnostics = c.at("metadata_diagnostics");
    r.counts.timeline_diagnostics = c.at("timeline_diagnostics");
    r.counts.flagged_crtime = c.at("flagged_crtime");
    r.counts.predicted_suspicious = c.at("predicted_suspicious");

    const auto& m = j.at("model");
    const auto algorithm = parse_algorithm(m.at("algorithm").get<std::string>());
    if (!algorithm) throw Error(ErrorCode::format, "report names an unknown algorithm");
    r.model.algorithm = *algorithm;
    r.model.training_rows = m.at("training_rows");
    r.model.training_positives = m.at("training_positives");
    r.model.extra_training_rows = m.at("extra_training_rows");
    r.model.width = m.at("width");
    r.model.schema_fingerprint = m.at("schema_fingerprint");

    const auto& h = j.at("holdout");
    r.holdout.available = h.at("available");
    r.holdout.note = h.at("note");
    r.holdout.train_rows = h.at("train_rows");
    r.holdout.test_rows = h.at("test_rows");
    r.holdout.counts.tp = h.at("tp");
    r.holdout.counts.fp = h.at("fp");
    r.holdout.counts.fn = h.at("fn");
    r.holdout.counts.tn = h.at("tn");
    r.holdout.scores.precision = h.at("precision");
    r.holdout.scores.recall = h.at("recall");
    r.holdout.scores.f1 = h.at("f1");
    r.holdout.average_precision = h.at("average_precision");

    r.threshold = j.at("threshold");
    r.seed = j.at("seed");
    const auto ref = parse_iso8601_utc(j.at("reference_time").get<std::string>());
    if (!ref) throw Error(ErrorCode::format, "report has a bad reference_time");
    r.reference_time = *ref;
    for (const auto& e : j.at("ranking"))
      r.ranking.push_back({{e.at("source_id"), e.at("inode")}, e.at("path"), e.at("hash"), e.at("score"), e.at("predicted")});
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, std::string("malformed report: ") + e.what());
  }
}

void write_ranking_csv(std::ostream& out, std::span<const RankedEntry> ranking) {
  const std::vector<std::string> header{"rank", "source_id", "inode", "path", "hash", "score", "predicted"};
  csv::write_row(out, header);
  char buf[32];
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& e = ranking[i];
    std::snprintf(buf, sizeof buf, "%.6f", e.score);
    const std::vector<std::string> row{std::to_string(i + 1), e.key.source_id, std::to_string(e.key.inode), e.path,
                                       e.hash,                buf,             std::to_string(e.predicted)};
    csv::write_row(out, row);
  }
}

}  // namespace triage
