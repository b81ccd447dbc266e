#include "triage/service.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>

namespace triage {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kTimelineFile = "timeline.csv";
constexpr const char* kMetadataFile = "metadata.txt";
constexpr const char* kCaseFile = "case.json";
constexpr const char* kKnownFile = "known_base.csv";
constexpr const char* kLabelLog = "labels.jsonl";
constexpr const char* kModelFile = "model.json";
constexpr const char* kReportFile = "report.json";

ParseDiagnostic header_diagnostic(std::string_view upload) {
  auto line = upload.substr(0, upload.find('\n'));
  if (line.ends_with('\r')) line.remove_suffix(1);
  return {1, DiagnosticReason::bad_header, std::string(line)};
}

Instant now() { return std::chrono::time_point_cast<seconds>(std::chrono::system_clock::now()); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::persistence, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Write to a sibling temp file and rename so a crash never leaves half a file.
void write_file(const fs::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::persistence, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.flush()) throw Error(ErrorCode::persistence, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::persistence, "cannot replace " + path.string() + ": " + ec.message());
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::persistence, "cannot append to " + path.string());
  out << line << '\n';
  if (!out.flush()) throw Error(ErrorCode::persistence, "append failed for " + path.string());
}

std::string_view format_name(MetadataFormat f) {
  switch (f) {
    case MetadataFormat::automatic: return "auto";
    case MetadataFormat::artifact_csv: return "csv";
    case MetadataFormat::bodyfile: return "bodyfile";
  }
  return "auto";
}

ordered_json options_to_json(const AnalysisOptions& o) {
  const auto& t = o.train;
  ordered_json j = {{"algorithm", to_string(t.algorithm)},
                    {"k_neighbors", t.k_neighbors},
                    {"tree_min_leaf", t.tree_min_leaf},
                    {"svm_lambda", t.svm_lambda},
                    {"svm_epochs", t.svm_epochs},
                    {"lr_rate", t.lr_rate},
                    {"lr_epochs", t.lr_epochs},
                    {"lr_l2", t.lr_l2},
                    {"gnb_var_floor_scale", t.gnb_var_floor_scale},
                    {"top_k_extensions", o.top_k_extensions},
                    {"holdout_fraction", o.holdout_fraction},
                    {"threshold", o.threshold},
                    {"seed", o.seed}};
  j["tree_max_depth"] = t.tree_max_depth ? ordered_json(*t.tree_max_depth) : ordered_json(nullptr);
  return j;
}

AnalysisOptions options_from_json(const ordered_json& j) {
  AnalysisOptions o;
  auto& t = o.train;
  const auto algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  if (!algorithm) throw Error(ErrorCode::format, "case file names an unknown algorithm");
  t.algorithm = *algorithm;
  t.k_neighbors = j.at("k_neighbors");
  t.tree_min_leaf = j.at("tree_min_leaf");
  t.svm_lambda = j.at("svm_lambda");
  t.svm_epochs = j.at("svm_epochs");
  t.lr_rate = j.at("lr_rate");
  t.lr_epochs = j.at("lr_epochs");
  t.lr_l2 = j.at("lr_l2");
  t.gnb_var_floor_scale = j.at("gnb_var_floor_scale");
  if (!j.at("tree_max_depth").is_null()) t.tree_max_depth = j.at("tree_max_depth").get<int>();
  o.top_k_extensions = j.at("top_k_extensions");
  o.holdout_fraction = j.at("holdout_fraction");
  o.threshold = j.at("threshold");
  o.seed = j.at("seed");
  return o;
}

std::optional<CaseStatus> parse_status(std::string_view s) {
  if (s == "ingested") return CaseStatus::ingested;
  if (s == "trained") return CaseStatus::trained;
  if (s == "ranked") return CaseStatus::ranked;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(CaseStatus s) {
  switch (s) {
    case CaseStatus::ingested: return "ingested";
    case CaseStatus::trained: return "trained";
    case CaseStatus::ranked: return "ranked";
  }
  return "ingested";
}

struct CaseService::CaseState {
  std::mutex mutex;
  fs::path dir;
  CaseHandle handle;
  MetadataFormat format = MetadataFormat::automatic;
  std::optional<std::string> source_id;
  AnalysisOptions options;
  CaseData data;  // read-only after ingest
  std::set<std::string> hashes;
  KnownBase known;
  std::optional<CaseReport> report;

  void persist_case_file() const {
    ordered_json j = {{"case_id", handle.case_id},
                      {"status", to_string(handle.status)},
                      {"created_at", format_iso8601_utc(handle.created_at)},
                      {"report_version", handle.report_version},
                      {"metadata_format", format_name(format)},
                      {"options", options_to_json(options)}};
    j["source_id"] = source_id ? ordered_json(*source_id) : ordered_json(nullptr);
    write_file(dir / kCaseFile, j.dump(2) + "\n");
  }

  void load_inputs() {
    std::ifstream timeline(dir / kTimelineFile, std::ios::binary);
    std::ifstream metadata(dir / kMetadataFile, std::ios::binary);
    if (!timeline || !metadata) throw Error(ErrorCode::persistence, "case inputs missing under " + dir.string());
    data = load_case(timeline, metadata, format, source_id, std::nullopt);
    hashes.clear();
    for (const auto& r : data.records)
      if (!r.metadata.hash.empty()) hashes.insert(lowercase(r.metadata.hash));
  }
};

CaseService::CaseService(ServiceConfig config) : config_(std::move(config)) {
  config_.defaults.train.validate();
  std::error_code ec;
  fs::create_directories(config_.data_dir / "cases", ec);
  if (ec) throw Error(ErrorCode::persistence, "cannot create " + config_.data_dir.string() + ": " + ec.message());
  if (config_.known_base_path) shared_base_ = std::make_unique<KnownBase>(KnownBase::open(*config_.known_base_path));
  load_existing();
}

CaseService::~CaseService() = default;

void CaseService::load_existing() {
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(config_.data_dir / "cases"))
    if (entry.is_directory() && fs::exists(entry.path() / kCaseFile)) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());

  for (const auto& dir : dirs) {
    auto state = std::make_shared<CaseState>();
    state->dir = dir;
    try {
      const auto j = ordered_json::parse(read_file(dir / kCaseFile));
      state->handle.case_id = j.at("case_id");
      const auto status = parse_status(j.at("status").get<std::string>());
      const auto created = parse_iso8601_utc(j.at("created_at").get<std::string>());
      const auto format = parse_metadata_format(j.at("metadata_format").get<std::string>());
      if (!status || !created || !format) throw Error(ErrorCode::format, "bad case file " + (dir / kCaseFile).string());
      state->handle.status = *status;
      state->handle.created_at = *created;
      state->handle.report_version = j.at("report_version");
      state->format = *format;
      if (!j.at("source_id").is_null()) state->source_id = j.at("source_id").get<std::string>();
      state->options = options_from_json(j.at("options"));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::persistence, "bad case file under " + dir.string() + ": " + e.what());
    }
    state->load_inputs();
    state->known = KnownBase::open(dir / kKnownFile);
    if (fs::exists(dir / kReportFile)) {
      state->report = parse_report(read_file(dir / kReportFile));
    } else {
      state->handle.status = CaseStatus::ingested;
    }

    int number = 0;
    if (std::sscanf(state->handle.case_id.c_str(), "case-%d", &number) == 1)
      next_case_number_ = std::max(next_case_number_, number + 1);
    cases_[state->handle.case_id] = std::move(state);
  }
}

std::shared_ptr<CaseService::CaseState> CaseService::find(const std::string& case_id) const {
  std::shared_lock lock(cases_mutex_);
  const auto it = cases_.find(case_id);
  if (it == cases_.end()) throw Error(ErrorCode::not_found, "no case " + case_id);
  return it->second;
}

CaseHandle CaseService::create_case(const CreateCaseRequest& request) {
  const AnalysisOptions options = request.options.value_or(config_.defaults);
  options.train.validate();
  if (options.threshold < 0.0) throw Error(ErrorCode::invalid_argument, "threshold must be >= 0");

  // Parse before allocating an id so a rejected upload leaves no trace.
  auto state = std::make_shared<CaseState>();
  state->format = request.metadata_format;
  state->source_id = request.source_id;
  state->options = options;
  {
    std::istringstream timeline(request.timeline);
    std::istringstream metadata(request.metadata);
    try {
      state->data = load_case(timeline, metadata, request.metadata_format, request.source_id, std::nullopt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::format) throw;
      const bool timeline_at_fault = std::string_view(e.what()).starts_with("l2tcsv");
      throw InputError(e.what(), {header_diagnostic(timeline_at_fault ? request.timeline : request.metadata)});
    }
  }
  auto& data = state->data;
  if (data.records.empty()) {
    auto diags = data.metadata_diagnostics;
    throw InputError("metadata upload contains no valid artefact rows", std::move(diags));
  }
  for (const auto& r : data.records)
    if (!r.metadata.hash.empty()) state->hashes.insert(lowercase(r.metadata.hash));

  KnownBase uploaded;
  if (request.known_base) {
    const auto tmp = config_.data_dir / ("upload-" + std::to_string(std::hash<std::string>{}(*request.known_base)) + ".csv");
    write_file(tmp, *request.known_base);
    try {
      uploaded = KnownBase::load(tmp);
    } catch (const Error& e) {
      fs::remove(tmp);
      if (e.code() == ErrorCode::format) throw InputError(std::string("known base upload: ") + e.what(), {});
      throw;
    }
    fs::remove(tmp);
  }

  std::unique_lock lock(cases_mutex_);
  char id[32];
  std::snprintf(id, sizeof id, "case-%04d", next_case_number_++);
  state->handle.case_id = id;
  state->handle.created_at = now();
  state->dir = config_.data_dir / "cases" / id;

  std::error_code ec;
  fs::create_directories(state->dir, ec);
  if (ec) throw Error(ErrorCode::persistence, "cannot create " + state->dir.string() + ": " + ec.message());
  write_file(state->dir / kTimelineFile, request.timeline);
  write_file(state->dir / kMetadataFile, request.metadata);

  // The case base starts as a snapshot of the shared base plus any upload.
  state->known = KnownBase::open(state->dir / kKnownFile);
  if (shared_base_)
    for (auto& e : shared_base_->entries()) state->known.upsert(std::move(e));
  for (auto& e : uploaded.entries()) state->known.upsert(std::move(e));

  state->persist_case_file();
  const auto handle = state->handle;
  cases_[handle.case_id] = std::move(state);
  return handle;
}

CaseOverview CaseService::get_case(const std::string& case_id) const {
  const auto state = find(case_id);
  std::lock_guard lock(state->mutex);
  CaseOverview o;
  o.handle = state->handle;
  o.total = state->data.records.size();
  o.metadata_diagnostics = state->data.metadata_diagnostics.size();
  o.timeline_diagnostics = state->data.timeline_diagnostics.size();
  for (const auto& r : state->data.records) {
    const auto& hash = r.metadata.hash;
    const auto result = is_valid_hash(hash) ? state->known.lookup(hash) : LookupResult::unknown;
    if (result == LookupResult::benign) ++o.known_benign;
    else if (result == LookupResult::illegal) ++o.known_illegal;
    else ++o.unknown;
  }
  return o;
}

std::vector<RankedEntry> CaseService::predictions(const std::string& case_id, std::optional<long long> top_n) const {
  const auto state = find(case_id);
  std::lock_guard lock(state->mutex);
  if (!state->report)
    throw Error(ErrorCode::state, "case " + case_id + " has not been trained; POST /v1/cases/" + case_id + "/retrain first");
  return top_n ? rank_unknown(*state->report, *top_n) : state->report->ranking;
}

LabelAck CaseService::submit_label(const LabelSubmission& s) {
  if (s.decision != "benign" && s.decision != "illegal")
    throw Error(ErrorCode::invalid_argument, "decision must be \"benign\" or \"illegal\"");
  if (!is_valid_hash(s.hash)) throw Error(ErrorCode::invalid_argument, "malformed hash");
  const Label decision = s.decision == "illegal" ? Label::illegal : Label::benign;
  const std::string hash = lowercase(s.hash);

  const auto state = find(s.case_id);
  std::lock_guard lock(state->mutex);
  if (!state->hashes.contains(hash)) throw Error(ErrorCode::not_found, "hash " + hash + " is not in case " + s.case_id);

  const Instant at = now();
  const auto existing = state->known.find(hash);
  const bool changed = !existing || existing->label != decision;
  if (changed) state->known.upsert({hash, decision, s.case_id, at});
  if (shared_base_) {
    const auto shared = shared_base_->find(hash);
    if (!shared || shared->label != decision) shared_base_->upsert({hash, decision, s.case_id, at});
  }

  ordered_json log = {{"recorded_at", format_iso8601_utc(at)},
                      {"hash", hash},
                      {"decision", to_string(decision)},
                      {"investigator", s.investigator},
                      {"changed", changed}};
  append_line(state->dir / kLabelLog, log.dump());

  return {s.case_id, hash, decision, changed, state->known.size()};
}

CaseHandle CaseService::retrain(const std::string& case_id) {
  const auto state = find(case_id);
  std::lock_guard lock(state->mutex);
  ModelFile model;
  auto report = analyze_case(state->data, state->known, state->options, {}, &model);
  save_model(state->dir / kModelFile, model);
  state->handle.status = CaseStatus::trained;
  write_file(state->dir / kReportFile, serialize_report(report));
  state->report = std::move(report);
  state->handle.status = CaseStatus::ranked;
  ++state->handle.report_version;
  state->persist_case_file();
  return state->handle;
}

CaseReport CaseService::report(const std::string& case_id) const {
  const auto state = find(case_id);
  std::lock_guard lock(state->mutex);
  if (!state->report)
    throw Error(ErrorCode::state, "case " + case_id + " has no report yet; POST /v1/cases/" + case_id + "/retrain first");
  return *state->report;
}

std::vector<CaseHandle> CaseService::list_cases() const {
  std::vector<std::shared_ptr<CaseState>> states;
  {
    std::shared_lock lock(cases_mutex_);
    for (const auto& [id, s] : cases_) states.push_back(s);
  }
  std::vector<CaseHandle> out;
  for (const auto& s : states) {
    std::lock_guard lock(s->mutex);
    out.push_back(s->handle);
  }
  return out;
}

}  // namespace triage
