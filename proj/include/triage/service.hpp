#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "triage/error.hpp"
#include "triage/pipeline.hpp"

namespace triage {

enum class CaseStatus { ingested, trained, ranked };

std::string_view to_string(CaseStatus s);

/// Fatal upload problem, with whatever line diagnostics were collected.
class InputError : public Error {
 public:
  InputError(const std::string& message, std::vector<ParseDiagnostic> diagnostics)
      : Error(ErrorCode::format, message), diagnostics_(std::move(diagnostics)) {}
  const std::vector<ParseDiagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<ParseDiagnostic> diagnostics_;
};

struct CaseHandle {
  std::string case_id;
  CaseStatus status = CaseStatus::ingested;
  Instant created_at{};
  int report_version = 0;
};

/// Filter-stage view of a case: what is known right now.
struct CaseOverview {
  CaseHandle handle;
  std::size_t total = 0;
  std::size_t known_benign = 0;
  std::size_t known_illegal = 0;
  std::size_t unknown = 0;
  std::size_t metadata_diagnostics = 0;
  std::size_t timeline_diagnostics = 0;
};

struct CreateCaseRequest {
  std::string timeline;  // l2tcsv text
  std::string metadata;  // artifact CSV or bodyfile text
  MetadataFormat metadata_format = MetadataFormat::automatic;
  std::optional<std::string> known_base;  // extra known-base rows for this case
  std::optional<std::string> source_id;
  std::optional<AnalysisOptions> options;  // server defaults when absent
};

struct LabelSubmission {
  std::string case_id;
  std::string hash;
  std::string decision;  // "benign" | "illegal"
  std::string investigator;
};

struct LabelAck {
  std::string case_id;
  std::string hash;
  Label decision = Label::benign;
  bool changed = false;  // false when the base already held this label
  std::size_t known_size = 0;
};

struct ServiceConfig {
  std::filesystem::path data_dir;
  // Shared base seeded into every new case; confirmations are written back.
  std::optional<std::filesystem::path> known_base_path;
  AnalysisOptions defaults;
};

/// Case-oriented human-in-the-loop workflow. Each case lives in
/// data_dir/cases/<id>/ (inputs, known-base snapshot, label log, model,
/// report) and is reloaded on construction. Calls on one case are
/// serialised; different cases proceed concurrently.
class CaseService {
 public:
  explicit CaseService(ServiceConfig config);
  ~CaseService();

  CaseHandle create_case(const CreateCaseRequest& request);
  CaseOverview get_case(const std::string& case_id) const;
  std::vector<RankedEntry> predictions(const std::string& case_id, std::optional<long long> top_n) const;
  LabelAck submit_label(const LabelSubmission& submission);
  CaseHandle retrain(const std::string& case_id);
  CaseReport report(const std::string& case_id) const;
  std::vector<CaseHandle> list_cases() const;
  const AnalysisOptions& defaults() const { return config_.defaults; }

 private:
  struct CaseState;
  std::shared_ptr<CaseState> find(const std::string& case_id) const;
  void load_existing();

  ServiceConfig config_;
  std::unique_ptr<KnownBase> shared_base_;
  mutable std::shared_mutex cases_mutex_;
  std::map<std::string, std::shared_ptr<CaseState>> cases_;
  int next_case_number_ = 1;
};

}  // namespace triage
