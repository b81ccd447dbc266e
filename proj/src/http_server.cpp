#include "triage/http_server.hpp"

#include <charconv>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace triage {
namespace {

using nlohmann::ordered_json;

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", kJson);
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message,
                const std::vector<ParseDiagnostic>* diagnostics = nullptr) {
  ordered_json err = {{"code", to_string(code)}, {"message", message}};
  if (diagnostics) {
    ordered_json list = ordered_json::array();
    for (const auto& d : *diagnostics)
      list.push_back({{"line", d.line_number}, {"reason", to_string(d.reason)}, {"raw", d.raw_line}});
    err["diagnostics"] = list;
  }
  send(res, http_status(code), {{"error", err}});
}

ordered_json handle_json(const CaseHandle& h) {
  return {{"case_id", h.case_id},
          {"status", to_string(h.status)},
          {"created_at", format_iso8601_utc(h.created_at)},
          {"report_version", h.report_version}};
}

ordered_json ranking_json(const std::vector<RankedEntry>& entries) {
  ordered_json out = ordered_json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    out.push_back({{"rank", i + 1},
                   {"source_id", e.key.source_id},
                   {"inode", e.key.inode},
                   {"path", e.path},
                   {"hash", e.hash},
                   {"score", e.score},
                   {"predicted", e.predicted}});
  }
  return out;
}

std::string form_field(const httplib::Request& req, const std::string& name) {
  return req.get_file_value(name).content;
}

template <class T>
T parse_number(const std::string& text, const char* what) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw Error(ErrorCode::invalid_argument, std::string("bad ") + what + ": " + text);
  return value;
}

// Runs a handler, translating library errors into the JSON error payload.
template <class F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const InputError& e) {
    send_error(res, e.code(), e.what(), &e.diagnostics());
  } catch (const Error& e) {
    send_error(res, e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, ErrorCode::invalid_argument, std::string("malformed JSON body: ") + e.what());
  }
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::invalid_window:
    case ErrorCode::stratification:
    case ErrorCode::undefined_recall:
    case ErrorCode::generation: return 400;
    case ErrorCode::format: return 422;
    case ErrorCode::not_found: return 404;
    case ErrorCode::state:
    case ErrorCode::degenerate_class: return 409;
    case ErrorCode::persistence: return 500;
  }
  return 500;
}

struct HttpServer::Impl {
  CaseService& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(CaseService& s) : service(s) { routes(); }

  void routes() {
    server.Post("/v1/cases", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        if (!req.is_multipart_form_data())
          throw Error(ErrorCode::invalid_argument, "expected multipart/form-data with timeline and metadata parts");
        if (!req.has_file("timeline") || !req.has_file("metadata"))
          throw Error(ErrorCode::invalid_argument, "both timeline and metadata parts are required");
        CreateCaseRequest c;
        c.timeline = form_field(req, "timeline");
        c.metadata = form_field(req, "metadata");
        if (req.has_file("known_base")) c.known_base = form_field(req, "known_base");
        if (req.has_file("source_id")) c.source_id = form_field(req, "source_id");
        if (req.has_file("metadata_format")) {
          const auto f = parse_metadata_format(form_field(req, "metadata_format"));
          if (!f) throw Error(ErrorCode::invalid_argument, "metadata_format must be auto, csv or bodyfile");
          c.metadata_format = *f;
        }
        if (req.has_file("algorithm") || req.has_file("seed") || req.has_file("threshold")) {
          AnalysisOptions o = service.defaults();
          if (req.has_file("algorithm")) {
            const auto a = parse_algorithm(form_field(req, "algorithm"));
            if (!a) throw Error(ErrorCode::invalid_argument, "unknown algorithm " + form_field(req, "algorithm"));
            o.train.algorithm = *a;
          }
          if (req.has_file("seed")) o.seed = parse_number<std::uint64_t>(form_field(req, "seed"), "seed");
          if (req.has_file("threshold")) o.threshold = std::stod(form_field(req, "threshold"));
          c.options = o;
        }
        send(res, 201, handle_json(service.create_case(c)));
      });
    });

    server.Get("/v1/cases", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        ordered_json list = ordered_json::array();
        for (const auto& h : service.list_cases()) list.push_back(handle_json(h));
        send(res, 200, {{"cases", list}});
      });
    });

    server.Get(R"(/v1/cases/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto o = service.get_case(req.matches[1]);
        auto body = handle_json(o.handle);
        body["counts"] = {{"total", o.total},
                          {"known_benign", o.known_benign},
                          {"known_illegal", o.known_illegal},
                          {"unknown", o.unknown},
                          {"metadata_diagnostics", o.metadata_diagnostics},
                          {"timeline_diagnostics", o.timeline_diagnostics}};
        send(res, 200, body);
      });
    });

    server.Get(R"(/v1/cases/([^/]+)/predictions)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::optional<long long> top_n;
        if (req.has_param("top_n")) top_n = parse_number<long long>(req.get_param_value("top_n"), "top_n");
        const std::string id = req.matches[1];
        const auto entries = service.predictions(id, top_n);
        send(res, 200, {{"case_id", id}, {"predictions", ranking_json(entries)}});
      });
    });

    server.Post(R"(/v1/cases/([^/]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = ordered_json::parse(req.body);
        LabelSubmission s;
        s.case_id = req.matches[1];
        s.hash = body.at("hash").get<std::string>();
        s.decision = body.at("decision").get<std::string>();
        s.investigator = body.value("investigator", std::string{});
        const auto ack = service.submit_label(s);
        send(res, 200,
             {{"accepted", true},
              {"case_id", ack.case_id},
              {"hash", ack.hash},
              {"decision", to_string(ack.decision)},
              {"changed", ack.changed},
              {"known_size", ack.known_size}});
      });
    });

    server.Post(R"(/v1/cases/([^/]+)/retrain)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, handle_json(service.retrain(req.matches[1]))); });
    });

    server.Get(R"(/v1/cases/([^/]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto report = service.report(req.matches[1]);
        res.status = 200;
        res.set_content(serialize_report(report), kJson);
      });
    });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404) send_error(res, ErrorCode::not_found, "no such endpoint");
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string message = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      send(res, 500, {{"error", {{"code", "internal"}, {"message", message}}}});
    });
  }
};

HttpServer::HttpServer(CaseService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::persistence, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw Error(ErrorCode::persistence, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace triage
