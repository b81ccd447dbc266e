#include "triage/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "triage/error.hpp"

namespace triage {
namespace {

using nlohmann::json;

json schema_json(const FeatureSchema& s) {
  json ranges = json::array();
  for (const auto& r : s.minmax_ranges) ranges.push_back({r.min, r.max});
  return {{"extension_vocabulary", s.extension_vocabulary},
          {"reference_time", s.reference_time.time_since_epoch().count()},
          {"minmax_ranges", ranges},
          {"fingerprint", s.fingerprint()}};
}

FeatureSchema schema_from(const json& j) {
  FeatureSchema s;
  s.extension_vocabulary = j.at("extension_vocabulary").get<std::vector<std::string>>();
  s.reference_time = Instant{seconds{j.at("reference_time").get<std::int64_t>()}};
  const auto& ranges = j.at("minmax_ranges");
  if (ranges.size() != kNumericFeatureCount || s.extension_vocabulary.empty())
    throw Error(ErrorCode::format, "schema: wrong shape");
  for (std::size_t i = 0; i < kNumericFeatureCount; ++i)
    s.minmax_ranges[i] = {ranges[i].at(0).get<double>(), ranges[i].at(1).get<double>()};
  if (j.at("fingerprint").get<std::string>() != s.fingerprint())
    throw Error(ErrorCode::format, "schema: fingerprint mismatch");
  return s;
}

json params_json(const Model& m) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TreeModel>) {
          json nodes = json::array();
          for (const auto& n : p.nodes)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.positive_fraction, n.samples});
          return {{"nodes", nodes}};
        } else if constexpr (std::is_same_v<T, GaussianNbModel>) {
          return {{"priors", p.priors}, {"means", p.means}, {"variances", p.variances}, {"var_floor", p.var_floor}};
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          return {{"k", p.k}, {"rows", p.rows}, {"labels", p.labels}};
        } else {
          return {{"weights", p.weights}, {"bias", p.bias}};
        }
      },
      m.params);
}

Model model_from(const json& j) {
  Model m;
  auto algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  if (!algorithm) throw Error(ErrorCode::format, "model: unknown algorithm tag");
  m.algorithm = *algorithm;
  m.width = j.at("width").get<std::size_t>();
  const auto& p = j.at("parameters");
  switch (m.algorithm) {
    case Algorithm::tree: {
      TreeModel t;
      for (const auto& n : p.at("nodes"))
        t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                           n.at(4).get<double>(), n.at(5).get<std::size_t>()});
      if (t.nodes.empty()) throw Error(ErrorCode::format, "model: empty tree");
      for (const auto& n : t.nodes) {
        const int count = static_cast<int>(t.nodes.size());
        if (!n.is_leaf() && (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count ||
                             n.feature >= static_cast<int>(m.width)))
          throw Error(ErrorCode::format, "model: tree node out of range");
      }
      m.params = std::move(t);
      break;
    }
    case Algorithm::gnb: {
      GaussianNbModel g;
      g.priors = p.at("priors").get<std::array<double, 2>>();
      g.means = p.at("means").get<std::array<std::vector<double>, 2>>();
      g.variances = p.at("variances").get<std::array<std::vector<double>, 2>>();
      g.var_floor = p.at("var_floor").get<double>();
      m.params = std::move(g);
      break;
    }
    case Algorithm::knn: {
      KnnModel k;
      k.k = p.at("k").get<int>();
      k.rows = p.at("rows").get<Matrix>();
      k.labels = p.at("labels").get<std::vector<int>>();
      if (k.rows.size() != k.labels.size() || k.rows.empty()) throw Error(ErrorCode::format, "model: bad knn payload");
      m.params = std::move(k);
      break;
    }
    case Algorithm::svm:
    case Algorithm::logreg: {
      LinearModel l;
      l.weights = p.at("weights").get<std::vector<double>>();
      l.bias = p.at("bias").get<double>();
      if (l.weights.size() != m.width) throw Error(ErrorCode::format, "model: weight width mismatch");
      m.params = std::move(l);
      break;
    }
  }
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::persistence, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::persistence, "cannot write " + path.string());
}

}  // namespace

std::string serialize_schema(const FeatureSchema& schema) { return schema_json(schema).dump(2) + "\n"; }

FeatureSchema parse_schema(std::string_view text) {
  try {
    return schema_from(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, std::string("schema: ") + e.what());
  }
}

std::string serialize_model(const ModelFile& file) {
  json j = {{"format", "triage-model"},
            {"version", kModelFormatVersion},
            {"algorithm", to_string(file.model.algorithm)},
            {"width", file.model.width},
            {"schema_fingerprint", file.schema.fingerprint()},
            {"schema", schema_json(file.schema)},
            {"parameters", params_json(file.model)}};
  return j.dump(1) + "\n";
}

ModelFile parse_model(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "triage-model")
      throw Error(ErrorCode::format, "model: not a triage model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw Error(ErrorCode::format, "model: unsupported version " + j.at("version").dump());
    ModelFile file;
    file.schema = schema_from(j.at("schema"));
    if (j.at("schema_fingerprint").get<std::string>() != file.schema.fingerprint())
      throw Error(ErrorCode::format, "model: schema fingerprint mismatch");
    file.model = model_from(j);
    if (file.model.width != file.schema.width())
      throw Error(ErrorCode::format, "model: width does not match schema");
    return file;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, std::string("model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& file) { write_file(path, serialize_model(file)); }

ModelFile load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace triage
