#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ppa/basis_adaptation.hpp"
#include "ppa/density.hpp"
#include "ppa/error.hpp"
#include "ppa/input_transforms.hpp"
#include "ppa/pce.hpp"
#include "ppa/ppr.hpp"
#include "ppa/pursuit_adaptation.hpp"

namespace ppa::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// %.17g: enough digits to round-trip any double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;  // rows × header.size()

  Eigen::Index column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<Eigen::Index>(j);
    return -1;
  }

  Eigen::Index require_column(const std::string& name) const {
    const auto j = column(name);
    require(j >= 0, ErrorCode::Parse, "missing column '" + name + "'");
    return j;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Header row plus numeric rows; comma separated, '.' decimal. Non-numeric or non-finite
/// cells are reported with their 1-based line number.
inline CsvTable parse_csv(const std::string& text, const std::string& origin = "<csv>") {
  std::istringstream in(text);
  std::string line;
  CsvTable table;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    table.header = split_csv_line(line);
    break;
  }
  require(!table.header.empty(), ErrorCode::Parse, origin + ": empty file");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    require(cells.size() == table.header.size(), ErrorCode::Parse,
            origin + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(table.header.size()) + " fields, got " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(c.c_str(), &end);
      // ERANGE with a small result is a subnormal, which %.17g output can legitimately contain.
      const bool range_ok = errno == 0 || (errno == ERANGE && std::abs(v) < 1.0);
      require(!c.empty() && end == c.c_str() + c.size() && range_ok, ErrorCode::Parse,
              origin + ":" + std::to_string(line_no) + ": cannot parse '" + c + "'");
      require(std::isfinite(v), ErrorCode::Parse,
              origin + ":" + std::to_string(line_no) + ": non-finite value '" + c + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return table;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text(path), path.string());
}

inline std::string format_csv(const std::vector<std::string>& header, const Matrix& values) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ',';
    out += header[j];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out += ',';
      out += format_double(values(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const Matrix& values) {
  require(static_cast<Eigen::Index>(header.size()) == values.cols(), ErrorCode::DimensionMismatch,
          "CSV header/column count mismatch");
  write_text(path, format_csv(header, values));
}

inline std::vector<std::string> dataset_header(int d, bool with_y = true) {
  std::vector<std::string> h;
  for (int i = 1; i <= d; ++i) h.push_back("xi_" + std::to_string(i));
  if (with_y) h.push_back("y");
  return h;
}

inline void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  Matrix m(data.size(), data.dim() + 1);
  m.leftCols(data.dim()) = data.inputs;
  m.col(data.dim()) = data.outputs;
  write_csv(path, dataset_header(data.dim()), m);
}

/// Inputs (xi_1..xi_d) and, when present, the y column.
struct PointTable {
  Matrix inputs;
  std::optional<Vector> outputs;
};

inline PointTable read_points(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  require(t.values.rows() >= 1, ErrorCode::Parse, path.string() + ": no data rows");
  int d = 0;
  while (t.column("xi_" + std::to_string(d + 1)) >= 0) ++d;
  require(d >= 1, ErrorCode::Parse, path.string() + ": missing column 'xi_1'");
  PointTable out;
  out.inputs.resize(t.values.rows(), d);
  for (int i = 0; i < d; ++i) out.inputs.col(i) = t.values.col(t.column("xi_" + std::to_string(i + 1)));
  if (const auto yj = t.column("y"); yj >= 0) out.outputs = t.values.col(yj);
  return out;
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  PointTable t = read_points(path);
  require(t.outputs.has_value(), ErrorCode::Parse, path.string() + ": missing column 'y'");
  return Dataset(std::move(t.inputs), std::move(*t.outputs));
}

inline void write_density(const std::filesystem::path& path, const Vector& grid, const Vector& values) {
  Matrix m(grid.size(), 2);
  m.col(0) = grid;
  m.col(1) = values;
  write_csv(path, {"grid", "value"}, m);
}

inline DensityEstimate read_density(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  DensityEstimate out;
  out.grid = t.values.col(t.require_column("grid"));
  out.values = t.values.col(t.require_column("value"));
  return out;
}

// ---------------------------------------------------------------------------------------
// Models

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

inline Vector vector_from_json(const json& j) {
  require(j.is_array(), ErrorCode::Parse, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline Matrix matrix_from_json(const json& j) {
  require(j.is_array() && !j.empty(), ErrorCode::Parse, "expected a non-empty array of rows");
  const auto cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].size() == cols, ErrorCode::Parse, "ragged matrix rows");
    m.row(static_cast<Eigen::Index>(i)) = vector_from_json(j[i]).transpose();
  }
  return m;
}

inline json to_json(const InputSpec& spec) {
  json a = json::array();
  for (const auto& m : spec.marginals) {
    a.push_back({{"kind", to_string(m.kind)},
                 {"params", {m.first, m.second}},
                 {"description", m.description},
                 {"units", m.units}});
  }
  return a;
}

inline InputSpec input_spec_from_json(const json& j) {
  InputSpec spec;
  for (const auto& m : j) {
    MarginalSpec ms;
    ms.kind = parse_marginal_kind(m.at("kind").get<std::string>());
    ms.first = m.at("params").at(0).get<double>();
    ms.second = m.at("params").at(1).get<double>();
    ms.description = m.value("description", "");
    ms.units = m.value("units", "");
    ms.validate();
    spec.marginals.push_back(std::move(ms));
  }
  spec.validate();
  return spec;
}

inline json index_list(const MultiIndexBasis& basis) {
  json a = json::array();
  for (const auto& alpha : basis.indices()) a.push_back(alpha);
  return a;
}

inline MultiIndexBasis basis_from_json(const json& j, int d, int p) {
  std::vector<MultiIndex> idx;
  for (const auto& a : j.at("index_list")) idx.push_back(a.get<MultiIndex>());
  return MultiIndexBasis(d, p, std::move(idx));
}

/// A fitted surrogate of any supported kind, with the provenance stored beside it.
struct StoredModel {
  std::variant<PceModel, PpaModel, PprModel> model;
  std::string kind;          // "pce", "adaptation", "ppa", "ppr"
  json input_spec = nullptr;  // benchmark name string, marginal list, or null
  std::uint64_t seed = 0;
  json fit = json::object();

  int input_dim() const {
    return std::visit(
        [](const auto& m) -> int {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, PceModel>) return m.input_dim;
          else if constexpr (std::is_same_v<T, PpaModel>) return m.input_dim();
          else return m.input_dim;
        },
        model);
  }

  Vector predict(const Matrix& points) const {
    return std::visit(
        [&](const auto& m) -> Vector {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, PceModel>) return evaluate(m, points);
          else if constexpr (std::is_same_v<T, PpaModel>) return ppa_predict(m, points);
          else return ppr_predict(m, points);
        },
        model);
  }
};

inline json pce_fields(const PceModel& m) {
  json j;
  j["d"] = m.input_dim;
  j["r"] = m.basis.dim();
  j["p"] = m.basis.degree();
  j["index_list"] = index_list(m.basis);
  j["coefficients"] = to_json(m.coefficients);
  if (m.projection) j["projection"] = to_json(m.projection->rows());
  return j;
}

inline PceModel pce_from_fields(const json& j) {
  const int r = j.at("r").get<int>();
  const int p = j.at("p").get<int>();
  MultiIndexBasis basis = basis_from_json(j, r, p);
  std::optional<ProjectionStack> proj;
  if (j.contains("projection")) proj = ProjectionStack(matrix_from_json(j.at("projection")));
  PceModel m(std::move(basis), vector_from_json(j.at("coefficients")), std::move(proj));
  require(m.input_dim == j.at("d").get<int>(), ErrorCode::Parse, "model dimension mismatch");
  return m;
}

inline json to_json(const StoredModel& sm) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = sm.kind;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PceModel>) {
          j.update(pce_fields(m));
        } else if constexpr (std::is_same_v<T, PpaModel>) {
          j.update(pce_fields(m.g));
          json trace = json::array();
          for (const auto& st : m.fit_trace) {
            trace.push_back({{"r", st.r}, {"initial_rss", st.initial_rss}, {"rss", st.rss},
                             {"loo", st.loo}, {"inner_rss", st.inner_rss}, {"accepted", st.accepted}});
          }
          j["fit_trace"] = trace;
          j["stopped_reason"] = m.stopped_reason;
        } else {
          j["d"] = m.input_dim;
          j["p"] = m.p;
          j["index_list"] = index_list(MultiIndexBasis(1, m.p));
          j["mean"] = m.mean;
          json stages = json::array();
          for (const auto& s : m.stages)
            stages.push_back({{"direction", to_json(s.direction)},
                              {"coefficients", to_json(s.smooth.coefficients)}});
          j["stages"] = stages;
          j["fit_trace"] = m.fit_trace;
          j["loo_trace"] = m.loo_trace;
          j["stopped_reason"] = m.stopped_reason;
        }
      },
      sm.model);
  j["input_spec"] = sm.input_spec;
  j["seed"] = sm.seed;
  j["fit"] = sm.fit;
  return j;
}

inline StoredModel model_from_json(const json& j) {
  require(j.value("format_version", 0) == kFormatVersion, ErrorCode::Parse,
          "unsupported model format_version");
  StoredModel sm;
  sm.kind = j.at("kind").get<std::string>();
  sm.input_spec = j.value("input_spec", json(nullptr));
  sm.seed = j.value("seed", std::uint64_t{0});
  sm.fit = j.value("fit", json::object());
  if (sm.kind == "pce" || sm.kind == "adaptation") {
    sm.model = pce_from_fields(j);
  } else if (sm.kind == "ppa") {
    PpaModel m;
    m.g = pce_from_fields(j);
    require(m.g.projection.has_value(), ErrorCode::Parse, "ppa model needs projection rows");
    m.stack = *m.g.projection;
    m.seed = sm.seed;
    m.stopped_reason = j.value("stopped_reason", "");
    for (const auto& st : j.value("fit_trace", json::array())) {
      PpaStageTrace t;
      t.r = st.at("r").get<int>();
      t.initial_rss = st.at("initial_rss").get<double>();
      t.rss = st.at("rss").get<double>();
      t.loo = st.value("loo", t.rss);
      t.inner_rss = st.at("inner_rss").get<std::vector<double>>();
      t.accepted = st.at("accepted").get<bool>();
      m.fit_trace.push_back(std::move(t));
    }
    sm.model = std::move(m);
  } else if (sm.kind == "ppr") {
    PprModel m;
    m.input_dim = j.at("d").get<int>();
    m.p = j.at("p").get<int>();
    m.mean = j.at("mean").get<double>();
    m.seed = sm.seed;
    const MultiIndexBasis line = basis_from_json(j, 1, m.p);
    for (const auto& s : j.at("stages")) {
      Vector c = vector_from_json(s.at("direction"));
      require(c.size() == m.input_dim, ErrorCode::Parse, "stage direction length mismatch");
      m.stages.push_back({std::move(c), PceModel(line, vector_from_json(s.at("coefficients")))});
    }
    m.fit_trace = j.value("fit_trace", std::vector<double>{});
    m.loo_trace = j.value("loo_trace", std::vector<double>{});
    m.stopped_reason = j.value("stopped_reason", "");
    sm.model = std::move(m);
  } else {
    fail(ErrorCode::Parse, "unknown model kind '" + sm.kind + "'");
  }
  return sm;
}

inline std::string serialize_model(const StoredModel& sm) { return to_json(sm).dump(2) + "\n"; }

inline void save_model(const std::filesystem::path& path, const StoredModel& sm) {
  write_text(path, serialize_model(sm));
}

inline StoredModel load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace ppa::io
