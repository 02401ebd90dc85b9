#include "sparsefactor/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace sparsefactor {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_data_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_data_error("cannot open file for writing: " + path);
  out << text;
  if (!out) throw invalid_data_error("write failed: " + path);
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    size_t pos = 0;
    double v;
    try {
      v = std::stod(field, &pos);
    } catch (const std::exception&) {
      return false;
    }
    while (pos < field.size() &&
           std::isspace(static_cast<unsigned char>(field[pos])))
      ++pos;
    if (pos != field.size()) return false;
    out.push_back(v);
  }
  return !out.empty();
}

std::string format_number(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_data_error("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    if (!parse_row(line, row)) {
      if (first) {
        first = false;
        continue;  // header line
      }
      throw invalid_data_error("malformed CSV at " + path + ":" +
                               std::to_string(lineno));
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw invalid_data_error("ragged CSV at " + path + ":" +
                               std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw invalid_data_error("empty CSV: " + path);
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return m;
}

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ostringstream out;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
  write_file(path, out.str());
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, int cols_hint = -1) {
  if (!rows.is_array() || rows.empty())
    throw invalid_data_error("expected a non-empty array of rows");
  const int r = static_cast<int>(rows.size());
  const int c = cols_hint >= 0 ? cols_hint
                               : static_cast<int>(rows.front().size());
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    const auto& row = rows.at(i);
    if (static_cast<int>(row.size()) != c)
      throw invalid_data_error("ragged matrix in JSON");
    for (int j = 0; j < c; ++j) m(i, j) = row.at(j).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  if (!arr.is_array()) throw invalid_data_error("expected an array");
  Eigen::VectorXd v(arr.size());
  for (int i = 0; i < v.size(); ++i) v(i) = arr.at(i).get<double>();
  return v;
}

json gamma_to_json(double gamma) {
  if (std::isinf(gamma)) return json("inf");
  return json(gamma);
}

double gamma_from_json(const json& g) {
  if (g.is_string()) {
    if (g.get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    throw invalid_data_error("bad gamma value in JSON");
  }
  return g.get<double>();
}

}  // namespace

std::string model_to_json(const FactorModel& model) {
  ordered_json doc;
  doc["p"] = model.p();
  doc["m"] = model.m();
  doc["lambda"] = matrix_to_json(model.Lambda);
  doc["psi"] = vector_to_json(model.psi);
  return doc.dump(2) + "\n";
}

FactorModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw invalid_data_error(std::string("bad model JSON: ") + e.what());
  }
  FactorModel model;
  try {
    model.Lambda = matrix_from_json(doc.at("lambda"));
    model.psi = vector_from_json(doc.at("psi"));
  } catch (const json::exception& e) {
    throw invalid_data_error(std::string("bad model JSON: ") + e.what());
  }
  model.validate();
  return model;
}

namespace {

ordered_json cell_to_json(const PathCell& cell) {
  ordered_json c;
  c["gamma"] = gamma_to_json(cell.gamma);
  c["rho"] = cell.rho;
  c["rho_star"] = cell.rho_star;
  c["loglik"] = cell.fit.objective.loglik;
  c["penalized"] = cell.fit.objective.total;
  c["df"] = cell.df;
  c["aic"] = cell.criteria.aic;
  c["bic"] = cell.criteria.bic;
  c["caic"] = cell.criteria.caic;
  c["lambda"] = matrix_to_json(cell.fit.model.Lambda);
  c["psi"] = vector_to_json(cell.fit.model.psi);
  c["converged"] = cell.fit.converged;
  return c;
}

}  // namespace

std::string path_to_json(const PathResult& path,
                         const std::pair<int, int>* best,
                         const char* criterion_name,
                         double elapsed_seconds) {
  ordered_json doc;
  ordered_json grid;
  grid["rho"] = path.grid.rhos;
  json gammas = json::array();
  for (double g : path.grid.gammas) gammas.push_back(gamma_to_json(g));
  grid["gamma"] = std::move(gammas);
  doc["grid"] = std::move(grid);

  ordered_json cells = ordered_json::array();
  for (int t = 0; t < path.grid.T(); ++t)
    for (int k = 0; k < path.grid.K(); ++k)
      cells.push_back(cell_to_json(path.cells[t][k]));
  doc["cells"] = std::move(cells);

  if (best != nullptr) {
    ordered_json b;
    b["t"] = best->first;
    b["k"] = best->second;
    b["gamma"] = gamma_to_json(path.grid.gammas[best->first]);
    b["rho"] = path.grid.rhos[best->second];
    if (criterion_name != nullptr) b["criterion"] = criterion_name;
    doc["best"] = std::move(b);
  }

  ordered_json meta;
  meta["seed"] = path.seed;
  ordered_json opts;
  opts["eta"] = path.options.eta;
  opts["em_tol"] = path.options.em_tol;
  opts["em_max_iter"] = path.options.em_max_iter;
  opts["cd_tol"] = path.options.cd_tol;
  opts["cd_max_sweeps"] = path.options.cd_max_sweeps;
  opts["psi_floor"] = path.options.psi_floor;
  meta["options"] = std::move(opts);
  meta["version"] = kVersion;
  if (elapsed_seconds >= 0.0) {
    ordered_json timings;
    timings["elapsed_seconds"] = elapsed_seconds;
    meta["timings"] = std::move(timings);
  }
  doc["meta"] = std::move(meta);
  return doc.dump(2) + "\n";
}

PathResult path_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw invalid_data_error(std::string("bad path JSON: ") + e.what());
  }
  PathResult path;
  try {
    const json& grid = doc.at("grid");
    path.grid.rhos = grid.at("rho").get<std::vector<double>>();
    for (const auto& g : grid.at("gamma")) path.grid.gammas.push_back(gamma_from_json(g));
    const int T = path.grid.T();
    const int K = path.grid.K();
    const json& cells = doc.at("cells");
    if (static_cast<int>(cells.size()) != T * K)
      throw invalid_data_error("path JSON cell count does not match grid");
    path.cells.assign(T, std::vector<PathCell>(K));
    for (int t = 0; t < T; ++t) {
      for (int k = 0; k < K; ++k) {
        const json& c = cells.at(t * K + k);
        PathCell& cell = path.cells[t][k];
        cell.gamma = gamma_from_json(c.at("gamma"));
        cell.rho = c.at("rho").get<double>();
        cell.rho_star = c.at("rho_star").get<double>();
        cell.df = c.at("df").get<int>();
        cell.criteria.df = cell.df;
        cell.criteria.aic = c.at("aic").get<double>();
        cell.criteria.bic = c.at("bic").get<double>();
        cell.criteria.caic = c.at("caic").get<double>();
        cell.fit.objective.loglik = c.at("loglik").get<double>();
        cell.fit.objective.total = c.at("penalized").get<double>();
        cell.fit.converged = c.at("converged").get<bool>();
        cell.fit.model.Lambda = matrix_from_json(c.at("lambda"));
        cell.fit.model.psi = vector_from_json(c.at("psi"));
      }
    }
    if (doc.contains("meta")) {
      const json& meta = doc.at("meta");
      if (meta.contains("seed")) path.seed = meta.at("seed").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw invalid_data_error(std::string("bad path JSON: ") + e.what());
  }
  return path;
}

void write_path_csv(const std::string& path, const PathResult& result) {
  std::ostringstream out;
  out << "gamma,rho,i,j,lambda\n";
  for (int t = 0; t < result.grid.T(); ++t) {
    const double gamma = result.grid.gammas[t];
    const std::string gname =
        std::isinf(gamma) ? std::string("inf") : format_number(gamma);
    for (int k = 0; k < result.grid.K(); ++k) {
      const PathCell& cell = result.cells[t][k];
      for (int i = 0; i < cell.fit.model.p(); ++i)
        for (int j = 0; j < cell.fit.model.m(); ++j)
          out << gname << ',' << format_number(cell.rho) << ',' << i << ','
              << j << ',' << format_number(cell.fit.model.Lambda(i, j))
              << '\n';
    }
  }
  write_file(path, out.str());
}

std::string report_to_json(const StudyReport& report) {
  ordered_json doc;
  doc["model"] = report.model_name;
  doc["N"] = report.N;
  doc["replications"] = report.replications;
  doc["seed"] = report.seed;
  ordered_json rows = ordered_json::array();
  for (const StudyRow& row : report.rows) {
    ordered_json r;
    r["method"] = row.method;
    r["criterion"] = row.criterion;
    r["mse_lambda"] = row.metrics.mse_lambda;
    r["mse_psi"] = row.metrics.mse_psi;
    r["tpr"] = row.metrics.tpr;
    r["tnr"] = row.metrics.tnr;
    r["se_mse_lambda"] = row.standard_error.mse_lambda;
    r["se_mse_psi"] = row.standard_error.mse_psi;
    r["se_tpr"] = row.standard_error.tpr;
    r["se_tnr"] = row.standard_error.tnr;
    r["replications_used"] = row.replications_used;
    r["failures"] = row.failures;
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

void write_report_csv(const std::string& path, const StudyReport& report) {
  std::ostringstream out;
  out << "method,criterion,mse_lambda,mse_psi,tpr,tnr,"
         "se_mse_lambda,se_mse_psi,se_tpr,se_tnr,replications_used,failures\n";
  for (const StudyRow& row : report.rows) {
    out << row.method << ',' << row.criterion << ','
        << format_number(row.metrics.mse_lambda) << ','
        << format_number(row.metrics.mse_psi) << ','
        << format_number(row.metrics.tpr) << ','
        << format_number(row.metrics.tnr) << ','
        << format_number(row.standard_error.mse_lambda) << ','
        << format_number(row.standard_error.mse_psi) << ','
        << format_number(row.standard_error.tpr) << ','
        << format_number(row.standard_error.tnr) << ','
        << row.replications_used << ',' << row.failures << '\n';
  }
  write_file(path, out.str());
}

}  // namespace sparsefactor
