#include "mkl/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mkl {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  // %.17g always round-trips; shorten when a lower precision already does.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write file: " + path);
  out << text;
  if (!out) throw io_error("write failed: " + path);
}

Mat read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc())
        throw invalid_input("bad number in " + path + ": '" + line + "'");
      row.push_back(v);
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end) {
        if (*p != ',') throw invalid_input("expected ',' in " + path);
        ++p;
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw invalid_input("ragged CSV rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw invalid_input("empty CSV: " + path);
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

Vec read_csv_vector(const std::string& path) {
  Mat m = read_csv_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw invalid_input("expected a single-column CSV: " + path);
}

void write_csv_matrix(const std::string& path, const Mat& m) {
  std::ostringstream out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::string model_to_json(const MklModel& model) {
  json j;
  j["penalty"] = {{"lambda1", model.penalty.lambda1}, {"lambda2", model.penalty.lambda2}};
  j["active_set"] = model.active_set;
  json coeffs = json::array();
  for (const auto& c : model.coeffs) {
    json v = json::array();
    for (Index i = 0; i < c.size(); ++i) v.push_back(c[i]);
    coeffs.push_back(std::move(v));
  }
  j["coeffs"] = std::move(coeffs);
  j["objective"] = model.objective;
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  return j.dump(2) + "\n";
}

MklModel model_from_json(const std::string& text) {
  json j = json::parse(text);
  MklModel model;
  model.penalty.lambda1 = j.at("penalty").at("lambda1").get<double>();
  model.penalty.lambda2 = j.at("penalty").at("lambda2").get<double>();
  model.active_set = j.at("active_set").get<std::vector<int>>();
  for (const auto& v : j.at("coeffs")) {
    Vec c(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) c[static_cast<Index>(i)] = v[i].get<double>();
    model.coeffs.push_back(std::move(c));
  }
  model.objective = j.at("objective").get<double>();
  model.iterations = j.at("iterations").get<int>();
  model.converged = j.at("converged").get<bool>();
  return model;
}

void write_model_json(const std::string& path, const MklModel& model) {
  write_text_file(path, model_to_json(model));
}

MklModel read_model_json(const std::string& path) {
  return model_from_json(read_text_file(path));
}

void write_rate_csv(const std::string& path, const RateResult& result) {
  std::ostringstream out;
  out << "method,n,trial,error,lambda1,lambda2,converged\n";
  for (const auto& r : result.rows) {
    out << r.method << ',' << r.n << ',' << r.trial << ',' << format_double(r.error)
        << ',' << format_double(r.lambda1) << ',' << format_double(r.lambda2) << ','
        << (r.converged ? 1 : 0) << '\n';
  }
  write_text_file(path, out.str());
}

void write_support_csv(const std::string& path, const SupportResult& result) {
  std::ostringstream out;
  out << "n,trial,recovered,max_irrep_score\n";
  for (const auto& r : result.rows) {
    out << r.n << ',' << r.trial << ',' << (r.recovered ? 1 : 0) << ','
        << format_double(r.max_irrep_score) << '\n';
  }
  write_text_file(path, out.str());
}

std::string rate_summary_json(const RateResult& result) {
  json j;
  j["n_grid"] = result.grid;
  for (const auto& [method, med] : result.median_errors) j["median_errors"][method] = med;
  for (const auto& [method, v] : result.fitted_slope) j["fitted_slopes"][method] = v;
  for (const auto& [method, v] : result.slope_stderr) j["slope_stderr"][method] = v;
  for (const auto& [method, v] : result.predicted_slope) j["predicted_slopes"][method] = v;
  j["median_s_hat"] = result.median_s_hat;
  j["excluded"] = result.excluded;
  j["total"] = result.total;
  return j.dump(2) + "\n";
}

std::string support_summary_json(const SupportResult& result) {
  json j;
  j["n_grid"] = result.grid;
  j["recovery_frequency"] = result.recovery_frequency;
  j["median_irrep_score"] = result.median_score;
  return j.dump(2) + "\n";
}

}  // namespace mkl
