#pragma once

#include <string>

#include "mkl/harness.hpp"
#include "mkl/problem.hpp"

namespace mkl {

/// Header-free CSV of floats, one row per line. Throws invalid_input on parse
/// failure or ragged rows.
Mat read_csv_matrix(const std::string& path);
Vec read_csv_vector(const std::string& path);

void write_csv_matrix(const std::string& path, const Mat& m);

/// Round-trippable model JSON: {penalty, active_set, coeffs, objective,
/// iterations, converged}.
std::string model_to_json(const MklModel& model);
MklModel model_from_json(const std::string& text);
void write_model_json(const std::string& path, const MklModel& model);
MklModel read_model_json(const std::string& path);

/// Stable-format experiment CSVs (fixed header and column order).
void write_rate_csv(const std::string& path, const RateResult& result);
void write_support_csv(const std::string& path, const SupportResult& result);

std::string rate_summary_json(const RateResult& result);
std::string support_summary_json(const SupportResult& result);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Shortest decimal form that round-trips a double (used everywhere numbers
/// are serialized, so reruns are bit-identical).
std::string format_double(double v);

}  // namespace mkl
