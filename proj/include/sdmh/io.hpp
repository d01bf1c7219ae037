#pragma once

// File formats.
//
// CSV: comma separator, '.' decimal point, one header row, UTF-8, LF line
// endings. Numbers are written in the shortest form that reads back to the
// identical double.
//
// Configuration traces (*.bin): a 16-byte little-endian header
//   char[4] "SDMH", uint32 version (1), uint32 bits per record, uint32 records
// followed by the records, each ceil(bits / 64) little-endian uint64 words.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdmh/inclusion.hpp"
#include "sdmh/linalg.hpp"
#include "sdmh/linsampler.hpp"
#include "sdmh/rjmcmc.hpp"

namespace sdmh {

/// Shortest round-trip representation; integers print without a decimal point.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Parses a CSV file; throws DataError on missing files, ragged rows or
/// quoting it does not understand.
CsvTable read_csv(const std::filesystem::path& path);

/// Numeric matrix with header; throws DataError on non-numeric cells.
struct NumericCsv {
  std::vector<std::string> header;
  MatrixXd values;
};
NumericCsv read_numeric_csv(const std::filesystem::path& path);

void write_numeric_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const MatrixXd& values);

/// Writes atomically enough for our purposes: to a temporary sibling, then renamed.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

void write_config_trace(const std::filesystem::path& path, const ConfigTrace& trace);
ConfigTrace read_config_trace(const std::filesystem::path& path);

/// iteration, dH, flip_acc, swap_acc, lambda, log_post, model_size
/// (swap_acc: -1 not attempted, 0 rejected, 1 accepted).
std::string linear_trace_csv(const ChainTrace& trace);

/// The per-iteration columns of a linear trace, as stored.
struct LinearTraceColumns {
  std::vector<std::uint8_t> d_h;
  std::vector<std::uint8_t> flip_accepted;
  std::vector<int> swap;  // -1, 0, 1
  std::vector<double> lambda;
  std::vector<double> log_post;
  std::vector<std::uint32_t> model_size;
};
LinearTraceColumns linear_trace_columns(const ChainTrace& trace);
LinearTraceColumns read_linear_trace(const std::filesystem::path& path);

/// iteration, beta0_acc, beta0_scale, log_post, then per category j:
/// beta0_j, lambda_j, flip_j, swap_j, size_j.
std::string dm_trace_csv(const RJTrace& trace);
/// iteration, category, predictor, value for every active coefficient.
std::string dm_coefficients_csv(const RJTrace& trace);

struct DMTraceColumns {
  std::size_t categories = 0;
  std::vector<std::uint8_t> beta0_accepted;
  std::vector<double> log_post;
  std::vector<double> beta0;   // T x J
  std::vector<double> lambda;  // T x J
  std::vector<int> flip;       // T x J, -1 / 0 / 1
  std::vector<int> swap;       // T x J
};
DMTraceColumns dm_trace_columns(const RJTrace& trace);
DMTraceColumns read_dm_trace(const std::filesystem::path& path, std::size_t categories);

}  // namespace sdmh
