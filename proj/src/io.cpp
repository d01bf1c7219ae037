#include "sdmh/io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "sdmh/errors.hpp"

namespace sdmh {

namespace fs = std::filesystem;
using Index = Eigen::Index;

namespace {

constexpr char kMagic[4] = {'S', 'D', 'M', 'H'};
constexpr std::uint32_t kVersion = 1;

double parse_double(const std::string& cell, const fs::path& path, std::size_t line) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
  if (b < e && *b == '+') ++b;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || b == e) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": not a number: '" + cell + "'");
  }
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  out.push_back(std::move(cur));
  return out;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

int status_code(MoveStatus s) {
  switch (s) {
    case MoveStatus::NotAttempted: return -1;
    case MoveStatus::Rejected: return 0;
    case MoveStatus::Accepted: return 1;
  }
  return -1;
}

int status_code(SwapStatus s) {
  switch (s) {
    case SwapStatus::NotAttempted: return -1;
    case SwapStatus::Rejected: return 0;
    case SwapStatus::Accepted: return 1;
  }
  return -1;
}

int parse_status(const std::string& cell, const fs::path& path, std::size_t line) {
  const double v = parse_double(cell, path, line);
  if (v != -1.0 && v != 0.0 && v != 1.0) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": bad status '" + cell + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw DomainError("number formatting failed");
  return std::string(buf, ptr);
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    try {
      cells = split_line(line);
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw DataError(path.string() + ": empty file");
  return t;
}

NumericCsv read_numeric_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  NumericCsv out;
  out.header = t.header;
  out.values.resize(static_cast<Index>(t.rows.size()), static_cast<Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      out.values(static_cast<Index>(r), static_cast<Index>(c)) =
          parse_double(t.rows[r][c], path, r + 2);
    }
  }
  return out;
}

void write_numeric_csv(const fs::path& path, const std::vector<std::string>& header,
                       const MatrixXd& values) {
  if (static_cast<Index>(header.size()) != values.cols()) {
    throw DomainError("header and matrix widths differ");
  }
  std::string s;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) s += ',';
    s += header[c];
  }
  s += '\n';
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c) s += ',';
      s += format_double(values(r, c));
    }
    s += '\n';
  }
  write_text_file(path, s);
}

void write_text_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_config_trace(const fs::path& path, const ConfigTrace& trace) {
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(trace.bits()));
  put_u32(os, static_cast<std::uint32_t>(trace.length()));
  for (std::size_t t = 0; t < trace.length(); ++t) {
    const InclusionVector v = trace.at(t);
    for (std::uint64_t w : v.words()) {
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((w >> (8 * i)) & 0xFF);
      os.write(reinterpret_cast<const char*>(b), 8);
    }
  }
  write_text_file(path, os.str());
}

ConfigTrace read_config_trace(const fs::path& path) {
  const std::string raw = read_text_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 16 || std::memcmp(raw.data(), kMagic, 4) != 0) {
    throw DataError(path.string() + ": not a configuration trace");
  }
  if (get_u32(p + 4) != kVersion) throw DataError(path.string() + ": unsupported version");
  const std::size_t bits = get_u32(p + 8);
  const std::size_t records = get_u32(p + 12);
  const std::size_t stride = (bits + 63) / 64;
  if (raw.size() != 16 + records * stride * 8) {
    throw DataError(path.string() + ": truncated or oversized configuration trace");
  }
  ConfigTrace trace(bits);
  trace.reserve(records);
  std::vector<std::uint64_t> words(stride);
  for (std::size_t t = 0; t < records; ++t) {
    for (std::size_t w = 0; w < stride; ++w) {
      const unsigned char* q = p + 16 + (t * stride + w) * 8;
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(q[i]) << (8 * i);
      words[w] = v;
    }
    trace.push(InclusionVector::from_words(bits, words));
  }
  return trace;
}

LinearTraceColumns linear_trace_columns(const ChainTrace& trace) {
  LinearTraceColumns c;
  c.d_h = trace.d_h;
  c.flip_accepted = trace.flip_accepted;
  c.swap.reserve(trace.swap.size());
  for (SwapStatus s : trace.swap) c.swap.push_back(status_code(s));
  c.lambda = trace.lambda;
  c.log_post = trace.log_post;
  c.model_size = trace.model_size;
  return c;
}

std::string linear_trace_csv(const ChainTrace& trace) {
  std::string s = "iteration,dH,flip_acc,swap_acc,lambda,log_post,model_size\n";
  s.reserve(64 * trace.iterations());
  for (std::size_t t = 0; t < trace.iterations(); ++t) {
    s += std::to_string(t + 1);
    s += ',';
    s += std::to_string(trace.d_h[t]);
    s += ',';
    s += std::to_string(trace.flip_accepted[t]);
    s += ',';
    s += std::to_string(status_code(trace.swap[t]));
    s += ',';
    s += format_double(trace.lambda[t]);
    s += ',';
    s += format_double(trace.log_post[t]);
    s += ',';
    s += std::to_string(trace.model_size[t]);
    s += '\n';
  }
  return s;
}

LinearTraceColumns read_linear_trace(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::vector<std::string> want{"iteration", "dH",       "flip_acc",  "swap_acc",
                                      "lambda",    "log_post", "model_size"};
  if (t.header != want) throw DataError(path.string() + ": unexpected trace header");
  LinearTraceColumns c;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = r + 2;
    if (parse_double(row[0], path, line) != static_cast<double>(r + 1)) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": iterations out of order");
    }
    c.d_h.push_back(static_cast<std::uint8_t>(parse_double(row[1], path, line)));
    c.flip_accepted.push_back(static_cast<std::uint8_t>(parse_double(row[2], path, line)));
    c.swap.push_back(parse_status(row[3], path, line));
    c.lambda.push_back(parse_double(row[4], path, line));
    c.log_post.push_back(parse_double(row[5], path, line));
    c.model_size.push_back(static_cast<std::uint32_t>(parse_double(row[6], path, line)));
  }
  return c;
}

DMTraceColumns dm_trace_columns(const RJTrace& trace) {
  DMTraceColumns c;
  c.categories = trace.categories;
  c.beta0_accepted = trace.beta0_accepted;
  c.log_post = trace.log_post;
  c.beta0 = trace.beta0;
  c.lambda = trace.lambda;
  for (MoveStatus s : trace.flip) c.flip.push_back(status_code(s));
  for (MoveStatus s : trace.swap) c.swap.push_back(status_code(s));
  return c;
}

std::string dm_trace_csv(const RJTrace& trace) {
  const std::size_t jn = trace.categories;
  std::string s = "iteration,beta0_acc,beta0_scale,log_post";
  for (const char* name : {"beta0_", "lambda_", "flip_", "swap_", "size_"}) {
    for (std::size_t j = 0; j < jn; ++j) s += "," + std::string(name) + std::to_string(j);
  }
  s += '\n';
  for (std::size_t t = 0; t < trace.iterations(); ++t) {
    s += std::to_string(t + 1) + ',' + std::to_string(trace.beta0_accepted[t]) + ',' +
         format_double(trace.beta0_scale[t]) + ',' + format_double(trace.log_post[t]);
    for (std::size_t j = 0; j < jn; ++j) s += ',' + format_double(trace.beta0[t * jn + j]);
    for (std::size_t j = 0; j < jn; ++j) s += ',' + format_double(trace.lambda[t * jn + j]);
    for (std::size_t j = 0; j < jn; ++j) s += ',' + std::to_string(status_code(trace.flip[t * jn + j]));
    for (std::size_t j = 0; j < jn; ++j) s += ',' + std::to_string(status_code(trace.swap[t * jn + j]));
    for (std::size_t j = 0; j < jn; ++j) {
      std::size_t size = 0;
      for (std::size_t p = 0; p < trace.predictors; ++p) size += trace.included(t, j, p) ? 1 : 0;
      s += ',' + std::to_string(size);
    }
    s += '\n';
  }
  return s;
}

std::string dm_coefficients_csv(const RJTrace& trace) {
  std::string s = "iteration,category,predictor,value\n";
  for (const auto& c : trace.coefficients) {
    s += std::to_string(c.iteration) + ',' + std::to_string(c.category) + ',' +
         std::to_string(c.predictor) + ',' + format_double(c.value) + '\n';
  }
  return s;
}

DMTraceColumns read_dm_trace(const fs::path& path, std::size_t categories) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != 4 + 5 * categories || t.header[0] != "iteration") {
    throw DataError(path.string() + ": unexpected trace header");
  }
  DMTraceColumns c;
  c.categories = categories;
  const std::size_t jn = categories;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = r + 2;
    c.beta0_accepted.push_back(static_cast<std::uint8_t>(parse_double(row[1], path, line)));
    c.log_post.push_back(parse_double(row[3], path, line));
    for (std::size_t j = 0; j < jn; ++j) c.beta0.push_back(parse_double(row[4 + j], path, line));
    for (std::size_t j = 0; j < jn; ++j) c.lambda.push_back(parse_double(row[4 + jn + j], path, line));
    for (std::size_t j = 0; j < jn; ++j) c.flip.push_back(parse_status(row[4 + 2 * jn + j], path, line));
    for (std::size_t j = 0; j < jn; ++j) c.swap.push_back(parse_status(row[4 + 3 * jn + j], path, line));
  }
  return c;
}

}  // namespace sdmh
