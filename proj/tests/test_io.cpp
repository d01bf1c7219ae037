#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "sdmh/errors.hpp"
#include "sdmh/io.hpp"
#include "sdmh/rng.hpp"

using namespace sdmh;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sdmh_test_io";
  fs::create_directories(dir);
  return dir / name;
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("shortest round-trip number formatting") {
  CHECK(format_double(3.0) == "3");
  CHECK(format_double(-0.5) == "-0.5");
  CHECK(format_double(0.1) == "0.1");
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.uniform_index(200)) - 100);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(std::strtod(format_double(std::numeric_limits<double>::denorm_min()).c_str(), nullptr) ==
        std::numeric_limits<double>::denorm_min());
}

TEST_CASE("numeric CSV round trip") {
  Rng rng(2);
  MatrixXd m(7, 3);
  for (auto& v : m.reshaped()) v = rng.normal() * 1e3;
  const auto p = scratch("m.csv");
  write_numeric_csv(p, {"a", "b", "c"}, m);
  const auto back = read_numeric_csv(p);
  CHECK(back.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(back.values == m);
}

TEST_CASE("CSV errors") {
  CHECK_THROWS_AS(read_csv(scratch("does_not_exist.csv")), DataError);
  const auto ragged = scratch("ragged.csv");
  put(ragged, "a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_csv(ragged), DataError);
  const auto text = scratch("text.csv");
  put(text, "a,b\n1,x\n");
  CHECK_NOTHROW(read_csv(text));
  CHECK_THROWS_AS(read_numeric_csv(text), DataError);
  const auto crlf = scratch("crlf.csv");
  put(crlf, "a,b\r\n1,2\r\n");
  CHECK(read_numeric_csv(crlf).values(0, 1) == 2.0);
}

TEST_CASE("text files") {
  const auto p = scratch("t.txt");
  write_text_file(p, "hello\nworld\n");
  CHECK(read_text_file(p) == "hello\nworld\n");
  write_text_file(p, "again");
  CHECK(read_text_file(p) == "again");
}

TEST_CASE("configuration trace round trip") {
  for (std::size_t bits : {1UL, 63UL, 64UL, 65UL, 200UL}) {
    Rng rng(bits);
    ConfigTrace tr(bits);
    for (int t = 0; t < 37; ++t) {
      InclusionVector v(bits);
      for (std::size_t b = 0; b < bits; ++b) v.set(b, rng.uniform() < 0.5);
      tr.push(v);
    }
    const auto p = scratch("c" + std::to_string(bits) + ".bin");
    write_config_trace(p, tr);
    CHECK(fs::file_size(p) == 16 + 37 * 8 * ((bits + 63) / 64));
    CHECK(read_config_trace(p) == tr);
  }
  const auto bad = scratch("bad.bin");
  put(bad, "NOPE0000000000000000");
  CHECK_THROWS_AS(read_config_trace(bad), DataError);
  ConfigTrace tr(10);
  tr.push(InclusionVector(10));
  const auto cut = scratch("cut.bin");
  write_config_trace(cut, tr);
  fs::resize_file(cut, 20);
  CHECK_THROWS_AS(read_config_trace(cut), DataError);
}
