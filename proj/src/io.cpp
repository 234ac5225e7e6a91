#include "mlsh/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>

#include "mlsh/error.hpp"

namespace mlsh {

std::string_view to_string(InputFormat format) {
  return format == InputFormat::Fvecs ? "fvecs" : "csv";
}

InputFormat input_format_from_string(std::string_view name) {
  if (name == "fvecs") return InputFormat::Fvecs;
  if (name == "csv") return InputFormat::Csv;
  fail(ErrorKind::InvalidArgument, "unknown input format '" + std::string(name) + "'");
}

namespace {

std::uint32_t read_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_le32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::vector<std::vector<double>> ingest_fvecs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  std::vector<std::vector<double>> out;
  std::size_t pos = 0;
  std::int64_t dim = -1;
  while (pos < buf.size()) {
    if (buf.size() - pos < 4) {
      fail(ErrorKind::Format, "truncated fvecs header at byte " + std::to_string(pos));
    }
    const auto d = static_cast<std::int32_t>(read_le32(buf.data() + pos));
    if (d <= 0) fail(ErrorKind::Format, "non-positive fvecs dimension at byte " + std::to_string(pos));
    if (dim >= 0 && d != dim) {
      fail(ErrorKind::Format, "ragged fvecs record at byte " + std::to_string(pos) + ": dimension " +
                                  std::to_string(d) + ", expected " + std::to_string(dim));
    }
    dim = d;
    const std::size_t bytes = static_cast<std::size_t>(d) * 4;
    if (buf.size() - pos - 4 < bytes) {
      fail(ErrorKind::Format, "truncated fvecs record at byte " + std::to_string(pos));
    }
    std::vector<double> v(static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = std::bit_cast<float>(read_le32(buf.data() + pos + 4 + 4 * j));
    }
    out.push_back(std::move(v));
    pos += 4 + bytes;
  }
  return out;
}

std::vector<std::vector<double>> ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> v;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      std::size_t a = start, b = end;
      while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
      while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t')) --b;
      double value = 0.0;
      const auto res = std::from_chars(line.data() + a, line.data() + b, value);
      if (a == b || res.ec != std::errc() || res.ptr != line.data() + b) {
        fail(ErrorKind::Format, "non-numeric field '" + line.substr(a, b - a) + "' at line " +
                                    std::to_string(line_no) + ", column " + std::to_string(a + 1));
      }
      v.push_back(value);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!out.empty() && v.size() != out.front().size()) {
      fail(ErrorKind::Format, "ragged csv row at line " + std::to_string(line_no) + ": " +
                                  std::to_string(v.size()) + " fields, expected " +
                                  std::to_string(out.front().size()));
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> ingest(const std::filesystem::path& path, InputFormat format) {
  return format == InputFormat::Fvecs ? ingest_fvecs(path) : ingest_csv(path);
}

void write_fvecs(const std::filesystem::path& path, const std::vector<std::vector<double>>& vectors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  for (const auto& v : vectors) {
    write_le32(out, static_cast<std::uint32_t>(v.size()));
    for (double x : v) write_le32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<std::vector<double>>& vectors) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  char buf[64];
  for (const auto& v : vectors) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (j) out << ',';
      // Shortest round-trip representation.
      const auto res = std::to_chars(buf, buf + sizeof(buf), v[j]);
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace mlsh
