#include "quietclock/output.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <locale>
#include <memory>
#include <sstream>

#include "quietclock/errors.hpp"

namespace quietclock {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.imbue(std::locale::classic());  // no digit grouping in integer columns
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  throw ConfigError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) {
    throw ConfigError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t parse_uint(std::string_view text) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc{} && ptr == text.data() + text.size() && !text.empty()) return value;
  // Accept integral values in scientific notation, e.g. 1e8.
  const double d = parse_double(text);
  if (!(d >= 0.0) || d >= 0x1p64 || std::floor(d) != d) {
    throw ConfigError("not a non-negative integer: '" + std::string(text) + "'");
  }
  return static_cast<std::uint64_t>(d);
}

std::vector<PsdRow> psd_rows(const PsdEstimate& estimate, const PsdEstimate& reference) {
  if (estimate.size() != reference.size()) {
    throw std::invalid_argument("psd_rows: estimate and reference grids differ");
  }
  std::vector<PsdRow> rows(estimate.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = {estimate.freqs[i], estimate.values[i], reference.values[i], estimate.segments};
  }
  return rows;
}

void write_psd_csv(const std::filesystem::path& path, std::span<const PsdRow> rows) {
  std::ofstream out = open_for_write(path);
  out << kPsdHeader << '\n';
  for (const PsdRow& r : rows) {
    out << format_double(r.omega) << ',' << format_double(r.s_est) << ','
        << format_double(r.s_analytic) << ',' << r.n_segments << '\n';
  }
  finish(out, path);
}

std::vector<PsdRow> read_psd_csv(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line) || chomp(line) != kPsdHeader) {
    malformed(path, 1, "expected header '" + std::string(kPsdHeader) + "'");
  }
  std::vector<PsdRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = chomp(line);
    if (view.empty()) continue;
    const auto fields = split(view, ',');
    if (fields.size() != 4) malformed(path, lineno, "expected 4 fields");
    try {
      rows.push_back({parse_double(fields[0]), parse_double(fields[1]), parse_double(fields[2]),
                      parse_uint(fields[3])});
    } catch (const ConfigError& e) {
      malformed(path, lineno, e.what());
    }
  }
  if (rows.empty()) malformed(path, lineno, "no data rows");
  return rows;
}

EventsWriter::EventsWriter(const std::filesystem::path& path)
    : path_(path), out_(open_for_write(path)) {
  out_ << kEventsHeader << '\n';
}

void EventsWriter::write(const DissipationEvent& event) {
  out_ << event.k << ',' << format_double(event.mark) << '\n';
}

void EventsWriter::close() {
  finish(out_, path_);
  out_.close();
}

std::vector<DissipationEvent> read_events_csv(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line) || chomp(line) != kEventsHeader) {
    malformed(path, 1, "expected header '" + std::string(kEventsHeader) + "'");
  }
  std::vector<DissipationEvent> events;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = chomp(line);
    if (view.empty()) continue;
    const auto fields = split(view, ',');
    if (fields.size() != 2) malformed(path, lineno, "expected 2 fields");
    try {
      events.push_back({parse_uint(fields[0]), parse_double(fields[1])});
    } catch (const ConfigError& e) {
      malformed(path, lineno, e.what());
    }
  }
  return events;
}

void write_table(const std::filesystem::path& path, std::span<const std::string> header,
                 std::span<const std::vector<std::string>> rows) {
  std::ofstream out = open_for_write(path);
  auto emit = [&out](std::span<const std::string> cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  finish(out, path);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out = open_for_write(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  finish(out, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw std::runtime_error("sha256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

}  // namespace quietclock
