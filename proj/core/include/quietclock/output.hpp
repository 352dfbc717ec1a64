#pragma once

// Artifact files. Numbers are written in shortest round-trip decimal form with
// '.' as the separator whatever the process locale, so parsing a file gives
// back the exact doubles that were written.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quietclock/model.hpp"
#include "quietclock/spectral.hpp"

namespace quietclock {

std::string format_double(double value);
// Strict: the whole field must be a number. Throws ConfigError otherwise.
double parse_double(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

inline constexpr std::string_view kPsdHeader = "omega,s_est,s_analytic,n_segments";
inline constexpr std::string_view kEventsHeader = "k,mark";

struct PsdRow {
  double omega = 0.0;
  double s_est = 0.0;
  double s_analytic = 0.0;
  std::uint64_t n_segments = 0;

  friend bool operator==(const PsdRow&, const PsdRow&) = default;
};

// Pairs an estimate with a reference curve on the same grid.
std::vector<PsdRow> psd_rows(const PsdEstimate& estimate, const PsdEstimate& reference);

void write_psd_csv(const std::filesystem::path& path, std::span<const PsdRow> rows);
std::vector<PsdRow> read_psd_csv(const std::filesystem::path& path);

class EventsWriter {
 public:
  explicit EventsWriter(const std::filesystem::path& path);

  void write(const DissipationEvent& event);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::vector<DissipationEvent> read_events_csv(const std::filesystem::path& path);

// Plain comma-separated table with a header line; cells are written verbatim.
void write_table(const std::filesystem::path& path, std::span<const std::string> header,
                 std::span<const std::vector<std::string>> rows);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

}  // namespace quietclock
