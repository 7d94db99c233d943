// CSV artifacts, grid sidecars and key: value reports.
#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qet/lattice.hpp"

namespace qet {

class IoError : public QetError {
 public:
  using QetError::QetError;
};

/// Shortest round-trip decimal form ("{:.17g}").
std::string format_number(double v);

/// Sections of key: value lines, written as
///   [section]
///   key: value
class Report {
 public:
  void section(std::string name);
  void add(std::string key, std::string value);
  void add(std::string key, double value);
  void add(std::string key, long long value);
  void add(std::string key, std::size_t value) { add(std::move(key), static_cast<long long>(value)); }
  void add(std::string key, int value) { add(std::move(key), static_cast<long long>(value)); }
  void add(std::string key, bool value);
  void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }

  std::string str() const;
  /// Value of the first matching key in the given section, if any.
  std::string find(const std::string& section, const std::string& key) const;

 private:
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
};

/// Writes text to path atomically enough for a batch tool; throws IoError
/// naming the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Event values as `t,x,re,im` (axes are E,p in the energy-momentum
/// representation) plus the grid sidecar `<path>.meta`.
void write_event(const std::filesystem::path& path, const EventWavefunction& event);
/// Reads back an event written by write_event.
EventWavefunction read_event(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// `t,x,value`
void write_density(const std::filesystem::path& path, const SpacetimeGrid& grid,
                   const std::vector<double>& values);
/// `t,value`
void write_marginal(const std::filesystem::path& path, const SpacetimeGrid& grid,
                    const std::vector<double>& values);
/// `t,x,re_psi,im_psi`
void write_orbit(const std::filesystem::path& path, const ComplexField& psi);

struct SMatrixRow {
  double p, p_prime;
  std::complex<double> born, exact;
};
/// `p,p_prime,re,im,re_exact,im_exact`
void write_smatrix(const std::filesystem::path& path, const std::vector<SMatrixRow>& rows);

}  // namespace qet
