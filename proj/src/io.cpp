#include "qet/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace qet {

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

void Report::section(std::string name) { sections_.push_back({std::move(name), {}}); }

void Report::add(std::string key, std::string value) {
  if (sections_.empty()) section("general");
  sections_.back().second.emplace_back(std::move(key), std::move(value));
}

void Report::add(std::string key, double value) { add(std::move(key), format_number(value)); }

void Report::add(std::string key, long long value) { add(std::move(key), std::to_string(value)); }

void Report::add(std::string key, bool value) {
  add(std::move(key), std::string(value ? "true" : "false"));
}

std::string Report::str() const {
  std::string out;
  for (const auto& [name, entries] : sections_) {
    if (!out.empty()) out += '\n';
    out += '[' + name + "]\n";
    for (const auto& [k, v] : entries) out += k + ": " + v + '\n';
  }
  return out;
}

std::string Report::find(const std::string& section, const std::string& key) const {
  for (const auto& [name, entries] : sections_)
    if (name == section)
      for (const auto& [k, v] : entries)
        if (k == key) return v;
  return {};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  out.flush();
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p += ".meta";
  return p;
}

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  }
  void line(const std::string& s) {
    buffer_ += s;
    buffer_ += '\n';
    if (buffer_.size() > (1u << 20)) flush();
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) buffer_ += ',';
      fmt::format_to(std::back_inserter(buffer_), "{:.17g}", v);
      first = false;
    }
    buffer_ += '\n';
    if (buffer_.size() > (1u << 20)) flush();
  }
  void close() {
    flush();
    out_.close();
    if (!out_) throw IoError(fmt::format("write to '{}' failed", path_.string()));
  }

 private:
  void flush() {
    out_ << buffer_;
    buffer_.clear();
  }
  std::filesystem::path path_;
  std::ofstream out_;
  std::string buffer_;
};

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  double v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e)
    throw IoError(fmt::format("{}:{}: '{}' is not a number", path.string(), line, s));
  return v;
}

}  // namespace

void write_event(const std::filesystem::path& path, const EventWavefunction& event) {
  const auto& g = event.grid();
  const bool em = event.representation() == Representation::energy_momentum;
  CsvWriter csv(path);
  csv.line("t,x,re,im");
  for (std::size_t i = 0; i < g.n_t(); ++i)
    for (std::size_t j = 0; j < g.n_x(); ++j) {
      const cplx v = event(i, j);
      csv.row({em ? g.energy(i) : g.t(i), em ? g.momentum(j) : g.x(j), v.real(), v.imag()});
    }
  csv.close();

  Report meta;
  meta.section("grid");
  meta.add("t_min", g.t_min());
  meta.add("t_max", g.t_max());
  meta.add("n_t", g.n_t());
  meta.add("x_min", g.x_min());
  meta.add("x_max", g.x_max());
  meta.add("n_x", g.n_x());
  meta.add("hbar", g.hbar());
  meta.add("representation", to_string(event.representation()));
  meta.add("improper", event.improper());
  write_text(sidecar_path(path), meta.str());
}

EventWavefunction read_event(const std::filesystem::path& path) {
  const auto meta_path = sidecar_path(path);
  std::map<std::string, std::string> meta;
  {
    std::istringstream in(read_text(meta_path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '[') continue;
      const auto colon = line.find(':');
      if (colon == std::string::npos)
        throw IoError(fmt::format("{}: malformed line '{}'", meta_path.string(), line));
      auto value = line.substr(colon + 1);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      meta[line.substr(0, colon)] = value;
    }
  }
  auto get = [&](const char* key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw IoError(fmt::format("{}: missing key '{}'", meta_path.string(), key));
    return it->second;
  };
  auto num = [&](const char* key) { return parse_double(get(key), meta_path, 0); };
  auto count = [&](const char* key) {
    const double v = num(key);
    if (!(v >= 0) || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw IoError(fmt::format("{}: '{}' must be a non-negative integer", meta_path.string(), key));
    return static_cast<std::size_t>(v);
  };
  SpacetimeGrid g = [&] {
    try {
      return make_grid(num("t_min"), num("t_max"), count("n_t"), num("x_min"), num("x_max"),
                       count("n_x"), num("hbar"));
    } catch (const std::invalid_argument& e) {
      throw IoError(fmt::format("{}: {}", meta_path.string(), e.what()));
    }
  }();
  const Representation rep = representation_from_string(get("representation"));
  const bool improper = meta.count("improper") && meta["improper"] == "true";

  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || (line != "t,x,re,im" && line != "t,x,re,im\r"))
    throw IoError(fmt::format("{}: expected header 't,x,re,im'", path.string()));
  std::vector<cplx> values;
  values.reserve(g.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      cols.push_back(line.substr(start, pos - start));
    cols.push_back(line.substr(start));
    if (cols.size() != 4)
      throw IoError(fmt::format("{}:{}: expected 4 columns", path.string(), line_no));
    values.emplace_back(parse_double(cols[2], path, line_no), parse_double(cols[3], path, line_no));
  }
  if (values.size() != g.size())
    throw IoError(fmt::format("{}: {} rows for a {}x{} grid", path.string(), values.size(),
                              g.n_t(), g.n_x()));
  return EventWavefunction(g, rep, std::move(values), improper);
}

void write_density(const std::filesystem::path& path, const SpacetimeGrid& grid,
                   const std::vector<double>& values) {
  CsvWriter csv(path);
  csv.line("t,x,value");
  for (std::size_t i = 0; i < grid.n_t(); ++i)
    for (std::size_t j = 0; j < grid.n_x(); ++j)
      csv.row({grid.t(i), grid.x(j), values[i * grid.n_x() + j]});
  csv.close();
}

void write_marginal(const std::filesystem::path& path, const SpacetimeGrid& grid,
                    const std::vector<double>& values) {
  CsvWriter csv(path);
  csv.line("t,value");
  for (std::size_t i = 0; i < grid.n_t(); ++i) csv.row({grid.t(i), values[i]});
  csv.close();
}

void write_orbit(const std::filesystem::path& path, const ComplexField& psi) {
  const auto& g = psi.grid();
  CsvWriter csv(path);
  csv.line("t,x,re_psi,im_psi");
  for (std::size_t i = 0; i < g.n_t(); ++i)
    for (std::size_t j = 0; j < g.n_x(); ++j)
      csv.row({g.t(i), g.x(j), psi(i, j).real(), psi(i, j).imag()});
  csv.close();
}

void write_smatrix(const std::filesystem::path& path, const std::vector<SMatrixRow>& rows) {
  CsvWriter csv(path);
  csv.line("p,p_prime,re,im,re_exact,im_exact");
  for (const auto& r : rows)
    csv.row({r.p, r.p_prime, r.born.real(), r.born.imag(), r.exact.real(), r.exact.imag()});
  csv.close();
}

}  // namespace qet
