#include "qet/config.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "qet/io.hpp"

namespace qet {

json parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigParseError(fmt::format("malformed config: {}", e.what()));
  }
  if (!doc.is_object()) throw ConfigParseError("malformed config: top level must be an object");
  return doc;
}

json load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError& e) {
    throw ConfigParseError(e.what());
  }
  return parse_config(text);
}

const std::vector<std::string>& operator_names() {
  static const std::vector<std::string> names{"identity", "time",   "position",
                                              "momentum", "energy", "hamiltonian"};
  return names;
}

namespace {

const std::vector<std::string> kTasks{"orbit",       "measure", "history",
                                      "golden_rule", "scatter", "check"};
const std::vector<std::string> kSuites{"all",         "lattice",     "observables",
                                       "propagator",  "measurement", "perturbation"};

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string quoted_list(const std::vector<std::string>& options) {
  std::string out;
  for (const auto& o : options) out += (out.empty() ? "'" : ", '") + o + "'";
  return out;
}

enum class Range { any, positive, non_negative };

class Resolver {
 public:
  std::vector<Diagnostic> diags;

  void error(const std::string& path, std::string message) {
    diags.push_back({path, std::move(message)});
  }

  // The user's sub-object (or an empty object); reports wrong types and
  // unknown keys.
  json object(const json& value, const std::string& path,
              const std::vector<std::string>& allowed) {
    if (value.is_null()) return json::object();
    if (!value.is_object()) {
      error(path, "must be an object");
      return json::object();
    }
    for (const auto& [k, v] : value.items())
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
        error(join(path, k), "unknown key (allowed: " + quoted_list(allowed) + ")");
    return value;
  }

  static const json& member(const json& obj, const std::string& key) {
    static const json null;
    const auto it = obj.find(key);
    return it == obj.end() ? null : *it;
  }

  double number(const json& obj, const std::string& key, double def, const std::string& path,
                Range range = Range::any) {
    const json& v = member(obj, key);
    const std::string p = join(path, key);
    if (v.is_null()) return def;
    if (!v.is_number()) {
      error(p, "must be a number");
      return def;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      error(p, "must be finite");
      return def;
    }
    if (range == Range::positive && !(d > 0)) error(p, "must be > 0");
    if (range == Range::non_negative && !(d >= 0)) error(p, "must be >= 0");
    return d;
  }

  std::uint64_t integer(const json& obj, const std::string& key, std::uint64_t def,
                        const std::string& path, std::uint64_t minimum = 0) {
    const json& v = member(obj, key);
    const std::string p = join(path, key);
    if (v.is_null()) return def;
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<std::int64_t>() < 0)) {
      error(p, "must be a non-negative integer");
      return def;
    }
    const auto n = v.get<std::uint64_t>();
    if (n < minimum) error(p, fmt::format("must be >= {}", minimum));
    return n;
  }

  std::string choice(const json& obj, const std::string& key, const std::string& def,
                     const std::string& path, const std::vector<std::string>& options) {
    const json& v = member(obj, key);
    const std::string p = join(path, key);
    if (v.is_null()) return def;
    if (!v.is_string()) {
      error(p, "must be a string");
      return def;
    }
    const auto s = v.get<std::string>();
    if (std::find(options.begin(), options.end(), s) == options.end()) {
      error(p, "'" + s + "' is not one of " + quoted_list(options));
      return def;
    }
    return s;
  }

  bool boolean(const json& obj, const std::string& key, bool def, const std::string& path) {
    const json& v = member(obj, key);
    if (v.is_null()) return def;
    if (!v.is_boolean()) {
      error(join(path, key), "must be true or false");
      return def;
    }
    return v.get<bool>();
  }

  std::vector<double> numbers(const json& obj, const std::string& key,
                              const std::vector<double>& def, const std::string& path) {
    const json& v = member(obj, key);
    const std::string p = join(path, key);
    if (v.is_null()) return def;
    if (!v.is_array()) {
      error(p, "must be an array of numbers");
      return def;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        error(fmt::format("{}[{}]", p, i), "must be a finite number");
        return def;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<double> interval(const json& obj, const std::string& key,
                               const std::vector<double>& def, const std::string& path) {
    auto v = numbers(obj, key, def, path);
    if (v.size() != 2) {
      error(join(path, key), "must be a [lo, hi] pair");
      return def;
    }
    if (v[0] > v[1]) error(join(path, key), "lower bound exceeds upper bound");
    return v;
  }

  std::vector<std::string> strings(const json& obj, const std::string& key,
                                   const std::vector<std::string>& def, const std::string& path) {
    const json& v = member(obj, key);
    const std::string p = join(path, key);
    if (v.is_null()) return def;
    if (!v.is_array()) {
      error(p, "must be an array of strings");
      return def;
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) {
        error(fmt::format("{}[{}]", p, i), "must be a string");
        return def;
      }
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }
};

json resolve_potential(Resolver& r, const json& user, const std::string& path,
                       const json& defaults) {
  const json obj = r.object(user, path,
                            {"kind", "omega", "centre", "amplitude", "width", "force", "drive"});
  const std::string kind =
      r.choice(obj, "kind", defaults.value("kind", "zero"), path,
               {"zero", "harmonic", "gaussian", "driven_harmonic"});
  json out{{"kind", kind}};
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : obj.items()) {
      if (k == "kind") continue;
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        r.error(join(path, k), "not a parameter of potential kind '" + kind + "'");
    }
  };
  if (kind == "zero") {
    allow({});
  } else if (kind == "harmonic") {
    allow({"omega", "centre"});
    out["omega"] = r.number(obj, "omega", defaults.value("omega", 1.0), path, Range::positive);
    out["centre"] = r.number(obj, "centre", defaults.value("centre", 0.0), path);
  } else if (kind == "gaussian") {
    allow({"amplitude", "centre", "width"});
    out["amplitude"] = r.number(obj, "amplitude", defaults.value("amplitude", 1.0), path);
    out["centre"] = r.number(obj, "centre", defaults.value("centre", 0.0), path);
    out["width"] = r.number(obj, "width", defaults.value("width", 1.0), path, Range::positive);
  } else {
    allow({"omega", "force", "drive"});
    out["omega"] = r.number(obj, "omega", defaults.value("omega", 1.0), path, Range::positive);
    out["force"] = r.number(obj, "force", defaults.value("force", 0.1), path);
    out["drive"] = r.number(obj, "drive", defaults.value("drive", 1.0), path);
  }
  return out;
}

json resolve_window(Resolver& r, const json& user, const std::string& path,
                    const json& grid_json) {
  const json obj = r.object(user, path, {"t", "x", "sharp_t", "boxes"});
  const std::vector<double> all_x{grid_json["x_min"].get<double>(),
                                  grid_json["x_max"].get<double>()};
  auto box = [&](const json& b, const std::string& p) {
    const json bo = r.object(b, p, {"t", "x", "sharp_t"});
    std::vector<double> t;
    if (bo.contains("sharp_t")) {
      if (bo.contains("t")) r.error(p, "give either 't' or 'sharp_t', not both");
      const double s = r.number(bo, "sharp_t", 0.0, p);
      t = {s, s};
    } else {
      if (!bo.contains("t")) r.error(join(p, "t"), "required");
      t = r.interval(bo, "t", {0.0, 0.0}, p);
    }
    const auto x = r.interval(bo, "x", all_x, p);
    return json{{"t", t}, {"x", x}};
  };
  json boxes = json::array();
  if (obj.contains("boxes")) {
    if (obj.contains("t") || obj.contains("x") || obj.contains("sharp_t"))
      r.error(path, "give either 'boxes' or a single box, not both");
    const json& list = obj["boxes"];
    if (!list.is_array() || list.empty()) {
      r.error(join(path, "boxes"), "must be a non-empty array");
    } else {
      for (std::size_t i = 0; i < list.size(); ++i)
        boxes.push_back(box(list[i], fmt::format("{}.boxes[{}]", path, i)));
    }
  } else {
    if (obj.empty()) r.error(path, "required");
    boxes.push_back(box(obj, path));
  }
  return json{{"boxes", boxes}};
}

json resolve_partition(Resolver& r, const json& user, const std::string& path) {
  const json obj = r.object(user, path, {"kind", "edges", "labels"});
  const std::string kind =
      r.choice(obj, "kind", "position", path, {"position", "momentum", "energy", "identity"});
  auto edges = r.numbers(obj, "edges", kind == "identity" ? std::vector<double>{}
                                                          : std::vector<double>{0.0},
                         path);
  if (kind == "identity" && !edges.empty())
    r.error(join(path, "edges"), "the identity partition takes no edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i - 1] < edges[i])) {
      r.error(join(path, "edges"), "must be strictly increasing");
      break;
    }
  const std::size_t bins = kind == "identity" ? 1 : edges.size() + 1;
  auto labels = r.strings(obj, "labels", {}, path);
  if (labels.empty())
    for (std::size_t a = 0; a < bins; ++a) labels.push_back(kind == "identity" ? "1" : std::to_string(a));
  if (labels.size() != bins)
    r.error(join(path, "labels"), fmt::format("{} labels given for {} bins", labels.size(), bins));
  if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size())
    r.error(join(path, "labels"), "labels must be distinct");
  return json{{"kind", kind}, {"edges", edges}, {"labels", labels}};
}

// Semantic checks that need the numeric objects.
void check_window(Resolver& r, const json& window, const std::string& path,
                  const SpacetimeGrid& grid) {
  try {
    if (build_window(window, grid).empty()) r.error(path, fmt::format("selects no grid nodes (time nodes are t_min + k*dt with dt = {:.17g})",
                              grid.dt()));
  } catch (const std::invalid_argument& e) {
    r.error(path, e.what());
  }
}

}  // namespace

ResolvedConfig resolve_config(const json& user, const std::filesystem::path& base_dir) {
  Resolver r;
  json out;
  const json top = r.object(user, "",
                            {"task", "seed", "grid", "hamiltonian", "integrator",
                             "derivative_scheme", "theta_convention", "event", "orbit", "measure",
                             "history", "golden_rule", "scatter", "check", "output"});

  std::string task = "check";
  if (const json& t = Resolver::member(top, "task"); t.is_string()) {
    task = t.get<std::string>();
    if (task == "golden-rule") task = "golden_rule";
  }
  {
    json tmp{{"task", task}};
    task = r.choice(tmp, "task", "check", "", kTasks);
    if (const json& t = Resolver::member(top, "task"); !t.is_null() && !t.is_string())
      r.error("task", "must be a string");
  }
  out["task"] = task;
  out["seed"] = r.integer(top, "seed", 0, "");

  // grid
  const json g = r.object(Resolver::member(top, "grid"), "grid",
                          {"t_min", "t_max", "n_t", "x_min", "x_max", "n_x", "hbar"});
  json grid_json;
  grid_json["t_min"] = r.number(g, "t_min", 0.0, "grid");
  grid_json["t_max"] = r.number(g, "t_max", 10.0, "grid");
  grid_json["n_t"] = r.integer(g, "n_t", 256, "grid", 2);
  grid_json["x_min"] = r.number(g, "x_min", -20.0, "grid");
  grid_json["x_max"] = r.number(g, "x_max", 20.0, "grid");
  grid_json["n_x"] = r.integer(g, "n_x", 128, "grid", 2);
  grid_json["hbar"] = r.number(g, "hbar", 1.0, "grid", Range::positive);
  out["grid"] = grid_json;
  std::optional<SpacetimeGrid> grid;
  try {
    grid = build_grid(out);
  } catch (const std::invalid_argument& e) {
    r.error("grid", e.what());
  }

  // hamiltonian
  const json h = r.object(Resolver::member(top, "hamiltonian"), "hamiltonian", {"mass", "potential"});
  out["hamiltonian"]["mass"] = r.number(h, "mass", 1.0, "hamiltonian", Range::positive);
  out["hamiltonian"]["potential"] =
      resolve_potential(r, Resolver::member(h, "potential"), "hamiltonian.potential", json::object());

  out["integrator"] = r.choice(top, "integrator", "crank_nicolson", "",
                               {"crank_nicolson", "split_step"});
  out["derivative_scheme"] = r.choice(top, "derivative_scheme", "finite_difference", "",
                                      {"finite_difference", "spectral"});
  out["theta_convention"] =
      r.choice(top, "theta_convention", "diagonal_retarded", "", {"diagonal_retarded"});

  // event
  {
    const json e = r.object(Resolver::member(top, "event"), "event",
                            {"kind", "t0", "sigma_t", "x0", "sigma_x", "E0", "p0",
                             "mass_tolerance", "t", "E", "p", "path"});
    const std::string kind =
        r.choice(e, "kind", "gaussian", "event", {"gaussian", "sharp", "plane_wave", "file"});
    const std::map<std::string, std::vector<std::string>> keys{
        {"gaussian", {"t0", "sigma_t", "x0", "sigma_x", "E0", "p0", "mass_tolerance"}},
        {"sharp", {"t", "x0", "sigma_x", "p0"}},
        {"plane_wave", {"E", "p"}},
        {"file", {"path"}}};
    for (const auto& [k, v] : e.items()) {
      const auto& allowed = keys.at(kind);
      if (k != "kind" && std::find(allowed.begin(), allowed.end(), k) == allowed.end())
        r.error(join("event", k), "not a parameter of event kind '" + kind + "'");
    }
    json ev{{"kind", kind}};
    if (kind == "gaussian") {
      ev["t0"] = r.number(e, "t0", 5.0, "event");
      ev["sigma_t"] = r.number(e, "sigma_t", 0.5, "event", Range::positive);
      ev["x0"] = r.number(e, "x0", 0.0, "event");
      ev["sigma_x"] = r.number(e, "sigma_x", 1.0, "event", Range::positive);
      ev["E0"] = r.number(e, "E0", 0.5, "event");
      ev["p0"] = r.number(e, "p0", 1.0, "event");
      ev["mass_tolerance"] = r.number(e, "mass_tolerance", 1e-6, "event", Range::positive);
    } else if (kind == "sharp") {
      ev["t"] = r.number(e, "t", 0.0, "event");
      ev["x0"] = r.number(e, "x0", 0.0, "event");
      ev["sigma_x"] = r.number(e, "sigma_x", 1.0, "event", Range::positive);
      ev["p0"] = r.number(e, "p0", 0.0, "event");
    } else if (kind == "plane_wave") {
      ev["E"] = r.number(e, "E", 0.0, "event");
      ev["p"] = r.number(e, "p", 0.0, "event");
    } else {
      const json& p = Resolver::member(e, "path");
      if (!p.is_string()) {
        r.error("event.path", "required string");
        ev["path"] = "";
      } else {
        std::filesystem::path fp = p.get<std::string>();
        if (fp.is_relative() && !base_dir.empty()) fp = base_dir / fp;
        ev["path"] = fp.lexically_normal().string();
      }
    }
    out["event"] = ev;
  }

  // orbit
  {
    const json o = r.object(Resolver::member(top, "orbit"), "orbit",
                            {"variant", "write_orbit", "write_density", "charge_tolerance"});
    out["orbit"]["variant"] = r.choice(o, "variant", "full", "orbit", {"full", "retarded", "advanced"});
    out["orbit"]["write_orbit"] = r.boolean(o, "write_orbit", true, "orbit");
    out["orbit"]["write_density"] = r.boolean(o, "write_density", true, "orbit");
    out["orbit"]["charge_tolerance"] =
        r.number(o, "charge_tolerance", 1e-6, "orbit", Range::positive);
  }

  // measure
  {
    const json m = r.object(Resolver::member(top, "measure"), "measure",
                            {"variant", "window", "partition", "operators", "collapse"});
    out["measure"]["variant"] = r.choice(m, "variant", "full", "measure", {"full", "retarded", "advanced"});
    json default_window{{"t", {4.0, 6.0}}};
    out["measure"]["window"] = resolve_window(
        r, m.contains("window") ? m["window"] : default_window, "measure.window", grid_json);
    out["measure"]["partition"] =
        resolve_partition(r, Resolver::member(m, "partition"), "measure.partition");
    const auto ops = r.strings(m, "operators", operator_names(), "measure");
    for (std::size_t i = 0; i < ops.size(); ++i)
      if (std::find(operator_names().begin(), operator_names().end(), ops[i]) ==
          operator_names().end())
        r.error(fmt::format("measure.operators[{}]", i),
                "'" + ops[i] + "' is not one of " + quoted_list(operator_names()));
    out["measure"]["operators"] = ops;
    const json& c = Resolver::member(m, "collapse");
    if (!c.is_null() && !c.is_string()) r.error("measure.collapse", "must be an outcome label");
    out["measure"]["collapse"] = c.is_string() ? c : json(nullptr);
    if (c.is_string()) {
      const auto& labels = out["measure"]["partition"]["labels"];
      if (std::find(labels.begin(), labels.end(), c) == labels.end())
        r.error("measure.collapse", "'" + c.get<std::string>() + "' is not a partition label");
    }
  }

  // history
  {
    const json hs = r.object(Resolver::member(top, "history"), "history", {"variant", "stages"});
    out["history"]["variant"] =
        r.choice(hs, "variant", "retarded", "history", {"full", "retarded", "advanced"});
    json stages = json::array();
    const json& list = Resolver::member(hs, "stages");
    if (!list.is_null() && !list.is_array()) {
      r.error("history.stages", "must be an array");
    } else if (list.is_array()) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string p = fmt::format("history.stages[{}]", i);
        const json s = r.object(list[i], p, {"window", "partition"});
        stages.push_back(json{
            {"window", resolve_window(r, Resolver::member(s, "window"), join(p, "window"), grid_json)},
            {"partition", resolve_partition(r, Resolver::member(s, "partition"), join(p, "partition"))}});
      }
    }
    out["history"]["stages"] = stages;
  }

  // golden rule
  {
    const std::string p = "golden_rule";
    const json gr = r.object(Resolver::member(top, p), p,
                             {"hbar", "level_omega", "band", "n_omega", "density", "coupling", "fit",
                              "samples", "regime_horizons"});
    json o;
    o["hbar"] = r.number(gr, "hbar", 1.0, p, Range::positive);
    o["level_omega"] = r.number(gr, "level_omega", 0.0, p);
    o["band"] = r.interval(gr, "band", {-5.0, 5.0}, p);
    o["n_omega"] = r.integer(gr, "n_omega", 1024, p, 2);
    if (o["n_omega"].get<std::uint64_t>() > 4096)
      r.error(join(p, "n_omega"), "must be <= 4096 (dense diagonalization)");
    o["density"] = r.number(gr, "density", 1.0, p, Range::non_negative);
    o["coupling"] = r.number(gr, "coupling", 0.1, p);
    o["fit"] = r.boolean(gr, "fit", true, p);
    o["samples"] = r.integer(gr, "samples", 200, p, 2);
    auto horizons = r.numbers(gr, "regime_horizons", {}, p);
    for (double t : horizons)
      if (!(t > 0)) {
        r.error(join(p, "regime_horizons"), "entries must be > 0");
        break;
      }
    if (horizons.empty()) {
      const auto band = o["band"].get<std::vector<double>>();
      const double width = band[1] - band[0];
      for (int i = 0; i < 10; ++i) horizons.push_back(50.0 / width * (1.0 + 0.3 * i));
    } else if (horizons.size() < 2) {
      r.error(join(p, "regime_horizons"), "need at least two horizons");
    }
    o["regime_horizons"] = horizons;
    out[p] = o;
  }

  // scatter
  {
    const std::string p = "scatter";
    const json sc = r.object(Resolver::member(top, p), p,
                             {"potential", "horizon", "n_steps", "modes", "exact"});
    json o;
    o["potential"] = resolve_potential(
        r, Resolver::member(sc, "potential"), join(p, "potential"),
        json{{"kind", "gaussian"}, {"amplitude", 0.05}, {"centre", 0.0}, {"width", 1.0}});
    if (o["potential"]["kind"] == "driven_harmonic")
      r.error(join(p, "potential.kind"), "scattering needs a time-independent potential");
    o["horizon"] = r.number(sc, "horizon", 10.0, p, Range::positive);
    o["n_steps"] = r.integer(sc, "n_steps", 400, p, 1);
    o["exact"] = r.boolean(sc, "exact", true, p);
    json modes = json::array();
    const json& ml = Resolver::member(sc, "modes");
    const long half = static_cast<long>(grid_json["n_x"].get<std::uint64_t>() / 2);
    if (ml.is_null()) {
      modes = json::array({json::array({4, -4}), json::array({4, 4}), json::array({4, 3})});
    } else if (!ml.is_array()) {
      r.error(join(p, "modes"), "must be an array of [k, k'] integer pairs");
    } else {
      for (std::size_t i = 0; i < ml.size(); ++i) {
        const std::string ip = fmt::format("{}.modes[{}]", p, i);
        const json& pair = ml[i];
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
            !pair[1].is_number_integer()) {
          r.error(ip, "must be an [k, k'] integer pair");
          continue;
        }
        for (const auto& k : pair)
          if (k.get<long>() < -half || k.get<long>() >= half)
            r.error(ip, fmt::format("mode {} is outside [{}, {})", k.get<long>(), -half, half));
        modes.push_back(pair);
      }
    }
    o["modes"] = modes;
    out[p] = o;
  }

  // check
  {
    const json c = r.object(Resolver::member(top, "check"), "check", {"suites"});
    auto suites = r.strings(c, "suites", {"all"}, "check");
    for (std::size_t i = 0; i < suites.size(); ++i)
      if (std::find(kSuites.begin(), kSuites.end(), suites[i]) == kSuites.end())
        r.error(fmt::format("check.suites[{}]", i),
                "'" + suites[i] + "' is not one of " + quoted_list(kSuites));
    out["check"]["suites"] = suites;
  }

  // output
  {
    const json o = r.object(Resolver::member(top, "output"), "output", {"dir"});
    const json& d = Resolver::member(o, "dir");
    if (!d.is_null() && !d.is_string()) r.error("output.dir", "must be a string");
    out["output"]["dir"] = d.is_string() ? d.get<std::string>() : std::string("qet-out");
  }

  // Semantic checks for the sections the task actually uses.
  if (grid && r.diags.empty()) {
    const bool needs_event = task == "orbit" || task == "measure" || task == "history";
    if (needs_event) {
      try {
        const auto ev = out["event"];
        if (ev["kind"] == "gaussian") {
          GaussianEventParams gp{ev["t0"], ev["sigma_t"], ev["x0"],
                                 ev["sigma_x"], ev["E0"], ev["p0"], ev["mass_tolerance"]};
          const double lost = gaussian_lost_mass(*grid, gp);
          if (lost > gp.mass_tolerance)
            r.error("event", fmt::format("Gaussian envelope loses {:.3e} of its mass outside the "
                                         "grid (tolerance {:.3e}); the event is wider than the grid",
                                         lost, gp.mass_tolerance));
        } else if (ev["kind"] == "sharp") {
          try {
            grid->time_index(ev["t"].get<double>());
          } catch (const std::invalid_argument&) {
            r.error("event.t", "must coincide with a time node of the grid");
          }
        } else if (ev["kind"] == "file") {
          try {
            const auto e = read_event(ev["path"].get<std::string>());
            if (!(e.grid() == *grid)) r.error("event.path", "event grid differs from 'grid'");
            if (e.representation() != Representation::spacetime)
              r.error("event.path", "event must be in the spacetime representation");
          } catch (const std::exception& e) {
            r.error("event.path", e.what());
          }
        }
      } catch (const std::exception& e) {
        r.error("event", e.what());
      }
    }
    if (task == "measure") check_window(r, out["measure"]["window"], "measure.window", *grid);
    if (task == "history") {
      const auto& stages = out["history"]["stages"];
      if (stages.empty()) r.error("history.stages", "at least one stage is required");
      std::vector<CompleteMeasurement> ms;
      bool windows_ok = true;
      for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::string p = fmt::format("history.stages[{}].window", i);
        const std::size_t before = r.diags.size();
        check_window(r, stages[i]["window"], p, *grid);
        if (r.diags.size() != before) {
          windows_ok = false;
          continue;
        }
        ms.push_back({{}, build_window(stages[i]["window"], *grid)});
      }
      if (windows_ok && !ms.empty()) {
        std::size_t prev_end = 0;
        for (std::size_t i = 0; i < ms.size(); ++i) {
          const auto range = *ms[i].window.time_range();
          if (i > 0 && range.first <= prev_end)
            r.error(fmt::format("history.stages[{}].window", i),
                    "windows of a history must occupy disjoint, increasing time intervals");
          prev_end = range.second;
        }
      }
    }
    if (task == "scatter" && out["scatter"]["modes"].empty())
      r.error("scatter.modes", "at least one [k, k'] pair is required");
  }

  return {out, std::move(r.diags)};
}

std::vector<Diagnostic> validate_config(const json& user, const std::filesystem::path& base_dir) {
  return resolve_config(user, base_dir).diagnostics;
}

SpacetimeGrid build_grid(const json& config) {
  const auto& g = config.at("grid");
  return make_grid(g.at("t_min").get<double>(), g.at("t_max").get<double>(),
                   g.at("n_t").get<std::size_t>(), g.at("x_min").get<double>(),
                   g.at("x_max").get<double>(), g.at("n_x").get<std::size_t>(),
                   g.at("hbar").get<double>());
}

Potential build_potential(const json& p, double mass) {
  const auto kind = p.at("kind").get<std::string>();
  if (kind == "zero") return Potential::zero();
  if (kind == "harmonic")
    return Potential::harmonic(mass, p.at("omega").get<double>(), p.at("centre").get<double>());
  if (kind == "gaussian")
    return Potential::gaussian(p.at("amplitude").get<double>(), p.at("centre").get<double>(),
                               p.at("width").get<double>());
  if (kind == "driven_harmonic")
    return Potential::driven_harmonic(mass, p.at("omega").get<double>(),
                                      p.at("force").get<double>(), p.at("drive").get<double>());
  throw std::invalid_argument("unknown potential kind '" + kind + "'");
}

HamiltonianSpec build_hamiltonian(const json& config) {
  const auto& h = config.at("hamiltonian");
  const double mass = h.at("mass").get<double>();
  return {mass, build_potential(h.at("potential"), mass)};
}

Integrator build_integrator(const json& config) {
  return integrator_from_string(config.at("integrator").get<std::string>());
}

DerivativeScheme build_scheme(const json& config) {
  return derivative_scheme_from_string(config.at("derivative_scheme").get<std::string>());
}

EventWavefunction build_event(const json& config, const SpacetimeGrid& grid,
                              const std::filesystem::path& base_dir) {
  const auto& e = config.at("event");
  const auto kind = e.at("kind").get<std::string>();
  if (kind == "gaussian") {
    GaussianEventParams p{e.at("t0"), e.at("sigma_t"), e.at("x0"), e.at("sigma_x"),
                          e.at("E0"), e.at("p0"),      e.at("mass_tolerance")};
    return gaussian_event(grid, p);
  }
  if (kind == "sharp") {
    const auto state = gaussian_state(grid, e.at("x0"), e.at("sigma_x"), e.at("p0"));
    return sharp_event(grid, grid.time_index(e.at("t").get<double>()), state);
  }
  if (kind == "plane_wave") return plane_wave(grid, e.at("E"), e.at("p"));
  std::filesystem::path path = e.at("path").get<std::string>();
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  auto ev = read_event(path);
  if (!(ev.grid() == grid)) throw QetError("event file grid differs from the configured grid");
  return ev;
}

ObservationWindow build_window(const json& window, const SpacetimeGrid& grid) {
  std::vector<WindowBox> boxes;
  for (const auto& b : window.at("boxes")) {
    const auto t = b.at("t").get<std::vector<double>>();
    const auto x = b.at("x").get<std::vector<double>>();
    const auto w = ObservationWindow::box(grid, t[0], t[1], x[0], x[1]);
    for (const auto& wb : w.boxes()) boxes.push_back(wb);
  }
  return ObservationWindow(grid, std::move(boxes));
}

std::vector<Outcome> build_partition(const json& partition, const SpacetimeGrid& grid,
                                     const HamiltonianSpec& h) {
  const auto kind = partition.at("kind").get<std::string>();
  const auto edges = partition.at("edges").get<std::vector<double>>();
  auto labels = partition.at("labels").get<std::vector<std::string>>();
  if (kind == "identity") return identity_partition(labels.at(0));
  if (kind == "position") return position_partition(edges, labels);
  if (kind == "momentum") return momentum_partition(edges, labels);
  return energy_partition(grid, h, edges, labels);
}

OperatorSpec build_operator(const std::string& name, const HamiltonianSpec& h,
                            DerivativeScheme scheme) {
  if (name == "identity") return OperatorSpec::identity();
  if (name == "time") return OperatorSpec::time();
  if (name == "position") return OperatorSpec::position();
  if (name == "momentum") return OperatorSpec::momentum(scheme);
  if (name == "energy") return OperatorSpec::energy(scheme);
  if (name == "hamiltonian") return OperatorSpec::hamiltonian_op(h, scheme);
  throw std::invalid_argument("unknown operator '" + name + "'");
}

DiscreteContinuumModel build_continuum_model(const json& config) {
  const auto& g = config.at("golden_rule");
  const auto band = g.at("band").get<std::vector<double>>();
  return DiscreteContinuumModel::flat(g.at("level_omega"), band[0], band[1],
                                      g.at("n_omega").get<std::size_t>(), g.at("density"),
                                      cplx{g.at("coupling").get<double>(), 0.0}, g.at("hbar"));
}

ScatteringSetup build_scattering(const json& config) {
  const auto& s = config.at("scatter");
  const auto& grid = config.at("grid");
  ScatteringSetup setup;
  setup.mass = config.at("hamiltonian").at("mass");
  setup.hbar = grid.at("hbar");
  setup.potential = build_potential(s.at("potential"), setup.mass);
  setup.x_min = grid.at("x_min");
  setup.x_max = grid.at("x_max");
  setup.n_x = grid.at("n_x");
  setup.horizon = s.at("horizon");
  setup.n_steps = s.at("n_steps");
  return setup;
}

}  // namespace qet
