#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "ktb/errors.hpp"
#include "ktb/graph_germ.hpp"

namespace ktb::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

const std::set<std::string> kBodyKeys = {"kind",   "dimension", "radius", "semi_axes",
                                         "matrix", "center",    "exponent"};

const std::set<std::string> kExperimentKeys = {
    "seed",      "lines",      "steps",      "line_point",     "line_direction", "directions",
    "patch_scale", "samples",  "m_max",      "multistarts",    "tol",            "points",
    "p_min",     "p_max",      "p_steps",    "direction_angle"};

bool is_germ_key(const std::string& key) {
  return key.size() > 3 && key.rfind("c[", 0) == 0 && key.back() == ']';
}

std::vector<int> germ_exponents(const ConfigEntry& entry, const std::string& key) {
  std::vector<int> e;
  std::stringstream ss(key.substr(2, key.size() - 3));
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(trim(part), &used);
      if (used != trim(part).size() || v < 0) throw std::invalid_argument(part);
      e.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad germ coefficient index '" + key + "'", entry.line);
    }
  }
  if (e.empty()) throw ConfigError("bad germ coefficient index '" + key + "'", entry.line);
  return e;
}

double parse_double(const std::string& token, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + token + "'", line);
  }
}

}  // namespace

const ConfigEntry& ConfigSection::at(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) {
    const std::string where = type == "body" ? "[body " + label + "]" : "[" + type + "]";
    throw ConfigError("missing key '" + key + "' in " + where, line);
  }
  return it->second;
}

std::string ConfigSection::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? at(key).value : fallback;
}

double ConfigSection::number(const std::string& key) const {
  const ConfigEntry& e = at(key);
  return parse_double(e.value, e.line, key);
}

double ConfigSection::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long long ConfigSection::integer(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const ConfigEntry& e = at(key);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + e.value + "'", e.line);
  }
}

std::uint64_t ConfigSection::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const ConfigEntry& e = at(key);
  try {
    std::size_t used = 0;
    if (!e.value.empty() && e.value[0] == '-') throw std::invalid_argument(e.value);
    const unsigned long long v = std::stoull(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + e.value + "'", e.line);
  }
}

Vec ConfigSection::vector(const std::string& key) const {
  const ConfigEntry& e = at(key);
  std::stringstream ss(e.value);
  std::vector<double> values;
  std::string token;
  while (ss >> token) values.push_back(parse_double(token, e.line, key));
  if (values.empty()) throw ConfigError("'" + key + "' is empty", e.line);
  Vec v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return v;
}

Mat ConfigSection::matrix(const std::string& key) const {
  const ConfigEntry& e = at(key);
  std::stringstream rows(e.value);
  std::string row;
  std::vector<std::vector<double>> data;
  while (std::getline(rows, row, ';')) {
    std::stringstream ss(row);
    std::vector<double> r;
    std::string token;
    while (ss >> token) r.push_back(parse_double(token, e.line, key));
    if (!r.empty()) data.push_back(r);
  }
  if (data.empty()) throw ConfigError("'" + key + "' is empty", e.line);
  for (const auto& r : data) {
    if (r.size() != data.front().size()) throw ConfigError("'" + key + "' has rows of different lengths", e.line);
  }
  Mat m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.front().size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
    }
  }
  return m;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig cfg;
  cfg.experiment_.type = "experiment";
  ConfigSection* current = nullptr;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      std::stringstream ss(s.substr(1, s.size() - 2));
      std::string type;
      std::string label;
      std::string extra;
      ss >> type >> label >> extra;
      if (!extra.empty()) throw ConfigError("unexpected text in section header", line);
      if (type == "body") {
        if (label.empty()) throw ConfigError("body section needs a label, e.g. [body K]", line);
        if (cfg.bodies_.count(label) != 0) throw ConfigError("body '" + label + "' defined twice", line);
        ConfigSection& sec = cfg.bodies_[label];
        sec.type = "body";
        sec.label = label;
        sec.line = line;
        current = &sec;
      } else if (type == "experiment" && label.empty()) {
        if (cfg.experiment_.line != 0) throw ConfigError("[experiment] defined twice", line);
        cfg.experiment_.line = line;
        current = &cfg.experiment_;
      } else {
        throw ConfigError("unknown section '" + s + "'", line);
      }
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    if (current == nullptr) throw ConfigError("key outside of any section", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line);
    if (value.empty()) throw ConfigError("empty value for '" + key + "'", line);
    const bool known = current->type == "body" ? (kBodyKeys.count(key) != 0 || is_germ_key(key))
                                               : kExperimentKeys.count(key) != 0;
    if (!known) throw ConfigError("unknown key '" + key + "'", line);
    if (current->has(key)) throw ConfigError("duplicate key '" + key + "'", line);
    current->entries[key] = {value, line};
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in);
}

bool ExperimentConfig::has_body(const std::string& label) const { return bodies_.count(label) != 0; }

const ConfigSection& ExperimentConfig::body_section(const std::string& label) const {
  const auto it = bodies_.find(label);
  if (it == bodies_.end()) throw ConfigError("missing [body " + label + "] section");
  return it->second;
}

BodyPtr ExperimentConfig::body(const std::string& label) const { return make_body(body_section(label)); }

BodyPtr make_body(const ConfigSection& s) {
  const std::string kind = s.at("kind").value;
  const int kind_line = s.at("kind").line;
  auto center_for = [&](int n) -> Vec {
    if (!s.has("center")) return Vec::Zero(n);
    const Vec c = s.vector("center");
    if (c.size() != n) throw ConfigError("center has the wrong dimension", s.at("center").line);
    return c;
  };
  auto positive_axes = [&]() {
    const Vec axes = s.vector("semi_axes");
    if ((axes.array() <= 0.0).any()) throw ConfigError("semi_axes must be positive", s.at("semi_axes").line);
    return axes;
  };
  auto positive_number = [&](const std::string& key, double fallback) {
    const double v = s.number(key, fallback);
    if (!(v > 0.0)) throw ConfigError("'" + key + "' must be positive", s.at(key).line);
    return v;
  };
  try {
    if (kind == "ball") {
      const int n = static_cast<int>(s.integer("dimension", 2));
      if (n < 2) throw ConfigError("dimension must be at least 2", s.at("dimension").line);
      return Ellipsoid::ball(n, positive_number("radius", 1.0), center_for(n));
    }
    if (kind == "ellipsoid") {
      if (s.has("matrix")) {
        const Mat a = s.matrix("matrix");
        if (a.rows() != a.cols()) throw ConfigError("matrix must be square", s.at("matrix").line);
        if ((a - a.transpose()).norm() > 1e-12 * (1.0 + a.norm())) {
          throw ConfigError("matrix must be symmetric", s.at("matrix").line);
        }
        return Ellipsoid::make(a, center_for(static_cast<int>(a.rows())));
      }
      const Vec axes = positive_axes();
      return Ellipsoid::with_semi_axes(axes, center_for(static_cast<int>(axes.size())));
    }
    if (kind == "superellipsoid") {
      const Vec axes = positive_axes();
      return Superellipsoid::make(axes, s.number("exponent"), center_for(static_cast<int>(axes.size())));
    }
    if (kind == "germ") {
      int nvars = -1;
      int order = 5;
      std::vector<std::pair<std::vector<int>, double>> terms;
      for (const auto& [key, entry] : s.entries) {
        if (!is_germ_key(key)) continue;
        std::vector<int> e = germ_exponents(entry, key);
        if (nvars < 0) nvars = static_cast<int>(e.size());
        if (static_cast<int>(e.size()) != nvars) {
          throw ConfigError("germ coefficient indices have different lengths", entry.line);
        }
        int deg = 0;
        for (int x : e) deg += x;
        order = std::max(order, deg);
        terms.emplace_back(std::move(e), parse_double(entry.value, entry.line, key));
      }
      if (nvars < 1) throw ConfigError("germ body needs coefficients c[i,...]", s.line);
      TaylorSeries h(nvars, order);
      for (const auto& [e, v] : terms) h.set_coeff(std::span<const int>(e.data(), e.size()), v);
      return GraphGermBody::make(GraphGerm(h), positive_number("radius", 0.5));
    }
  } catch (const NumericError& e) {
    throw ConfigError(std::string("invalid body: ") + e.what(), s.line);
  }
  throw ConfigError("unknown body kind '" + kind + "'", kind_line);
}

}  // namespace ktb::cli
