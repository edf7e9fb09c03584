#pragma once

// Experiment manifests: INI configuration, figure presets, canonical text and
// hash, and the output writers that stamp every file with both.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "cvqkd/channel.hpp"
#include "cvqkd/classifier.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/mitigation.hpp"
#include "cvqkd/params.hpp"

namespace cvqkd {

struct AxisSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 1;

  std::vector<double> values() const {
    if (points == 0) throw invalid_input("axis: need at least one point");
    return SweepGrid::linspace(lo, hi, points);
  }
};

struct ClassifierSpec {
  double total_length_km = 40.0;
  double d_eve_km = 10.0;
  double sigma_rin_lo = 0.01;
  double g_ca = 1.12;
  double g_cados = 1.12;
  double p_cados = 0.94;
  double g_dos = 0.9;
  double p_dos = 0.9;
  std::size_t samples_per_vector = 1000;
  std::size_t vectors_per_class = 800;
  std::size_t test_per_class = 160;
  TreeParams tree;
};

struct SweepSpec {
  AttackKind attack = AttackKind::ca;
  double f_attack = 0.5;
  double loss_prime_db_per_km = 0.15;
  AxisSpec d_eve{0.0, 40.0, 50};
  AxisSpec sigma{0.0, 0.1, 50};
  double false_negative = 0.0;
  double false_positive = 0.0;
  double v_a_lo = 1.0;
  double v_a_hi = 10.0;
};

struct FrequencySpec {
  double d_eve_km = 39.0;
  double sigma_rin_lo = 0.098;
  AxisSpec f{0.0, 1.0, 101};
};

struct ExperimentManifest {
  std::string name = "default";
  std::string figure;
  LinkConfig link;
  FiniteSizeConfig finite;
  bool asymptotic = false;
  ClassifierSpec classifier;
  SweepSpec sweep;
  FrequencySpec frequency;
  std::uint64_t seed = 1;

  std::optional<FiniteSizeConfig> finite_or_none() const {
    return asymptotic ? std::nullopt : std::optional<FiniteSizeConfig>(finite);
  }

  AttackScenario scenario() const {
    const ClassifierSpec& c = classifier;
    AttackScenario s = AttackScenario::build(name, c.total_length_km, c.d_eve_km, c.sigma_rin_lo,
                                             c.g_ca, c.g_cados, c.p_cados, c.g_dos, c.p_dos,
                                             link.loss_db_per_km);
    s.samples_per_vector = c.samples_per_vector;
    s.vectors_per_class = c.vectors_per_class;
    s.test_per_class = c.test_per_class;
    for (const auto& a : s.configs) a.validate(c.total_length_km);
    s.validate();
    return s;
  }

  SweepGrid grid() const {
    if (sweep.d_eve.points == 0 || sweep.sigma.points == 0)
      throw invalid_input("sweep: empty grid (set d_eve_points and sigma_points >= 1, or use --figure 4)");
    SweepGrid g;
    g.link = link;
    g.finite = finite_or_none();
    g.attack = sweep.attack;
    g.f_attack = sweep.f_attack;
    g.loss_prime_db_per_km = sweep.loss_prime_db_per_km;
    g.d_eve_values = sweep.d_eve.values();
    g.sigma_values = sweep.sigma.values();
    g.misclassification = {sweep.false_negative, sweep.false_positive};
    g.va_range = {sweep.v_a_lo, sweep.v_a_hi};
    g.validate();
    return g;
  }

  std::vector<double> f_values() const {
    if (frequency.f.points == 0) throw invalid_input("frequency: need at least one f point");
    return frequency.f.values();
  }

  void validate() const {
    link.validate();
    finite.validate();
  }
};

namespace detail {

inline std::string fmt_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string to_string(DetectorNoise d) {
  return d == DetectorNoise::trusted ? "trusted" : "untrusted";
}

inline DetectorNoise detector_from_string(const std::string& s) {
  if (s == "trusted") return DetectorNoise::trusted;
  if (s == "untrusted") return DetectorNoise::untrusted;
  throw invalid_input("link.detector_noise must be 'trusted' or 'untrusted', got '" + s + "'");
}

// Visits every manifest field with its INI key. `real`, `count`, `text`
// callbacks receive a reference so the same table serves reading and writing.
template <class Real, class Count, class Text>
void visit_fields(ExperimentManifest& m, Real&& real, Count&& count, Text&& text) {
  text("scenario.name", m.name);
  text("scenario.figure", m.figure);
  count("run.seed", m.seed);

  real("link.beta", m.link.beta);
  real("link.eta", m.link.eta);
  real("link.v_el", m.link.v_el);
  real("link.n0", m.link.n0);
  real("link.v_a", m.link.v_a);
  real("link.xi_b", m.link.xi_b);
  real("link.sigma_rin_lo", m.link.sigma_rin_lo);
  real("link.loss_db_per_km", m.link.loss_db_per_km);
  real("link.total_length_km", m.link.total_length_km);
  std::string det = to_string(m.link.detector_noise);
  text("link.detector_noise", det);
  m.link.detector_noise = detector_from_string(det);

  std::string asym = m.asymptotic ? "true" : "false";
  text("finite_size.asymptotic", asym);
  if (asym != "true" && asym != "false")
    throw invalid_input("finite_size.asymptotic must be true or false");
  m.asymptotic = asym == "true";
  real("finite_size.block_size", m.finite.block_size);
  real("finite_size.pe_symbols", m.finite.pe_symbols);
  real("finite_size.eps_pe", m.finite.eps_pe);
  real("finite_size.eps_cor", m.finite.eps_cor);
  real("finite_size.eps_h", m.finite.eps_h);
  real("finite_size.eps_s", m.finite.eps_s);
  real("finite_size.p_ec", m.finite.p_ec);
  real("finite_size.d_alphabet", m.finite.d_alphabet);
  real("finite_size.v0", m.finite.v0);
  real("finite_size.c_pe", m.finite.c_pe);

  ClassifierSpec& c = m.classifier;
  real("classifier.total_length_km", c.total_length_km);
  real("classifier.d_eve_km", c.d_eve_km);
  real("classifier.sigma_rin_lo", c.sigma_rin_lo);
  real("classifier.g_ca", c.g_ca);
  real("classifier.g_cados", c.g_cados);
  real("classifier.p_cados", c.p_cados);
  real("classifier.g_dos", c.g_dos);
  real("classifier.p_dos", c.p_dos);
  count("classifier.samples_per_vector", c.samples_per_vector);
  count("classifier.vectors_per_class", c.vectors_per_class);
  count("classifier.test_per_class", c.test_per_class);
  std::size_t depth = static_cast<std::size_t>(c.tree.max_depth);
  count("classifier.max_depth", depth);
  c.tree.max_depth = static_cast<int>(depth);
  count("classifier.min_samples_leaf", c.tree.min_samples_leaf);

  SweepSpec& s = m.sweep;
  std::string kind(cvqkd::to_string(s.attack));
  text("sweep.attack", kind);
  s.attack = attack_kind_from_string(kind);
  real("sweep.f_attack", s.f_attack);
  real("sweep.loss_prime_db_per_km", s.loss_prime_db_per_km);
  real("sweep.d_eve_min", s.d_eve.lo);
  real("sweep.d_eve_max", s.d_eve.hi);
  count("sweep.d_eve_points", s.d_eve.points);
  real("sweep.sigma_min", s.sigma.lo);
  real("sweep.sigma_max", s.sigma.hi);
  count("sweep.sigma_points", s.sigma.points);
  real("sweep.false_negative", s.false_negative);
  real("sweep.false_positive", s.false_positive);
  real("sweep.v_a_min", s.v_a_lo);
  real("sweep.v_a_max", s.v_a_hi);

  real("frequency.d_eve_km", m.frequency.d_eve_km);
  real("frequency.sigma_rin_lo", m.frequency.sigma_rin_lo);
  real("frequency.f_min", m.frequency.f.lo);
  real("frequency.f_max", m.frequency.f.hi);
  count("frequency.f_points", m.frequency.f.points);
}

}  // namespace detail

/// Preset for a published figure: "3a".."3d", "4", "5", "6", "appendix-d".
inline ExperimentManifest figure_preset(const std::string& id) {
  ExperimentManifest m;
  m.figure = id;
  m.name = "figure-" + id;
  if (id.size() == 2 && id[0] == '3' && id[1] >= 'a' && id[1] <= 'd') {
    const bool near = id[1] == 'c' || id[1] == 'd';
    const bool noisy = id[1] == 'b' || id[1] == 'd';
    ClassifierSpec& c = m.classifier;
    c.d_eve_km = near ? 1.0 : 10.0;
    c.sigma_rin_lo = noisy ? 0.1 : 0.01;
    c.g_ca = c.g_cados = near ? 1.01 : 1.12;
    c.p_cados = near ? 0.99 : 0.94;
    c.g_dos = 0.9;
    c.p_dos = 0.9;
  } else if (id == "4") {
    m.sweep.attack = AttackKind::ca;
  } else if (id == "5") {
    m.sweep.attack = AttackKind::ca;
  } else if (id == "6") {
    m.sweep.attack = AttackKind::ca_dos;
  } else if (id == "appendix-d" || id == "8") {
    m.figure = "appendix-d";
    m.name = "figure-appendix-d";
    m.sweep.attack = AttackKind::ca;
    m.finite = FiniteSizeConfig::with_block(1e8, 0.1);
  } else {
    throw invalid_input("unknown figure '" + id + "' (expected 3a, 3b, 3c, 3d, 4, 5, 6, appendix-d)");
  }
  return m;
}

/// Apply INI overrides on top of `base`. Unknown keys are rejected.
inline ExperimentManifest apply_ini(ExperimentManifest m, const boost::property_tree::ptree& pt) {
  std::vector<std::string> known;
  const auto seen = [&](const std::string& k) { known.push_back(k); };
  detail::visit_fields(
      m,
      [&](const std::string& k, double& v) {
        seen(k);
        if (auto o = pt.get_optional<std::string>(k)) {
          try {
            std::size_t used = 0;
            v = std::stod(*o, &used);
            if (used != o->size()) throw std::invalid_argument(k);
          } catch (const std::logic_error&) {
            throw invalid_input("config: '" + k + "' is not a number: '" + *o + "'");
          }
        }
      },
      [&](const std::string& k, auto& v) {
        seen(k);
        if (auto o = pt.get_optional<std::string>(k)) {
          if (o->empty() || o->find_first_not_of("0123456789") != std::string::npos)
            throw invalid_input("config: '" + k + "' must be a non-negative integer: '" + *o + "'");
          try {
            v = static_cast<std::remove_reference_t<decltype(v)>>(std::stoull(*o));
          } catch (const std::out_of_range&) {
            throw invalid_input("config: '" + k + "' out of range");
          }
        }
      },
      [&](const std::string& k, std::string& v) {
        seen(k);
        if (auto o = pt.get_optional<std::string>(k)) v = *o;
      });
  for (const auto& [section, body] : pt) {
    if (body.empty()) throw invalid_input("config: key '" + section + "' outside a section");
    for (const auto& [key, _] : body) {
      const std::string full = section + "." + key;
      if (std::find(known.begin(), known.end(), full) == known.end())
        throw invalid_input("config: unknown key '" + full + "'");
    }
  }
  m.validate();
  return m;
}

/// Build a manifest from an INI stream. A figure named in the file, or
/// `figure_override` when non-empty, selects the preset underneath.
inline ExperimentManifest load_manifest(std::istream& is, const std::string& figure_override = "") {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw invalid_input(std::string("config: ") + e.what());
  }
  std::string fig = figure_override.empty() ? pt.get<std::string>("scenario.figure", "") : figure_override;
  ExperimentManifest base = fig.empty() ? ExperimentManifest{} : figure_preset(fig);
  ExperimentManifest m = apply_ini(base, pt);
  if (!fig.empty()) m.figure = base.figure;
  return m;
}

inline ExperimentManifest load_manifest_file(const std::filesystem::path& path,
                                             const std::string& figure_override = "") {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config '" + path.string() + "'");
  return load_manifest(in, figure_override);
}

/// Every field in a fixed order, INI formatted; the input to the hash.
inline std::string canonical_text(const ExperimentManifest& manifest) {
  ExperimentManifest m = manifest;
  std::ostringstream os;
  std::string section;
  const auto emit = [&](const std::string& k, const std::string& v) {
    const auto dot = k.find('.');
    const std::string sec = k.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << k.substr(dot + 1) << " = " << v << '\n';
  };
  detail::visit_fields(
      m, [&](const std::string& k, double& v) { emit(k, detail::fmt_real(v)); },
      [&](const std::string& k, auto& v) { emit(k, std::to_string(v)); },
      [&](const std::string& k, std::string& v) { emit(k, v); });
  return os.str();
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string manifest_hash(const ExperimentManifest& m) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical_text(m));
  return os.str();
}

inline nlohmann::json manifest_json(const ExperimentManifest& manifest) {
  ExperimentManifest m = manifest;
  nlohmann::json j;
  const auto put = [&](const std::string& k, nlohmann::json v) {
    const auto dot = k.find('.');
    j[k.substr(0, dot)][k.substr(dot + 1)] = std::move(v);
  };
  detail::visit_fields(
      m, [&](const std::string& k, double& v) { put(k, v); },
      [&](const std::string& k, auto& v) { put(k, v); },
      [&](const std::string& k, std::string& v) { put(k, v); });
  return j;
}

/// Writes output files under one directory. CSVs begin with `#` lines
/// carrying the manifest hash and seed; JSON sidecars add a UTC timestamp.
class OutputWriter {
 public:
  OutputWriter(std::filesystem::path dir, const ExperimentManifest& m)
      : dir_(std::move(dir)), manifest_(m), hash_(manifest_hash(m)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw io_error("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  const std::string& hash() const { return hash_; }
  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path csv(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    return write(name, [&](std::ostream& os) {
      os << "# manifest_hash=" << hash_ << '\n';
      os << "# seed=" << manifest_.seed << '\n';
      body(os);
    });
  }

  std::filesystem::path json(const std::string& name, nlohmann::json payload) const {
    payload["manifest"] = manifest_json(manifest_);
    payload["manifest_hash"] = hash_;
    payload["seed"] = manifest_.seed;
    payload["timestamp"] = utc_timestamp();
    return write(name, [&](std::ostream& os) { os << payload.dump(2) << '\n'; });
  }

  std::filesystem::path text(const std::string& name, const std::string& content) const {
    return write(name, [&](std::ostream& os) { os << content; });
  }

 private:
  static std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
  }

  std::filesystem::path write(const std::string& name,
                              const std::function<void(std::ostream&)>& body) const {
    const std::filesystem::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw io_error("cannot open '" + p.string() + "' for writing");
    body(out);
    out.flush();
    if (!out) throw io_error("write failed for '" + p.string() + "'");
    return p;
  }

  std::filesystem::path dir_;
  ExperimentManifest manifest_;
  std::string hash_;
};

}  // namespace cvqkd
