#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "comp/comp_engine.hpp"
#include "comp/phy.hpp"
#include "comp/radio_env.hpp"

namespace comp {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument("config field '" + field + "': " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInput : public std::invalid_argument {
 public:
  EmptyInput() : std::invalid_argument("percentiles: empty input") {}
};

struct SimConfig {
  PropagationParams params;
  std::size_t n_ue = 180;
  std::size_t n_small_cells = 17;
  std::size_t t_sim = 30;  // TTIs
  std::size_t t_comp = 3;  // TTIs
  double epsilon = 0.15;
  double static_sinr_trigger_db = -3.5;
  double beta_target = 0.10;
  std::size_t cv_folds = 5;
  double train_fraction = 0.70;
  std::size_t csi_reports_per_tti = 1;
  std::vector<PolicyKind> policies{PolicyKind::Static, PolicyKind::Svm, PolicyKind::Dnn};
  bool per_ue_decisions = true;
  MeanSource mean_source = MeanSource::FreshInference;
  BlerCurve bler;
  learn::TrainingSchedule schedule;
  std::uint64_t seed = 1;

  TriggerPolicy trigger(PolicyKind kind) const {
    return {kind, static_sinr_trigger_db, epsilon, t_comp, per_ue_decisions, mean_source};
  }

  void validate() const;
  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& doc);
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, std::string("wrong type (") + e.what() + ")");
  }
}

inline void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace detail

inline void SimConfig::validate() const {
  using detail::require;
  const auto& p = params;
  require(p.path_loss_exponent > 0.0, "path_loss_exponent", "must be positive");
  require(p.shadowing_std_db >= 0.0, "shadowing_std_db", "must be non-negative");
  require(p.carrier_frequency_hz > 0.0, "carrier_frequency_hz", "must be positive");
  require(p.bandwidth_hz > 0.0, "bandwidth_hz", "must be positive");
  require(p.subcarriers_per_prb > 0, "subcarriers_per_prb", "must be positive");
  require(p.prb_count > 0, "prb_count", "must be positive");
  require(p.subcarrier_spacing_hz > 0.0, "subcarrier_spacing_hz", "must be positive");
  require(p.tti_s > 0.0, "tti_s", "must be positive");
  require(p.radio_frame_s > 0.0, "radio_frame_s", "must be positive");
  require(p.inter_site_distance_m > 0.0, "inter_site_distance_m", "must be positive");
  require(p.area_half_size_m > p.ue_min_distance_m, "area_half_size_m", "must exceed ue_min_distance_m");
  require(p.ue_speed_kmh > 0.0, "ue_speed_kmh", "must be positive");
  require(p.ue_antennas >= kMaxStreams, "ue_antennas", "joint transmission needs at least 2 receive antennas");
  require(n_ue > 0, "n_ue", "at least one UE required");
  require(t_sim > 0, "t_sim", "at least one TTI required");
  require(t_comp > 0, "t_comp", "must be at least 1 TTI");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon", "must lie in (0, 1)");
  require(std::isfinite(static_sinr_trigger_db), "static_sinr_trigger_db", "must be finite");
  require(beta_target > 0.0 && beta_target < 1.0, "beta_target", "must lie in (0, 1)");
  require(cv_folds >= 2, "cv_folds", "must be at least 2");
  require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction", "must lie in (0, 1)");
  require(csi_reports_per_tti > 0, "csi_reports_per_tti", "must be positive");
  require(!policies.empty(), "policies", "at least one policy required");
  require(std::set<PolicyKind>(policies.begin(), policies.end()).size() == policies.size(), "policies",
          "duplicate entries");
  require(bler.slope_per_db > 0.0, "bler_slope_per_db", "must be positive");
  require(schedule.learning_rate > 0.0, "learning_rate", "must be positive");
  require(schedule.batch_size > 0, "batch_size", "must be positive");
  const double coherence = coherence_time(p, p.ue_speed_mps());
  const double limit = std::min(coherence, p.radio_frame_s);
  if (static_cast<double>(t_comp) * p.tti_s > limit) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu TTIs x %g s exceeds min(coherence time %.4f s, radio frame %g s)", t_comp,
                  p.tti_s, coherence, p.radio_frame_s);
    throw ConfigError("t_comp", buf);
  }
}

inline nlohmann::json SimConfig::to_json() const {
  const auto& p = params;
  nlohmann::json pol = nlohmann::json::array();
  for (auto k : policies) pol.push_back(to_string(k));
  return {{"path_loss_exponent", p.path_loss_exponent},
          {"shadowing_std_db", p.shadowing_std_db},
          {"carrier_frequency_hz", p.carrier_frequency_hz},
          {"bandwidth_hz", p.bandwidth_hz},
          {"thermal_noise_dbm_per_hz", p.thermal_noise_dbm_per_hz},
          {"noise_figure_db", p.noise_figure_db},
          {"subcarriers_per_prb", p.subcarriers_per_prb},
          {"prb_count", p.prb_count},
          {"subcarrier_spacing_hz", p.subcarrier_spacing_hz},
          {"tti_s", p.tti_s},
          {"radio_frame_s", p.radio_frame_s},
          {"inter_site_distance_m", p.inter_site_distance_m},
          {"area_half_size_m", p.area_half_size_m},
          {"macro_power_dbm", p.macro_power_dbm},
          {"small_cell_power_dbm", p.small_cell_power_dbm},
          {"macro_antenna_gain_dbi", p.macro_antenna_gain_dbi},
          {"small_cell_antenna_gain_dbi", p.small_cell_antenna_gain_dbi},
          {"beamwidth_3db_deg", p.beamwidth_3db_deg},
          {"front_to_back_db", p.front_to_back_db},
          {"small_cell_min_separation_m", p.small_cell_min_separation_m},
          {"ue_min_distance_m", p.ue_min_distance_m},
          {"ue_speed_kmh", p.ue_speed_kmh},
          {"ue_antennas", p.ue_antennas},
          {"n_ue", n_ue},
          {"n_small_cells", n_small_cells},
          {"t_sim", t_sim},
          {"t_comp", t_comp},
          {"epsilon", epsilon},
          {"static_sinr_trigger_db", static_sinr_trigger_db},
          {"beta_target", beta_target},
          {"cv_folds", cv_folds},
          {"train_fraction", train_fraction},
          {"csi_reports_per_tti", csi_reports_per_tti},
          {"policies", pol},
          {"per_ue_decisions", per_ue_decisions},
          {"mean_source", mean_source == MeanSource::FreshInference ? "fresh" : "test"},
          {"bler_slope_per_db", bler.slope_per_db},
          {"bler_backoff_db", bler.backoff_db},
          {"learning_rate", schedule.learning_rate},
          {"batch_size", schedule.batch_size},
          {"max_epochs", schedule.max_epochs},
          {"patience_epochs", schedule.patience_epochs},
          {"seed", seed}};
}

inline SimConfig SimConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  SimConfig c;
  const auto known = c.to_json();
  for (const auto& [key, value] : doc.items())
    if (!known.contains(key)) throw ConfigError(key, "unknown key");
  using detail::read_field;
  auto& p = c.params;
  read_field(doc, "path_loss_exponent", p.path_loss_exponent);
  read_field(doc, "shadowing_std_db", p.shadowing_std_db);
  read_field(doc, "carrier_frequency_hz", p.carrier_frequency_hz);
  read_field(doc, "bandwidth_hz", p.bandwidth_hz);
  read_field(doc, "thermal_noise_dbm_per_hz", p.thermal_noise_dbm_per_hz);
  read_field(doc, "noise_figure_db", p.noise_figure_db);
  read_field(doc, "subcarriers_per_prb", p.subcarriers_per_prb);
  read_field(doc, "prb_count", p.prb_count);
  read_field(doc, "subcarrier_spacing_hz", p.subcarrier_spacing_hz);
  read_field(doc, "tti_s", p.tti_s);
  read_field(doc, "radio_frame_s", p.radio_frame_s);
  read_field(doc, "inter_site_distance_m", p.inter_site_distance_m);
  read_field(doc, "area_half_size_m", p.area_half_size_m);
  read_field(doc, "macro_power_dbm", p.macro_power_dbm);
  read_field(doc, "small_cell_power_dbm", p.small_cell_power_dbm);
  read_field(doc, "macro_antenna_gain_dbi", p.macro_antenna_gain_dbi);
  read_field(doc, "small_cell_antenna_gain_dbi", p.small_cell_antenna_gain_dbi);
  read_field(doc, "beamwidth_3db_deg", p.beamwidth_3db_deg);
  read_field(doc, "front_to_back_db", p.front_to_back_db);
  read_field(doc, "small_cell_min_separation_m", p.small_cell_min_separation_m);
  read_field(doc, "ue_min_distance_m", p.ue_min_distance_m);
  read_field(doc, "ue_speed_kmh", p.ue_speed_kmh);
  read_field(doc, "ue_antennas", p.ue_antennas);
  read_field(doc, "n_ue", c.n_ue);
  read_field(doc, "n_small_cells", c.n_small_cells);
  read_field(doc, "t_sim", c.t_sim);
  read_field(doc, "t_comp", c.t_comp);
  read_field(doc, "epsilon", c.epsilon);
  read_field(doc, "static_sinr_trigger_db", c.static_sinr_trigger_db);
  read_field(doc, "beta_target", c.beta_target);
  read_field(doc, "cv_folds", c.cv_folds);
  read_field(doc, "train_fraction", c.train_fraction);
  read_field(doc, "csi_reports_per_tti", c.csi_reports_per_tti);
  read_field(doc, "per_ue_decisions", c.per_ue_decisions);
  read_field(doc, "bler_slope_per_db", c.bler.slope_per_db);
  read_field(doc, "bler_backoff_db", c.bler.backoff_db);
  read_field(doc, "learning_rate", c.schedule.learning_rate);
  read_field(doc, "batch_size", c.schedule.batch_size);
  read_field(doc, "max_epochs", c.schedule.max_epochs);
  read_field(doc, "patience_epochs", c.schedule.patience_epochs);
  read_field(doc, "seed", c.seed);
  if (doc.contains("policies")) {
    std::vector<std::string> names;
    read_field(doc, "policies", names);
    c.policies.clear();
    for (const auto& n : names) {
      try {
        c.policies.push_back(policy_from_string(n));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("policies", e.what());
      }
    }
  }
  if (doc.contains("mean_source")) {
    std::string s;
    read_field(doc, "mean_source", s);
    if (s != "fresh" && s != "test") throw ConfigError("mean_source", "expected \"fresh\" or \"test\"");
    c.mean_source = s == "fresh" ? MeanSource::FreshInference : MeanSource::TestPredictions;
  }
  c.validate();
  return c;
}

/// Mbps carried by spectral efficiency z over the allocated PRBs.
inline double throughput_from_capacity(double z, std::size_t allocated_prbs, const PropagationParams& params) {
  if (!(z >= 0.0)) throw std::invalid_argument("throughput_from_capacity: z must be non-negative");
  return z * static_cast<double>(allocated_prbs * params.subcarriers_per_prb) * params.subcarrier_spacing_hz / 1e6;
}

struct ThroughputStats {
  double peak = 0.0;     // 95th percentile
  double average = 0.0;  // mean
  double edge = 0.0;     // 5th percentile
};

/// q-th percentile with linear interpolation between order statistics at rank q/100 (n - 1).
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyInput();
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline ThroughputStats percentiles(const std::vector<double>& values) {
  if (values.empty()) throw EmptyInput();
  double sum = 0.0;
  for (double v : values) sum += v;
  return {percentile(values, 95.0), sum / static_cast<double>(values.size()), percentile(values, 5.0)};
}

struct PolicyReport {
  PolicyKind kind = PolicyKind::Static;
  std::vector<double> per_ue_mbps;
  ThroughputStats throughput;
  double mean_bler = 0.0;  // fraction
  double mean_streams = 0.0;
  double mean_cqi = 0.0;
  double mean_rsrp_dbm = 0.0;
  std::vector<TraceRow> trace;
  std::vector<CompDecision> decisions;
  std::size_t trainings = 0;
};

struct RunReport {
  SimConfig config;
  std::vector<PolicyReport> policies;

  const PolicyReport* find(PolicyKind k) const {
    for (const auto& p : policies)
      if (p.kind == k) return &p;
    return nullptr;
  }
};

/// Optional audit hooks; `on_link` sees every LinkState the run evaluates, `on_ue_states`
/// every policy's per-UE CoMP states.
struct RunHooks {
  std::function<void(const LinkState&)> on_link;
  std::function<void(PolicyKind, std::size_t tti, const std::vector<int>&)> on_ue_states;
};

namespace detail {

/// Per-UE time-correlated Rayleigh channel, first-order Gauss-Markov with the Jakes
/// correlation J0(2 pi f_D dt) between consecutive TTIs.
class FadingProcess {
 public:
  FadingProcess(const RngStream& root, std::size_t n_ue, std::size_t n_r, double rho)
      : root_(root.substream(rng_tag::kFading)), rho_(rho), innovation_(std::sqrt(std::max(0.0, 1.0 - rho * rho))) {
    for (std::size_t u = 0; u < n_ue; ++u) {
      RngStream s = root_.substream(0, u, 0);
      channels_.push_back(sample_rayleigh_channel(s, n_r, kMaxStreams));
    }
  }

  void advance(std::size_t tti) {
    for (std::size_t u = 0; u < channels_.size(); ++u) {
      RngStream s = root_.substream(0, u, tti);
      auto& h = channels_[u];
      for (std::size_t r = 0; r < h.rows(); ++r)
        for (std::size_t c = 0; c < h.cols(); ++c) h(r, c) = rho_ * h(r, c) + innovation_ * s.complex_normal();
    }
  }

  const ComplexMatrix& channel(std::size_t ue) const { return channels_.at(ue); }

 private:
  RngStream root_;
  double rho_;
  double innovation_;
  std::vector<ComplexMatrix> channels_;
};

struct Accumulator {
  std::vector<double> mbps_sum;
  double bler = 0.0, streams = 0.0, cqi = 0.0, rsrp_dbm = 0.0;
  std::size_t samples = 0;
};

}  // namespace detail

/// Builds the per-UE link inputs for one TTI from the current geometry and fading.
inline LinkInputs link_inputs(const Layout& layout, const UserEquipment& ue, const ComplexMatrix& channel,
                              const SimConfig& config, const RngStream& root, std::size_t tti) {
  const auto& p = config.params;
  const auto& serving = layout.stations.at(ue.coop_set.at(0));
  const auto& coop = layout.stations.at(ue.coop_set.at(1));
  LinkInputs in;
  in.ue_id = ue.id;
  in.tti = tti;
  in.channel = channel;
  in.path_loss_exponent = p.path_loss_exponent;
  in.serving = {large_scale_gain(serving, ue, p, root), serving.max_power_w, distance(serving.position, ue.position)};
  in.coop = {large_scale_gain(coop, ue, p, root), coop.max_power_w, distance(coop.position, ue.position)};
  double interference = 0.0;
  for (const auto& bs : layout.stations)
    if (bs.id != serving.id && bs.id != coop.id) interference += received_power(bs, ue, p, root);
  in.noise_variance_w = p.noise_variance_w() + interference;
  in.coop_interference_w = in.coop.gain * in.coop.tx_power_w * std::pow(in.coop.distance_m, -p.path_loss_exponent);
  in.rsrp_w = csi_rsrp(in.serving.gain, in.serving.tx_power_w, in.serving.distance_m, p.path_loss_exponent, 1,
                       p.subcarriers_per_prb, p.prb_count);
  in.reported_cqi = sinr_to_cqi(linear_to_db(single_stream_sinr(in)));
  return in;
}

/// Round-robin equal share: each cell splits its PRBs as evenly as possible over the UEs
/// it transmits to, the N mod n leftover PRBs rotating with the TTI. A joint-transmission
/// UE occupies PRBs at both cells and gets the smaller of its two allocations.
inline std::vector<std::size_t> allocate_prbs(const Layout& layout, const std::vector<int>& states,
                                              std::size_t prb_count, std::size_t tti = 0) {
  std::vector<std::vector<std::size_t>> served(layout.stations.size());
  for (std::size_t u = 0; u < layout.ues.size(); ++u) {
    served[layout.ues[u].coop_set[0]].push_back(u);
    if (states[u]) served[layout.ues[u].coop_set[1]].push_back(u);
  }
  std::vector<std::size_t> out(layout.ues.size(), prb_count);
  for (const auto& ues : served) {
    const std::size_t n = ues.size();
    if (n == 0) continue;
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t share = prb_count / n + ((pos + tti) % n < prb_count % n ? 1 : 0);
      out[ues[pos]] = std::min(out[ues[pos]], share);
    }
  }
  return out;
}

/// Runs every configured policy over the same mobility and channel realizations.
inline RunReport run(const SimConfig& config, std::optional<Layout> layout_override = std::nullopt,
                     const RunHooks& hooks = {}) {
  config.validate();
  const auto& p = config.params;
  const RngStream root(config.seed);
  Layout layout = layout_override ? std::move(*layout_override)
                                  : generate_layout(root, p, config.n_ue, config.n_small_cells);
  const std::size_t n_ue = layout.ues.size();
  if (n_ue == 0) throw ConfigError("n_ue", "layout holds no UEs");

  const double rho = std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * doppler_hz(p, p.ue_speed_mps()) * p.tti_s);
  std::size_t n_r = kMaxStreams;
  for (const auto& ue : layout.ues) n_r = std::max(n_r, ue.n_r);
  detail::FadingProcess fading(root, n_ue, n_r, rho);
  RngStream mobility = root.substream(rng_tag::kMobility);

  learn::GridSearchOptions search;
  search.folds = config.cv_folds;
  search.train_fraction = config.train_fraction;
  search.fit.schedule = config.schedule;

  std::vector<PolicyEngine> engines;
  std::vector<detail::Accumulator> acc(config.policies.size());
  for (std::size_t k = 0; k < config.policies.size(); ++k) {
    const auto kind = config.policies[k];
    engines.emplace_back(config.trigger(kind), n_ue, config.csi_reports_per_tti, LearnerSettings{search, {}},
                         mix64(config.seed ^ (0x1000 + static_cast<std::uint64_t>(kind))));
    acc[k].mbps_sum.assign(n_ue, 0.0);
  }

  std::vector<LinkState> single(n_ue), joint(n_ue);
  std::vector<double> sinr_db(n_ue);
  std::vector<MeasurementRecord> records(n_ue);
  for (std::size_t tti = 1; tti <= config.t_sim; ++tti) {
    if (tti > 1) {
      move_ues(layout.ues, p.tti_s, mobility, p.area_half_size_m);
      fading.advance(tti);
    }
    for (std::size_t u = 0; u < n_ue; ++u) {
      const auto& ue = layout.ues[u];
      const ComplexMatrix h = fading.channel(u).columns(0, kMaxStreams);
      ComplexMatrix trimmed(ue.n_r, kMaxStreams);
      for (std::size_t r = 0; r < ue.n_r; ++r)
        for (std::size_t c = 0; c < kMaxStreams; ++c) trimmed(r, c) = h(r, c);
      const auto in = link_inputs(layout, ue, trimmed, config, root, tti);
      sinr_db[u] = linear_to_db(single_stream_sinr(in));
      single[u] = evaluate_link(in, 1, config.bler, config.beta_target);
      joint[u] = evaluate_link(in, 2, config.bler, config.beta_target);
      records[u] = make_record(joint[u], sinr_db[u]);
      if (hooks.on_link) {
        hooks.on_link(single[u]);
        hooks.on_link(joint[u]);
      }
    }
    for (std::size_t k = 0; k < engines.size(); ++k) {
      const auto states = engines[k].states(tti, sinr_db);
      if (hooks.on_ue_states) hooks.on_ue_states(config.policies[k], tti, states);
      const auto prbs = allocate_prbs(layout, states, p.prb_count, tti);
      auto& a = acc[k];
      for (std::size_t u = 0; u < n_ue; ++u) {
        const auto& link = states[u] ? joint[u] : single[u];
        a.mbps_sum[u] += throughput_from_capacity(link.penalized_capacity, prbs[u], p);
        a.bler += link.aggregate_bler;
        a.streams += static_cast<double>(link.n_s);
        a.cqi += link.cqi;
        a.rsrp_dbm += link.rsrp_dbm();
        ++a.samples;
      }
      engines[k].observe(tti, records);
    }
  }

  RunReport report;
  report.config = config;
  for (std::size_t k = 0; k < engines.size(); ++k) {
    PolicyReport pr;
    pr.kind = config.policies[k];
    const auto& a = acc[k];
    for (double s : a.mbps_sum) pr.per_ue_mbps.push_back(s / static_cast<double>(config.t_sim));
    pr.throughput = percentiles(pr.per_ue_mbps);
    const auto n = static_cast<double>(a.samples);
    pr.mean_bler = a.bler / n;
    pr.mean_streams = a.streams / n;
    pr.mean_cqi = a.cqi / n;
    pr.mean_rsrp_dbm = a.rsrp_dbm / n;
    pr.trace = engines[k].trace();
    pr.decisions = engines[k].decisions();
    if (const auto* l = engines[k].learner()) pr.trainings = l->trainings();
    report.policies.push_back(std::move(pr));
  }
  return report;
}

namespace detail {

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0.0" || s == "-0.0000") s.erase(0, 1);
  return s;
}

inline std::string gain(double value, const PolicyReport* base, double ThroughputStats::*field) {
  if (!base || !(base->throughput.*field > 0.0)) return "";
  return fixed((value - base->throughput.*field) / (base->throughput.*field) * 100.0, 1);
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << body;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace detail

inline constexpr const char* kThroughputHeader =
    "policy,peak_mbps,peak_gain_pct,average_mbps,average_gain_pct,edge_mbps,edge_gain_pct";
inline constexpr const char* kLinkLevelHeader = "policy,mean_bler_pct,mean_n_s,mean_cqi,mean_rsrp_dbm";
inline constexpr const char* kDecisionsHeader = "tti,policy,state,source,xi";

/// Writes throughput.csv, linklevel.csv, decisions.csv and config.json into `dir`.
inline void emit_reports(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  using detail::fixed;
  using detail::gain;
  const PolicyReport* base = report.find(PolicyKind::Static);

  std::string tp = std::string(kThroughputHeader) + "\n";
  for (const auto& p : report.policies) {
    const auto& t = p.throughput;
    tp += to_string(p.kind) + "," + fixed(t.peak, 2) + "," + gain(t.peak, base, &ThroughputStats::peak) + "," +
          fixed(t.average, 2) + "," + gain(t.average, base, &ThroughputStats::average) + "," + fixed(t.edge, 2) +
          "," + gain(t.edge, base, &ThroughputStats::edge) + "\n";
  }
  std::string ll = std::string(kLinkLevelHeader) + "\n";
  for (const auto& p : report.policies)
    ll += to_string(p.kind) + "," + fixed(p.mean_bler * 100.0, 2) + "," + fixed(p.mean_streams, 2) + "," +
          fixed(p.mean_cqi, 2) + "," + fixed(p.mean_rsrp_dbm, 2) + "\n";
  std::string dc = std::string(kDecisionsHeader) + "\n";
  for (const auto& p : report.policies)
    for (const auto& row : p.trace)
      dc += std::to_string(row.tti) + "," + to_string(p.kind) + "," + std::to_string(row.state) + "," +
            to_string(row.source) + "," + (row.xi ? fixed(*row.xi, 4) : "") + "\n";

  detail::write_file(dir / "throughput.csv", tp);
  detail::write_file(dir / "linklevel.csv", ll);
  detail::write_file(dir / "decisions.csv", dc);
  detail::write_file(dir / "config.json", report.config.to_json().dump(2) + "\n");
}

}  // namespace comp
