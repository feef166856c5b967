#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "comp/numerics.hpp"
#include "comp/units.hpp"

namespace comp {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

struct Position {
  double x = 0.0;  // meters
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class BsKind { MacroSector, SmallCell };

struct BaseStation {
  std::size_t id = 0;
  BsKind kind = BsKind::MacroSector;
  Position position;
  double azimuth_deg = 0.0;  // boresight, macro sectors only
  double max_power_w = 0.0;
  double antenna_gain = 1.0;  // linear
};

struct UserEquipment {
  std::size_t id = 0;
  Position position;
  double heading_rad = 0.0;
  double speed_mps = 0.0;
  std::size_t n_r = 2;
  std::size_t serving_bs = 0;
  std::vector<std::size_t> coop_set;  // serving first, then the strongest other BS
};

/// Radio environment parameters. Defaults describe a sub-6 GHz urban NR FDD carrier.
struct PropagationParams {
  double path_loss_exponent = 3.7;
  double shadowing_std_db = 8.0;
  double carrier_frequency_hz = 2.1e9;
  double bandwidth_hz = 10e6;
  double thermal_noise_dbm_per_hz = -174.0;
  double noise_figure_db = 9.0;
  std::size_t subcarriers_per_prb = 12;
  std::size_t prb_count = 50;
  double subcarrier_spacing_hz = 15e3;
  double tti_s = 1e-3;
  double radio_frame_s = 10e-3;

  double inter_site_distance_m = 500.0;
  double area_half_size_m = 750.0;  // square service area centred on the middle site
  double macro_power_dbm = 46.0;
  double small_cell_power_dbm = 37.0;
  double macro_antenna_gain_dbi = 15.0;
  double small_cell_antenna_gain_dbi = 5.0;
  double beamwidth_3db_deg = 65.0;
  double front_to_back_db = 25.0;
  double small_cell_min_separation_m = 40.0;  // from any macro site
  double ue_min_distance_m = 10.0;            // from any base station
  double ue_speed_kmh = 5.0;
  std::size_t ue_antennas = 2;

  /// Thermal noise power over the carrier bandwidth, watts.
  double noise_variance_w() const {
    return dbm_to_watts(thermal_noise_dbm_per_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
  }
  double ue_speed_mps() const { return ue_speed_kmh / 3.6; }
};

/// c / (v f_c).
inline double coherence_time(const PropagationParams& params, double speed_mps) {
  if (!(speed_mps > 0.0) || !(params.carrier_frequency_hz > 0.0))
    throw std::invalid_argument("coherence_time: speed and carrier frequency must be positive");
  return kSpeedOfLight / (speed_mps * params.carrier_frequency_hz);
}

inline double doppler_hz(const PropagationParams& params, double speed_mps) {
  return speed_mps * params.carrier_frequency_hz / kSpeedOfLight;
}

/// Parabolic sector pattern in dB, -min(12 (theta/theta_3dB)^2, A_max).
inline double sector_pattern_db(double offset_deg, double beamwidth_deg, double front_to_back_db) {
  double wrapped = std::fmod(offset_deg + 180.0, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  wrapped -= 180.0;
  const double ratio = wrapped / beamwidth_deg;
  return -std::min(12.0 * ratio * ratio, front_to_back_db);
}

class ZeroDistance : public std::domain_error {
 public:
  ZeroDistance() : std::domain_error("UE coincides with base station position") {}
};

namespace rng_tag {
inline constexpr std::uint64_t kLayout = 0x4c41594f;
inline constexpr std::uint64_t kShadowing = 0x53484144;
inline constexpr std::uint64_t kMobility = 0x4d4f4249;
inline constexpr std::uint64_t kFading = 0x46414445;
}  // namespace rng_tag

/// Antenna pattern times log-normal shadowing; excludes the d^-alpha term.
/// Shadowing is keyed by the (bs, ue) pair so it stays fixed for the whole run.
inline double large_scale_gain(const BaseStation& bs, const UserEquipment& ue,
                               const PropagationParams& params, const RngStream& rng) {
  if (distance(bs.position, ue.position) <= 0.0) throw ZeroDistance();
  double pattern_db = 0.0;
  if (bs.kind == BsKind::MacroSector) {
    const double angle_deg = std::atan2(ue.position.y - bs.position.y, ue.position.x - bs.position.x) *
                             180.0 / std::numbers::pi;
    pattern_db = sector_pattern_db(angle_deg - bs.azimuth_deg, params.beamwidth_3db_deg,
                                   params.front_to_back_db);
  }
  double shadow_db = 0.0;
  if (params.shadowing_std_db > 0.0) {
    RngStream pair = rng.substream(rng_tag::kShadowing, bs.id, ue.id);
    shadow_db = params.shadowing_std_db * pair.normal();
  }
  return bs.antenna_gain * db_to_linear(pattern_db + shadow_db);
}

/// Mean received power G P d^-alpha, watts.
inline double received_power(const BaseStation& bs, const UserEquipment& ue,
                             const PropagationParams& params, const RngStream& rng) {
  const double d = distance(bs.position, ue.position);
  return large_scale_gain(bs, ue, params, rng) * bs.max_power_w * std::pow(d, -params.path_loss_exponent);
}

struct Layout {
  std::vector<BaseStation> stations;
  std::vector<UserEquipment> ues;

  std::size_t macro_count() const {
    return static_cast<std::size_t>(std::count_if(stations.begin(), stations.end(), [](const auto& b) {
      return b.kind == BsKind::MacroSector;
    }));
  }
};

/// Seven tri-sector sites: one centre site and one ring at the inter-site distance.
inline std::vector<Position> macro_sites(double isd) {
  std::vector<Position> sites{{0.0, 0.0}};
  for (int k = 0; k < 6; ++k) {
    const double angle = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
    sites.push_back({isd * std::cos(angle), isd * std::sin(angle)});
  }
  return sites;
}

/// Ranks every station by received power and sets serving_bs and the two-entry coop_set.
inline void attach_ue(UserEquipment& ue, const std::vector<BaseStation>& stations,
                      const PropagationParams& params, const RngStream& rng) {
  if (stations.size() < 2) throw std::invalid_argument("attach_ue: need at least two base stations");
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(stations.size());
  for (const auto& bs : stations) ranked.emplace_back(received_power(bs, ue, params, rng), bs.id);
  std::partial_sort(ranked.begin(), ranked.begin() + 2, ranked.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  ue.serving_bs = ranked[0].second;
  ue.coop_set = {ranked[0].second, ranked[1].second};
}

inline Layout generate_layout(const RngStream& root, const PropagationParams& params, std::size_t n_ue,
                              std::size_t n_small) {
  if (n_ue == 0) throw std::invalid_argument("generate_layout: at least one UE required");
  RngStream rng = root.substream(rng_tag::kLayout);
  Layout layout;
  const auto sites = macro_sites(params.inter_site_distance_m);
  for (const auto& site : sites)
    for (double azimuth : {30.0, 150.0, 270.0})
      layout.stations.push_back({layout.stations.size(), BsKind::MacroSector, site, azimuth,
                                 dbm_to_watts(params.macro_power_dbm),
                                 db_to_linear(params.macro_antenna_gain_dbi)});

  const double half = params.area_half_size_m;
  for (std::size_t k = 0; k < n_small; ++k) {
    Position p;
    do {
      p = {rng.uniform(-half, half), rng.uniform(-half, half)};
    } while (std::any_of(sites.begin(), sites.end(), [&](Position s) {
      return distance(s, p) < params.small_cell_min_separation_m;
    }));
    layout.stations.push_back({layout.stations.size(), BsKind::SmallCell, p, 0.0,
                               dbm_to_watts(params.small_cell_power_dbm),
                               db_to_linear(params.small_cell_antenna_gain_dbi)});
  }

  for (std::size_t i = 0; i < n_ue; ++i) {
    UserEquipment ue;
    ue.id = i;
    do {
      ue.position = {rng.uniform(-half, half), rng.uniform(-half, half)};
    } while (std::any_of(layout.stations.begin(), layout.stations.end(), [&](const BaseStation& b) {
      return distance(b.position, ue.position) < params.ue_min_distance_m;
    }));
    ue.heading_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
    ue.speed_mps = params.ue_speed_mps();
    ue.n_r = params.ue_antennas;
    attach_ue(ue, layout.stations, params, root);
    layout.ues.push_back(std::move(ue));
  }
  return layout;
}

/// Random-direction walk: fresh heading each step, reflection at the area boundary.
/// Serving cell and cooperating set are not re-evaluated.
inline void move_ues(std::vector<UserEquipment>& ues, double dt, RngStream& rng, double area_half_size) {
  if (!(dt > 0.0)) throw std::invalid_argument("move_ues: dt must be positive");
  auto reflect = [area_half_size](double v) {
    const double span = 2.0 * area_half_size;
    double shifted = std::fmod(v + area_half_size, 2.0 * span);
    if (shifted < 0.0) shifted += 2.0 * span;
    if (shifted > span) shifted = 2.0 * span - shifted;
    return shifted - area_half_size;
  };
  for (auto& ue : ues) {
    ue.heading_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double step = ue.speed_mps * dt;
    ue.position.x = reflect(ue.position.x + step * std::cos(ue.heading_rad));
    ue.position.y = reflect(ue.position.y + step * std::sin(ue.heading_rad));
  }
}

// ---------------------------------------------------------------------------
// JSON layout replay

inline nlohmann::json layout_to_json(const Layout& layout) {
  nlohmann::json stations = nlohmann::json::array();
  for (const auto& bs : layout.stations)
    stations.push_back({{"id", bs.id},
                        {"kind", bs.kind == BsKind::MacroSector ? "macro" : "small"},
                        {"x", bs.position.x},
                        {"y", bs.position.y},
                        {"azimuth_deg", bs.azimuth_deg},
                        {"max_power_dbm", watts_to_dbm(bs.max_power_w)},
                        {"antenna_gain_dbi", linear_to_db(bs.antenna_gain)}});
  nlohmann::json ues = nlohmann::json::array();
  for (const auto& ue : layout.ues)
    ues.push_back({{"id", ue.id},
                   {"x", ue.position.x},
                   {"y", ue.position.y},
                   {"heading_rad", ue.heading_rad},
                   {"speed_mps", ue.speed_mps},
                   {"n_r", ue.n_r},
                   {"serving_bs", ue.serving_bs},
                   {"coop_set", ue.coop_set}});
  return {{"stations", stations}, {"ues", ues}};
}

inline Layout layout_from_json(const nlohmann::json& doc) {
  Layout layout;
  for (const auto& s : doc.at("stations")) {
    BaseStation bs;
    bs.id = s.at("id").get<std::size_t>();
    const auto kind = s.at("kind").get<std::string>();
    if (kind != "macro" && kind != "small") throw std::invalid_argument("layout: unknown station kind " + kind);
    bs.kind = kind == "macro" ? BsKind::MacroSector : BsKind::SmallCell;
    bs.position = {s.at("x").get<double>(), s.at("y").get<double>()};
    bs.azimuth_deg = s.value("azimuth_deg", 0.0);
    bs.max_power_w = dbm_to_watts(s.at("max_power_dbm").get<double>());
    bs.antenna_gain = db_to_linear(s.at("antenna_gain_dbi").get<double>());
    if (bs.id != layout.stations.size()) throw std::invalid_argument("layout: station ids must be 0..n-1");
    layout.stations.push_back(bs);
  }
  for (const auto& u : doc.at("ues")) {
    UserEquipment ue;
    ue.id = u.at("id").get<std::size_t>();
    ue.position = {u.at("x").get<double>(), u.at("y").get<double>()};
    ue.heading_rad = u.value("heading_rad", 0.0);
    ue.speed_mps = u.at("speed_mps").get<double>();
    ue.n_r = u.value("n_r", std::size_t{2});
    ue.serving_bs = u.at("serving_bs").get<std::size_t>();
    ue.coop_set = u.at("coop_set").get<std::vector<std::size_t>>();
    if (ue.id != layout.ues.size()) throw std::invalid_argument("layout: UE ids must be 0..n-1");
    if (ue.coop_set.size() != 2 || ue.coop_set[0] != ue.serving_bs || ue.coop_set[0] == ue.coop_set[1] ||
        ue.coop_set[1] >= layout.stations.size() || ue.serving_bs >= layout.stations.size())
      throw std::invalid_argument("layout: malformed coop_set for UE " + std::to_string(ue.id));
    layout.ues.push_back(std::move(ue));
  }
  return layout;
}

}  // namespace comp
