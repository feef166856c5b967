#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "comp/numerics.hpp"
#include "comp/units.hpp"

namespace comp {

inline constexpr std::size_t kMaxStreams = 2;

struct StreamSnr {
  std::vector<double> snr;  // linear, one per stream
  bool decodable = true;    // false when the Gram matrix was singular
};

/// Per-stream zero-forcing SNR:
///   gamma_j = G_j P_j d_j^-alpha / (n_t sigma^2) / [(H*H)^-1]_jj
/// Stream j is carried by column j of h. A singular channel yields all-zero SNR.
inline StreamSnr zf_stream_snr(const ComplexMatrix& h, std::span<const double> gains,
                               std::span<const double> tx_powers, std::span<const double> distances,
                               double alpha, double noise_variance, std::size_t n_t) {
  const std::size_t n_s = h.cols();
  if (gains.size() != n_s || tx_powers.size() != n_s || distances.size() != n_s)
    throw std::invalid_argument("zf_stream_snr: per-stream inputs must match channel columns");
  if (!(noise_variance > 0.0) || n_t == 0) throw std::invalid_argument("zf_stream_snr: bad noise or n_t");
  StreamSnr out{std::vector<double>(n_s, 0.0), true};
  ComplexMatrix inv(1, 1);
  try {
    inv = gram_inverse(h);
  } catch (const SingularChannel&) {
    out.decodable = false;
    return out;
  }
  for (std::size_t j = 0; j < n_s; ++j) {
    if (!(distances[j] > 0.0)) throw std::invalid_argument("zf_stream_snr: distance must be positive");
    const double large_scale = gains[j] * tx_powers[j] * std::pow(distances[j], -alpha);
    out.snr[j] = large_scale / (static_cast<double>(n_t) * noise_variance) / inv(j, j).real();
  }
  return out;
}

/// Single-distance form: every stream sees the serving distance d.
inline StreamSnr zf_stream_snr(const ComplexMatrix& h, std::span<const double> gains,
                               std::span<const double> tx_powers, double d, double alpha,
                               double noise_variance, std::size_t n_t) {
  const std::vector<double> distances(h.cols(), d);
  return zf_stream_snr(h, gains, tx_powers, distances, alpha, noise_variance, n_t);
}

/// Reference-symbol received power on the first receive branch, watts:
///   P_RS = G_TX P_max d^-alpha n_s / (N_SC N_PRB)
inline double csi_rsrp(double g_tx, double p_max_w, double d, double alpha, std::size_t n_s,
                       std::size_t n_sc, std::size_t n_prb) {
  if (!(g_tx > 0.0) || !(p_max_w > 0.0) || !(d > 0.0) || n_s == 0 || n_sc == 0 || n_prb == 0)
    throw std::invalid_argument("csi_rsrp: all inputs must be positive");
  return g_tx * p_max_w * std::pow(d, -alpha) * static_cast<double>(n_s) /
         static_cast<double>(n_sc * n_prb);
}

/// RSRP in dBm rounded to two decimals, the precision used in report files.
inline double rsrp_report_dbm(double rsrp_w) { return std::round(watts_to_dbm(rsrp_w) * 100.0) / 100.0; }

inline constexpr double kCqiAnchorDb = -6.7;
inline constexpr double kCqiStepDb = 1.9;
inline constexpr int kMaxCqi = 15;

/// 16-level staircase: clamp(floor((sinr + 6.7) / 1.9) + 1, 0, 15).
inline int sinr_to_cqi(double sinr_db) {
  if (std::isnan(sinr_db)) throw std::invalid_argument("sinr_to_cqi: NaN input");
  if (sinr_db == -std::numeric_limits<double>::infinity()) return 0;
  const double level = std::floor((sinr_db - kCqiAnchorDb) / kCqiStepDb) + 1.0;
  return static_cast<int>(std::clamp(level, 0.0, static_cast<double>(kMaxCqi)));
}

/// Logistic BLER-vs-SNR family, one curve per CQI (i.e. per modulation and coding scheme).
/// Curve midpoints sit `backoff_db` below the lower edge of each CQI's SINR bin.
struct BlerCurve {
  double slope_per_db = 1.0;
  double backoff_db = 3.0;

  double midpoint_db(int cqi) const {
    if (cqi < 0 || cqi > kMaxCqi) throw std::out_of_range("BlerCurve: CQI outside 0..15");
    return kCqiAnchorDb + kCqiStepDb * (cqi - 1) - backoff_db;
  }
};

/// 1 / (1 + exp(slope (snr_db - midpoint(cqi)))).
inline double stream_bler(double snr_db, int cqi, const BlerCurve& curve) {
  const double x = curve.slope_per_db * (snr_db - curve.midpoint_db(cqi));
  if (x > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(x));
}

/// 1 - prod_j (1 - beta_j).
inline double aggregate_bler(std::span<const double> per_stream) {
  double success = 1.0;
  for (double b : per_stream) {
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("aggregate_bler: probability outside [0,1]");
    success *= 1.0 - b;
  }
  return 1.0 - success;
}

/// Supervisory label: 1 iff the retransmission target is met (inclusive).
inline int label(double aggregate, double beta_target) { return aggregate <= beta_target ? 1 : 0; }

/// BLER-penalised capacity Z = sum_j log2(1 + gamma_j) (1 - beta) if beta <= target, else 0.
inline double penalized_capacity(std::span<const double> per_stream_snr, double aggregate, double beta_target) {
  if (aggregate > beta_target) return 0.0;
  double capacity = 0.0;
  for (double g : per_stream_snr) {
    if (!(g >= 0.0)) throw std::invalid_argument("penalized_capacity: negative SNR");
    capacity += std::log2(1.0 + g);
  }
  return capacity * (1.0 - aggregate);
}

inline double capacity_sum(std::span<const double> per_stream_snr) {
  double c = 0.0;
  for (double g : per_stream_snr) c += std::log2(1.0 + g);
  return c;
}

struct LinkState {
  std::size_t ue_id = 0;
  std::size_t tti = 0;
  std::size_t n_s = 1;
  std::vector<double> per_stream_snr;
  std::vector<double> per_stream_bler;
  double aggregate_bler = 0.0;
  double rsrp_w = 0.0;
  int cqi = 0;
  double capacity_sum = 0.0;       // C_i = sum_j log2(1 + gamma_j), bits/s/Hz
  double delivered_capacity = 0.0;  // C_i (1 - beta_i); Z_i = delivered_capacity * y_i
  double penalized_capacity = 0.0;  // Z_i, bits/s/Hz
  int label = 0;                    // y_i
  bool decodable = true;

  double rsrp_dbm() const { return watts_to_dbm(rsrp_w); }
};

/// Large-scale description of one transmitting point as seen by a UE.
struct StreamSource {
  double gain = 1.0;  // G_j, linear
  double tx_power_w = 1.0;
  double distance_m = 1.0;
};

/// Everything needed to evaluate one UE's link in one TTI for either stream count.
/// `channel` is n_r x 2: column 0 from the serving point, column 1 from the cooperating point.
struct LinkInputs {
  std::size_t ue_id = 0;
  std::size_t tti = 0;
  ComplexMatrix channel{2, 2};
  StreamSource serving;
  StreamSource coop;
  double path_loss_exponent = 3.7;
  double noise_variance_w = 1.0;     // thermal plus interference from outside the cooperating set
  double coop_interference_w = 0.0;  // cooperating point's power when it is not transmitting to us
  double rsrp_w = 0.0;
  int reported_cqi = 0;  // MCS selector for every codeword
};

/// Single-stream (CoMP off) SINR in linear units; this is what the UE reports as CSI-SINR.
inline double single_stream_sinr(const LinkInputs& in) {
  const double g[] = {in.serving.gain};
  const double p[] = {in.serving.tx_power_w};
  const double d[] = {in.serving.distance_m};
  return zf_stream_snr(in.channel.columns(0, 1), g, p, d, in.path_loss_exponent,
                       in.noise_variance_w + in.coop_interference_w, 1)
      .snr[0];
}

/// Evaluates the link with n_s streams: one from the serving point (the cooperating point
/// interferes) or joint transmission from both points.
inline LinkState evaluate_link(const LinkInputs& in, std::size_t n_s, const BlerCurve& curve, double beta_target) {
  if (n_s < 1 || n_s > kMaxStreams) throw std::invalid_argument("evaluate_link: n_s must be 1 or 2");
  LinkState s;
  s.ue_id = in.ue_id;
  s.tti = in.tti;
  s.n_s = n_s;
  s.rsrp_w = in.rsrp_w;
  s.cqi = in.reported_cqi;

  StreamSnr snr;
  if (n_s == 1) {
    const double g[] = {in.serving.gain};
    const double p[] = {in.serving.tx_power_w};
    const double d[] = {in.serving.distance_m};
    snr = zf_stream_snr(in.channel.columns(0, 1), g, p, d, in.path_loss_exponent,
                        in.noise_variance_w + in.coop_interference_w, 1);
  } else {
    const double g[] = {in.serving.gain, in.coop.gain};
    const double p[] = {in.serving.tx_power_w, in.coop.tx_power_w};
    const double d[] = {in.serving.distance_m, in.coop.distance_m};
    snr = zf_stream_snr(in.channel.columns(0, 2), g, p, d, in.path_loss_exponent, in.noise_variance_w, 2);
  }
  s.per_stream_snr = std::move(snr.snr);
  s.decodable = snr.decodable;
  for (double g : s.per_stream_snr)
    s.per_stream_bler.push_back(s.decodable && g > 0.0 ? stream_bler(linear_to_db(g), in.reported_cqi, curve)
                                                       : 1.0);
  s.aggregate_bler = aggregate_bler(s.per_stream_bler);
  s.capacity_sum = capacity_sum(s.per_stream_snr);
  s.delivered_capacity = s.capacity_sum * (1.0 - s.aggregate_bler);
  s.label = label(s.aggregate_bler, beta_target);
  s.penalized_capacity = penalized_capacity(s.per_stream_snr, s.aggregate_bler, beta_target);
  return s;
}

}  // namespace comp
