#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "comp/learners/model_selection.hpp"
#include "comp/phy.hpp"
#include "comp/radio_env.hpp"

namespace comp {

enum class PolicyKind { Static, Svm, Dnn };

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Static: return "static";
    case PolicyKind::Svm: return "svm";
    case PolicyKind::Dnn: return "dnn";
  }
  return "?";
}

inline PolicyKind policy_from_string(const std::string& s) {
  if (s == "static") return PolicyKind::Static;
  if (s == "svm") return PolicyKind::Svm;
  if (s == "dnn") return PolicyKind::Dnn;
  throw std::invalid_argument("unknown policy '" + s + "'");
}

/// Which predictions feed mean(y_hat) in the global decision.
enum class MeanSource { FreshInference, TestPredictions };

struct TriggerPolicy {
  PolicyKind kind = PolicyKind::Static;
  double static_sinr_trigger_db = -3.5;
  double epsilon = 0.15;
  std::size_t t_comp = 3;  // TTIs
  bool per_ue = false;
  MeanSource mean_source = MeanSource::FreshInference;

  /// Throws std::invalid_argument naming the offending field.
  void validate(const PropagationParams& params) const {
    if (t_comp < 1) throw std::invalid_argument("t_comp: must be at least 1 TTI");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon: must lie in (0, 1)");
    if (!std::isfinite(static_sinr_trigger_db)) throw std::invalid_argument("static_sinr_trigger_db: not finite");
    const double limit = std::min(coherence_time(params, params.ue_speed_mps()), params.radio_frame_s);
    if (static_cast<double>(t_comp) * params.tti_s > limit)
      throw std::invalid_argument("t_comp: " + std::to_string(t_comp) + " TTIs exceeds min(coherence time, radio frame) = " +
                                  std::to_string(limit) + " s");
  }
};

/// Enable CoMP iff the reported SINR is at or below the trigger.
inline int static_decide(double ue_sinr_db, double trigger_db) {
  if (std::isnan(ue_sinr_db)) throw std::invalid_argument("static_decide: NaN SINR");
  return ue_sinr_db <= trigger_db ? 1 : 0;
}

struct MeasurementRecord {
  std::size_t ue_id = 0;
  std::size_t tti = 0;
  double rsrp_dbm = 0.0;
  int cqi = 0;
  int label = 0;
  double sinr_db = 0.0;  // reported CSI-SINR, used by the fallback path

  learn::FeatureRow features() const { return {rsrp_dbm, static_cast<double>(cqi)}; }
};

inline MeasurementRecord make_record(const LinkState& link, double sinr_db) {
  return {link.ue_id, link.tti, link.rsrp_dbm(), link.cqi, link.label, sinr_db};
}

class WindowOverflow : public std::logic_error {
 public:
  explicit WindowOverflow(std::size_t bound)
      : std::logic_error("measurement window exceeds its row bound " + std::to_string(bound)) {}
};

class OutsideWindow : public std::invalid_argument {
 public:
  explicit OutsideWindow(std::size_t tti)
      : std::invalid_argument("measurement at TTI " + std::to_string(tti) + " falls outside the current window") {}
};

/// Measurements of TTIs [first_tti, first_tti + t_comp). Row count is bounded by
/// n_s_max * n_ue * g * t_comp.
class MeasurementWindow {
 public:
  MeasurementWindow(std::size_t first_tti, std::size_t t_comp, std::size_t n_ue, std::size_t g,
                    std::size_t n_s_max = kMaxStreams)
      : first_(first_tti), t_comp_(t_comp), capacity_(n_s_max * n_ue * g * t_comp) {
    if (t_comp == 0 || g == 0) throw std::invalid_argument("MeasurementWindow: t_comp and g must be positive");
  }

  std::size_t first_tti() const noexcept { return first_; }
  std::size_t last_tti() const noexcept { return first_ + t_comp_ - 1; }
  bool contains(std::size_t tti) const noexcept { return tti >= first_ && tti <= last_tti(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  const std::vector<MeasurementRecord>& rows() const noexcept { return rows_; }

  void append(const MeasurementRecord& r) {
    if (!contains(r.tti)) throw OutsideWindow(r.tti);
    if (rows_.size() + 1 > capacity_) throw WindowOverflow(capacity_);
    rows_.push_back(r);
  }

  learn::Dataset dataset() const {
    learn::Dataset d;
    for (const auto& r : rows_) d.push_back(r.features(), r.label);
    return d;
  }

  /// Drops every row and moves on to the window that starts at `next_first_tti`.
  void purge(std::size_t next_first_tti) {
    rows_.clear();
    rows_.shrink_to_fit();
    first_ = next_first_tti;
  }

 private:
  std::size_t first_;
  std::size_t t_comp_;
  std::size_t capacity_;
  std::vector<MeasurementRecord> rows_;
};

/// Appends g copies of the UE's report for this TTI.
inline void collect(MeasurementWindow& window, const MeasurementRecord& record, std::size_t g) {
  for (std::size_t k = 0; k < g; ++k) window.append(record);
}

inline void collect(MeasurementWindow& window, const LinkState& link, double sinr_db, std::size_t g) {
  collect(window, make_record(link, sinr_db), g);
}

enum class DecisionSource { Learned, Fallback, Static };

inline std::string to_string(DecisionSource s) {
  switch (s) {
    case DecisionSource::Learned: return "learned";
    case DecisionSource::Fallback: return "fallback";
    case DecisionSource::Static: return "static";
  }
  return "?";
}

struct CompDecision {
  std::size_t tti = 0;
  int state = 0;
  DecisionSource source = DecisionSource::Static;
  std::optional<double> model_xi;
};

/// Outcome of one window boundary. `ue_states` holds per-UE states for learned
/// decisions (all equal in global mode) and is empty on fallback.
struct WindowDecision {
  CompDecision decision;
  std::vector<int> ue_states;
  double mean_y_hat = 0.0;
  std::optional<learn::Hyperparameters> chosen;
};

struct NoDecisionYet {};

struct LearnerSettings {
  learn::GridSearchOptions search;
  std::vector<learn::Hyperparameters> grid;  // empty: the family default
};

inline learn::LearnerFamily family_of(PolicyKind k) {
  if (k == PolicyKind::Static) throw std::invalid_argument("static policy has no learner");
  return k == PolicyKind::Dnn ? learn::LearnerFamily::Dnn : learn::LearnerFamily::Svm;
}

/// Per-UE static states from each UE's latest report in the window.
inline std::vector<int> static_states(const std::vector<MeasurementRecord>& latest, double trigger_db) {
  std::vector<int> out;
  out.reserve(latest.size());
  for (const auto& r : latest) out.push_back(static_decide(r.sinr_db, trigger_db));
  return out;
}

inline int majority_state(std::span<const int> states) {
  if (states.empty()) return 0;
  const auto on = static_cast<std::size_t>(std::count(states.begin(), states.end(), 1));
  return 2 * on >= states.size() ? 1 : 0;
}

/// Collect, train, validate, decide and invalidate, for one learning policy.
/// The fitted model only ever lives inside a boundary step: it is created by step()
/// and destroyed, together with the window contents, before step() returns.
class LearnedTrigger {
 public:
  LearnedTrigger(TriggerPolicy policy, std::size_t n_ue, std::size_t g, LearnerSettings settings, std::uint64_t seed)
      : policy_(policy), n_ue_(n_ue), g_(g), settings_(std::move(settings)), seed_(seed),
        window_(1, policy.t_comp, n_ue, g) {
    family_of(policy.kind);
    if (settings_.grid.empty()) settings_.grid = learn::default_grid(family_of(policy.kind));
  }

  const TriggerPolicy& policy() const noexcept { return policy_; }
  MeasurementWindow& window() noexcept { return window_; }
  const MeasurementWindow& window() const noexcept { return window_; }
  bool has_model() const noexcept { return model_ != nullptr; }
  std::size_t trainings() const noexcept { return trainings_; }

  void collect(const MeasurementRecord& r) { comp::collect(window_, r, g_); }

  /// At a boundary (tti mod t_comp == 0) runs the full cycle; otherwise NoDecisionYet.
  std::variant<NoDecisionYet, WindowDecision> step(std::size_t tti) {
    if (tti % policy_.t_comp != 0) return NoDecisionYet{};
    WindowDecision out;
    out.decision.tti = tti;
    const auto latest = latest_rows(tti);
    try {
      train(tti);
    } catch (const std::exception&) {
      model_.reset();
    }
    if (model_ && xi_ <= policy_.epsilon) {
      out.decision.source = DecisionSource::Learned;
      out.decision.model_xi = xi_;
      out.chosen = chosen_;
      std::vector<double> y_hat;
      for (const auto& r : latest) y_hat.push_back(model_->model.probability(model_->scaler.transform(r.features())));
      const auto& pool = policy_.mean_source == MeanSource::TestPredictions ? test_predictions_ : y_hat;
      out.mean_y_hat = pool.empty() ? 0.0 : std::accumulate(pool.begin(), pool.end(), 0.0) /
                                                  static_cast<double>(pool.size());
      const int global = out.mean_y_hat >= 0.5 ? 1 : 0;
      for (double p : y_hat) out.ue_states.push_back(policy_.per_ue ? (p >= 0.5 ? 1 : 0) : global);
      out.decision.state = policy_.per_ue ? majority_state(out.ue_states) : global;
    } else {
      out.decision.source = DecisionSource::Fallback;
      if (model_) out.decision.model_xi = xi_;
      out.decision.state = majority_state(static_states(latest, policy_.static_sinr_trigger_db));
    }
    invalidate(tti + 1);
    return out;
  }

 private:
  struct Fitted {
    learn::Classifier model;
    learn::FeatureScaler scaler;
  };

  std::vector<MeasurementRecord> latest_rows(std::size_t tti) const {
    std::vector<MeasurementRecord> latest(n_ue_);
    std::vector<bool> seen(n_ue_, false);
    for (const auto& r : window_.rows())
      if (r.tti == tti && r.ue_id < n_ue_ && !seen[r.ue_id]) {
        latest[r.ue_id] = r;
        seen[r.ue_id] = true;
      }
    std::vector<MeasurementRecord> out;
    for (std::size_t u = 0; u < n_ue_; ++u)
      if (seen[u]) out.push_back(latest[u]);
    return out;
  }

  void train(std::size_t tti) {
    auto options = settings_.search;
    options.seed = mix64(seed_ ^ mix64(tti));
    auto report = learn::grid_search_cv(window_.dataset(), settings_.grid, options);
    ++trainings_;
    xi_ = report.xi;
    chosen_ = report.chosen;
    test_predictions_ = std::move(report.test_predictions);
    model_ = std::make_unique<Fitted>(Fitted{std::move(report.model), report.scaler});
  }

  void invalidate(std::size_t next_first_tti) {
    model_.reset();
    test_predictions_.clear();
    chosen_.reset();
    xi_ = 1.0;
    window_.purge(next_first_tti);
  }

  TriggerPolicy policy_;
  std::size_t n_ue_;
  std::size_t g_;
  LearnerSettings settings_;
  std::uint64_t seed_;
  MeasurementWindow window_;
  std::unique_ptr<Fitted> model_;
  std::vector<double> test_predictions_;
  std::optional<learn::Hyperparameters> chosen_;
  double xi_ = 1.0;
  std::size_t trainings_ = 0;
};

/// Free-function form over a caller-owned engine.
inline std::variant<NoDecisionYet, WindowDecision> trigger_step(LearnedTrigger& engine, std::size_t tti) {
  return engine.step(tti);
}

struct StreamConfiguration {
  std::size_t n_s = 1;
  std::vector<std::size_t> transmitters;
};

inline StreamConfiguration apply_decision(const UserEquipment& ue, int decision) {
  if (decision != 0 && decision != 1) throw std::invalid_argument("apply_decision: decision must be 0 or 1");
  if (decision == 1) {
    if (ue.coop_set.size() != 2 || ue.coop_set[0] == ue.coop_set[1])
      throw std::invalid_argument("apply_decision: UE has no cooperating pair");
    return {2, {ue.coop_set[0], ue.coop_set[1]}};
  }
  return {1, {ue.serving_bs}};
}

/// One trace row: what was in force at a TTI for a policy.
struct TraceRow {
  std::size_t tti = 0;
  int state = 0;
  DecisionSource source = DecisionSource::Static;
  std::optional<double> xi;
};

/// Drives one policy across TTIs. The decision from a boundary at TTI T governs TTIs
/// T+1 .. T+t_comp; until the first boundary, and after any fallback, static rules apply.
class PolicyEngine {
 public:
  PolicyEngine(TriggerPolicy policy, std::size_t n_ue, std::size_t g, LearnerSettings settings, std::uint64_t seed)
      : policy_(policy), n_ue_(n_ue) {
    if (policy.kind != PolicyKind::Static) learner_.emplace(policy, n_ue, g, std::move(settings), seed);
  }

  const TriggerPolicy& policy() const noexcept { return policy_; }
  const std::vector<TraceRow>& trace() const noexcept { return trace_; }
  const std::vector<CompDecision>& decisions() const noexcept { return decisions_; }
  const LearnedTrigger* learner() const noexcept { return learner_ ? &*learner_ : nullptr; }

  /// Per-UE CoMP states for `tti` given each UE's reported SINR at that TTI.
  std::vector<int> states(std::size_t tti, std::span<const double> sinr_db) {
    if (sinr_db.size() != n_ue_) throw std::invalid_argument("PolicyEngine::states: one SINR per UE required");
    std::vector<int> out;
    TraceRow row{tti, 0, DecisionSource::Static, std::nullopt};
    if (active_ && active_->decision.source == DecisionSource::Learned && active_->ue_states.size() == n_ue_) {
      out = active_->ue_states;
      row.source = DecisionSource::Learned;
      row.xi = active_->decision.model_xi;
    } else {
      for (double s : sinr_db) out.push_back(static_decide(s, policy_.static_sinr_trigger_db));
      if (active_) {
        row.source = active_->decision.source == DecisionSource::Learned ? DecisionSource::Fallback
                                                                         : active_->decision.source;
        row.xi = active_->decision.model_xi;
      }
    }
    row.state = policy_.per_ue || row.source != DecisionSource::Learned ? majority_state(out) : out.front();
    trace_.push_back(row);
    return out;
  }

  /// Feeds this TTI's measurements (one per UE) and runs the boundary step when due.
  void observe(std::size_t tti, std::span<const MeasurementRecord> records) {
    if (!learner_) return;
    for (const auto& r : records) learner_->collect(r);
    auto result = learner_->step(tti);
    if (auto* d = std::get_if<WindowDecision>(&result)) {
      decisions_.push_back(d->decision);
      active_ = std::move(*d);
    }
  }

 private:
  TriggerPolicy policy_;
  std::size_t n_ue_;
  std::optional<LearnedTrigger> learner_;
  std::optional<WindowDecision> active_;
  std::vector<TraceRow> trace_;
  std::vector<CompDecision> decisions_;
};

}  // namespace comp
