#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "comp/comp_engine.hpp"

using namespace comp;

namespace {

TriggerPolicy learned_policy(PolicyKind kind, bool per_ue = false) {
  TriggerPolicy p;
  p.kind = kind;
  p.per_ue = per_ue;
  return p;
}

/// One report per UE for `tti`. Labels are random when `noise` is set, otherwise cqi >= 8.
std::vector<MeasurementRecord> reports(std::size_t n_ue, std::size_t tti, RngStream& rng, bool noise) {
  std::vector<MeasurementRecord> out;
  for (std::size_t u = 0; u < n_ue; ++u) {
    MeasurementRecord r;
    r.ue_id = u;
    r.tti = tti;
    r.rsrp_dbm = rng.uniform(-90.0, -50.0);
    r.cqi = static_cast<int>(1 + rng.index(15));
    r.label = noise ? static_cast<int>(rng.index(2)) : (r.cqi >= 8 ? 1 : 0);
    r.sinr_db = rng.uniform(-10.0, 20.0);
    out.push_back(r);
  }
  return out;
}

std::vector<WindowDecision> run_windows(LearnedTrigger& engine, std::size_t n_ue, std::size_t windows, bool noise,
                                        std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<WindowDecision> out;
  const std::size_t t_comp = engine.policy().t_comp;
  for (std::size_t tti = 1; tti <= windows * t_comp; ++tti) {
    for (const auto& r : reports(n_ue, tti, rng, noise)) engine.collect(r);
    auto result = trigger_step(engine, tti);
    if (auto* d = std::get_if<WindowDecision>(&result)) {
      out.push_back(*d);
      EXPECT_FALSE(engine.has_model());
      EXPECT_TRUE(engine.window().empty());
      EXPECT_EQ(engine.window().first_tti(), tti + 1);
    } else {
      EXPECT_NE(tti % t_comp, 0u);
    }
  }
  return out;
}

}  // namespace

TEST(StaticDecide, InclusiveThreshold) {
  EXPECT_EQ(static_decide(-5.0, -3.5), 1);
  EXPECT_EQ(static_decide(-3.5, -3.5), 1);
  EXPECT_EQ(static_decide(0.0, -3.5), 0);
  EXPECT_EQ(static_decide(-std::numeric_limits<double>::infinity(), -3.5), 1);
  EXPECT_THROW(static_decide(std::nan(""), -3.5), std::invalid_argument);
}

TEST(TriggerPolicy, TimingConstraint) {
  PropagationParams params;
  TriggerPolicy p;
  EXPECT_NO_THROW(p.validate(params));
  p.t_comp = 11;  // 11 ms > 10 ms radio frame
  EXPECT_THROW(p.validate(params), std::invalid_argument);
  p.t_comp = 0;
  EXPECT_THROW(p.validate(params), std::invalid_argument);
  p.t_comp = 3;
  p.epsilon = 0.0;
  EXPECT_THROW(p.validate(params), std::invalid_argument);
}

TEST(Window, RowBoundAndMembership) {
  MeasurementWindow w(1, 3, 180, 1);
  EXPECT_EQ(w.capacity(), 1080u);
  MeasurementRecord r;
  r.tti = 2;
  w.append(r);
  EXPECT_EQ(w.size(), 1u);
  EXPECT_EQ(w.dataset().size(), 1u);
  r.tti = 4;
  EXPECT_THROW(w.append(r), OutsideWindow);
  r.tti = 0;
  EXPECT_THROW(w.append(r), OutsideWindow);
  w.purge(4);
  EXPECT_TRUE(w.empty());
  EXPECT_EQ(w.first_tti(), 4u);
  EXPECT_EQ(w.last_tti(), 6u);
}

TEST(Window, OverflowIsAnError) {
  MeasurementWindow w(1, 1, 1, 1, 1);
  MeasurementRecord r;
  r.tti = 1;
  w.append(r);
  EXPECT_THROW(w.append(r), WindowOverflow);
}

TEST(Window, CollectRepeatsReports) {
  MeasurementWindow w(1, 3, 4, 2);
  MeasurementRecord r;
  r.tti = 1;
  collect(w, r, 2);
  EXPECT_EQ(w.size(), 2u);
}

TEST(LearnedTrigger, NoDecisionBetweenBoundaries) {
  LearnedTrigger engine(learned_policy(PolicyKind::Dnn), 4, 1, {}, 1);
  EXPECT_TRUE(std::holds_alternative<NoDecisionYet>(engine.step(1)));
  EXPECT_TRUE(std::holds_alternative<NoDecisionYet>(engine.step(2)));
  EXPECT_THROW(LearnedTrigger(learned_policy(PolicyKind::Static), 4, 1, {}, 1), std::invalid_argument);
}

TEST(LearnedTrigger, RandomLabelsFallBack) {
  for (auto kind : {PolicyKind::Dnn, PolicyKind::Svm}) {
    LearnedTrigger engine(learned_policy(kind), 60, 1, {}, 7);
    const auto decisions = run_windows(engine, 60, 4, true, 11);
    ASSERT_EQ(decisions.size(), 4u);
    for (const auto& d : decisions) {
      ASSERT_TRUE(d.decision.model_xi.has_value());
      EXPECT_GT(*d.decision.model_xi, 0.15);
      EXPECT_EQ(d.decision.source, DecisionSource::Fallback);
      EXPECT_TRUE(d.ue_states.empty());
    }
    EXPECT_EQ(engine.trainings(), 4u);
  }
}

TEST(LearnedTrigger, AcceptedModelsDecideFromMeanPrediction) {
  // A refit can still land in a poor optimum; the gate then has to route it to fallback.
  for (auto kind : {PolicyKind::Dnn, PolicyKind::Svm}) {
    LearnedTrigger engine(learned_policy(kind), 60, 1, {}, 3);
    std::size_t learned = 0;
    for (const auto& d : run_windows(engine, 60, 4, false, 5)) {
      ASSERT_TRUE(d.decision.model_xi.has_value());
      if (*d.decision.model_xi > 0.15) {
        EXPECT_EQ(d.decision.source, DecisionSource::Fallback);
        continue;
      }
      ++learned;
      ASSERT_EQ(d.decision.source, DecisionSource::Learned);
      ASSERT_EQ(d.ue_states.size(), 60u);
      const int expected = d.mean_y_hat >= 0.5 ? 1 : 0;
      EXPECT_EQ(d.decision.state, expected);
      for (int s : d.ue_states) EXPECT_EQ(s, expected);
    }
    EXPECT_GE(learned, kind == PolicyKind::Svm ? 4u : 1u) << to_string(kind);
  }
}

TEST(LearnedTrigger, PerUeStatesFollowEachPrediction) {
  LearnedTrigger engine(learned_policy(PolicyKind::Svm, true), 60, 1, {}, 3);
  RngStream rng(9);
  std::vector<MeasurementRecord> last;
  for (std::size_t tti = 1; tti <= 3; ++tti) {
    last = reports(60, tti, rng, false);
    for (const auto& r : last) engine.collect(r);
  }
  const auto d = std::get<WindowDecision>(engine.step(3));
  ASSERT_EQ(d.decision.source, DecisionSource::Learned);
  std::size_t agree = 0;
  for (std::size_t u = 0; u < 60; ++u) agree += d.ue_states[u] == last[u].label;
  EXPECT_GE(agree, 54u);
  EXPECT_EQ(d.decision.state, majority_state(d.ue_states));
}

TEST(LearnedTrigger, TrainingIsDeterministic) {
  LearnedTrigger a(learned_policy(PolicyKind::Dnn), 30, 1, {}, 42), b(learned_policy(PolicyKind::Dnn), 30, 1, {}, 42);
  const auto da = run_windows(a, 30, 2, false, 8);
  const auto db = run_windows(b, 30, 2, false, 8);
  ASSERT_EQ(da.size(), db.size());
  for (std::size_t k = 0; k < da.size(); ++k) {
    EXPECT_EQ(da[k].decision.model_xi, db[k].decision.model_xi);
    EXPECT_EQ(da[k].mean_y_hat, db[k].mean_y_hat);
  }
}

TEST(ApplyDecision, StreamCountToggles) {
  UserEquipment ue;
  ue.serving_bs = 3;
  ue.coop_set = {3, 7};
  std::vector<std::size_t> n_s;
  for (int d : {1, 0, 1}) n_s.push_back(apply_decision(ue, d).n_s);
  EXPECT_EQ(n_s, (std::vector<std::size_t>{2, 1, 2}));
  EXPECT_EQ(apply_decision(ue, 1).transmitters, (std::vector<std::size_t>{3, 7}));
  EXPECT_EQ(apply_decision(ue, 0).transmitters, (std::vector<std::size_t>{3}));
  EXPECT_THROW(apply_decision(ue, 2), std::invalid_argument);
  ue.coop_set = {3};
  EXPECT_THROW(apply_decision(ue, 1), std::invalid_argument);
}

TEST(PolicyEngine, StaticUntilFirstBoundaryThenGated) {
  PolicyEngine engine(learned_policy(PolicyKind::Dnn), 40, 1, {}, 2);
  RngStream rng(4);
  for (std::size_t tti = 1; tti <= 9; ++tti) {
    const auto recs = reports(40, tti, rng, true);
    std::vector<double> sinr;
    for (const auto& r : recs) sinr.push_back(r.sinr_db);
    const auto states = engine.states(tti, sinr);
    for (std::size_t u = 0; u < 40; ++u) EXPECT_EQ(states[u], static_decide(sinr[u], -3.5));
    engine.observe(tti, recs);
  }
  const auto& trace = engine.trace();
  ASSERT_EQ(trace.size(), 9u);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(trace[t].source, DecisionSource::Static);
  for (std::size_t t = 3; t < 9; ++t) EXPECT_EQ(trace[t].source, DecisionSource::Fallback);
  EXPECT_EQ(engine.decisions().size(), 3u);
  EXPECT_FALSE(engine.learner()->has_model());
}

TEST(PolicyEngine, StaticPolicyHasNoLearner) {
  PolicyEngine engine(TriggerPolicy{}, 2, 1, {}, 1);
  EXPECT_EQ(engine.learner(), nullptr);
  const std::vector<double> sinr{-4.0, 5.0};
  EXPECT_EQ(engine.states(1, sinr), (std::vector<int>{1, 0}));
  EXPECT_THROW(engine.states(2, std::vector<double>{1.0}), std::invalid_argument);
}
