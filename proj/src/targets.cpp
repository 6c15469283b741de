#include "rlplan/targets.hpp"

#include <algorithm>
#include <cmath>

#include "rlplan/error.hpp"

namespace rlplan {

const char* to_string(TargetStrategy s) {
  switch (s) {
    case TargetStrategy::td1: return "td1";
    case TargetStrategy::rp: return "rp";
    case TargetStrategy::irp: return "irp";
    case TargetStrategy::irp_up: return "irp_up";
  }
  return "?";
}

TargetStrategy parse_strategy(const std::string& name) {
  if (name == "td1") return TargetStrategy::td1;
  if (name == "rp") return TargetStrategy::rp;
  if (name == "irp") return TargetStrategy::irp;
  if (name == "irp_up") return TargetStrategy::irp_up;
  throw Error(ErrorCode::invalid_config, "unknown target strategy '" + name + "'");
}

Bootstrap network_bootstrap(const MlpParams& actor, const MlpParams& critic) {
  Bootstrap b;
  b.policy = [&actor](const Eigen::MatrixXd& obs) { return forward(actor, obs, nullptr); };
  b.value = [&critic](const Eigen::MatrixXd& obs, const Eigen::MatrixXd& act) {
    Eigen::MatrixXd x(obs.rows() + act.rows(), obs.cols());
    x << obs, act;
    return Eigen::VectorXd(forward(critic, x, nullptr).row(0).transpose());
  };
  return b;
}

namespace {

// Covariance-derived ellipses for one (ego, other) initial pair. Index k holds
// the state k + 1 steps after t, i.e. covariance propagated k times.
struct UncertaintyTrack {
  StateCovariance ego0;
  StateCovariance other0;
  std::vector<StateCovariance> ego_cov;
  std::vector<StateCovariance> other_cov;
  std::vector<Ellipse> ego;
  std::vector<Ellipse> other;
};

UncertaintyTrack make_track(const StateCovariance& ego0, const StateCovariance& other0,
                            const NoiseModel& noise, std::size_t n, double confidence) {
  UncertaintyTrack t;
  t.ego0 = ego0;
  t.other0 = other0;
  t.ego_cov = propagate_sequence(ego0, noise, ParticipantKind::ego, n - 1);
  t.other_cov = propagate_sequence(other0, noise, ParticipantKind::other, n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    t.ego.push_back(confidence_ellipse(t.ego_cov[k].position_block(), confidence));
    t.other.push_back(confidence_ellipse(t.other_cov[k].position_block(), confidence));
  }
  return t;
}

struct Rollout {
  const ReplayTransition* tr = nullptr;
  const PredictionContext* ctx = nullptr;
  const UncertaintyTrack* track = nullptr;
  VehicleState av;
  std::vector<VehicleState> parts;
  std::optional<PlannedTrajectory> plan;
  double y = 0.0;
  double discount = 1.0;
  bool accumulating = true;  // still adding rewards
  PredictedRollout* record = nullptr;

  bool live() const { return accumulating || record; }
};

double bounding_radius(const VehicleState& v) { return 0.5 * std::hypot(v.length, v.width); }

InflatedFootprint footprint_of(const VehicleState& v, const Ellipse* ell, int arc_samples) {
  return minkowski_inflate(v.footprint(), ell ? *ell : Ellipse{}, arc_samples);
}

// Collision test at the state `index` steps after t (index >= 1).
bool predicted_collision(const Rollout& r, std::size_t index, const TargetSpec& spec) {
  const WorldModel& model = *r.ctx->model;
  if (model.config.road_departure_collides && off_road(model, r.av.frenet)) return true;
  if (!r.track) return av_collides(r.av, r.parts);
  const Ellipse& ee = r.track->ego[index - 1];
  const Ellipse& eo = r.track->other[index - 1];
  std::optional<InflatedFootprint> av_fp;
  const double r_av = bounding_radius(r.av) + ee.a;
  for (const VehicleState& p : r.parts) {
    const double reach = r_av + bounding_radius(p) + eo.a;
    const double ds = p.frenet.s - r.av.frenet.s, dd = p.frenet.d - r.av.frenet.d;
    if (ds * ds + dd * dd > reach * reach) continue;
    if (!av_fp) av_fp = footprint_of(r.av, &ee, spec.arc_samples);
    if (collision_with_uncertainty(*av_fp, footprint_of(p, &eo, spec.arc_samples))) return true;
  }
  return false;
}

Observation observation_at(const Rollout& r, std::size_t index) {
  if (index == 1) return r.tr->next_obs;
  if (r.track) {
    const FootprintInflation infl{r.track->ego[index - 1], r.track->other[index - 1]};
    return assemble_observation(*r.ctx->model, r.av, r.parts, &infl);
  }
  return assemble_observation(*r.ctx->model, r.av, r.parts, nullptr);
}

void record_step(Rollout& r, std::size_t index, double reward, bool collision,
                 const TargetSpec& spec) {
  if (!r.record) return;
  PredictedStep st;
  st.tau = static_cast<double>(index) * spec.step;
  st.obs = observation_at(r, index);
  st.reward = reward;
  st.collision = collision;
  const Ellipse* ee = r.track ? &r.track->ego[index - 1] : nullptr;
  const Ellipse* eo = r.track ? &r.track->other[index - 1] : nullptr;
  st.av_footprint = footprint_of(r.av, ee, spec.arc_samples);
  for (const VehicleState& p : r.parts) {
    st.participant_footprints.push_back(footprint_of(p, eo, spec.arc_samples));
  }
  if (r.track) {
    st.ego_cov = r.track->ego_cov[index - 1];
    st.other_cov = r.track->other_cov[index - 1];
  }
  r.record->steps.push_back(std::move(st));
}

VehicleState advance_vehicle(const VehicleState& v, const FrenetState& next) {
  VehicleState out = v;
  out.frenet = next;
  if (!v.is_static) out.heading = heading_from_velocity(next, v.heading);
  return out;
}

void check_context(const ReplayTransition& tr, const TargetSpec& spec, std::size_t n,
                   const NoiseModel* noise) {
  if (!tr.ctx || !tr.ctx->model) {
    throw Error(ErrorCode::missing_context, "transition carries no prediction context");
  }
  const PredictionContext& ctx = *tr.ctx;
  if (std::abs(ctx.model->config.step - spec.step) > 1e-12) {
    throw Error(ErrorCode::precondition, "target step differs from the simulator step");
  }
  if (ctx.predictions.size() != ctx.participants_next.size() ||
      ctx.participants.size() != ctx.participants_next.size()) {
    throw Error(ErrorCode::shape_mismatch, "prediction count differs from participant count");
  }
  for (const PlannedTrajectory& p : ctx.predictions) {
    if (p.states.size() < n) {
      throw Error(ErrorCode::shape_mismatch, "predicted trajectory shorter than the horizon");
    }
  }
  if (tr.action.size() != 4) {
    throw Error(ErrorCode::precondition, "predicted rollouts need goal actions");
  }
  if (spec.strategy == TargetStrategy::irp_up && (!noise || !ctx.has_covariance)) {
    throw Error(ErrorCode::missing_covariance, "uncertainty propagation needs covariances");
  }
}

void run_rollouts(std::span<const ReplayTransition* const> batch, const Bootstrap& nets,
                  const TargetSpec& spec, const NoiseModel* noise,
                  std::span<PredictedRollout> records, std::vector<double>& targets) {
  if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) {
    throw Error(ErrorCode::invalid_config, "gamma must lie in (0, 1)");
  }
  const bool predicted = spec.strategy != TargetStrategy::td1;
  const std::size_t n = predicted ? horizon_steps(spec.step, spec.horizon) : 1;
  const bool iterate = spec.strategy == TargetStrategy::irp || spec.strategy == TargetStrategy::irp_up;

  std::vector<UncertaintyTrack> tracks;
  tracks.reserve(batch.size());
  std::vector<Rollout> rs(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const ReplayTransition& tr = *batch[j];
    Rollout& r = rs[j];
    r.tr = &tr;
    r.record = records.empty() ? nullptr : &records[j];
    r.y = tr.reward;
    r.discount = spec.gamma;
    r.accumulating = !tr.done;
    if (!predicted) continue;

    check_context(tr, spec, n, noise);
    r.ctx = tr.ctx.get();
    r.av = r.ctx->av_next;
    r.parts = r.ctx->participants_next;
    if (spec.strategy == TargetStrategy::irp_up) {
      auto same = [&](const UncertaintyTrack& t) {
        return t.ego0.m == r.ctx->ego_cov0.m && t.other0.m == r.ctx->other_cov0.m;
      };
      auto it = std::find_if(tracks.begin(), tracks.end(), same);
      if (it == tracks.end()) {
        tracks.push_back(
            make_track(r.ctx->ego_cov0, r.ctx->other_cov0, *noise, n, spec.confidence));
        it = tracks.end() - 1;
      }
      r.track = &*it;
    }
    if (spec.strategy == TargetStrategy::rp) {
      r.plan = plan_trajectory(r.ctx->av.frenet, to_goal_action(tr.action), spec.step,
                               spec.step * static_cast<double>(n),
                               r.ctx->model->config.max_time_to_goal);
    }
    if (r.record) record_step(r, 1, tr.reward, predicted_collision(r, 1, spec), spec);
  }

  for (std::size_t k = 1; k < n; ++k) {
    // Transition from the state k steps after t to the next one.
    std::vector<std::size_t> live;
    for (std::size_t j = 0; j < rs.size(); ++j) {
      if (rs[j].live()) live.push_back(j);
    }
    if (live.empty()) break;

    Eigen::MatrixXd actions;
    if (iterate) {
      const auto rows = static_cast<Eigen::Index>(batch.front()->next_obs.features.size());
      Eigen::MatrixXd obs(rows, static_cast<Eigen::Index>(live.size()));
      for (std::size_t c = 0; c < live.size(); ++c) {
        const Observation o = observation_at(rs[live[c]], k);
        obs.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(o.features.data(), rows);
      }
      actions = nets.policy(obs);
    }

    for (std::size_t c = 0; c < live.size(); ++c) {
      Rollout& r = rs[live[c]];
      const WorldModel& model = *r.ctx->model;
      FrenetState next_av;
      if (iterate) {
        const GoalAction goal = to_goal_action(actions.col(static_cast<Eigen::Index>(c)));
        next_av = plan_first_state(r.av.frenet, goal, spec.step, model.config.max_time_to_goal);
      } else {
        next_av = r.plan->states[k];
      }
      const FrenetState prev_av = r.av.frenet;
      r.av = advance_vehicle(r.av, next_av);
      r.av.lane_index = model.road.nearest_lane(next_av.d);
      for (std::size_t i = 0; i < r.parts.size(); ++i) {
        r.parts[i] = advance_vehicle(r.parts[i], r.ctx->predictions[i].states[k]);
      }
      const bool hit = predicted_collision(r, k + 1, spec);
      const double reward = reward_terms(model, prev_av, next_av, hit).total;
      if (r.accumulating) {
        r.y += r.discount * reward;
        if (hit) {
          r.accumulating = false;
          if (r.record) r.record->truncated = true;
        }
      }
      r.discount *= spec.gamma;
      record_step(r, k + 1, reward, hit, spec);
    }
  }

  // Bootstrap from the state n steps after t.
  std::vector<std::size_t> boot;
  for (std::size_t j = 0; j < rs.size(); ++j) {
    if (rs[j].accumulating) boot.push_back(j);
  }
  if (!boot.empty()) {
    const auto rows = static_cast<Eigen::Index>(batch.front()->next_obs.features.size());
    Eigen::MatrixXd obs(rows, static_cast<Eigen::Index>(boot.size()));
    std::vector<Observation> kept(boot.size());
    for (std::size_t c = 0; c < boot.size(); ++c) {
      const Rollout& r = rs[boot[c]];
      kept[c] = n == 1 ? r.tr->next_obs : observation_at(r, n);
      if (static_cast<Eigen::Index>(kept[c].features.size()) != rows) {
        throw Error(ErrorCode::shape_mismatch, "observation sizes differ within a batch");
      }
      obs.col(static_cast<Eigen::Index>(c)) =
          Eigen::Map<const Eigen::VectorXd>(kept[c].features.data(), rows);
    }
    const Eigen::MatrixXd act = nets.policy(obs);
    const Eigen::VectorXd q = nets.value(obs, act);
    for (std::size_t c = 0; c < boot.size(); ++c) {
      Rollout& r = rs[boot[c]];
      r.y += r.discount * q(static_cast<Eigen::Index>(c));
      if (r.record) {
        r.record->bootstrap_obs = std::move(kept[c]);
        r.record->bootstrap_action = act.col(static_cast<Eigen::Index>(c));
        r.record->bootstrap_value = q(static_cast<Eigen::Index>(c));
      }
    }
  }

  targets.resize(rs.size());
  for (std::size_t j = 0; j < rs.size(); ++j) {
    targets[j] = rs[j].y;
    if (rs[j].record) rs[j].record->target = rs[j].y;
  }
}

double single_target(const ReplayTransition& tr, const Bootstrap& nets, TargetSpec spec,
                     TargetStrategy strategy, const NoiseModel* noise) {
  spec.strategy = strategy;
  const ReplayTransition* one[1] = {&tr};
  std::vector<double> y;
  run_rollouts(one, nets, spec, noise, {}, y);
  return y.front();
}

}  // namespace

double td1_target(const ReplayTransition& tr, const Bootstrap& nets, const TargetSpec& spec) {
  return single_target(tr, nets, spec, TargetStrategy::td1, nullptr);
}

double rp_target(const ReplayTransition& tr, const Bootstrap& nets, const TargetSpec& spec) {
  return single_target(tr, nets, spec, TargetStrategy::rp, nullptr);
}

double irp_target(const ReplayTransition& tr, const Bootstrap& nets, const TargetSpec& spec) {
  return single_target(tr, nets, spec, TargetStrategy::irp, nullptr);
}

double irp_up_target(const ReplayTransition& tr, const Bootstrap& nets, const TargetSpec& spec,
                     const NoiseModel& noise) {
  return single_target(tr, nets, spec, TargetStrategy::irp_up, &noise);
}

PredictedRollout predict_rollout(const ReplayTransition& tr, const Bootstrap& nets,
                                 const TargetSpec& spec, const NoiseModel* noise) {
  PredictedRollout rec;
  const ReplayTransition* one[1] = {&tr};
  std::vector<double> y;
  run_rollouts(one, nets, spec, noise, std::span<PredictedRollout>(&rec, 1), y);
  return rec;
}

std::vector<double> compute_targets(std::span<const ReplayTransition* const> batch,
                                    const Bootstrap& nets, const TargetSpec& spec,
                                    const NoiseModel* noise) {
  std::vector<double> y;
  if (batch.empty()) return y;
  run_rollouts(batch, nets, spec, noise, {}, y);
  return y;
}

}  // namespace rlplan
