#include "clothservo/servo.hpp"

#include <fstream>
#include <json.hpp>
#include <limits>

#include "clothservo/errors.hpp"
#include "clothservo/perception.hpp"

namespace clothservo {

std::string to_string(GoalMode mode) {
  switch (mode) {
    case GoalMode::Single: return "single";
    case GoalMode::Hidden: return "hidden";
    case GoalMode::Sequential: return "sequential";
  }
  return "single";
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "converged";
    case StopReason::TaskComplete: return "task_complete";
    case StopReason::MaxSteps: return "max_steps";
    case StopReason::Diverged: return "diverged";
  }
  return "max_steps";
}

void GoalSpec::validate() const {
  if (mode == GoalMode::Single && targets.size() != 1)
    throw ParameterError("single-goal mode needs exactly one target");
  if (targets.empty()) throw ParameterError("goal needs at least one target");
  if (!costs.empty() && costs.size() != targets.size())
    throw ParameterError("goal costs must match the number of targets");
  if (satisfaction_radius < 0.0) throw ParameterError("satisfaction radius must be >= 0");
  for (const auto& t : targets)
    if (t.layout_id != targets.front().layout_id) throw LayoutMismatch("goal targets disagree on layout");
}

GoalSpec GoalSpec::single(FeatureVector target) {
  GoalSpec g;
  g.targets.push_back(std::move(target));
  return g;
}

void ServoConfig::validate() const {
  if (!(gain > 0.0)) throw ParameterError("servo gain must be > 0");
  if (max_steps < 0) throw ParameterError("max_steps must be >= 0");
  if (stop_epsilon < 0.0 || stop_fraction < 0.0) throw ParameterError("stop thresholds must be >= 0");
  if (!(velocity_clamp > 0.0)) throw ParameterError("velocity clamp must be > 0");
}

Eigen::VectorXd clamp_velocity(const Eigen::VectorXd& v, double limit) {
  if (v.size() == 0) return v;
  const double m = v.cwiseAbs().maxCoeff();
  if (m <= limit) return v;
  return v * (limit / m);
}

FeedbackController::FeedbackController(const FeedbackDictionary& dict, GoalSpec goal,
                                       SparseSolverConfig sparse, ServoConfig servo)
    : dict_(dict),
      goal_(std::move(goal)),
      sparse_(sparse),
      servo_(servo),
      coder_(dict.feature_matrix()),
      velocities_(dict.velocity_matrix()) {
  goal_.validate();
  sparse_.validate();
  servo_.validate();
  if (goal_.targets.front().layout_id != dict_.layout_id())
    throw LayoutMismatch("goal layout '" + goal_.targets.front().layout_id +
                         "' does not match dictionary layout '" + dict_.layout_id() + "'");
  for (int i = 0; i < static_cast<int>(goal_.targets.size()); ++i) remaining_.push_back(i);
}

Eigen::VectorXd FeedbackController::interaction(const FeatureVector& feedback, SparseCode* code) const {
  SparseCode c = coder_.solve(feedback.values, sparse_);
  Eigen::VectorXd v = velocities_ * c.beta;
  if (code) *code = std::move(c);
  return v;
}

ControlOutput FeedbackController::control_step(const FeatureVector& s_now) {
  if (s_now.layout_id != dict_.layout_id())
    throw LayoutMismatch("feature layout '" + s_now.layout_id + "' does not match dictionary layout '" +
                         dict_.layout_id() + "'");
  ControlOutput out;
  out.v = Eigen::VectorXd::Zero(dict_.n_dof);
  out.v_unclamped = out.v;

  struct Candidate {
    int target;
    Eigen::VectorXd velocity;
    SparseCode code;
    double error;
  };
  auto evaluate = [&](int target) {
    Candidate c{target, {}, {}, 0.0};
    const FeatureVector feedback = s_now - goal_.targets[target];
    c.error = feedback.norm();
    c.velocity = interaction(feedback, &c.code);
    return c;
  };

  std::optional<Candidate> chosen;
  switch (goal_.mode) {
    case GoalMode::Single:
      chosen = evaluate(0);
      break;
    case GoalMode::Hidden: {
      // The admissible goal needing the least effort wins.
      for (int i : remaining_) {
        Candidate c = evaluate(i);
        if (!chosen || c.velocity.norm() < chosen->velocity.norm()) chosen = std::move(c);
      }
      break;
    }
    case GoalMode::Sequential: {
      while (!remaining_.empty()) {
        std::optional<Candidate> best;
        double best_score = std::numeric_limits<double>::infinity();
        for (int i : remaining_) {
          Candidate c = evaluate(i);
          const double cost = goal_.costs.empty() ? 0.0 : goal_.costs[i];
          const double score = cost - servo_.gain * c.velocity.norm();
          if (score < best_score) {
            best_score = score;
            best = std::move(c);
          }
        }
        if (best->error <= goal_.satisfaction_radius) {
          std::erase(remaining_, best->target);
          continue;
        }
        chosen = std::move(best);
        break;
      }
      break;
    }
  }

  if (!chosen) {
    out.complete = true;
    return out;
  }
  out.target = chosen->target;
  out.error = chosen->error;
  out.v_unclamped = -servo_.gain * chosen->velocity;
  out.v = clamp_velocity(out.v_unclamped, servo_.velocity_clamp);
  out.code = std::move(chosen->code);
  return out;
}

ControlOutput control_step(const FeatureVector& s_now, const GoalSpec& goal, const FeedbackDictionary& dict,
                           const SparseSolverConfig& sparse, const ServoConfig& servo) {
  FeedbackController controller(dict, goal, sparse, servo);
  return controller.control_step(s_now);
}

ServoTrace run_servo(const ClothState& initial, const ServoEnvironment& env, const GoalSpec& goal,
                     const FeedbackDictionary& dict, const SparseSolverConfig& sparse, const ServoConfig& servo) {
  FeedbackController controller(dict, goal, sparse, servo);
  if (initial.grippers.dof() != dict.n_dof)
    throw ContractError("dictionary DOF count does not match the gripper configuration");

  ServoTrace trace;
  ClothState state = initial;
  GripperConfig command = initial.grippers;
  const double dt = 1.0 / dict.frame_rate;

  for (long t = 0;; ++t) {
    const Image frame = render(state, env.camera);
    if (env.on_frame) env.on_frame(t, frame);
    const ControlOutput out = controller.control_step(extract_features(frame, dict.spec));

    ServoRecord rec;
    rec.step = t;
    rec.r = command.r;
    rec.v = out.v;
    rec.error = out.error;
    rec.target = out.target;
    rec.remaining = controller.remaining().size();
    rec.support = out.code.beta.size() ? out.code.support_size() : 0;
    rec.iterations = out.code.iterations;
    rec.objective = out.code.objective;
    rec.converged = out.complete || out.code.converged;
    trace.records.push_back(rec);

    if (t == 0) {
      trace.initial_error = out.error;
      trace.stop_threshold = std::max(servo.stop_epsilon, servo.stop_fraction * out.error);
    }
    trace.final_error = out.error;
    trace.final_state = state;

    if (out.complete) {
      trace.reason = StopReason::TaskComplete;
      break;
    }
    if (out.error <= trace.stop_threshold && goal.mode != GoalMode::Sequential) {
      trace.reason = StopReason::Converged;
      break;
    }
    if (t >= servo.max_steps) {
      trace.reason = StopReason::MaxSteps;
      break;
    }

    command.r += out.v * dt;
    try {
      state = apply_perturbation(state, env.perturbation, t);
      state = step(state, command, env.sim);
    } catch (const SimulationDiverged& e) {
      trace.reason = StopReason::Diverged;
      trace.message = e.what();
      break;
    }
  }
  return trace;
}

std::string trace_to_jsonl(const ServoTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) {
    nlohmann::json j;
    j["step"] = r.step;
    j["r"] = std::vector<double>(r.r.data(), r.r.data() + r.r.size());
    j["v"] = std::vector<double>(r.v.data(), r.v.data() + r.v.size());
    j["error"] = r.error;
    j["target"] = r.target;
    j["remaining"] = r.remaining;
    j["support"] = r.support;
    j["iterations"] = r.iterations;
    j["objective"] = r.objective;
    j["converged"] = r.converged;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_trace(const ServoTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trace " + path.string());
  out << trace_to_jsonl(trace);
}

}  // namespace clothservo
