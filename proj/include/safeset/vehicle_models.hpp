#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "safeset/model.hpp"
#include "safeset/rng.hpp"
#include "safeset/state.hpp"

namespace safeset {

// ---------------------------------------------------------------------------
// IDM family

struct IdmParams {
  double s0_min_gap = 2.0;
  double a_max = 0.73;
  double b_comf = 1.67;
  double T_headway = 2.0;
  double exponent = 4.0;
  double vehicle_length = 4.0;
  double v_free = 30.0;
  double b_cap = 5.0;  // 3 / 5 / 7 for the mild / normal / hard variants
  bool subtract_vehicle_length = false;  // on when d is center-to-center
  double gap_floor = 0.01;

  void validate() const {
    auto pos = [](double x, const char* what) {
      if (!(x > 0.0)) throw std::invalid_argument(std::string("IdmParams: ") + what +
                                                  " must be > 0");
    };
    pos(s0_min_gap, "s0_min_gap");
    pos(a_max, "a_max");
    pos(b_comf, "b_comf");
    pos(T_headway, "T_headway");
    pos(exponent, "exponent");
    pos(vehicle_length, "vehicle_length");
    pos(v_free, "v_free");
    pos(b_cap, "b_cap");
    pos(gap_floor, "gap_floor");
  }
};

// The desired gap s* is deliberately NOT floored at zero: with a much faster
// lead it goes negative and re-enters squared, which is what makes the model
// brake despite a widening gap.
inline double idm_accel(const IdmParams& p, const State& s) {
  double g = s.d - (p.subtract_vehicle_length ? p.vehicle_length : 0.0);
  g = std::max(g, p.gap_floor);
  const double s_star = p.s0_min_gap + s.v0 * p.T_headway +
                        s.v0 * (s.v0 - s.v1) / (2.0 * std::sqrt(p.a_max * p.b_comf));
  const double a =
      p.a_max * (1.0 - std::pow(s.v0 / p.v_free, p.exponent) - (s_star / g) * (s_star / g));
  return std::clamp(a, -p.b_cap, p.a_max);
}

class IdmModel final : public SubjectVehicleModel {
 public:
  IdmModel(IdmParams params, std::string name)
      : params_(params), name_(std::move(name)) {
    params_.validate();
  }
  double accel(const State& s, double) override { return idm_accel(params_, s); }
  void reset() override {}  // memoryless
  std::string name() const override { return name_; }
  const IdmParams& params() const { return params_; }

 private:
  IdmParams params_;
  std::string name_;
};

inline std::unique_ptr<SubjectVehicleModel> make_idm(double b_cap, std::string name) {
  IdmParams p;
  p.b_cap = b_cap;
  return std::make_unique<IdmModel>(p, std::move(name));
}
inline std::unique_ptr<SubjectVehicleModel> make_idm_m() { return make_idm(3.0, "idm_m"); }
inline std::unique_ptr<SubjectVehicleModel> make_idm_n() { return make_idm(5.0, "idm_n"); }
inline std::unique_ptr<SubjectVehicleModel> make_idm_h() { return make_idm(7.0, "idm_h"); }

// ---------------------------------------------------------------------------
// ACC-AEB switch controller

struct AccAebParams {
  double ttc_threshold = 3.0;  // ACC -> AEB switch, seconds
  double kp = 2.0;             // PI gains on the time-headway error
  double ki = 0.1;
  double kv = 0.4;  // free-speed pull gain
  double desired_time_headway = 1.5;
  double a_max_acc = 2.0;    // ACC acceleration cap
  double b_comf_acc = 3.5;   // ACC braking cap
  double b_max = 10.0;       // AEB braking cap
  double jerk_limit = 16.0;  // command change-rate cap, m/s^3
  double v_free = 30.0;
  double v_eps = 0.1;        // speed floor for the time-headway quotient
  double integral_cap = 5.0;  // anti-windup bound on the accumulated error

  void validate() const {
    auto pos = [](double x, const char* what) {
      if (!(x > 0.0)) throw std::invalid_argument(std::string("AccAebParams: ") + what +
                                                  " must be > 0");
    };
    pos(ttc_threshold, "ttc_threshold");
    pos(kp, "kp");
    pos(ki, "ki");
    pos(kv, "kv");
    pos(desired_time_headway, "desired_time_headway");
    pos(a_max_acc, "a_max_acc");
    pos(b_comf_acc, "b_comf_acc");
    pos(b_max, "b_max");
    pos(jerk_limit, "jerk_limit");
    pos(v_free, "v_free");
    pos(v_eps, "v_eps");
    pos(integral_cap, "integral_cap");
  }
};

class AccAebModel final : public SubjectVehicleModel {
 public:
  explicit AccAebModel(AccAebParams params) : params_(params) { params_.validate(); }

  double accel(const State& s, double dt) override {
    const auto& p = params_;
    const double ttc = s.v0 > s.v1 ? s.d / (s.v0 - s.v1)
                                   : std::numeric_limits<double>::infinity();
    double raw;
    if (ttc > p.ttc_threshold) {
      // ACC: PI on time-headway error, capped by the free-speed pull so the
      // controller never pushes past v_free.
      const double e = s.d / std::max(s.v0, p.v_eps) - p.desired_time_headway;
      integral_ = std::clamp(integral_ + e * dt, -p.integral_cap, p.integral_cap);
      raw = std::min(p.kp * e + p.ki * integral_, p.kv * (p.v_free - s.v0));
      raw = std::clamp(raw, -p.b_comf_acc, p.a_max_acc);
    } else {
      raw = -p.b_max;
    }
    const double step = p.jerk_limit * dt;
    const double cmd = std::clamp(raw, prev_cmd_ - step, prev_cmd_ + step);
    prev_cmd_ = cmd;
    return cmd;
  }

  void reset() override {
    integral_ = 0.0;
    prev_cmd_ = 0.0;
  }

  std::string name() const override { return "acc_aeb"; }
  const AccAebParams& params() const { return params_; }

 private:
  AccAebParams params_;
  double integral_ = 0.0;
  double prev_cmd_ = 0.0;
};

// ---------------------------------------------------------------------------
// Analytic reference and synthetic stochastic wrapper

class PerfectBrakeModel final : public SubjectVehicleModel {
 public:
  explicit PerfectBrakeModel(double b) : b_(b) {
    if (!(b > 0.0))
      throw std::invalid_argument("PerfectBrakeModel: braking capability must be > 0");
  }
  double accel(const State&, double) override { return -b_; }
  void reset() override {}
  std::string name() const override { return "perfect_brake"; }
  double capability() const { return b_; }

 private:
  double b_;
};

// Brake dropout: each braking command is replaced by 0 with probability
// p_fail. The wrapper owns its random stream; reset() restores the inner
// controller but the stream keeps advancing, so consecutive runs differ while
// the whole sequence stays reproducible from the construction seed.
class StochasticBrakeDropout final : public SubjectVehicleModel {
 public:
  StochasticBrakeDropout(std::unique_ptr<SubjectVehicleModel> inner, double p_fail,
                         std::uint64_t seed)
      : inner_(std::move(inner)), p_fail_(p_fail), rng_(seed) {
    if (!inner_) throw std::invalid_argument("StochasticBrakeDropout: null inner model");
    if (!(p_fail >= 0.0 && p_fail <= 1.0))
      throw std::invalid_argument("StochasticBrakeDropout: p_fail must be in [0,1]");
  }

  double accel(const State& s, double dt) override {
    const double a = inner_->accel(s, dt);
    if (a < 0.0 && p_fail_ > 0.0 && uniform_real(rng_, 0.0, 1.0) < p_fail_) return 0.0;
    return a;
  }

  void reset() override { inner_->reset(); }
  std::string name() const override { return "stochastic:" + inner_->name(); }
  double p_fail() const { return p_fail_; }

 private:
  std::unique_ptr<SubjectVehicleModel> inner_;
  double p_fail_;
  Rng rng_;
};

}  // namespace safeset
