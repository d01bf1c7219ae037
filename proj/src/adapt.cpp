#include "sdmh/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdmh/errors.hpp"

namespace sdmh {

void AdaptConfig::validate(std::size_t total) const {
  if (window == 0) throw ConfigError("adaptation window must be positive");
  if (!(c > 0.0)) throw ConfigError("adaptation scale c must be positive");
  if (!(delta > 0.5 && delta <= 1.0)) throw ConfigError("adaptation decay must lie in (0.5, 1]");
  if (!(lambda_min > 0.0 && lambda_min < lambda_max)) {
    throw ConfigError("lambda bounds must satisfy 0 < lambda_min < lambda_max");
  }
  if (!(initial_lambda >= lambda_min && initial_lambda <= lambda_max)) {
    throw ConfigError("initial lambda lies outside [lambda_min, lambda_max]");
  }
  if (enabled && !(t_start < t_end && t_end <= total)) {
    throw ConfigError("adaptation interval must satisfy t_start < t_end <= iterations (got [" +
                      std::to_string(t_start) + ", " + std::to_string(t_end) + "), T = " +
                      std::to_string(total) + ")");
  }
}

AdaptState AdaptState::initial(const AdaptConfig& config) {
  AdaptState s;
  s.lambda = config.initial_lambda;
  s.log_lambda.push_back(std::log(config.initial_lambda));
  s.frozen = !config.enabled;
  return s;
}

int sgn_convention(double x) { return x < 0.0 ? -1 : 1; }

double robbins_monro_step(double c, double delta, std::size_t k) {
  return c * std::pow(static_cast<double>(k), -delta);
}

bool record_step(AdaptState& s, const AdaptConfig& config, std::size_t t, bool accepted) {
  if (s.frozen) return false;
  if (t >= config.t_end) {
    s.frozen = true;
    return false;
  }
  if (t < config.t_start) return false;
  s.n_acc += accepted ? 1 : 0;
  s.t_window += 1;
  if (s.t_window < config.window) return false;

  s.k += 1;
  s.alpha_previous = s.alpha_current;
  s.alpha_current = static_cast<double>(s.n_acc) / static_cast<double>(config.window);
  double log_new = s.log_lambda.back();
  if (s.k > 1) {
    const std::size_t m = s.log_lambda.size();
    const double direction = s.log_lambda[m - 1] - s.log_lambda[m - 2];
    log_new += robbins_monro_step(config.c, config.delta, s.k) *
               (s.alpha_current - s.alpha_previous) * sgn_convention(direction);
    log_new = std::clamp(log_new, std::log(config.lambda_min), std::log(config.lambda_max));
  }
  s.log_lambda.push_back(log_new);
  s.lambda = std::exp(log_new);
  s.n_acc = 0;
  s.t_window = 0;
  return true;
}

double ScaleAdaptState::scale() const { return std::exp(log_scale); }

SymmetricMatrix adapt_rw_scale(const SymmetricMatrix& sigma, double window_rate, double target,
                               double eta) {
  return SymmetricMatrix(sigma.matrix() * std::exp(eta * (window_rate - target)));
}

bool record_scale_step(ScaleAdaptState& s, const ScaleAdaptConfig& config, std::size_t t,
                       bool accepted) {
  if (s.frozen) return false;
  if (!config.enabled || t >= config.t_end) {
    s.frozen = true;
    return false;
  }
  s.n_acc += accepted ? 1 : 0;
  s.t_window += 1;
  if (s.t_window < config.window) return false;
  s.k += 1;
  const double rate = static_cast<double>(s.n_acc) / static_cast<double>(config.window);
  s.log_scale += robbins_monro_step(config.c, config.delta, s.k) * (rate - config.target);
  s.n_acc = 0;
  s.t_window = 0;
  return true;
}

}  // namespace sdmh
