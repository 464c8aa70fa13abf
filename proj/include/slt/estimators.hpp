#pragma once

#include <functional>

#include "slt/mcmc.hpp"

namespace slt {

// Inverse temperature prescribed for the information criterion: 1/log n.
double wbic_beta(long n);

// Tempered-posterior mean of the negative log likelihood at beta = 1/log n.
// Returns 0 for an empty dataset; requires n >= 3 otherwise. Sampler
// diagnostics propagate as estimation_error.
double wbic(const ModelSpec& s, const Dataset& data, const PriorSpec& prior,
            const McmcConfig& cfg);

// lambda_hat = (E1 - E2) / (1/beta1 - 1/beta2) with E_i the tempered mean of
// the negative log likelihood at beta_i. Requires 0 < beta1 < beta2.
double rlct_two_temperature(const ModelSpec& s, const Dataset& data, const PriorSpec& prior,
                            const McmcConfig& cfg, double beta1, double beta2);

// Default temperature pair {1/log n, 1.5/log n}.
std::pair<double, double> two_temperature_betas(long n);

// log of the draw-averaged conditional density at one point, max-shift
// log-sum-exp over the kept draws.
double posterior_predictive_log_density(const ChainResult& chain, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& c, const Eigen::VectorXd& y);

struct GenErrorEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long n_test = 0;
    bool flagged = false;  // negative beyond 3 std errors
    std::string message;
};

// Monte Carlo over x ~ input and responses ~ truth of
// log q(resp|x) - log p*(resp|x), where p* is the chain's posterior
// predictive. The difference is kept coupled per sampled response so the
// O(1) entropy fluctuations cancel; n_resp responses are averaged per x.
GenErrorEstimate estimate_generalization_error(const ChainResult& chain, const ParamPoint& truth,
                                               const InputSpec& input, long n_test,
                                               std::uint64_t seed, long n_resp = 1);

struct VolumeResult {
    double lambda_hat = 0.0;
    double std_error = 0.0;
    double intercept = 0.0;
    std::vector<double> t_grid;
    std::vector<long> hits;
    long n_samples = 0;
    long usable_points = 0;  // grid points with >= 30 hits
};

// Estimates V(t) = prior mass of {K(w) < t} by hit counting and fits the
// slope of log V against log t by least squares over usable grid points.
// t_grid must be strictly decreasing and positive; fewer than 3 usable
// points throws estimation_error.
VolumeResult estimate_rlct_volume(const std::function<double(const Eigen::VectorXd&)>& kl,
                                  int dim, const PriorSpec& prior, std::vector<double> t_grid,
                                  long n_samples, std::uint64_t seed, int threads = 1);

// Geometric grid from hi down to lo with `points` entries.
std::vector<double> geometric_grid(double hi, double lo, int points);

}  // namespace slt
