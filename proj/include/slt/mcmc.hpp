#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slt/models.hpp"

namespace slt {

// Uniform box prior [-half_width, half_width]^d.
struct PriorSpec {
    double half_width = 5.0;

    bool contains(const Eigen::VectorXd& w) const;
    double log_density(int dim) const;  // constant inside the box
    // Throws std::invalid_argument unless every truth entry lies strictly inside.
    void require_inside(const ParamPoint& truth) const;
};

struct McmcConfig {
    int n_chains = 2;
    long n_burn = 1000;
    long n_keep = 1000;
    int thin = 2;
    double target_accept = 0.44;
    double beta = 1.0;  // inverse temperature of the tempered posterior
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ChainResult {
    ModelSpec spec;
    std::vector<Eigen::VectorXd> draws;  // flatten() layout, chains concatenated
    std::vector<double> loglik;          // untempered sum log p per kept draw
    double beta = 1.0;
    std::vector<double> acceptance;  // per chain, post burn-in
    std::vector<double> ess;         // per chain, from the log-likelihood trace
    bool diag_ok = true;
    std::string diag_message;

    long n_draws() const { return static_cast<long>(draws.size()); }
};

// Componentwise adaptive random-walk Metropolis targeting
// prior(w) * prod_l p(response_l | x_l, w)^beta. Per-coordinate step sizes
// adapt toward target_accept during burn-in only and are frozen afterward;
// proposals outside the prior box are rejected. Chains start from a jittered
// least-squares estimate (uniform in the box when the dataset is empty) so
// none is stranded in a mirror basin of the factorization. Deterministic
// given (cfg.seed, chain index); chains run in parallel up to cfg.threads.
// Acceptance outside [0.05, 0.95] after adaptation, or chains whose mean
// energies disagree far beyond within-chain spread, set diag_ok = false.
ChainResult tempered_posterior_sample(const ModelSpec& s, const Dataset& data,
                                      const PriorSpec& prior, const McmcConfig& cfg);

// Effective sample size of one scalar trace (initial positive-sequence
// autocorrelation estimator).
double effective_sample_size(const std::vector<double>& trace);

}  // namespace slt
