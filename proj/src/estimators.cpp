#include "slt/estimators.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "slt/errors.hpp"
#include "slt/parallel.hpp"

namespace slt {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

double mean_negative_loglik(const ChainResult& chain) {
    double total = 0.0;
    for (double ll : chain.loglik) total -= ll;
    return total / static_cast<double>(chain.loglik.size());
}

constexpr long kMinHits = 30;

}  // namespace

double wbic_beta(long n) {
    require(n >= 3, "wbic needs n >= 3 (beta = 1/log n)");
    return 1.0 / std::log(static_cast<double>(n));
}

std::pair<double, double> two_temperature_betas(long n) {
    require(n >= 3, "two-temperature betas need n >= 3");
    double logn = std::log(static_cast<double>(n));
    return {1.0 / logn, 1.5 / logn};
}

double wbic(const ModelSpec& s, const Dataset& data, const PriorSpec& prior,
            const McmcConfig& cfg) {
    long n = data.n();
    if (n == 0) return 0.0;
    McmcConfig tempered = cfg;
    tempered.beta = wbic_beta(n);
    ChainResult chain = tempered_posterior_sample(s, data, prior, tempered);
    if (!chain.diag_ok) throw estimation_error("wbic sampler diagnostics: " + chain.diag_message);
    return mean_negative_loglik(chain);
}

double rlct_two_temperature(const ModelSpec& s, const Dataset& data, const PriorSpec& prior,
                            const McmcConfig& cfg, double beta1, double beta2) {
    require(beta1 > 0.0 && beta1 < beta2, "temperatures must satisfy 0 < beta1 < beta2");
    McmcConfig c1 = cfg;
    c1.beta = beta1;
    c1.seed = derive_seed(cfg.seed, 0xB1);
    McmcConfig c2 = cfg;
    c2.beta = beta2;
    c2.seed = derive_seed(cfg.seed, 0xB2);

    ChainResult r1 = tempered_posterior_sample(s, data, prior, c1);
    if (!r1.diag_ok) {
        throw estimation_error("two-temperature sampler diagnostics (beta1): " + r1.diag_message);
    }
    ChainResult r2 = tempered_posterior_sample(s, data, prior, c2);
    if (!r2.diag_ok) {
        throw estimation_error("two-temperature sampler diagnostics (beta2): " + r2.diag_message);
    }
    double e1 = mean_negative_loglik(r1);
    double e2 = mean_negative_loglik(r2);
    return (e1 - e2) / (1.0 / beta1 - 1.0 / beta2);
}

double posterior_predictive_log_density(const ChainResult& chain, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& c, const Eigen::VectorXd& y) {
    require(chain.n_draws() >= 1, "predictive needs at least one draw");
    long d = chain.n_draws();
    Eigen::VectorXd logp(d);
    for (long r = 0; r < d; ++r) {
        ParamPoint p = unflatten(chain.spec, chain.draws[r]);
        logp[r] = log_density_record(chain.spec, p, x, c, y);
    }
    return detail::log_sum_exp(logp) - std::log(static_cast<double>(d));
}

GenErrorEstimate estimate_generalization_error(const ChainResult& chain, const ParamPoint& truth,
                                               const InputSpec& input, long n_test,
                                               std::uint64_t seed, long n_resp) {
    const ModelSpec& s = chain.spec;
    validate_shapes(s, truth);
    validate_input(input, s.dims.n_in);
    require(n_test >= 2, "n_test must be >= 2");
    require(n_resp >= 1, "n_resp must be >= 1");
    long d = chain.n_draws();
    require(d >= 1, "generalization error needs at least one draw");

    const long m = s.dims.n_out, k = s.dims.n_concepts, nin = s.dims.n_in;

    // Stack per-draw block maps so each test point costs two mat-vecs.
    Eigen::MatrixXd task_stack(d * m, nin);
    Eigen::MatrixXd conc_stack(d * k, nin);
    {
        Eigen::MatrixXd task_map, conc_map;
        for (long r = 0; r < d; ++r) {
            ParamPoint p = unflatten(s, chain.draws[r]);
            detail::block_maps(s, p, task_map, conc_map);
            task_stack.middleRows(r * m, m) = task_map;
            if (k > 0) conc_stack.middleRows(r * k, k) = conc_map;
        }
    }
    Eigen::MatrixXd true_task, true_conc;
    detail::block_maps(s, truth, true_task, true_conc);

    Eigen::MatrixXd chol = input.chol();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> norm(0.0, 1.0);

    double sum = 0.0, sum_sq = 0.0;
    Eigen::VectorXd z(nin), c_rec, y_rec, logp(d);
    for (long i = 0; i < n_test; ++i) {
        for (long j = 0; j < nin; ++j) z[j] = norm(rng);
        Eigen::VectorXd x = chol * z;
        Eigen::VectorXd tmean = true_task * x;
        Eigen::VectorXd cmean = true_conc * x;
        Eigen::VectorXd task_all = task_stack * x;  // d*m
        Eigen::VectorXd conc_all = k > 0 ? Eigen::VectorXd(conc_stack * x) : Eigen::VectorXd();

        double v = 0.0;
        for (long rep = 0; rep < n_resp; ++rep) {
            detail::sample_response(s, tmean, cmean, rng, c_rec, y_rec);
            double logq = detail::block_log_density(s, tmean, cmean, c_rec, y_rec);
            for (long r = 0; r < d; ++r) {
                logp[r] = detail::block_log_density(
                    s, task_all.segment(r * m, m),
                    k > 0 ? Eigen::VectorXd(conc_all.segment(r * k, k)) : Eigen::VectorXd(0),
                    c_rec, y_rec);
            }
            double log_pred = detail::log_sum_exp(logp) - std::log(static_cast<double>(d));
            v += logq - log_pred;
        }
        v /= static_cast<double>(n_resp);
        sum += v;
        sum_sq += v * v;
    }

    GenErrorEstimate est;
    est.n_test = n_test;
    est.value = sum / n_test;
    double var = (sum_sq - n_test * est.value * est.value) / (n_test - 1);
    est.std_error = std::sqrt(std::max(0.0, var) / n_test);
    if (est.value < -3.0 * est.std_error) {
        est.flagged = true;
        est.message = "estimate negative beyond 3 std errors";
    }
    return est;
}

std::vector<double> geometric_grid(double hi, double lo, int points) {
    require(hi > lo && lo > 0.0 && points >= 2, "geometric grid needs hi > lo > 0, points >= 2");
    std::vector<double> grid(points);
    double ratio = std::log(lo / hi) / (points - 1);
    for (int j = 0; j < points; ++j) grid[j] = hi * std::exp(ratio * j);
    return grid;
}

VolumeResult estimate_rlct_volume(const std::function<double(const Eigen::VectorXd&)>& kl,
                                  int dim, const PriorSpec& prior, std::vector<double> t_grid,
                                  long n_samples, std::uint64_t seed, int threads) {
    require(dim >= 1, "dim must be >= 1");
    require(n_samples >= 1, "n_samples must be >= 1");
    require(!t_grid.empty(), "t_grid must be nonempty");
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        require(t_grid[j] > 0.0, "t_grid values must be positive");
        require(j == 0 || t_grid[j] < t_grid[j - 1], "t_grid must be strictly decreasing");
    }

    const long kBlock = 1 << 16;
    long n_blocks = (n_samples + kBlock - 1) / kBlock;
    std::vector<std::vector<long>> block_hits(n_blocks, std::vector<long>(t_grid.size(), 0));

    parallel_for(n_blocks, threads, [&](long b) {
        std::mt19937_64 rng(derive_seed(seed, b));
        std::uniform_real_distribution<double> unif(-prior.half_width, prior.half_width);
        long count = std::min(kBlock, n_samples - b * kBlock);
        Eigen::VectorXd w(dim);
        std::vector<long>& hits = block_hits[b];
        for (long i = 0; i < count; ++i) {
            for (int j = 0; j < dim; ++j) w[j] = unif(rng);
            double value = kl(w);
            // grid is decreasing: w is a hit for every t above its value
            for (std::size_t j = 0; j < t_grid.size() && value < t_grid[j]; ++j) ++hits[j];
        }
    });

    VolumeResult out;
    out.t_grid = t_grid;
    out.n_samples = n_samples;
    out.hits.assign(t_grid.size(), 0);
    for (const auto& hits : block_hits) {
        for (std::size_t j = 0; j < hits.size(); ++j) out.hits[j] += hits[j];
    }

    // Least squares of log V against log t over well-resolved points.
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        if (out.hits[j] >= kMinHits) {
            xs.push_back(std::log(t_grid[j]));
            ys.push_back(std::log(static_cast<double>(out.hits[j]) / n_samples));
        }
    }
    out.usable_points = static_cast<long>(xs.size());
    if (out.usable_points < 3) {
        throw estimation_error(
            "volume fit has fewer than 3 grid points with >= 30 hits (t_grid too aggressive "
            "for n_samples: " +
            std::to_string(out.usable_points) + " usable)");
    }

    long np = out.usable_points;
    double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / np;
    double ybar = std::accumulate(ys.begin(), ys.end(), 0.0) / np;
    double sxx = 0.0, sxy = 0.0;
    for (long i = 0; i < np; ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    out.lambda_hat = sxy / sxx;
    out.intercept = ybar - out.lambda_hat * xbar;
    double rss = 0.0;
    for (long i = 0; i < np; ++i) {
        double resid = ys[i] - (out.intercept + out.lambda_hat * xs[i]);
        rss += resid * resid;
    }
    out.std_error = np > 2 ? std::sqrt(rss / (np - 2) / sxx) : 0.0;
    return out;
}

}  // namespace slt
