#include "slt/mcmc.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>

#include "slt/parallel.hpp"

namespace slt {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void validate_config(const McmcConfig& cfg) {
    require(cfg.n_chains >= 1, "n_chains must be >= 1");
    require(cfg.n_burn >= 0, "n_burn must be >= 0");
    require(cfg.n_keep >= 1, "n_keep must be >= 1");
    require(cfg.thin >= 1, "thin must be >= 1");
    require(cfg.target_accept > 0.0 && cfg.target_accept < 1.0,
            "target_accept must lie in (0,1)");
    require(cfg.beta > 0.0, "beta must be > 0");
}

constexpr long kAdaptBatch = 50;  // sweeps per step-size update
constexpr double kInitJitter = 0.1;

// Crude consistent estimate used as the chain starting point. Sign-symmetric
// likelihood surfaces (e.g. the bottleneck factorization) have mirror basins
// separated by barriers a random-walk chain cannot cross at beta ~ 1/log n;
// a least-squares start lands every chain in the basin that carries the
// posterior mass. Categorical/Bernoulli blocks are fitted as if linear,
// which preserves the signs that matter here.
Eigen::VectorXd least_squares_init(const ModelSpec& s, const Dataset& data) {
    ParamPoint p;
    if (s.family == Family::CBM) {
        Eigen::MatrixXd bt = data.X.completeOrthogonalDecomposition().solve(data.C);
        Eigen::MatrixXd at = data.C.completeOrthogonalDecomposition().solve(data.Y);
        p.win = bt.transpose();
        p.wout = at.transpose();
        return flatten(p);
    }
    long m = s.dims.n_out, k = s.dims.n_concepts, h = s.dims.hidden;
    Eigen::MatrixXd resp(data.n(), m + k);
    resp.leftCols(m) = data.Y;
    if (k > 0) resp.rightCols(k) = data.C;
    Eigen::MatrixXd wt = data.X.completeOrthogonalDecomposition().solve(resp);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(wt.transpose(),
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    long r = 0;
    while (r < sv.size() && r < h && sv[r] > 1e-12 * sv[0]) ++r;
    p.wout = Eigen::MatrixXd::Zero(m + k, h);
    p.win = Eigen::MatrixXd::Zero(h, s.dims.n_in);
    for (long j = 0; j < r; ++j) {
        double scale = std::sqrt(sv[j]);
        p.wout.col(j) = svd.matrixU().col(j) * scale;
        p.win.row(j) = svd.matrixV().col(j).transpose() * scale;
    }
    return flatten(p);
}

struct SingleChain {
    std::vector<Eigen::VectorXd> draws;
    std::vector<double> loglik;
    double acceptance = 0.0;
    double ess = 0.0;
};

SingleChain run_chain(const LogLikCache& cache, const PriorSpec& prior, const McmcConfig& cfg,
                      std::uint64_t chain_seed, int dim, const Eigen::VectorXd* informed) {
    std::mt19937_64 rng(chain_seed);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double c = prior.half_width;

    Eigen::VectorXd w(dim);
    if (informed != nullptr) {
        double cap = 0.995 * c;
        for (int i = 0; i < dim; ++i) {
            w[i] = std::clamp((*informed)[i] + kInitJitter * norm(rng), -cap, cap);
        }
    } else {
        for (int i = 0; i < dim; ++i) w[i] = (2.0 * unif(rng) - 1.0) * c;
    }
    double ll = cache.eval_flat(w);

    Eigen::VectorXd log_step = Eigen::VectorXd::Constant(dim, std::log(0.5));
    Eigen::VectorXi batch_accepts = Eigen::VectorXi::Zero(dim);

    auto sweep = [&](long* accepted, long* proposed) {
        for (int i = 0; i < dim; ++i) {
            double old = w[i];
            double cand = old + std::exp(log_step[i]) * norm(rng);
            double u = unif(rng);  // consumed even on box rejection, for a fixed stream shape
            if (proposed) ++*proposed;
            if (std::abs(cand) > c) continue;
            w[i] = cand;
            double ll_cand = cache.eval_flat(w);
            if (std::log(u) < cfg.beta * (ll_cand - ll)) {
                ll = ll_cand;
                batch_accepts[i] += 1;
                if (accepted) ++*accepted;
            } else {
                w[i] = old;
            }
        }
    };

    // Burn-in with step adaptation toward target_accept, frozen afterward.
    long batch_index = 0;
    for (long it = 0; it < cfg.n_burn; ++it) {
        sweep(nullptr, nullptr);
        if ((it + 1) % kAdaptBatch == 0 || it + 1 == cfg.n_burn) {
            long in_batch = (it % kAdaptBatch) + 1;
            ++batch_index;
            double gain = 2.0 / std::sqrt(static_cast<double>(batch_index));
            for (int i = 0; i < dim; ++i) {
                double rate = static_cast<double>(batch_accepts[i]) / in_batch;
                log_step[i] += gain * (rate - cfg.target_accept);
                log_step[i] = std::clamp(log_step[i], -12.0, 4.0);
            }
            batch_accepts.setZero();
        }
    }

    SingleChain out;
    out.draws.reserve(cfg.n_keep);
    out.loglik.reserve(cfg.n_keep);
    long accepted = 0, proposed = 0;
    for (long k = 0; k < cfg.n_keep; ++k) {
        for (int t = 0; t < cfg.thin; ++t) sweep(&accepted, &proposed);
        out.draws.push_back(w);
        out.loglik.push_back(ll);
    }
    out.acceptance = proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0;
    out.ess = effective_sample_size(out.loglik);
    return out;
}

}  // namespace

bool PriorSpec::contains(const Eigen::VectorXd& w) const {
    return (w.array().abs() <= half_width).all();
}

double PriorSpec::log_density(int dim) const { return -dim * std::log(2.0 * half_width); }

void PriorSpec::require_inside(const ParamPoint& truth) const {
    double biggest = std::max(truth.wout.size() ? truth.wout.cwiseAbs().maxCoeff() : 0.0,
                              truth.win.size() ? truth.win.cwiseAbs().maxCoeff() : 0.0);
    require(biggest < half_width,
            "prior half_width must strictly contain every truth entry");
}

double effective_sample_size(const std::vector<double>& trace) {
    long n = static_cast<long>(trace.size());
    if (n < 4) return static_cast<double>(n);
    double mean = 0.0;
    for (double v : trace) mean += v;
    mean /= n;
    double c0 = 0.0;
    for (double v : trace) c0 += (v - mean) * (v - mean);
    c0 /= n;
    if (c0 <= 0.0) return static_cast<double>(n);  // constant trace

    auto autocov = [&](long lag) {
        double s = 0.0;
        for (long i = 0; i + lag < n; ++i) s += (trace[i] - mean) * (trace[i + lag] - mean);
        return s / n;
    };

    // Geyer initial positive sequence over lag pairs.
    double tau = 1.0;
    for (long m = 1; 2 * m < n - 1; ++m) {
        double pair_sum = autocov(2 * m - 1) + autocov(2 * m);
        if (pair_sum <= 0.0) break;
        tau += 2.0 * pair_sum / c0;
    }
    return std::max(1.0, n / tau);
}

ChainResult tempered_posterior_sample(const ModelSpec& s, const Dataset& data,
                                      const PriorSpec& prior, const McmcConfig& cfg) {
    validate_spec(s);
    validate_config(cfg);
    require(prior.half_width > 0.0, "prior half_width must be > 0");

    LogLikCache cache(s, data);
    int dim = param_count(s);

    std::optional<Eigen::VectorXd> informed;
    if (data.n() > 0) informed = least_squares_init(s, data);

    std::vector<SingleChain> chains(cfg.n_chains);
    parallel_for(cfg.n_chains, cfg.threads, [&](long c) {
        chains[c] = run_chain(cache, prior, cfg, derive_seed(cfg.seed, c), dim,
                              informed ? &*informed : nullptr);
    });

    ChainResult out;
    out.spec = s;
    out.beta = cfg.beta;
    out.draws.reserve(static_cast<std::size_t>(cfg.n_chains) * cfg.n_keep);
    out.loglik.reserve(static_cast<std::size_t>(cfg.n_chains) * cfg.n_keep);
    for (const SingleChain& ch : chains) {
        out.draws.insert(out.draws.end(), ch.draws.begin(), ch.draws.end());
        out.loglik.insert(out.loglik.end(), ch.loglik.begin(), ch.loglik.end());
        out.acceptance.push_back(ch.acceptance);
        out.ess.push_back(ch.ess);
    }
    for (int c = 0; c < cfg.n_chains; ++c) {
        if (chains[c].acceptance < 0.05 || chains[c].acceptance > 0.95) {
            out.diag_ok = false;
            out.diag_message = "chain " + std::to_string(c) + " acceptance rate " +
                               std::to_string(chains[c].acceptance) +
                               " outside [0.05, 0.95] after adaptation";
            break;
        }
    }

    // A chain trapped in a spurious basin sits many deviations above the
    // others in mean energy; flag rather than silently pool it.
    if (out.diag_ok && cfg.n_chains > 1 && data.n() > 0) {
        double lo_mean = 0.0, hi_mean = 0.0, min_sd = 0.0;
        for (int c = 0; c < cfg.n_chains; ++c) {
            const std::vector<double>& trace = chains[c].loglik;
            double mean = 0.0;
            for (double v : trace) mean += v;
            mean /= static_cast<double>(trace.size());
            double ss = 0.0;
            for (double v : trace) ss += (v - mean) * (v - mean);
            double sd = std::sqrt(ss / static_cast<double>(trace.size()));
            if (c == 0) {
                lo_mean = hi_mean = mean;
                min_sd = sd;
            } else {
                lo_mean = std::min(lo_mean, mean);
                hi_mean = std::max(hi_mean, mean);
                min_sd = std::min(min_sd, sd);
            }
        }
        double spread = hi_mean - lo_mean;
        if (spread > std::max(2.0, 8.0 * min_sd)) {
            out.diag_ok = false;
            out.diag_message = "chains disagree in mean log-likelihood (spread " +
                               std::to_string(spread) + ", within-chain sd " +
                               std::to_string(min_sd) + "); a chain looks trapped";
        }
    }
    return out;
}

}  // namespace slt
