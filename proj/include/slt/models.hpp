#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "slt/rlct.hpp"

namespace slt {

// Family + dims + response kinds fully determine the sampling distribution.
struct ModelSpec {
    Family family = Family::CBM;
    ModelDims dims;
    ResponseKinds kinds;
};

// Throws std::invalid_argument on any violated invariant (Standard must have
// K = 0, categorical task needs M >= 2, ...).
void validate_spec(const ModelSpec& s);

// Two-layer weights. For the bottleneck model win is the input->concept map
// (K x N) and wout the concept->output map (M x K); for multitask/standard
// win is input->hidden (H x N) and wout hidden->response ((M+K) x H).
struct ParamPoint {
    Eigen::MatrixXd wout;
    Eigen::MatrixXd win;
};

void validate_shapes(const ModelSpec& s, const ParamPoint& p);
int param_count(const ModelSpec& s);

// Column-major flattening, wout block first. unflatten is its inverse.
Eigen::VectorXd flatten(const ParamPoint& p);
ParamPoint unflatten(const ModelSpec& s, const Eigen::VectorXd& w);

// Zero-mean Gaussian inputs with the given second-moment matrix.
struct InputSpec {
    Eigen::MatrixXd second_moment;

    static InputSpec standard(int n_in);                // identity moment
    static InputSpec gaussian(Eigen::MatrixXd moment);  // general SPD moment

    // Cholesky factor of the moment matrix; throws if not positive definite.
    Eigen::MatrixXd chol() const;
};

void validate_input(const InputSpec& in, int n_in);

// Row l of X/C/Y is record l. Categorical outputs are exact one-hot rows,
// Bernoulli concepts are 0/1 entries.
struct Dataset {
    ModelSpec spec;
    std::uint64_t seed = 0;
    Eigen::MatrixXd X;  // n x N
    Eigen::MatrixXd C;  // n x K
    Eigen::MatrixXd Y;  // n x M

    long n() const { return X.rows(); }
};

void validate_dataset(const Dataset& d);

// Truth entries i.i.d. uniform [-hw, hw]; multitask truths are built as a
// product of rank-H0 factors (zero-padded to H columns) so the declared rank
// is exact.
ParamPoint sample_truth_uniform(const ModelSpec& s, double half_width, std::uint64_t seed);

// Numerical rank of the composite map via singular values, relative
// threshold 1e-8 times the largest singular value.
int numeric_rank(const Eigen::MatrixXd& m);

Dataset sample_dataset(const ModelSpec& s, const ParamPoint& truth, const InputSpec& input,
                       long n, std::uint64_t seed);

// Exact log density of one record, Gaussian normalizers included.
double log_density_record(const ModelSpec& s, const ParamPoint& p,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& c,
                          const Eigen::VectorXd& y);

// Sum of log_density_record over all records (reference per-record path).
double log_likelihood(const ModelSpec& s, const ParamPoint& p, const Dataset& data);

// Fast repeated evaluation of the same dataset's log likelihood: Gaussian
// blocks collapse to sufficient statistics (O(dims^2) per call instead of
// O(n)); categorical/Bernoulli blocks keep a per-record loop.
class LogLikCache {
  public:
    LogLikCache(const ModelSpec& s, const Dataset& data);

    double eval(const ParamPoint& p) const;
    double eval_flat(const Eigen::VectorXd& w) const;  // flatten() layout

    const ModelSpec& spec() const { return spec_; }
    long n() const { return n_; }

  private:
    ModelSpec spec_;
    long n_ = 0;
    // Gaussian-block statistics
    Eigen::MatrixXd sxx_;      // sum x x^T
    Eigen::MatrixXd task_xt_;  // sum y x^T
    double task_sq_ = 0.0;     // sum |y|^2
    Eigen::MatrixXd conc_xt_;  // sum c x^T
    double conc_sq_ = 0.0;     // sum |c|^2
    // Raw records for non-Gaussian blocks
    bool need_records_ = false;
    Eigen::MatrixXd x_, c_, y_;
};

// K(params) for all-Gaussian kinds:
//   bottleneck: (1/2)tr((AB-A0B0) X (AB-A0B0)^T) + gamma*(1/2)tr((B-B0) X (B-B0)^T)
//   multitask/standard: (1/2)tr((UV-U0V0) X (UV-U0V0)^T)
double kl_closed_form(const ModelSpec& s, const ParamPoint& p, const ParamPoint& truth,
                      const Eigen::MatrixXd& second_moment);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Monte Carlo over x ~ input; the inner expectation over responses is
// analytic for every supported block kind, so only the x-average is sampled
// (n_resp is validated but has no effect on these kinds).
McEstimate kl_monte_carlo(const ModelSpec& s, const ParamPoint& p, const ParamPoint& truth,
                          const InputSpec& input, long n_x, long n_resp, std::uint64_t seed);

// S_n = -(1/n) sum_l log q(response_l | x_l), conditional on the inputs.
// Defined as 0 for an empty dataset.
double empirical_entropy(const ParamPoint& truth, const Dataset& data);

namespace detail {

// Per-coordinate response-block divergences, exposed for equivalence tests.
double categorical_kl(const Eigen::VectorXd& logits_true, const Eigen::VectorXd& logits_model);
double bernoulli_kl(double logit_true, double logit_model);
double log_sigmoid(double z);
double log_sum_exp(const Eigen::VectorXd& v);

// Log density of one record given the two block means (task_mean from the
// composite map, conc_mean from the concept-block map).
double block_log_density(const ModelSpec& s, const Eigen::VectorXd& task_mean,
                         const Eigen::VectorXd& conc_mean, const Eigen::VectorXd& c,
                         const Eigen::VectorXd& y);

// Draws one response pair from the model at the given block means.
void sample_response(const ModelSpec& s, const Eigen::VectorXd& task_mean,
                     const Eigen::VectorXd& conc_mean, std::mt19937_64& rng,
                     Eigen::VectorXd& c_out, Eigen::VectorXd& y_out);

// Input->response block maps of a parameter point: task rows and concept rows.
void block_maps(const ModelSpec& s, const ParamPoint& p, Eigen::MatrixXd& task_map,
                Eigen::MatrixXd& conc_map);

}  // namespace detail

}  // namespace slt
